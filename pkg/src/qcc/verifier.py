"""QCC decision procedure.

An instance bundles the ideal unitary ``U``, the implementation channel
``P`` on the computational space and the linking maps. The implementation
inaccuracy is ``||P^M - G||_SO^sa`` with ``P^M = decode o P o encode`` and
``G(rho) = U rho U^dag``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import channels, dynamics, linalg, norms
from .channels import LinkingMapPair, QuantumChannel
from .norms import NormResult, OptBudget, SuperoperatorDelta

BUDGET_ATOL = 1e-12
BRUTE_FLAG_TOL = 1e-3
LEMMA_TOL = 1e-8


class QccError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QccInstance:
    u: np.ndarray
    p: QuantumChannel
    links: LinkingMapPair
    alpha_budget: float

    def __post_init__(self):
        u = linalg.as_matrix(self.u, "unitary")
        d = self.links.dim_logical
        if u.shape != (d, d):
            raise QccError(f"unitary is {u.shape}, logical dimension is {d}")
        dev = float(np.max(np.abs(u.conj().T @ u - np.eye(d))))
        if dev > 1e-10:
            raise QccError(f"U is not unitary (max |U^dag U - I| = {dev:.3e})")
        if (self.p.dim_in, self.p.dim_out) != (self.links.dim_comp, self.links.dim_comp):
            raise QccError(
                f"channel acts {self.p.dim_in}->{self.p.dim_out}, "
                f"computational dimension is {self.links.dim_comp}"
            )
        if not self.alpha_budget >= 0:
            raise QccError(f"alpha budget must be >= 0, got {self.alpha_budget}")
        object.__setattr__(self, "u", u)

    @property
    def dim_logical(self) -> int:
        return self.links.dim_logical

    def ideal(self) -> QuantumChannel:
        return channels.unitary_channel(self.u)

    def with_channel(self, p: QuantumChannel) -> "QccInstance":
        return QccInstance(self.u, p, self.links, self.alpha_budget)


@dataclass(frozen=True)
class QccReport:
    alpha_hat: float
    witness_state: np.ndarray
    passes: bool
    alpha_budget: float
    seed: int
    alpha_hat_diamond: float | None = None
    brute_force: float | None = None
    underestimate_flag: bool = False

    @property
    def passes_diamond(self) -> bool | None:
        if self.alpha_hat_diamond is None:
            return None
        return self.alpha_hat_diamond <= self.alpha_budget + BUDGET_ATOL


def dressed_map(inst: QccInstance) -> QuantumChannel:
    return channels.compose(inst.links.decode, channels.compose(inst.p, inst.links.encode))


def implementation_delta(inst: QccInstance) -> SuperoperatorDelta:
    return SuperoperatorDelta.difference(dressed_map(inst), inst.ideal(), "P^M - G")


def qcc_alpha(
    inst: QccInstance,
    budget: OptBudget = OptBudget(),
    check_brute_force: bool = True,
    brute_resolution: int = 20_000,
    with_diamond: bool = False,
) -> QccReport:
    """Estimate ``alpha_hat`` and decide the QCC against the instance budget.

    For logical dimension <= 4 a grid search runs alongside the optimizer.
    ``alpha_hat`` is the larger of the two, and ``underestimate_flag`` is set
    when the grid beat the optimizer by more than 1e-3.
    """
    delta = implementation_delta(inst)
    res = norms.so_norm_sa(delta, budget)
    alpha, witness = res.value, res.witness
    brute, flag = None, False
    if check_brute_force and delta.dim_in <= norms.BRUTE_MAX_DIM:
        bf = norms.so_norm_bruteforce(delta, brute_resolution)
        brute = bf.value
        flag = brute > alpha + BRUTE_FLAG_TOL
        if brute > alpha:
            alpha, witness = brute, bf.witness
    diamond = None
    if with_diamond:
        diamond = max(norms.diamond_norm(delta, budget).value, alpha)
    return QccReport(
        alpha_hat=alpha,
        witness_state=witness,
        passes=alpha <= inst.alpha_budget + BUDGET_ATOL,
        alpha_budget=inst.alpha_budget,
        seed=budget.seed,
        alpha_hat_diamond=diamond,
        brute_force=brute,
        underestimate_flag=flag,
    )


def qcc_diamond_alpha(inst: QccInstance, budget: OptBudget = OptBudget()) -> float:
    return norms.diamond_norm(implementation_delta(inst), budget).value


def verify_many(
    instances: Sequence[QccInstance], budget: OptBudget = OptBudget(), workers: int = 1, **kw
) -> list[QccReport]:
    """``qcc_alpha`` over a batch; output order follows input order."""
    if workers <= 1:
        return [qcc_alpha(i, budget, **kw) for i in instances]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(lambda i: qcc_alpha(i, budget, **kw), instances))


@dataclass(frozen=True)
class PerturbationReport:
    alpha_hat: float
    dressed_gap: float
    alpha_hat_prime: float
    bound: float
    holds: bool
    symmetric_holds: bool
    advice: str = ""


def perturbation_bound(
    inst: QccInstance, p_prime: QuantumChannel, budget: OptBudget = OptBudget(), strict: bool = True
) -> PerturbationReport:
    """Check the transfer ``alpha' <= alpha + ||P^M - P'^M||_SO^sa`` numerically.

    All three quantities are optimizer estimates, so a violation means one of
    them was under-estimated; with ``strict`` that raises ``QccError``.
    """
    inst_prime = inst.with_channel(p_prime)
    a = qcc_alpha(inst, budget, check_brute_force=False).alpha_hat
    a_prime = qcc_alpha(inst_prime, budget, check_brute_force=False).alpha_hat
    gap = norms.so_norm_sa(
        SuperoperatorDelta.difference(dressed_map(inst), dressed_map(inst_prime), "P^M - P'^M"), budget
    ).value
    holds = a_prime <= a + gap + LEMMA_TOL
    sym = abs(a - a_prime) <= gap + LEMMA_TOL
    advice = "" if holds and sym else "transfer inequality violated; raise restarts/iters"
    rep = PerturbationReport(a, gap, a_prime, a + gap, holds, sym, advice)
    if strict and not (holds and sym):
        raise QccError(
            f"perturbation bound violated: alpha'={a_prime:.12g}, alpha={a:.12g}, gap={gap:.12g}; {advice}"
        )
    return rep


@dataclass(frozen=True)
class LemmaSweepRow:
    z: float
    alpha_hat: float
    dressed_gap: float
    transfer_bound: float
    propagator_gap: float
    duhamel_bound: float
    passes: bool


def stability_qcc_sweep(inst_at, family, t: float, baseline_z: float, budget: OptBudget = OptBudget()):
    """QCC along a generator family, paired with the transfer bound from the baseline.

    ``inst_at(channel)`` builds the instance for a propagator. Rows report
    ``alpha_hat(z)``, ``||P^M_z - P^M_0||``, the bound
    ``alpha_hat(z0) + ||P^M_z - P^M_0||`` and the raw propagator gap.
    """
    stab = dynamics.stability_sweep(family, t, baseline_z, budget)
    base_inst = inst_at(dynamics.propagator(family.generator_at(baseline_z), t))
    base_alpha = qcc_alpha(base_inst, budget, check_brute_force=False).alpha_hat
    base_dressed = dressed_map(base_inst)
    rows = []
    for srow in stab.rows:
        inst = inst_at(dynamics.propagator(family.generator_at(srow.z), t))
        rep = qcc_alpha(inst, budget, check_brute_force=False)
        gap = norms.so_norm_sa(
            SuperoperatorDelta.difference(dressed_map(inst), base_dressed), budget
        ).value
        rows.append(LemmaSweepRow(srow.z, rep.alpha_hat, gap, base_alpha + gap,
                                  srow.distance, srow.duhamel_bound, rep.passes))
    return rows


def brute_force_result(inst: QccInstance, resolution: int = 100_000) -> NormResult:
    return norms.so_norm_bruteforce(implementation_delta(inst), resolution)
