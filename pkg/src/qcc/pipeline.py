"""Classical computation fed by a noisy quantum device.

A classical problem ``F: X -> Y`` is run as: prepare the pure state for
``x``, apply the dressed device map ``P^M``, measure the readout POVM. The
outcome probabilities are ``tr(sqrt(E_y) rho_out sqrt(E_y))``. Binary
outputs are decided by majority vote over an odd number of shots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Mapping, Sequence

import numpy as np
from scipy.stats import binom

from . import channels, linalg, verifier
from .channels import Povm
from .norms import OptBudget
from .verifier import QccInstance

PROB_TOL = 1e-9
NEG_TOL = 1e-12
PURE_TOL = 1e-10
MIDDLE_TOL = 1e-8


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class ClassicalProblem:
    inputs: tuple
    outputs: tuple
    f: Mapping[Hashable, Hashable]

    def __post_init__(self):
        missing = [x for x in self.inputs if x not in self.f]
        if missing:
            raise PipelineError(f"problem table has no value for inputs {missing}")
        bad = {x: self.f[x] for x in self.inputs if self.f[x] not in self.outputs}
        if bad:
            raise PipelineError(f"problem maps to labels outside the output set: {bad}")


@dataclass(frozen=True, eq=False)
class InitializationMap:
    prepare: Mapping[Hashable, np.ndarray]

    def __post_init__(self):
        for x, rho in self.prepare.items():
            r = channels.check_density(rho)
            purity = float(np.trace(r @ r).real)
            if abs(purity - 1.0) > PURE_TOL * 10 or np.linalg.eigvalsh(r)[-1] < 1 - PURE_TOL:
                raise PipelineError(f"prepared state for input {x!r} is not pure (purity {purity:.12g})")

    @classmethod
    def from_vectors(cls, vectors: Mapping[Hashable, Sequence[complex]]) -> "InitializationMap":
        return cls({x: channels.pure(v) for x, v in vectors.items()})

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.prepare[x], dtype=complex)


@dataclass(eq=False)
class PipelineInstance:
    problem: ClassicalProblem
    init: InitializationMap
    device: QccInstance
    readout: Povm
    p_budget: float
    budget: OptBudget = field(default_factory=OptBudget)

    def __post_init__(self):
        d = self.device.dim_logical
        if self.readout.dim != d:
            raise PipelineError(f"readout effects act on dim {self.readout.dim}, logical dim is {d}")
        if set(self.readout.outcomes) != set(self.problem.outputs):
            raise PipelineError(
                f"readout outcomes {list(self.readout.outcomes)} differ from outputs {list(self.problem.outputs)}"
            )
        for x in self.problem.inputs:
            if x not in self.init.prepare:
                raise PipelineError(f"no prepared state for input {x!r}")
            if self.init(x).shape != (d, d):
                raise PipelineError(f"prepared state for {x!r} is not on the logical space (dim {d})")
        if not 0.0 <= self.p_budget < 1.0:
            raise PipelineError(f"p_budget must lie in [0, 1), got {self.p_budget}")

    @cached_property
    def dressed(self) -> channels.QuantumChannel:
        return verifier.dressed_map(self.device)

    @cached_property
    def alpha_hat(self) -> float:
        return verifier.qcc_alpha(self.device, self.budget).alpha_hat

    @cached_property
    def sqrt_effects(self) -> dict:
        return dict(zip(self.readout.outcomes, channels.povm_sqrt(self.readout)))

    def ideal_output(self, x) -> np.ndarray:
        u = self.device.u
        return u @ self.init(x) @ u.conj().T

    def device_output(self, x) -> np.ndarray:
        return self.dressed(self.init(x))


def _sandwich(r: np.ndarray, rho: np.ndarray) -> float:
    return float(np.trace(r @ rho @ r).real)


def _distribution(inst: PipelineInstance, rho: np.ndarray) -> dict:
    probs = {}
    for y, e in zip(inst.readout.outcomes, inst.readout.effects):
        via_sqrt = _sandwich(inst.sqrt_effects[y], rho)
        direct = float(np.trace(e @ rho).real)
        if abs(via_sqrt - direct) > PROB_TOL:
            raise PipelineError(f"internal: sqrt-sandwich and tr(E rho) disagree for {y!r} by {abs(via_sqrt - direct):.3e}")
        if via_sqrt < -NEG_TOL:
            raise PipelineError(f"negative outcome probability {via_sqrt:.3e} for {y!r}")
        probs[y] = via_sqrt
    total = sum(probs.values())
    if abs(total - 1.0) > PROB_TOL:
        raise PipelineError(f"outcome probabilities sum to {total!r}")
    return probs


def outcome_distribution(inst: PipelineInstance, x) -> dict:
    """``y -> Pr_x(y)`` for the noisy device."""
    return _distribution(inst, inst.device_output(x))


def ideal_distribution(inst: PipelineInstance, x) -> dict:
    return _distribution(inst, inst.ideal_output(x))


def near_commutativity_margin(inst: PipelineInstance, x) -> float:
    """``Pr_x(F(x)) - (1 - (p + alpha_hat))``; positive means the device guarantee holds at x."""
    fx = inst.problem.f[x]
    return outcome_distribution(inst, x)[fx] - (1.0 - (inst.p_budget + inst.alpha_hat))


def ideal_margin(inst: PipelineInstance, x) -> float:
    """``tr(sqrt(E) U rho U^dag sqrt(E)) - (1 - p)`` at ``y = F(x)``."""
    fx = inst.problem.f[x]
    return ideal_distribution(inst, x)[fx] - (1.0 - inst.p_budget)


@dataclass(frozen=True)
class Theorem1Row:
    x: Hashable
    ideal_prob: float
    device_prob: float
    ideal_margin: float
    device_margin: float
    middle_term: float
    middle_ok: bool


@dataclass(frozen=True)
class Theorem1Report:
    alpha_hat: float
    p_budget: float
    rows: tuple[Theorem1Row, ...]
    precondition_failures: tuple
    holds: bool
    voting_guaranteed: bool
    message: str


def theorem1_check(inst: PipelineInstance) -> Theorem1Report:
    """Per-input check that the ideal concentration bound survives the device error.

    For each x the decomposition
    ``Pr_x(F(x)) = tr(sqrt(E){P^M(rho) - U rho U^dag}sqrt(E)) + tr(sqrt(E) U rho U^dag sqrt(E))``
    is evaluated and the first term is checked against ``alpha_hat``.
    """
    alpha = inst.alpha_hat
    p = inst.p_budget
    rows, failures = [], []
    for x in inst.problem.inputs:
        fx = inst.problem.f[x]
        r = inst.sqrt_effects[fx]
        ideal = _sandwich(r, inst.ideal_output(x))
        device = _sandwich(r, inst.device_output(x))
        middle = _sandwich(r, inst.device_output(x) - inst.ideal_output(x))
        if not ideal > 1.0 - p:
            failures.append(x)
        rows.append(Theorem1Row(
            x, ideal, device, ideal - (1.0 - p), device - (1.0 - (p + alpha)), middle,
            abs(middle) <= alpha + MIDDLE_TOL,
        ))
    holds = not failures and all(r.device_margin > -NEG_TOL and r.middle_ok for r in rows)
    binary = len(inst.problem.outputs) == 2
    guaranteed = binary and p + alpha < 0.5
    if failures:
        msg = f"ideal concentration fails for inputs {failures}; instance is ill-posed"
    elif not guaranteed:
        msg = "majority voting not guaranteed (p + alpha >= 1/2 or non-binary output)"
    else:
        msg = "ok"
    return Theorem1Report(alpha, p, tuple(rows), tuple(failures), holds, guaranteed, msg)


# -- majority voting ----------------------------------------------------------------


@dataclass(frozen=True)
class VoteResult:
    x: Hashable
    n_trials: int
    tally: dict
    decided: Hashable
    correct: bool
    seed: tuple[int, int]


@dataclass(frozen=True)
class VoteStatistics:
    x: Hashable
    n_trials: int
    repeats: int
    successes: int
    success_rate: float
    exact_success: float
    std_error: float
    guaranteed: bool | None
    results: tuple[VoteResult, ...] = field(repr=False)

    @property
    def within_3se(self) -> bool:
        return abs(self.success_rate - self.exact_success) <= 3 * self.std_error


def exact_majority_success(p_correct: float, n_trials: int) -> float:
    """Probability that more than half of ``n_trials`` Bernoulli draws succeed."""
    _check_odd(n_trials)
    return float(binom.sf((n_trials - 1) // 2, n_trials, p_correct))


def _check_odd(n: int) -> None:
    if n < 1 or n % 2 == 0:
        raise PipelineError(f"majority voting needs an odd trial count, got {n}")


def vote(dist: Mapping, correct, x, n_trials: int, repeats: int, seed: int,
         guaranteed: bool | None = None) -> VoteStatistics:
    """Seeded majority voting over a fixed outcome distribution.

    Repeat ``r`` draws from its own generator seeded by ``(seed, r)`` and
    samples by inverse CDF over the labels in their given order.
    """
    labels = list(dist)
    if len(labels) != 2:
        raise PipelineError(f"majority voting needs a binary output set, got {len(labels)} labels")
    _check_odd(n_trials)
    if repeats < 1:
        raise PipelineError(f"repeats must be >= 1, got {repeats}")
    cdf = np.cumsum([dist[y] for y in labels])
    cdf[-1] = 1.0
    results = []
    for r in range(repeats):
        rng = np.random.default_rng([seed, r])
        idx = np.searchsorted(cdf, rng.random(n_trials), side="right")
        counts = np.bincount(idx, minlength=len(labels))
        tally = {y: int(c) for y, c in zip(labels, counts)}
        decided = labels[int(np.argmax(counts))]
        results.append(VoteResult(x, n_trials, tally, decided, decided == correct, (seed, r)))
    k = sum(v.correct for v in results)
    rate = k / repeats
    exact = exact_majority_success(dist[correct], n_trials)
    se = math.sqrt(exact * (1 - exact) / repeats)
    return VoteStatistics(x, n_trials, repeats, k, rate, exact, se, guaranteed, tuple(results))


def majority_vote_run(inst: PipelineInstance, x, n_trials: int, repeats: int, seed: int) -> VoteStatistics:
    if len(inst.problem.outputs) != 2:
        raise PipelineError("majority voting is only defined here for binary outputs")
    _check_odd(n_trials)
    dist = outcome_distribution(inst, x)
    ordered = {y: dist[y] for y in inst.problem.outputs}
    guaranteed = inst.p_budget + inst.alpha_hat < 0.5
    return vote(ordered, inst.problem.f[x], x, n_trials, repeats, seed, guaranteed)


def computational_readout(d: int, outcomes: Sequence) -> Povm:
    return Povm.projective(np.eye(d), outcomes)


def output_basis_readout(u: np.ndarray, outcomes: Sequence) -> Povm:
    """Projective readout onto ``U|k>``, the images of the computational basis."""
    return Povm.projective(linalg.as_matrix(u, "unitary"), outcomes)
