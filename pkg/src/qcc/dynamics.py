"""Markovian dynamics: Lindblad generators, propagators and resolvents.

Generators are time independent and finite dimensional. Continuity in a
parameter ``z`` is measured in the SO^sa norm of the induced superoperators.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import channels, linalg, norms
from .channels import QuantumChannel
from .linalg import LinalgError, dagger
from .norms import OptBudget, SuperoperatorDelta

DEFAULT_LAMBDAS = (0.1, 1.0, 10.0)
TRACE_TOL = 1e-10


class DynamicsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LindbladGenerator:
    """``A(rho) = -i[H, rho] + sum_k (L_k rho L_k^dag - {L_k^dag L_k, rho}/2)``."""

    dim: int
    hamiltonian: np.ndarray
    jumps: tuple[np.ndarray, ...] = ()
    liouville: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        try:
            h = linalg.hermitize(self.hamiltonian, name="Hamiltonian")
        except LinalgError as exc:
            raise DynamicsError(str(exc)) from None
        if h.shape != (self.dim, self.dim):
            raise DynamicsError(f"Hamiltonian has shape {h.shape}, expected dim {self.dim}")
        jumps = tuple(linalg.as_matrix(j, "jump operator") for j in self.jumps)
        for j in jumps:
            if j.shape != (self.dim, self.dim):
                raise DynamicsError(f"jump operator has shape {j.shape}, expected dim {self.dim}")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "liouville", _lindblad_liouville(h, jumps))
        # trace preservation of the flow: sum_a A(E_ij)[a, a] = 0
        d = self.dim
        tr_rows = sum(self.liouville[a + a * d] for a in range(d))
        dev = float(np.max(np.abs(tr_rows)))
        if dev > TRACE_TOL:
            raise DynamicsError(f"generator does not preserve trace (deviation {dev:.3e})")

    def delta(self, other: "LindbladGenerator") -> SuperoperatorDelta:
        return SuperoperatorDelta(self.dim, self.dim, self.liouville - other.liouville, "generator difference")


def _lindblad_liouville(h: np.ndarray, jumps: Sequence[np.ndarray]) -> np.ndarray:
    d = h.shape[0]
    eye = np.eye(d)
    A = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for L in jumps:
        LdL = dagger(L) @ L
        A = A + np.kron(L.conj(), L) - 0.5 * np.kron(eye, LdL) - 0.5 * np.kron(LdL.T, eye)
    return A


def generator_liouville(g: LindbladGenerator) -> np.ndarray:
    return g.liouville


def propagator(g: LindbladGenerator, t: float) -> QuantumChannel:
    """``exp(t A)`` as a validated CPTP channel."""
    if t < 0:
        raise DynamicsError(f"propagator needs t >= 0, got {t}")
    L = linalg.matrix_exp(t * g.liouville)
    J = channels.liouville_to_choi(L, g.dim, g.dim)
    try:
        return channels.choi_to_kraus(J, (g.dim, g.dim))
    except channels.ChannelError as exc:
        raise DynamicsError(f"propagator at t={t} failed CPTP validation: {exc}") from None


def resolvent(g: LindbladGenerator, lam: float) -> np.ndarray:
    """``(lam I - A)^{-1}`` as a Liouville matrix."""
    if not lam > 0:
        raise DynamicsError(f"resolvent needs lambda > 0, got {lam}")
    n = g.dim**2
    try:
        return linalg.solve(lam * np.eye(n) - g.liouville, np.eye(n, dtype=complex))
    except LinalgError as exc:
        raise DynamicsError(f"resolvent at lambda={lam}: {exc}") from None


# -- families ----------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorFamily:
    parameter_name: str
    parameter_grid: tuple[float, ...]
    generator_at: Callable[[float], LindbladGenerator]

    def __post_init__(self):
        if len(self.parameter_grid) < 1:
            raise DynamicsError("generator family needs a non-empty grid")

    def with_grid(self, grid: Sequence[float]) -> "GeneratorFamily":
        return GeneratorFamily(self.parameter_name, tuple(float(z) for z in grid), self.generator_at)


def damping_generator(gamma: float, omega: float = 0.0) -> LindbladGenerator:
    """Qubit decay ``|1> -> |0>`` at rate ``gamma`` with ``H = omega Z / 2``."""
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    return LindbladGenerator(2, 0.5 * omega * channels.Z, (np.sqrt(gamma) * lower,))


def dephasing_generator(gamma: float) -> LindbladGenerator:
    return LindbladGenerator(2, np.zeros((2, 2)), (np.sqrt(gamma / 2) * channels.Z,))


def bitflip_rate_generator(gamma: float) -> LindbladGenerator:
    """``L = sqrt(gamma) X``; the time-t propagator is bit_flip((1 - e^{-2 gamma t})/2)."""
    return LindbladGenerator(2, np.zeros((2, 2)), (np.sqrt(gamma) * channels.X,))


def detuning_generator(omega: float, gamma: float = 0.0) -> LindbladGenerator:
    return damping_generator(gamma, omega)


NAMED_FAMILIES: dict[str, tuple[str, Callable[[float], LindbladGenerator]]] = {
    "damping_family": ("gamma", damping_generator),
    "dephasing_family": ("gamma", dephasing_generator),
    "bitflip_rate_family": ("gamma", bitflip_rate_generator),
    "detuning_family": ("omega", detuning_generator),
}


def named_family(name: str, grid: Sequence[float]) -> GeneratorFamily:
    try:
        pname, fn = NAMED_FAMILIES[name]
    except KeyError:
        raise DynamicsError(f"unknown generator family {name!r}; known: {sorted(NAMED_FAMILIES)}") from None
    return GeneratorFamily(pname, tuple(float(z) for z in grid), fn)


# -- continuity and stability ----------------------------------------------------


@dataclass(frozen=True)
class ContinuityRow:
    lam: float
    z: float
    z_next: float
    gap: float
    modulus: float


@dataclass(frozen=True)
class ContinuityReport:
    rows: tuple[ContinuityRow, ...]

    def max_gap(self, lam: float) -> float:
        return max((r.gap for r in self.rows if r.lam == lam), default=0.0)

    def max_modulus(self, lam: float) -> float:
        return max((r.modulus for r in self.rows if r.lam == lam), default=0.0)


def _resolvent_gap(r1: np.ndarray, r2: np.ndarray, d: int, budget: OptBudget) -> float:
    return norms.so_norm_sa(SuperoperatorDelta(d, d, r1 - r2, "resolvent gap"), budget).value


def resolvent_continuity_scan(
    f: GeneratorFamily,
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    budget: OptBudget = OptBudget(),
) -> ContinuityReport:
    """SO^sa gaps ``||R(lam, A_z) - R(lam, A_z')||`` for adjacent grid points."""
    grid = f.parameter_grid
    if len(grid) < 2:
        raise DynamicsError("continuity scan needs at least two grid points")
    gens = [f.generator_at(z) for z in grid]
    rows = []
    for lam in lambdas:
        res = []
        for z, g in zip(grid, gens):
            try:
                res.append(resolvent(g, lam))
            except DynamicsError as exc:
                raise DynamicsError(f"at {f.parameter_name}={z}: {exc}") from None
        for k in range(len(grid) - 1):
            gap = _resolvent_gap(res[k], res[k + 1], gens[k].dim, budget)
            dz = abs(grid[k + 1] - grid[k])
            rows.append(ContinuityRow(lam, grid[k], grid[k + 1], gap, gap / dz if dz else float("inf")))
    return ContinuityReport(tuple(rows))


@dataclass(frozen=True)
class StabilityRow:
    z: float
    distance: float
    duhamel_bound: float

    @property
    def bound_ok(self) -> bool:
        return self.distance <= self.duhamel_bound + 1e-9


@dataclass(frozen=True)
class StabilityReport:
    parameter_name: str
    t: float
    baseline_z: float
    rows: tuple[StabilityRow, ...]


def stability_sweep(
    f: GeneratorFamily,
    t: float,
    baseline_z: float,
    budget: OptBudget = OptBudget(),
) -> StabilityReport:
    """``d(z) = ||exp(t A_z) - exp(t A_baseline)||_SO^sa`` over the family grid.

    Each row also carries ``t ||A_z - A_baseline||_SO^sa``, which bounds
    ``d(z)`` because the propagators are trace-norm contractions on
    self-adjoint operators.
    """
    if not any(np.isclose(baseline_z, z, rtol=0, atol=1e-12) for z in f.parameter_grid):
        raise DynamicsError(f"baseline {f.parameter_name}={baseline_z} is not on the grid")
    g0 = f.generator_at(baseline_z)
    p0 = propagator(g0, t)
    rows = []
    for z in f.parameter_grid:
        g = f.generator_at(z)
        dist = norms.so_norm_sa(SuperoperatorDelta.difference(propagator(g, t), p0), budget).value
        gen_gap = norms.so_norm_sa(g.delta(g0), budget).value
        rows.append(StabilityRow(z, dist, t * gen_gap))
    return StabilityReport(f.parameter_name, t, baseline_z, tuple(rows))


@dataclass(frozen=True)
class RefinementLevel:
    spacing: float
    resolvent_gaps: dict[float, float]
    propagator_gap: float


def refinement_study(
    family: GeneratorFamily,
    z_range: tuple[float, float],
    t: float,
    base_intervals: int = 2,
    levels: int = 3,
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    budget: OptBudget = OptBudget(),
) -> list[RefinementLevel]:
    """Largest adjacent resolvent and propagator gaps on successively halved grids.

    Returns ``levels + 1`` entries, from the coarse grid to ``levels``
    factor-2 refinements.
    """
    lo, hi = z_range
    out = []
    for lev in range(levels + 1):
        n = base_intervals * 2**lev
        grid = np.linspace(lo, hi, n + 1)
        fam = family.with_grid(grid)
        rep = resolvent_continuity_scan(fam, lambdas, budget)
        props = [propagator(fam.generator_at(z), t) for z in grid]
        pgap = max(
            norms.so_norm_sa(SuperoperatorDelta.difference(props[k + 1], props[k]), budget).value
            for k in range(n)
        )
        out.append(RefinementLevel((hi - lo) / n, {lam: rep.max_gap(lam) for lam in lambdas}, pgap))
    return out
