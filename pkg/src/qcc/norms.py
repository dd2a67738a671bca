"""Superoperator distances: SO^sa norm, diamond norm and their oracles.

Both optimized norms maximize ``psi -> ||Delta(psi psi^dag)||_1`` over unit
vectors. The trace norm is convex, so on the self-adjoint trace-norm ball
the supremum sits at an extreme point ``+-psi psi^dag``; restricting to pure
states loses nothing. The diamond norm runs the same search on
``Delta (x) id_n`` with ``n = dim_in``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm as _normal
from scipy.stats import qmc

from . import channels, kernels, linalg
from .channels import QuantumChannel

HP_TOL = 1e-10
BRUTE_MAX_DIM = 4


class NormError(ValueError):
    pass


@dataclass(frozen=True)
class OptBudget:
    """Multistart ascent settings.

    ``step`` is relative: the applied step is ``step / ||L||_2``. The best
    ``refine`` restarts are then polished by BFGS. ``workers`` only changes
    scheduling; results are identical for any value.
    """

    restarts: int = 64
    iters: int = 200
    step: float = 0.3
    seed: int = 0
    workers: int = 1
    refine: int = 4

    def __post_init__(self):
        if self.restarts < 1 or self.iters < 0 or self.step <= 0 or self.workers < 1 or self.refine < 0:
            raise NormError(f"invalid optimization budget {self}")


@dataclass(frozen=True, eq=False)
class SuperoperatorDelta:
    """A Hermitian-preserving linear map given by its Liouville matrix."""

    dim_in: int
    dim_out: int
    liouville: np.ndarray
    tag: str = ""

    def __post_init__(self):
        L = np.asarray(self.liouville, dtype=complex)
        if L.shape != (self.dim_out**2, self.dim_in**2):
            raise NormError(f"Liouville shape {L.shape} does not match dims {self.dim_in}->{self.dim_out}")
        J = channels.liouville_to_choi(L, self.dim_in, self.dim_out)
        dev = float(np.max(np.abs(J - J.conj().T)))
        if dev > HP_TOL:
            raise NormError(f"map {self.tag!r} is not Hermitian-preserving (Choi asymmetry {dev:.3e})")
        object.__setattr__(self, "liouville", L)

    @classmethod
    def difference(cls, a: QuantumChannel, b: QuantumChannel, tag: str = "") -> "SuperoperatorDelta":
        if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
            raise NormError(
                f"cannot subtract channels with dims {a.dim_in}->{a.dim_out} and {b.dim_in}->{b.dim_out}"
            )
        return cls(a.dim_in, a.dim_out, a.liouville - b.liouville, tag)

    def __call__(self, x) -> np.ndarray:
        return channels.apply_liouville(self.liouville, np.asarray(x, dtype=complex), self.dim_out)

    def scaled(self, c: float) -> "SuperoperatorDelta":
        return SuperoperatorDelta(self.dim_in, self.dim_out, c * self.liouville, f"{c}*({self.tag})")

    def __add__(self, other: "SuperoperatorDelta") -> "SuperoperatorDelta":
        return SuperoperatorDelta(self.dim_in, self.dim_out, self.liouville + other.liouville,
                                  f"({self.tag})+({other.tag})")

    def with_ancilla(self, n: int | None = None) -> "SuperoperatorDelta":
        """``Delta (x) id_n``; ``n`` defaults to ``dim_in``."""
        n = self.dim_in if n is None else n
        di, do = self.dim_in, self.dim_out
        t = self.liouville.reshape(do, do, di, di)  # [b, a, j, i] = Delta(|i><j|)[a, b]
        eye = np.eye(n)
        # output index ((a,k),(b,l)) column-stacked: (a*n + k) + (b*n + l)*do*n
        ext = np.einsum("baji,kp,lq->blakjqip", t, eye, eye)
        size_out, size_in = (do * n) ** 2, (di * n) ** 2
        return SuperoperatorDelta(di * n, do * n, ext.reshape(size_out, size_in), f"({self.tag})x id_{n}")


@dataclass(frozen=True)
class NormResult:
    value: float
    witness: np.ndarray
    certified_lower_bound: float
    method: str
    seed: int | None = None


def _exact_value(delta: SuperoperatorDelta, psi: np.ndarray) -> float:
    return linalg.trace_norm(delta(channels.pure(psi)))


def _starts(d: int, budget: OptBudget) -> np.ndarray:
    rng = np.random.default_rng(budget.seed)
    n_rand = max(budget.restarts - d, 0)
    basis = np.eye(d, dtype=complex)[: budget.restarts]
    rand = rng.standard_normal((n_rand, d)) + 1j * rng.standard_normal((n_rand, d))
    return np.vstack([basis, rand])


def _run_ascent(delta: SuperoperatorDelta, budget: OptBudget, backend=None):
    L = delta.liouville
    starts = _starts(delta.dim_in, budget)
    scale = np.linalg.norm(L, 2)
    if scale == 0.0:
        return 0.0, starts[0] / np.linalg.norm(starts[0])
    kern = kernels if backend is None else kernels.get(backend)
    step = budget.step / scale
    chunks = np.array_split(starts, min(budget.workers, len(starts)))
    if len(chunks) == 1:
        results = [kern.ascend_batch(L, starts, delta.dim_out, budget.iters, step)]
    else:
        with ThreadPoolExecutor(len(chunks)) as pool:
            results = list(pool.map(
                lambda c: kern.ascend_batch(L, c, delta.dim_out, budget.iters, step), chunks))
    vals = np.concatenate([r[0] for r in results])
    psis = np.concatenate([r[1] for r in results])
    # stable sort keeps the lowest restart index first among equal values
    order = np.argsort(-vals, kind="stable")
    best_val, best_psi = float(vals[order[0]]), psis[order[0]]
    for i in order[: budget.refine]:
        val, psi = _refine(delta, psis[i])
        if val > best_val:
            best_val, best_psi = val, psi
    return best_val, best_psi


def _refine(delta: SuperoperatorDelta, psi0: np.ndarray) -> tuple[float, np.ndarray]:
    """BFGS on ``z -> ||Delta(z z^dag)||_1 / |z|^2`` over real coordinates of ``z``.

    The fixed-step ascent stalls on flat ridges; a quasi-Newton pass from its
    best points recovers the remaining digits.
    """
    L, di, do = delta.liouville, delta.dim_in, delta.dim_out
    LH = L.conj().T

    def neg_value_and_grad(x):
        z = x[:di] + 1j * x[di:]
        n2 = float(np.vdot(z, z).real)
        out = (L @ np.outer(z, z.conj()).ravel(order="F")).reshape(do, do, order="F")
        w, v = np.linalg.eigh(0.5 * (out + out.conj().T))
        s = np.where(np.abs(w) > 1e-12 * n2, np.sign(w), 0.0)
        W = (LH @ ((v * s) @ v.conj().T).ravel(order="F")).reshape(di, di, order="F")
        f = float(np.abs(w).sum()) / n2
        g = (2 * (W @ z) - 2 * f * z) / n2
        return -f, -np.concatenate([g.real, g.imag])

    res = minimize(neg_value_and_grad, np.concatenate([psi0.real, psi0.imag]), jac=True,
                   method="BFGS", options={"gtol": 1e-12, "maxiter": 500})
    z = res.x[:di] + 1j * res.x[di:]
    nz = np.linalg.norm(z)
    if not np.isfinite(res.fun) or nz == 0:
        return -np.inf, psi0
    z = z / nz
    return _exact_value(delta, z), z


def so_norm_sa(delta: SuperoperatorDelta, budget: OptBudget = OptBudget(), backend: str | None = None) -> NormResult:
    """SO^sa norm by seeded multistart ascent over pure input states."""
    val, psi = _run_ascent(delta, budget, backend)
    exact = _exact_value(delta, psi)
    return NormResult(max(val, exact), channels.pure(psi), exact, "optimized", budget.seed)


def maximally_entangled(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex).ravel() / np.sqrt(d)


def diamond_norm(delta: SuperoperatorDelta, budget: OptBudget = OptBudget(), backend: str | None = None) -> NormResult:
    """Diamond norm with ancilla dimension equal to the input dimension.

    The maximally entangled input is always evaluated and folded into the
    certified lower bound.
    """
    ext = delta.with_ancilla()
    val, psi = _run_ascent(ext, budget, backend)
    exact = _exact_value(ext, psi)
    phi = maximally_entangled(delta.dim_in)
    phi_val = _exact_value(ext, phi)
    if phi_val > exact:
        exact, psi = phi_val, phi
    return NormResult(max(val, exact), channels.pure(psi), exact, "optimized", budget.seed)


def bloch_grid(n: int) -> np.ndarray:
    """``n`` qubit states on a Fibonacci lattice of the Bloch sphere."""
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = np.pi * (1.0 + 5**0.5) * k
    theta = np.arccos(z)
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=1)


def haar_grid(d: int, n: int, seed: int = 0) -> np.ndarray:
    """``n`` pure states from a seeded Sobol sequence mapped through Gaussians."""
    m = int(np.ceil(np.log2(max(n, 2))))
    u = qmc.Sobol(2 * d, scramble=True, seed=seed).random_base2(m)
    g = _normal.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    z = g[:, :d] + 1j * g[:, d:]
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _grid_values(delta: SuperoperatorDelta, psis: np.ndarray) -> np.ndarray:
    # Delta(psi psi^dag)[a, b] = sum_ij D[a, b, i, j] psi_i conj(psi_j)
    do, di = delta.dim_out, delta.dim_in
    t = delta.liouville.reshape(do, do, di, di)  # [b, a, j, i]
    out = np.einsum("baji,ni,nj->nab", t, psis, psis.conj())
    return np.abs(np.linalg.eigvalsh(out)).sum(axis=1)


def so_norm_bruteforce(delta: SuperoperatorDelta, resolution: int = 100_000, chunk: int = 65_536) -> NormResult:
    """Grid maximum of ``||Delta(psi psi^dag)||_1``; a lower bound on the SO^sa norm."""
    d = delta.dim_in
    if d > BRUTE_MAX_DIM:
        raise NormError(f"brute force limited to dim <= {BRUTE_MAX_DIM}, got {d}")
    if resolution < 1 or resolution > 1 << 24:
        raise NormError(f"grid resolution {resolution} out of range [1, 2^24]")
    grid = bloch_grid(resolution) if d == 2 else haar_grid(d, resolution)
    best, arg = -1.0, 0
    for lo in range(0, len(grid), chunk):
        vals = _grid_values(delta, grid[lo : lo + chunk])
        j = int(np.argmax(vals))
        if vals[j] > best:
            best, arg = float(vals[j]), lo + j
    psi = grid[arg]
    return NormResult(best, channels.pure(psi), _exact_value(delta, psi), "brute_force")


def povm_distinguishability(p1: QuantumChannel, p2: QuantumChannel, trials: int = 10_000, seed: int = 0) -> float:
    """Best ``sum_y |tr sqrt(E_y) P1(rho) sqrt(E_y) - tr sqrt(E_y) P2(rho) sqrt(E_y)|`` over sampled inputs.

    For each sampled pure input the optimal POVM is the pair of projectors
    onto the non-negative and negative eigenspaces of ``(P1 - P2)(rho)``.
    """
    if (p1.dim_in, p1.dim_out) != (p2.dim_in, p2.dim_out):
        raise NormError("povm_distinguishability: channel dimensions differ")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        rho = channels.pure(linalg.random_pure(p1.dim_in, rng))
        out1, out2 = p1(rho), p2(rho)
        w, v = np.linalg.eigh(0.5 * ((out1 - out2) + (out1 - out2).conj().T))
        pos = v[:, w >= 0] @ v[:, w >= 0].conj().T
        effects = [pos, np.eye(p1.dim_out) - pos]
        total = 0.0
        for e in effects:
            r = linalg.psd_sqrt(e)
            total += abs(np.trace(r @ out1 @ r).real - np.trace(r @ out2 @ r).real)
        best = max(best, total)
    return best
