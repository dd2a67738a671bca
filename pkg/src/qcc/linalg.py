"""Dense complex linear algebra used throughout the package.

Matrices are plain 2-D ``numpy`` arrays of dtype ``complex128``. Operators on
density matrices use the column-stacking convention ``vec(rho) =
rho.ravel(order="F")`` so that ``vec(A X B) = (B.T kron A) vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

HERMITIAN_TOL = 1e-10
COND_LIMIT = 1e12


class LinalgError(ValueError):
    """Raised on shape, Hermiticity or conditioning violations."""


@dataclass(frozen=True)
class HermitianEigen:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce ``m`` to a finite complex 2-D array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise LinalgError(f"{name}: expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise LinalgError(f"{name}: entries must be finite")
    return a


def _square(m, name: str) -> np.ndarray:
    a = as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise LinalgError(f"{name}: expected a square matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).ravel(order="F")


def unvec(v: np.ndarray, rows: int, cols: int | None = None) -> np.ndarray:
    cols = rows if cols is None else cols
    return np.asarray(v).reshape((rows, cols), order="F")


def partial_trace(m, dims: tuple[int, int], which: int) -> np.ndarray:
    """Trace out subsystem ``which`` (0 = A, 1 = B) of a bipartite operator."""
    a = _square(m, "partial_trace input")
    da, db = dims
    if a.shape[0] != da * db:
        raise LinalgError(
            f"partial_trace: side {a.shape[0]} does not match dims {da}x{db}"
        )
    t = a.reshape(da, db, da, db)
    if which == 1:
        return np.einsum("ijkj->ik", t)
    if which == 0:
        return np.einsum("ijil->jl", t)
    raise LinalgError(f"partial_trace: subsystem index must be 0 or 1, got {which}")


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= tol)


def hermitize(m, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    """Return ``(m + m^dagger)/2``; reject inputs further than ``tol`` from Hermitian."""
    a = _square(m, name)
    dev = float(np.max(np.abs(a - dagger(a)), initial=0.0))
    if dev > tol:
        raise LinalgError(f"{name}: not Hermitian (max deviation {dev:.3e} > {tol:.0e})")
    return 0.5 * (a + dagger(a))


def hermitian_eig(m, tol: float = HERMITIAN_TOL) -> HermitianEigen:
    h = hermitize(m, tol, "hermitian_eig input")
    w, v = np.linalg.eigh(h)
    return HermitianEigen(w, v)


def trace_norm(m) -> float:
    """Schatten-1 norm. Hermitian inputs use absolute eigenvalues."""
    a = _square(m, "trace_norm input")
    if is_hermitian(a):
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (a + dagger(a))))))
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def psd_sqrt(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Principal square root of a PSD matrix, clamping eigenvalues above ``-tol`` to 0."""
    e = hermitian_eig(m)
    if e.eigenvalues[0] < -tol:
        raise LinalgError(f"psd_sqrt: minimum eigenvalue {e.eigenvalues[0]:.3e} < -{tol:.0e}")
    w = np.sqrt(np.clip(e.eigenvalues, 0.0, None))
    v = e.eigenvectors
    return (v * w) @ dagger(v)


def matrix_exp(m) -> np.ndarray:
    # scipy's expm is Pade-13 scaling and squaring
    return scipy.linalg.expm(_square(m, "matrix_exp input"))


def condition_number(a: np.ndarray) -> float:
    s = np.linalg.svd(a, compute_uv=False)
    return float("inf") if s[-1] == 0.0 else float(s[0] / s[-1])


def solve(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` with a conditioning guard and a residual check."""
    a = _square(a, "solve lhs")
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != a.shape[0]:
        raise LinalgError(f"solve: rhs has {b.shape[0]} rows, lhs is {a.shape[0]}x{a.shape[0]}")
    cond = condition_number(a)
    if not cond < COND_LIMIT:
        raise LinalgError(f"solve: matrix is singular or ill-conditioned (cond ~ {cond:.3e})")
    x = np.linalg.solve(a, b)
    resid = np.linalg.norm(a @ x - b)
    if resid > 1e-9 * max(np.linalg.norm(b), 1.0):
        raise LinalgError(f"solve: residual {resid:.3e} exceeds tolerance (cond ~ {cond:.3e})")
    return x


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return psi / np.linalg.norm(psi)
