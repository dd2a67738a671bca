"""Pure numpy implementation of the trace-norm ascent kernels.

Used when the compiled ``_ascent`` extension is unavailable, and as the
reference the extension is benchmarked and tested against.
"""
from __future__ import annotations

import numpy as np

SIGN_TOL = 1e-12


def _outputs(L: np.ndarray, psis: np.ndarray, dim_out: int) -> np.ndarray:
    # vec(psi psi^dag) in column stacking is kron(conj(psi), psi)
    n, d = psis.shape
    vr = (psis.conj()[:, :, None] * psis[:, None, :]).reshape(n, d * d)
    m = (vr @ L.T).reshape(n, dim_out, dim_out).transpose(0, 2, 1)
    return 0.5 * (m + m.conj().transpose(0, 2, 1))


def objective_batch(L: np.ndarray, psis: np.ndarray, dim_out: int) -> np.ndarray:
    """``||Delta(psi psi^dag)||_1`` for every row of ``psis``."""
    m = _outputs(L, psis, dim_out)
    return np.abs(np.linalg.eigvalsh(m)).sum(axis=1)


def ascend_batch(
    L: np.ndarray,
    psis: np.ndarray,
    dim_out: int,
    iters: int,
    step: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Projected (sub)gradient ascent of ``psi -> ||Delta(psi psi^dag)||_1`` on the unit sphere.

    Each row of ``psis`` is an independent start. The subgradient is
    ``2 W psi`` with ``W = Delta^dag(sign(Delta(psi psi^dag)))``; zero
    eigenvalues get sign 0. Returns the final values and states.
    """
    psis = np.array(psis, dtype=complex, copy=True)
    psis /= np.linalg.norm(psis, axis=1, keepdims=True)
    n, d = psis.shape
    LH = L.conj().T
    best_val = np.full(n, -np.inf)
    best_psi = psis.copy()
    for _ in range(iters + 1):
        m = _outputs(L, psis, dim_out)
        w, v = np.linalg.eigh(m)
        val = np.abs(w).sum(axis=1)
        better = val > best_val
        best_val[better] = val[better]
        best_psi[better] = psis[better]
        sgn = np.where(np.abs(w) > SIGN_TOL, np.sign(w), 0.0)
        s = (v * sgn[:, None, :]) @ v.conj().transpose(0, 2, 1)
        svec = s.transpose(0, 2, 1).reshape(n, dim_out * dim_out)
        wmat = (svec @ LH.T).reshape(n, d, d).transpose(0, 2, 1)
        g = 2.0 * np.einsum("nij,nj->ni", wmat, psis)
        radial = np.real(np.einsum("ni,ni->n", psis.conj(), g))
        g -= radial[:, None] * psis
        psis = psis + step * g
        psis /= np.linalg.norm(psis, axis=1, keepdims=True)
    return best_val, best_psi
