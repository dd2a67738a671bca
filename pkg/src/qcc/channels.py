"""Quantum channels, measurements and linking maps.

A :class:`QuantumChannel` is stored as a Kraus set; the Choi and Liouville
matrices are computed eagerly at construction and validated against it.

Conventions
-----------
* Liouville matrix: ``vec(C(X)) = L @ vec(X)`` with column stacking, so
  ``L = sum_k conj(K_k) kron K_k``.
* Choi matrix: ``J = sum_ij |i><j| kron C(|i><j|)`` (input factor first).
* Qubit 0 is the most significant tensor factor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .linalg import LinalgError, dagger

TP_TOL = 1e-9
CP_TOL = 1e-10
AGREE_TOL = 1e-9
KRAUS_DROP = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


class ChannelError(ValueError):
    """Invalid channel, state or measurement data."""


def kraus_to_liouville(kraus: Sequence[np.ndarray]) -> np.ndarray:
    return sum(np.kron(k.conj(), k) for k in kraus)


def kraus_to_choi(kraus: Sequence[np.ndarray]) -> np.ndarray:
    # column i*d_out + a of v_k holds K[a, i]
    vs = np.stack([k.T.ravel() for k in kraus], axis=1)
    return vs @ dagger(vs)


def liouville_to_choi(L: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    t = np.asarray(L).reshape(dim_out, dim_out, dim_in, dim_in)  # [b, a, j, i]
    return t.transpose(3, 1, 2, 0).reshape(dim_in * dim_out, dim_in * dim_out)


def choi_to_liouville(J: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    t = np.asarray(J).reshape(dim_in, dim_out, dim_in, dim_out)  # [i, a, j, b]
    return t.transpose(3, 1, 2, 0).reshape(dim_out * dim_out, dim_in * dim_in)


def apply_liouville(L: np.ndarray, x: np.ndarray, dim_out: int) -> np.ndarray:
    return linalg.unvec(L @ linalg.vec(x), dim_out)


def apply_choi(J: np.ndarray, x: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    t = J.reshape(dim_in, dim_out, dim_in, dim_out)
    return np.einsum("ij,iajb->ab", x, t)


def matrix_units(d: int):
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            yield e


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """A CPTP map ``T(C^dim_in) -> T(C^dim_out)``.

    Build instances through :func:`from_kraus`, :func:`choi_to_kraus` or the
    named builders, which validate complete positivity and trace preservation.
    """

    dim_in: int
    dim_out: int
    kraus: tuple[np.ndarray, ...]
    choi: np.ndarray = field(repr=False)
    liouville: np.ndarray = field(repr=False)

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)

    def check_agreement(self, tol: float = AGREE_TOL) -> float:
        """Max deviation between the three representations on matrix units."""
        worst = 0.0
        for e in matrix_units(self.dim_in):
            a = sum(k @ e @ dagger(k) for k in self.kraus)
            b = apply_liouville(self.liouville, e, self.dim_out)
            c = apply_choi(self.choi, e, self.dim_in, self.dim_out)
            worst = max(worst, float(np.max(np.abs(a - b))), float(np.max(np.abs(a - c))))
        if worst > tol:
            raise ChannelError(f"representations disagree by {worst:.3e}")
        return worst


def _completeness_deviation(kraus, dim_in) -> float:
    s = sum(dagger(k) @ k for k in kraus)
    return float(np.max(np.abs(s - np.eye(dim_in))))


def _compress(kraus: list[np.ndarray], dim_in: int, dim_out: int) -> list[np.ndarray]:
    """Replace an oversized Kraus set with the minimal one from the Choi spectrum."""
    if len(kraus) <= dim_in * dim_out:
        return kraus
    return _kraus_from_choi(kraus_to_choi(kraus), dim_in, dim_out)


def _kraus_from_choi(J: np.ndarray, dim_in: int, dim_out: int) -> list[np.ndarray]:
    w, v = np.linalg.eigh(0.5 * (J + dagger(J)))
    out = []
    for lam, vec in zip(w[::-1], v.T[::-1]):
        if lam <= KRAUS_DROP:
            break
        out.append(np.sqrt(lam) * vec.reshape(dim_in, dim_out).T)
    return out


def from_kraus(ops: Sequence, tp_tol: float = TP_TOL) -> QuantumChannel:
    """Build a channel from Kraus operators, validating ``sum K^dag K = I``."""
    if len(ops) == 0:
        raise ChannelError("from_kraus: empty Kraus set")
    kraus = [linalg.as_matrix(k, "Kraus operator") for k in ops]
    shape = kraus[0].shape
    if any(k.shape != shape for k in kraus):
        raise ChannelError(f"from_kraus: mixed Kraus shapes {sorted({k.shape for k in kraus})}")
    dim_out, dim_in = shape
    dev = _completeness_deviation(kraus, dim_in)
    if dev > tp_tol:
        raise ChannelError(f"from_kraus: completeness sum K^dag K = I violated (deviation {dev:.3e})")
    kraus = _compress(kraus, dim_in, dim_out)
    J = kraus_to_choi(kraus)
    ch = QuantumChannel(dim_in, dim_out, tuple(kraus), J, kraus_to_liouville(kraus))
    for a in (ch.choi, ch.liouville, *ch.kraus):
        a.setflags(write=False)
    return ch


def choi_to_kraus(choi, dims: tuple[int, int], repair: bool = False) -> QuantumChannel:
    """Kraus set from the scaled eigenvectors of a Choi matrix.

    ``dims`` is ``(dim_in, dim_out)``. With ``repair=True`` small negative
    eigenvalues are clamped and the trace condition is restored by a
    congruence with ``(tr_out J)^{-1/2}``; by default violations raise.
    """
    dim_in, dim_out = dims
    J = linalg.as_matrix(choi, "Choi matrix")
    if J.shape != (dim_in * dim_out, dim_in * dim_out):
        raise ChannelError(f"choi_to_kraus: Choi shape {J.shape} does not match dims {dims}")
    try:
        J = linalg.hermitize(J, name="Choi matrix")
    except LinalgError as exc:
        raise ChannelError(str(exc)) from None
    w = np.linalg.eigvalsh(J)
    if w[0] < -CP_TOL and not repair:
        raise ChannelError(f"choi_to_kraus: not completely positive (Choi eigenvalue {w[0]:.3e})")
    tr_out = linalg.partial_trace(J, (dim_in, dim_out), 1)
    dev = float(np.max(np.abs(tr_out - np.eye(dim_in))))
    if dev > TP_TOL and not repair:
        raise ChannelError(f"choi_to_kraus: not trace preserving (deviation {dev:.3e})")
    kraus = _kraus_from_choi(J, dim_in, dim_out)
    if repair:
        s = sum(dagger(k) @ k for k in kraus)
        fix = np.linalg.inv(linalg.psd_sqrt(s))
        kraus = [k @ fix for k in kraus]
    return from_kraus(kraus)


def apply(c: QuantumChannel, rho) -> np.ndarray:
    r = linalg.as_matrix(rho, "input state")
    if r.shape != (c.dim_in, c.dim_in):
        raise ChannelError(f"apply: state is {r.shape}, channel expects dim {c.dim_in}")
    return sum(k @ r @ dagger(k) for k in c.kraus)


def compose(after: QuantumChannel, before: QuantumChannel) -> QuantumChannel:
    """``after o before``."""
    if before.dim_out != after.dim_in:
        raise ChannelError(
            f"compose: before maps to dim {before.dim_out}, after expects dim {after.dim_in}"
        )
    return from_kraus([a @ b for a in after.kraus for b in before.kraus])


def tensor(a: QuantumChannel, b: QuantumChannel) -> QuantumChannel:
    return from_kraus([np.kron(ka, kb) for ka in a.kraus for kb in b.kraus])


def liouville_action_equal(a: QuantumChannel, b: QuantumChannel, tol: float) -> bool:
    return a.liouville.shape == b.liouville.shape and bool(
        np.max(np.abs(a.liouville - b.liouville)) <= tol
    )


# -- density matrices ----------------------------------------------------------


def check_density(rho, dim: int | None = None, tol: float = 1e-10) -> np.ndarray:
    """Validate and return a density matrix (Hermitian, unit trace, PSD)."""
    r = linalg.as_matrix(rho, "density matrix")
    if dim is not None and r.shape != (dim, dim):
        raise ChannelError(f"density matrix has shape {r.shape}, expected dim {dim}")
    try:
        r = linalg.hermitize(r, tol, "density matrix")
    except LinalgError as exc:
        raise ChannelError(str(exc)) from None
    tr = np.trace(r).real
    if abs(tr - 1.0) > tol:
        raise ChannelError(f"density matrix trace is {tr!r}, expected 1")
    lo = np.linalg.eigvalsh(r)[0]
    if lo < -tol:
        raise ChannelError(f"density matrix has negative eigenvalue {lo:.3e}")
    return r


def pure(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


# -- measurements --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Povm:
    outcomes: tuple
    effects: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.outcomes) != len(self.effects) or not self.effects:
            raise ChannelError("POVM needs one effect per outcome label")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ChannelError(f"POVM outcome labels repeat: {list(self.outcomes)}")
        d = self.effects[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for y, e in zip(self.outcomes, self.effects):
            if e.shape != (d, d):
                raise ChannelError(f"POVM effect {y!r} has shape {e.shape}, expected {(d, d)}")
            if not linalg.is_hermitian(e) or np.linalg.eigvalsh(0.5 * (e + dagger(e)))[0] < -CP_TOL:
                raise ChannelError(f"POVM effect {y!r} is not positive semidefinite")
            total = total + e
        dev = float(np.max(np.abs(total - np.eye(d))))
        if dev > TP_TOL:
            raise ChannelError(f"POVM effects do not sum to identity (deviation {dev:.3e})")

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @classmethod
    def from_effects(cls, effects: dict) -> "Povm":
        return cls(tuple(effects), tuple(linalg.as_matrix(e, f"effect {y!r}") for y, e in effects.items()))

    @classmethod
    def projective(cls, basis: np.ndarray, outcomes: Sequence) -> "Povm":
        """Rank-1 projectors onto the columns of a unitary ``basis``."""
        b = linalg.as_matrix(basis, "measurement basis")
        return cls(tuple(outcomes), tuple(np.outer(b[:, i], b[:, i].conj()) for i in range(b.shape[1])))


def povm_sqrt(p: Povm) -> list[np.ndarray]:
    return [linalg.psd_sqrt(e) for e in p.effects]


# -- linking maps ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinkingMapPair:
    encode: QuantumChannel
    decode: QuantumChannel

    def __post_init__(self):
        if self.encode.dim_out != self.decode.dim_in or self.encode.dim_in != self.decode.dim_out:
            raise ChannelError(
                "linking maps do not chain: encode "
                f"{self.encode.dim_in}->{self.encode.dim_out}, decode "
                f"{self.decode.dim_in}->{self.decode.dim_out}"
            )

    @property
    def dim_logical(self) -> int:
        return self.encode.dim_in

    @property
    def dim_comp(self) -> int:
        return self.encode.dim_out


def trivial_links(d: int) -> LinkingMapPair:
    ident = identity(d)
    return LinkingMapPair(ident, ident)


def _cnot(control: int, target: int, n: int) -> np.ndarray:
    u = np.zeros((2**n, 2**n), dtype=complex)
    for s in range(2**n):
        bits = [(s >> (n - 1 - q)) & 1 for q in range(n)]
        if bits[control]:
            bits[target] ^= 1
        u[int("".join(map(str, bits)), 2), s] = 1.0
    return u


def _toffoli(c1: int, c2: int, target: int, n: int) -> np.ndarray:
    u = np.zeros((2**n, 2**n), dtype=complex)
    for s in range(2**n):
        bits = [(s >> (n - 1 - q)) & 1 for q in range(n)]
        if bits[c1] and bits[c2]:
            bits[target] ^= 1
        u[int("".join(map(str, bits)), 2), s] = 1.0
    return u


def repetition_code_pair(p_flip: float | None = None) -> LinkingMapPair:
    """Three-qubit bit-flip code: isometric encoder and majority-vote decoder.

    The decoder un-encodes with two CNOTs (which leaves the syndrome on
    qubits 1 and 2), applies a Toffoli correction to qubit 0 and traces out
    the syndrome qubits. ``p_flip`` is accepted for call-site symmetry and
    does not affect the (noiseless) maps.
    """
    enc = np.zeros((8, 2), dtype=complex)
    enc[0b000, 0] = 1.0
    enc[0b111, 1] = 1.0
    u = _toffoli(1, 2, 0, 3) @ _cnot(0, 2, 3) @ _cnot(0, 1, 3)
    dec = []
    for s in range(4):
        proj = np.kron(I2, np.eye(4)[s : s + 1, :])  # I (x) <s|
        dec.append(proj @ u)
    return LinkingMapPair(from_kraus([enc]), from_kraus(dec))


# -- builders ----------------------------------------------------------------------


def _prob(name: str, v: float) -> float:
    v = float(v)
    if not 0.0 <= v <= 1.0:
        raise ChannelError(f"{name} must lie in [0, 1], got {v}")
    return v


def identity(d: int) -> QuantumChannel:
    return from_kraus([np.eye(d, dtype=complex)])


def unitary_channel(u) -> QuantumChannel:
    u = linalg.as_matrix(u, "unitary")
    if u.shape[0] != u.shape[1]:
        raise ChannelError(f"unitary must be square, got {u.shape}")
    dev = float(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))))
    if dev > 1e-10:
        raise ChannelError(f"matrix is not unitary (max |U^dag U - I| = {dev:.3e})")
    return from_kraus([u])


def bit_flip(q: float) -> QuantumChannel:
    q = _prob("bit-flip probability", q)
    return from_kraus([np.sqrt(1 - q) * I2, np.sqrt(q) * X])


def phase_flip(q: float) -> QuantumChannel:
    q = _prob("phase-flip probability", q)
    return from_kraus([np.sqrt(1 - q) * I2, np.sqrt(q) * Z])


def depolarizing(p: float, d: int = 2) -> QuantumChannel:
    """``rho -> (1 - p) rho + p tr(rho) I/d``."""
    p = _prob("depolarizing parameter", p)
    if d == 2:
        return from_kraus(
            [np.sqrt(1 - 0.75 * p) * I2] + [np.sqrt(p / 4) * s for s in (X, Y, Z)]
        )
    ops = [np.sqrt(1 - p) * np.eye(d, dtype=complex)]
    ops += [np.sqrt(p / d) * e for e in matrix_units(d)]
    return from_kraus(ops)


def completely_depolarizing(d: int = 2) -> QuantumChannel:
    return from_kraus([e / np.sqrt(d) for e in matrix_units(d)])


def amplitude_damping(gamma: float) -> QuantumChannel:
    g = _prob("damping probability", gamma)
    k0 = np.array([[1, 0], [0, np.sqrt(1 - g)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(g)], [0, 0]], dtype=complex)
    return from_kraus([k0, k1])


def iid_noise(c: QuantumChannel, n: int) -> QuantumChannel:
    if n < 1:
        raise ChannelError(f"iid_noise needs n >= 1, got {n}")
    out = c
    for _ in range(n - 1):
        out = tensor(out, c)
    return out


BUILDERS = {
    "identity": identity,
    "bit_flip": bit_flip,
    "phase_flip": phase_flip,
    "depolarizing": depolarizing,
    "completely_depolarizing": completely_depolarizing,
    "amplitude_damping": amplitude_damping,
}
