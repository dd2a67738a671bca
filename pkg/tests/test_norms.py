from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcc import channels, kernels, linalg, norms
from qcc.norms import NormError, OptBudget, SuperoperatorDelta

from oracles import hull_distance, random_cptp_kraus

seeds = st.integers(0, 2**32 - 1)
FAST = OptBudget(restarts=16, iters=150)


def diff(a, b):
    return SuperoperatorDelta.difference(a, b)


def id_vs_depol():
    return diff(channels.identity(2), channels.completely_depolarizing(2))


def test_so_norm_examples():
    ident = channels.identity(2)
    assert norms.so_norm_sa(diff(ident, ident)).value == 0.0
    assert norms.so_norm_sa(id_vs_depol()).value == pytest.approx(1.0, abs=1e-9)
    z = diff(ident, channels.unitary_channel(channels.Z))
    assert norms.so_norm_sa(z).value == pytest.approx(2.0, abs=1e-9)
    assert hull_distance(np.eye(2), channels.Z) == pytest.approx(2.0)


def test_diamond_examples():
    ident = channels.identity(2)
    assert norms.diamond_norm(diff(ident, ident)).value == 0.0
    res = norms.diamond_norm(id_vs_depol())
    assert res.value == pytest.approx(1.5, abs=1e-6)
    assert res.certified_lower_bound >= 1.5 - 1e-12
    phase = channels.unitary_channel(np.diag([1, np.exp(1j * np.pi / 2)]))
    assert norms.diamond_norm(diff(ident, phase)).value == pytest.approx(np.sqrt(2), abs=1e-6)


def test_maximally_entangled_witness_value():
    ext = id_vs_depol().with_ancilla()
    phi = channels.pure(norms.maximally_entangled(2))
    assert linalg.trace_norm(ext(phi)) == pytest.approx(1.5, abs=1e-12)
    assert np.allclose(ext(phi), phi - np.eye(4) / 4, atol=1e-12)


def test_with_ancilla_matches_kraus_tensor(rng):
    a = channels.from_kraus(random_cptp_kraus(2, rng))
    b = channels.from_kraus(random_cptp_kraus(2, rng))
    ext = diff(a, b).with_ancilla(3)
    ref = diff(channels.tensor(a, channels.identity(3)), channels.tensor(b, channels.identity(3)))
    assert np.allclose(ext.liouville, ref.liouville, atol=1e-12)


def test_witness_and_lower_bound_consistent(rng):
    a = channels.from_kraus(random_cptp_kraus(3, rng))
    d = diff(a, channels.identity(3))
    res = norms.so_norm_sa(d)
    assert res.certified_lower_bound <= res.value
    assert linalg.trace_norm(d(res.witness)) == pytest.approx(res.certified_lower_bound, abs=1e-12)
    assert res.method == "optimized" and res.seed == 0


def test_rejects_non_hermitian_preserving():
    L = np.zeros((4, 4), dtype=complex)
    L[0, 0] = 1j
    with pytest.raises(NormError, match="Hermitian-preserving"):
        SuperoperatorDelta(2, 2, L)
    with pytest.raises(NormError, match="shape"):
        SuperoperatorDelta(2, 2, np.zeros((4, 9)))
    with pytest.raises(NormError, match="subtract"):
        diff(channels.identity(2), channels.identity(3))


def test_bruteforce_examples():
    zero = SuperoperatorDelta(2, 2, np.zeros((4, 4)))
    assert norms.so_norm_bruteforce(zero).value == 0.0
    q = 0.15
    bf = norms.so_norm_bruteforce(diff(channels.identity(2), channels.bit_flip(q)), 100_000)
    assert bf.value == pytest.approx(2 * q, abs=2e-3)
    assert bf.value <= 2 * q + 1e-12
    with pytest.raises(NormError, match="limited"):
        norms.so_norm_bruteforce(diff(channels.identity(5), channels.identity(5)))
    with pytest.raises(NormError, match="resolution"):
        norms.so_norm_bruteforce(zero, 0)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_bruteforce_below_optimized(d, rng):
    a = channels.from_kraus(random_cptp_kraus(d, rng))
    b = channels.from_kraus(random_cptp_kraus(d, rng))
    delta = diff(a, b)
    opt = norms.so_norm_sa(delta).value
    bf = norms.so_norm_bruteforce(delta, 20_000).value
    assert bf <= opt + 1e-9
    assert bf >= opt - 0.05 * d


def test_grids_are_unit_and_deterministic():
    g = norms.bloch_grid(1000)
    assert np.allclose(np.linalg.norm(g, axis=1), 1)
    h1, h2 = norms.haar_grid(3, 1000, seed=4), norms.haar_grid(3, 1000, seed=4)
    assert len(h1) >= 1000 and np.array_equal(h1, h2)
    assert np.allclose(np.linalg.norm(h1, axis=1), 1)


def test_povm_distinguishability_examples(rng):
    b1, b3 = channels.bit_flip(0.1), channels.bit_flip(0.3)
    assert norms.povm_distinguishability(b1, b1, trials=50) == pytest.approx(0.0, abs=1e-12)
    val = norms.povm_distinguishability(b1, b3, trials=10_000, seed=1)
    assert val == pytest.approx(0.4, abs=1e-3)
    assert val <= norms.so_norm_sa(diff(b1, b3)).value + 1e-8
    with pytest.raises(NormError):
        norms.povm_distinguishability(b1, channels.identity(3))


def test_povm_distinguishability_lower_bound_random(rng):
    a = channels.from_kraus(random_cptp_kraus(3, rng))
    b = channels.from_kraus(random_cptp_kraus(3, rng))
    val = norms.povm_distinguishability(a, b, trials=300, seed=2)
    assert val <= norms.so_norm_sa(diff(a, b)).value + 1e-8


def test_gap_between_diamond_and_so():
    d = id_vs_depol()
    assert norms.diamond_norm(d).value - norms.so_norm_sa(d).value >= 0.49


def test_budget_validation():
    with pytest.raises(NormError):
        OptBudget(restarts=0)
    with pytest.raises(NormError):
        OptBudget(step=0)


def test_worker_count_does_not_change_result(rng):
    a = channels.from_kraus(random_cptp_kraus(3, rng))
    d = diff(a, channels.unitary_channel(linalg.random_unitary(3, rng)))
    base = norms.so_norm_sa(d, OptBudget(workers=1))
    for w in (2, 3, 8):
        other = norms.so_norm_sa(d, OptBudget(workers=w))
        assert other.value == base.value
        assert np.array_equal(other.witness, base.witness)


@pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled kernel not built")
def test_backends_agree(rng):
    a = channels.from_kraus(random_cptp_kraus(2, rng))
    d = diff(a, channels.identity(2))
    r_c = norms.so_norm_sa(d, backend="cython")
    r_p = norms.so_norm_sa(d, backend="python")
    assert r_c.value == pytest.approx(r_p.value, abs=1e-12)
    psis = np.random.default_rng(0).standard_normal((5, 2)) + 0j
    psis /= np.linalg.norm(psis, axis=1, keepdims=True)
    L = np.ascontiguousarray(d.liouville)
    assert np.allclose(kernels.get("cython").objective_batch(L, psis, 2),
                       kernels.get("python").objective_batch(L, psis, 2), atol=1e-13)


def test_unknown_backend():
    with pytest.raises(ValueError, match="unavailable"):
        kernels.get("fortran")


@given(seeds, st.integers(2, 3))
@settings(max_examples=20)
def test_unitary_pairs_match_hull_oracle(seed, d):
    rng = np.random.default_rng(seed)
    u, v = linalg.random_unitary(d, rng), linalg.random_unitary(d, rng)
    val = norms.so_norm_sa(diff(channels.unitary_channel(u), channels.unitary_channel(v)), FAST).value
    assert val == pytest.approx(hull_distance(u, v), abs=1e-6)


@st.composite
def channel_pair(draw):
    rng = np.random.default_rng(draw(seeds))
    d = draw(st.integers(2, 3))
    return (channels.from_kraus(random_cptp_kraus(d, rng)), channels.from_kraus(random_cptp_kraus(d, rng)))


@given(channel_pair())
@settings(max_examples=15)
def test_diamond_dominates_so_and_both_bounded(pair):
    d = diff(*pair)
    so = norms.so_norm_sa(d, FAST).value
    dia = norms.diamond_norm(d, FAST).value
    assert dia >= so - 1e-9
    assert 0 <= so <= 2 + 1e-12 and 0 <= dia <= 2 + 1e-12


@given(channel_pair(), st.sampled_from([0.5, 2.0]))
@settings(max_examples=15)
def test_homogeneity(pair, c):
    d = diff(*pair)
    assert norms.so_norm_sa(d.scaled(c), FAST).value == pytest.approx(c * norms.so_norm_sa(d, FAST).value, abs=1e-9)


@given(seeds)
@settings(max_examples=15)
def test_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (channels.from_kraus(random_cptp_kraus(2, rng)) for _ in range(3))
    ab, bc = diff(a, b), diff(b, c)
    total = norms.so_norm_sa(ab + bc, FAST).value
    assert total <= norms.so_norm_sa(ab, FAST).value + norms.so_norm_sa(bc, FAST).value + 1e-8


def test_pure_python_fallback_selected_by_env():
    import os
    import subprocess
    import sys
    code = "from qcc import kernels, norms, channels; " \
           "d = norms.SuperoperatorDelta.difference(channels.identity(2), channels.completely_depolarizing(2)); " \
           "print(kernels.BACKEND, repr(norms.so_norm_sa(d).value))"
    env = {**os.environ, "QCC_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, value = out.stdout.split()
    assert backend == "python"
    assert float(value) == pytest.approx(1.0, abs=1e-9)
