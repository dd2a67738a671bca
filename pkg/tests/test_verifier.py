from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcc import channels, dynamics, linalg, verifier
from qcc.norms import OptBudget
from qcc.verifier import QccError, QccInstance

from oracles import hull_distance, majority_failure, random_cptp_kraus

seeds = st.integers(0, 2**32 - 1)
FAST = OptBudget(restarts=16, iters=150)


def rep_instance(q, budget=0.1):
    return QccInstance(np.eye(2), channels.iid_noise(channels.bit_flip(q), 3),
                       channels.repetition_code_pair(q), budget)


def trivial(p, u=None, budget=0.1):
    d = p.dim_in
    return QccInstance(np.eye(d) if u is None else u, p, channels.trivial_links(d), budget)


def test_dressed_map_examples():
    assert np.allclose(verifier.dressed_map(trivial(channels.identity(2))).liouville, np.eye(4))
    noiseless = verifier.dressed_map(rep_instance(0.0))
    assert np.max(np.abs(noiseless.liouville - np.eye(4))) <= 1e-12
    for q in (0.05, 0.2):
        got = verifier.dressed_map(rep_instance(q)).liouville
        want = channels.bit_flip(majority_failure(q)).liouville
        assert np.max(np.abs(got - want)) <= 1e-12


def test_qcc_alpha_examples():
    u = linalg.random_unitary(3, np.random.default_rng(1))
    r = verifier.qcc_alpha(trivial(channels.unitary_channel(u), u, budget=0.0))
    assert r.alpha_hat == pytest.approx(0.0, abs=1e-12) and r.passes
    r = verifier.qcc_alpha(rep_instance(0.1))
    assert r.alpha_hat == pytest.approx(0.056, abs=1e-6)
    assert r.passes and not r.underestimate_flag
    assert r.witness_state.shape == (2, 2)
    r = verifier.qcc_alpha(trivial(channels.completely_depolarizing(2), budget=0.5))
    assert r.alpha_hat == pytest.approx(1.0, abs=1e-9)
    assert not r.passes


def test_budget_boundary_tolerance():
    r = verifier.qcc_alpha(rep_instance(0.1, budget=0.056 - 5e-13), check_brute_force=False)
    assert r.passes == (r.alpha_hat <= 0.056 - 5e-13 + 1e-12)


def test_instance_validation():
    with pytest.raises(QccError, match="not unitary"):
        QccInstance(np.array([[1, 1], [0, 1]]), channels.identity(2), channels.trivial_links(2), 0.1)
    with pytest.raises(QccError, match="logical dimension"):
        QccInstance(np.eye(3), channels.identity(2), channels.trivial_links(2), 0.1)
    with pytest.raises(QccError, match="computational dimension"):
        QccInstance(np.eye(2), channels.identity(2), channels.repetition_code_pair(), 0.1)
    with pytest.raises(QccError, match="budget"):
        QccInstance(np.eye(2), channels.identity(2), channels.trivial_links(2), -1.0)


def test_perturbation_examples():
    inst = trivial(channels.bit_flip(0.1))
    same = verifier.perturbation_bound(inst, channels.bit_flip(0.1))
    assert same.dressed_gap == pytest.approx(0.0, abs=1e-12)
    assert same.alpha_hat_prime == pytest.approx(same.alpha_hat, abs=1e-12)
    rep = verifier.perturbation_bound(inst, channels.bit_flip(0.12))
    assert rep.dressed_gap == pytest.approx(0.04, abs=1e-9)
    assert rep.alpha_hat == pytest.approx(0.2, abs=1e-9)
    assert rep.alpha_hat_prime == pytest.approx(0.24, abs=1e-9)
    assert rep.holds and rep.symmetric_holds


def test_diamond_variant_examples():
    u = linalg.random_unitary(2, np.random.default_rng(3))
    assert verifier.qcc_diamond_alpha(trivial(channels.unitary_channel(u), u)) == pytest.approx(0, abs=1e-12)
    gap = trivial(channels.completely_depolarizing(2), budget=1.2)
    r = verifier.qcc_alpha(gap, with_diamond=True)
    assert r.alpha_hat == pytest.approx(1.0, abs=1e-9)
    assert r.alpha_hat_diamond == pytest.approx(1.5, abs=1e-6)
    assert r.passes and not r.passes_diamond
    assert r.alpha_hat <= gap.alpha_budget < r.alpha_hat_diamond


@pytest.mark.parametrize("seed", range(4))
def test_diamond_equals_so_for_unitary_differences(seed):
    rng = np.random.default_rng(seed)
    u, v = linalg.random_unitary(2, rng), linalg.random_unitary(2, rng)
    inst = trivial(channels.unitary_channel(v), u)
    r = verifier.qcc_alpha(inst, with_diamond=True)
    assert r.alpha_hat_diamond == pytest.approx(r.alpha_hat, abs=2e-3)
    assert r.alpha_hat == pytest.approx(hull_distance(u, v), abs=1e-6)


def test_verify_many_preserves_order():
    insts = [rep_instance(q) for q in (0.0, 0.1, 0.2, 0.3)]
    serial = verifier.verify_many(insts, FAST, check_brute_force=False)
    threaded = verifier.verify_many(insts, FAST, workers=3, check_brute_force=False)
    assert [r.alpha_hat for r in serial] == [r.alpha_hat for r in threaded]
    assert [r.alpha_hat for r in serial] == sorted(r.alpha_hat for r in serial)


def test_stability_qcc_sweep_rows():
    fam = dynamics.named_family("bitflip_rate_family", [0.0, 0.05, 0.1])
    links = channels.repetition_code_pair()

    def inst_at(ch):
        return QccInstance(np.eye(2), channels.iid_noise(ch, 3), links, 0.1)

    rows = verifier.stability_qcc_sweep(inst_at, fam, 1.0, 0.0, FAST)
    for row in rows:
        q = (1 - np.exp(-2 * row.z)) / 2
        assert row.alpha_hat == pytest.approx(2 * majority_failure(q), abs=1e-6)
        assert row.alpha_hat <= row.transfer_bound + 1e-8
        assert row.propagator_gap <= row.duhamel_bound + 1e-9


def test_brute_force_result_is_lower_bound():
    inst = rep_instance(0.2)
    bf = verifier.brute_force_result(inst, 10_000)
    assert bf.value <= verifier.qcc_alpha(inst, check_brute_force=False).alpha_hat + 1e-9


@given(seeds)
@settings(max_examples=15)
def test_alpha_in_range_and_dominates_per_state(seed):
    rng = np.random.default_rng(seed)
    p = channels.from_kraus(random_cptp_kraus(2, rng))
    u = linalg.random_unitary(2, rng)
    inst = trivial(p, u)
    alpha = verifier.qcc_alpha(inst, FAST, check_brute_force=False).alpha_hat
    assert 0 <= alpha <= 2 + 1e-12
    dressed = verifier.dressed_map(inst)
    for _ in range(100):
        rho = linalg.random_density(2, rng, rank=int(rng.integers(1, 3)))
        gap = linalg.trace_norm(dressed(rho) - u @ rho @ u.conj().T)
        assert gap <= alpha + 1e-8


@given(seeds)
@settings(max_examples=15)
def test_perturbation_transfer_random(seed):
    rng = np.random.default_rng(seed)
    p, p2 = (channels.from_kraus(random_cptp_kraus(2, rng)) for _ in range(2))
    rep = verifier.perturbation_bound(trivial(p), p2, FAST)
    assert rep.holds and rep.symmetric_holds
