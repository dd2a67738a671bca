"""Acceptance criteria, each at its stated tolerance.

Every test records one ``[AC-n] PASS|FAIL`` line; the lines are printed
as they are produced and repeated in the terminal summary.
"""
from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from qcc import channels, dynamics, linalg, norms, pipeline, verifier
from qcc.norms import OptBudget, SuperoperatorDelta
from qcc.pipeline import ClassicalProblem, InitializationMap, PipelineInstance
from qcc.verifier import QccInstance

from oracles import binomial_majority, hull_distance, majority_failure, random_cptp_kraus

RESULTS: list[str] = []
EXAMPLES = Path(__file__).resolve().parents[1] / "docs" / "examples"
BUDGET = OptBudget()


def record(n: int, ok: bool, detail: str) -> None:
    line = f"[AC-{n:02d}] {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def trivial(p, u=None, budget=0.0):
    d = p.dim_in
    return QccInstance(np.eye(d) if u is None else u, p, channels.trivial_links(d), budget)


def test_ac01_so_norm_matches_hull_oracle():
    worst = 0.0
    rng = np.random.default_rng(101)
    for d in (2, 3):
        for _ in range(50):
            u, v = linalg.random_unitary(d, rng), linalg.random_unitary(d, rng)
            delta = SuperoperatorDelta.difference(channels.unitary_channel(u), channels.unitary_channel(v))
            worst = max(worst, abs(norms.so_norm_sa(delta, BUDGET).value - hull_distance(u, v)))
    record(1, worst <= 1e-6, f"100 unitary pairs (dims 2, 3), max |so - hull| = {worst:.2e} <= 1e-6")


def test_ac02_diamond_dominates_so():
    rng = np.random.default_rng(102)
    worst = np.inf
    for i in range(100):
        d = 2 if i < 50 else 3
        a, b = (channels.from_kraus(random_cptp_kraus(d, rng, int(rng.integers(1, 4)))) for _ in range(2))
        delta = SuperoperatorDelta.difference(a, b)
        slack = norms.diamond_norm(delta, BUDGET).value - norms.so_norm_sa(delta, BUDGET).value
        worst = min(worst, slack)
    record(2, worst >= -1e-9, f"100 CPTP differences, min(diamond - so) = {worst:.2e} >= -1e-9")


def test_ac03_gap_reproduction():
    inst = trivial(channels.completely_depolarizing(2), budget=1.2)
    delta = verifier.implementation_delta(inst)
    so = norms.so_norm_sa(delta, BUDGET).value
    dia = norms.diamond_norm(delta, BUDGET).value
    rep = verifier.qcc_alpha(inst, BUDGET, with_diamond=True)
    ok = abs(so - 1) <= 1e-6 and dia >= 1.5 - 1e-3 and rep.passes and rep.passes_diamond is False
    record(3, ok, f"id vs depolarizing: so = {so:.9f}, diamond = {dia:.9f}; "
                  f"QCC@1.2 passes={rep.passes}, QCC_diamond@1.2 passes={rep.passes_diamond}")


def test_ac04_repetition_code_alpha():
    links = channels.repetition_code_pair()
    worst = 0.0
    for q in np.round(np.arange(0, 0.3001, 0.05), 10):
        inst = QccInstance(np.eye(2), channels.iid_noise(channels.bit_flip(q), 3), links, 1.0)
        alpha = verifier.qcc_alpha(inst, BUDGET).alpha_hat
        worst = max(worst, abs(alpha - 2 * majority_failure(q)))
        assert majority_failure(q) == pytest.approx(3 * q**2 - 2 * q**3, abs=1e-15)
    record(4, worst <= 1e-6, f"q in 0..0.3 step 0.05, max |alpha - 2(3q^2 - 2q^3)| = {worst:.2e} <= 1e-6")


def test_ac05_lemma1_transfer():
    rng = np.random.default_rng(105)
    worst = -np.inf
    for i in range(50):
        d = 2
        u = linalg.random_unitary(d, rng) if i % 2 else np.eye(d)
        p, p2 = (channels.from_kraus(random_cptp_kraus(d, rng, int(rng.integers(1, 4)))) for _ in range(2))
        rep = verifier.perturbation_bound(trivial(p, u), p2, BUDGET, strict=False)
        swapped = verifier.perturbation_bound(trivial(p2, u), p, BUDGET, strict=False)
        worst = max(worst, rep.alpha_hat_prime - rep.bound, swapped.alpha_hat_prime - swapped.bound)
    record(5, worst <= 1e-8, f"50 random (P, P') pairs both directions, max(alpha' - alpha - gap) = {worst:.2e} <= 1e-8")


def test_ac06_stability_refinement():
    lambdas = (0.1, 1.0, 10.0)
    levels = dynamics.refinement_study(
        dynamics.named_family("damping_family", [1.0]), (1.0, 2.0), 1.0,
        base_intervals=8, levels=3, lambdas=lambdas, budget=BUDGET,
    )
    ratios = []
    for a, b in zip(levels, levels[1:]):
        ratios += [a.resolvent_gaps[lam] / b.resolvent_gaps[lam] for lam in lambdas]
        ratios.append(a.propagator_gap / b.propagator_gap)
    low = min(ratios)
    record(6, low >= 1.8 and len(levels) == 4,
           f"damping family, 3 refinements at lambda in {{0.1, 1, 10}}: min shrink ratio = {low:.3f} >= 1.8")


def test_ac07_propagator_correctness():
    worst_ad, worst_sg = 0.0, 0.0
    for gamma in (0.5, 1.0):
        g = dynamics.damping_generator(gamma)
        for gt in (0.1, 0.5, 1.0, 2.0):
            t = gt / gamma
            p = dynamics.propagator(g, t)
            worst_ad = max(worst_ad, float(np.max(np.abs(
                p.liouville - channels.amplitude_damping(1 - np.exp(-gt)).liouville))))
    rng = np.random.default_rng(107)
    for _ in range(10):
        d = int(rng.integers(2, 4))
        h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        jumps = tuple(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for _ in range(2))
        g = dynamics.LindbladGenerator(d, (h + h.conj().T) / 2, jumps)
        s, t = rng.uniform(0, 1, 2)
        lhs = channels.compose(dynamics.propagator(g, s), dynamics.propagator(g, t)).liouville
        worst_sg = max(worst_sg, float(np.max(np.abs(lhs - dynamics.propagator(g, s + t).liouville))))
    record(7, worst_ad <= 1e-9 and worst_sg <= 1e-9,
           f"amplitude damping max dev {worst_ad:.2e}, semigroup max dev {worst_sg:.2e} (<= 1e-9)")


def _rep_pipeline(q, p):
    device = QccInstance(np.eye(2), channels.iid_noise(channels.bit_flip(q), 3), channels.repetition_code_pair(q), 0.1)
    problem = ClassicalProblem(("0", "1"), ("0", "1"), {"0": "0", "1": "1"})
    init = InitializationMap.from_vectors({"0": [1, 0], "1": [0, 1]})
    return PipelineInstance(problem, init, device, pipeline.computational_readout(2, ["0", "1"]), p)


def test_ac08_theorem1():
    inst = _rep_pipeline(0.1, 0.05)
    rep = pipeline.theorem1_check(inst)
    probs = [r.device_prob for r in rep.rows]
    middles = [abs(r.middle_term) for r in rep.rows]
    ok = (abs(rep.alpha_hat - 0.056) <= 1e-6 and not rep.precondition_failures
          and all(pr >= 1 - 0.106 for pr in probs) and all(m <= rep.alpha_hat + 1e-8 for m in middles)
          and rep.holds)
    record(8, ok, f"alpha = {rep.alpha_hat:.9f}, min Pr_x(F(x)) = {min(probs):.6f} >= 0.894, "
                  f"max |middle| = {max(middles):.6f} <= alpha + 1e-8")


def test_ac09_majority_voting():
    stats = pipeline.vote({"wrong": 0.3, "right": 0.7}, "right", "x", 101, 1000, seed=2024)
    exact = binomial_majority(0.7, 101)
    se = np.sqrt(exact * (1 - exact) / 1000)
    within = abs(stats.success_rate - exact) <= 3 * se and abs(stats.exact_success - exact) <= 1e-12
    flagged = pipeline.theorem1_check(_rep_pipeline(0.3, 0.4))
    ok = within and not flagged.voting_guaranteed and "majority voting not guaranteed" in flagged.message
    record(9, ok, f"empirical {stats.success_rate:.4f} vs exact {exact:.6f} (3 SE = {3 * se:.4f}); "
                  f"p + alpha = {flagged.p_budget + flagged.alpha_hat:.4f} flagged={not flagged.voting_guaranteed}")


def test_ac10_kitaev_limit():
    rng = np.random.default_rng(110)
    worst = 0.0
    for _ in range(5):
        u = linalg.random_unitary(2, rng)
        device = QccInstance(u, channels.unitary_channel(u), channels.trivial_links(2), 0.0)
        problem = ClassicalProblem(("a", "b"), ("0", "1"), {"a": "0", "b": "1"})
        init = InitializationMap.from_vectors({"a": [1, 0], "b": [0, 1]})
        # readout tilted off U's output basis so the ideal margins are not trivial
        tilt = u @ linalg.matrix_exp(-0.2j * channels.Y)
        inst = PipelineInstance(problem, init, device, pipeline.output_basis_readout(tilt, ["0", "1"]), 0.2)
        for x in problem.inputs:
            worst = max(worst, abs(pipeline.near_commutativity_margin(inst, x) - pipeline.ideal_margin(inst, x)))
    record(10, worst <= 1e-12, f"device = unitary_channel(U): max |margin(11) - margin(8)| = {worst:.2e} <= 1e-12")


def _cli_csv(args):
    cmd = [sys.executable, "-m", "qcc.cli", *args, "--out", "csv"]
    res = subprocess.run(cmd, capture_output=True)
    return res.returncode, res.stdout


def test_ac11_determinism():
    runs = [
        ["qcc", "--spec", str(EXAMPLES / "repetition.json"), "--seed", "5"],
        ["qcc", "--spec", str(EXAMPLES / "depolarizing_gap.json"), "--diamond"],
        ["norm", "--kind", "diamond", "--spec", str(EXAMPLES / "depolarizing_gap.json"), "--seed", "9"],
        ["sweep", "--spec", str(EXAMPLES / "damping_sweep.json"), "--param", "gamma", "--grid", "0:0.8:5"],
        ["pipeline", "--spec", str(EXAMPLES / "pipeline_repetition.json"), "--trials", "51", "--repeats", "200"],
        ["pipeline", "--spec", str(EXAMPLES / "pipeline_hadamard.json")],
    ]
    mismatched = []
    for args in runs:
        first, second = _cli_csv(args), _cli_csv(args)
        if first != second or first[0] not in (0, 1) or not first[1]:
            mismatched.append(args[0])
    record(11, not mismatched, f"{len(runs)} CLI reports run twice in fresh processes; byte-identical CSV"
                               + (f" except {mismatched}" if mismatched else ""))
