"""Command line front end: ``qcc {norm,qcc,sweep,pipeline} --spec FILE``.

Exit status is 0 on pass, 1 when the scientific check fails (QCC violated,
Theorem-1 margins negative, or voting not guaranteed) and 2 on bad input.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__, channels, dynamics, linalg, norms, pipeline, verifier
from .norms import OptBudget, SuperoperatorDelta
from .report import RunReport, emit
from .spec import SpecDocument, SpecError, parse_spec
from .verifier import QccInstance

SEED_ENV = "QCC_SEED"
EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
BOUND_TOL = 1e-8

# library errors that mean "bad input" rather than a failed check
INPUT_ERRORS = (
    SpecError, channels.ChannelError, linalg.LinalgError, norms.NormError,
    verifier.QccError, dynamics.DynamicsError, pipeline.PipelineError,
)


@dataclass(frozen=True)
class RunFlags:
    seed: int | None = None
    restarts: int | None = None
    iters: int | None = None
    workers: int | None = None
    kind: str = "so"
    param: str | None = None
    grid: tuple[float, ...] | None = None
    trials: int | None = None
    repeats: int | None = None
    diamond: bool = False
    timing: bool = False


def resolve_seed(flag: int | None, doc: SpecDocument, env=os.environ) -> tuple[int, str]:
    if flag is not None:
        return flag, "flag"
    if doc.seed is not None:
        return doc.seed, "spec"
    if SEED_ENV in env:
        try:
            return int(env[SEED_ENV]), f"env {SEED_ENV}"
        except ValueError:
            raise SpecError("seed", f"{SEED_ENV}={env[SEED_ENV]!r} is not an integer") from None
    return 0, "default"


def parse_grid(text: str) -> tuple[float, ...]:
    """``"a,b,c"`` lists points; ``"start:stop:num"`` is an inclusive linspace."""
    text = text.strip()
    if not text:
        return ()
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            n = int(num)
            if n < 1:
                raise ValueError
            return tuple(float(z) for z in np.linspace(float(start), float(stop), n))
        return tuple(float(z) for z in text.split(","))
    except ValueError:
        raise SpecError("sweep", f"bad --grid {text!r}; use 'a,b,c' or 'start:stop:num'") from None


def _require(doc: SpecDocument, block: str, value):
    if value is None:
        raise SpecError(block, f"this command needs a '{block}' block")
    return value


def _instance(doc: SpecDocument) -> QccInstance:
    if doc.instance is None:
        for block, have in (("unitary", doc.unitary), ("channel", doc.channel), ("links", doc.links)):
            _require(doc, block, have)
    _require(doc, "alpha_budget", doc.alpha_budget)
    return doc.instance


def _norm(doc: SpecDocument, flags: RunFlags, budget: OptBudget, rep: RunReport) -> None:
    spec = doc.norm or {}
    if "left" in spec:
        delta = SuperoperatorDelta.difference(spec["left"], spec["right"], "left - right")
    elif doc.instance is not None:
        delta = verifier.implementation_delta(doc.instance)
    else:
        raise SpecError("norm", "give norm.left/norm.right or a full QCC instance")
    if flags.kind == "so":
        res = norms.so_norm_sa(delta, budget)
        value, lower = res.value, res.certified_lower_bound
    elif flags.kind == "diamond":
        res = norms.diamond_norm(delta, budget)
        value, lower = res.value, res.certified_lower_bound
    elif flags.kind == "trace":
        state = _require(doc, "norm.state", spec.get("state"))
        if state.shape != (delta.dim_in, delta.dim_in):
            raise SpecError("norm.state", f"state is {state.shape}, map input dim is {delta.dim_in}")
        value = lower = linalg.trace_norm(delta(state))
    else:
        raise SpecError("norm", f"unknown norm kind {flags.kind!r}")
    rep.results.update(kind=flags.kind, dim_in=delta.dim_in, dim_out=delta.dim_out, value=value,
                       certified_lower_bound=lower)
    rep.columns = ("kind", "dim_in", "dim_out", "value", "certified_lower_bound")
    rep.add_row(flags.kind, delta.dim_in, delta.dim_out, value, lower)


def _qcc(doc: SpecDocument, flags: RunFlags, budget: OptBudget, rep: RunReport) -> None:
    inst = _instance(doc)
    r = verifier.qcc_alpha(inst, budget, with_diamond=flags.diamond)
    rep.results.update(
        alpha_hat=r.alpha_hat, alpha_budget=r.alpha_budget, passes=r.passes,
        brute_force=r.brute_force, underestimate_flag=r.underestimate_flag,
    )
    if flags.diamond:
        rep.results.update(alpha_hat_diamond=r.alpha_hat_diamond, passes_diamond=r.passes_diamond)
    rep.columns = ("alpha_hat", "alpha_budget", "passes", "brute_force", "underestimate_flag",
                   "alpha_hat_diamond", "passes_diamond")
    rep.add_row(r.alpha_hat, r.alpha_budget, r.passes, r.brute_force, r.underestimate_flag,
                r.alpha_hat_diamond, r.passes_diamond)
    if r.underestimate_flag:
        rep.messages.append("grid search beat the optimizer by > 1e-3; raise --restarts/--iters")
    if not r.passes:
        rep.exit_code = EXIT_FAIL
    if flags.diamond and not r.passes_diamond:
        rep.messages.append("QCC holds in SO^sa but fails in the diamond norm" if r.passes
                            else "QCC fails in the diamond norm")


def _sweep(doc: SpecDocument, flags: RunFlags, budget: OptBudget, rep: RunReport) -> None:
    sw = _require(doc, "sweep", doc.sweep)
    u = _require(doc, "unitary", doc.unitary)
    links = _require(doc, "links", doc.links)
    alpha_budget = _require(doc, "alpha_budget", doc.alpha_budget)
    if flags.param is not None and flags.param != sw["parameter"]:
        raise SpecError("sweep", f"--param {flags.param!r} does not match family parameter {sw['parameter']!r}")
    grid = flags.grid if flags.grid is not None else tuple(sw["grid"])
    lambdas = sw["lambdas"]
    rep.columns = (sw["parameter"], "alpha_hat", "passes", "dressed_gap", "transfer_bound",
                   "propagator_gap", "duhamel_bound") + tuple(f"resolvent_gap_lambda_{lam:g}" for lam in lambdas)
    rep.results.update(family=sw["family"], time=sw["time"], baseline=sw["baseline"], points=len(grid))
    if not grid:
        rep.messages.append("empty grid; nothing to sweep")
        return
    fam = dynamics.named_family(sw["family"], grid)
    n = sw["iid"]

    def inst_at(ch):
        return QccInstance(u, channels.iid_noise(ch, n) if n > 1 else ch, links, alpha_budget)

    rows = verifier.stability_qcc_sweep(inst_at, fam, sw["time"], sw["baseline"], budget)
    gaps = {}
    if len(grid) > 1:
        scan = dynamics.resolvent_continuity_scan(fam, lambdas, budget)
        gaps = {(r.lam, r.z_next): r.gap for r in scan.rows}
    ok = True
    for k, row in enumerate(rows):
        res = tuple(gaps.get((lam, row.z)) if k > 0 else None for lam in lambdas)
        rep.add_row(row.z, row.alpha_hat, row.passes, row.dressed_gap, row.transfer_bound,
                    row.propagator_gap, row.duhamel_bound, *res)
        ok &= row.alpha_hat <= row.transfer_bound + BOUND_TOL
        ok &= row.propagator_gap <= row.duhamel_bound + BOUND_TOL
    rep.results.update(all_pass=all(r.passes for r in rows), bounds_hold=bool(ok))
    if not ok:
        rep.exit_code = EXIT_FAIL
        rep.messages.append("a transfer or Duhamel bound was violated; raise --restarts/--iters")


def _pipeline(doc: SpecDocument, flags: RunFlags, budget: OptBudget, rep: RunReport) -> None:
    cfg = _require(doc, "pipeline", doc.pipeline)
    inst = pipeline.PipelineInstance(cfg["problem"], cfg["init"], _instance(doc), cfg["readout"],
                                     cfg["p_budget"], budget)
    th = pipeline.theorem1_check(inst)
    binary = len(inst.problem.outputs) == 2
    trials = flags.trials if flags.trials is not None else cfg["trials"]
    repeats = flags.repeats if flags.repeats is not None else cfg["repeats"]
    rep.results.update(alpha_hat=th.alpha_hat, p_budget=th.p_budget, p_plus_alpha=th.p_budget + th.alpha_hat,
                       theorem1_holds=th.holds, voting_guaranteed=th.voting_guaranteed)
    rep.columns = ("x", "f_x", "ideal_prob", "device_prob", "ideal_margin", "device_margin", "middle_term",
                   "middle_ok", "trials", "repeats", "success_rate", "exact_success", "std_error", "within_3se")
    for row in th.rows:
        fx = inst.problem.f[row.x]
        vote = (None,) * 6
        if binary:
            st = pipeline.majority_vote_run(inst, row.x, trials, repeats, budget.seed)
            vote = (trials, repeats, st.success_rate, st.exact_success, st.std_error, st.within_3se)
        rep.add_row(row.x, fx, row.ideal_prob, row.device_prob, row.ideal_margin, row.device_margin,
                    row.middle_term, row.middle_ok, *vote)
    if th.message != "ok":
        rep.messages.append(th.message)
    if not th.holds or (binary and not th.voting_guaranteed):
        rep.exit_code = EXIT_FAIL


COMMANDS = {"norm": _norm, "qcc": _qcc, "sweep": _sweep, "pipeline": _pipeline}


def run_command(cmd: str, doc: SpecDocument, flags: RunFlags = RunFlags(), env=os.environ) -> RunReport:
    """Dispatch one command; library input errors are re-raised as ``SpecError`` with context."""
    if cmd not in COMMANDS:
        raise SpecError("command", f"unknown command {cmd!r}; choose from {sorted(COMMANDS)}")
    seed, source = resolve_seed(flags.seed, doc, env)
    overrides = {k: v for k, v in (("restarts", flags.restarts), ("iters", flags.iters),
                                   ("workers", flags.workers)) if v is not None}
    try:
        budget = dataclasses.replace(doc.budget, seed=seed, **overrides)
    except norms.NormError as exc:
        raise SpecError("budget", str(exc)) from None
    rep = RunReport(cmd, seed, source, __version__, show_timing=flags.timing)
    t0 = time.perf_counter()
    try:
        COMMANDS[cmd](doc, flags, budget, rep)
    except SpecError:
        raise
    except INPUT_ERRORS as exc:
        raise SpecError(cmd, str(exc)) from None
    rep.wall_time = time.perf_counter() - t0
    return rep


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, help="problem-spec JSON file")
    common.add_argument("--seed", type=int, help=f"RNG seed (default: spec, then ${SEED_ENV}, then 0)")
    common.add_argument("--restarts", type=int, help="optimizer restarts")
    common.add_argument("--iters", type=int, help="optimizer iterations per restart")
    common.add_argument("--workers", type=int, help="optimizer threads (results do not depend on it)")
    common.add_argument("--out", choices=("text", "csv"), default="text")
    common.add_argument("--timing", action="store_true", help="append wall time to text output")

    p = argparse.ArgumentParser(prog="qcc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qcc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    n = sub.add_parser("norm", parents=[common], help="distance between two maps")
    n.add_argument("--kind", choices=("so", "diamond", "trace"), default="so")
    q = sub.add_parser("qcc", parents=[common], help="decide the QCC for an instance")
    q.add_argument("--diamond", action="store_true", help="also decide the diamond-norm variant")
    s = sub.add_parser("sweep", parents=[common], help="QCC and stability along a generator family")
    s.add_argument("--param", help="family parameter name (must match the spec file)")
    s.add_argument("--grid", help="'a,b,c' or 'start:stop:num'")
    pl = sub.add_parser("pipeline", parents=[common], help="Theorem-1 margins and majority voting")
    pl.add_argument("--trials", type=int, help="shots per vote (odd)")
    pl.add_argument("--repeats", type=int, help="independent votes per input")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise SpecError("spec", f"cannot read {args.spec}: {exc.strerror}") from None
        doc = parse_spec(text)
        flags = RunFlags(
            seed=args.seed, restarts=args.restarts, iters=args.iters, workers=args.workers,
            kind=getattr(args, "kind", "so"), param=getattr(args, "param", None),
            grid=parse_grid(args.grid) if getattr(args, "grid", None) is not None else None,
            trials=getattr(args, "trials", None), repeats=getattr(args, "repeats", None),
            diamond=getattr(args, "diamond", False), timing=args.timing,
        )
        rep = run_command(args.command, doc, flags)
    except SpecError as exc:
        print(f"qcc: input error {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(emit(rep, args.out))
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
