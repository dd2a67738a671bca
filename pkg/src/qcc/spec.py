"""Problem-spec documents (JSON) for the command line tool.

The schema is strict: unknown keys are errors, and every matrix is checked
for shape when the document is parsed. Complex entries are ``[re, im]``
pairs; plain numbers are read as real.

Top-level keys::

    version       "qcc-spec/1"
    seed          integer
    budget        {restarts, iters, step, workers, refine}
    unitary       "identity" | gate name | {"phase": theta} | matrix
    channel       channel block (see ``_channel``)
    generator     {hamiltonian, jumps, time} | {family, value, time}
    links         "trivial" | "repetition" | {encode: channel, decode: channel}
    alpha_budget  number >= 0
    norm          {left: channel, right: channel, state: matrix}
    sweep         {family, time, baseline, grid, lambdas, iid}
    pipeline      {problem, prepare, readout, p_budget, trials, repeats}
"""
from __future__ import annotations

import inspect
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import channels, dynamics, pipeline
from .channels import ChannelError, LinkingMapPair, QuantumChannel
from .linalg import LinalgError
from .norms import NormError, OptBudget
from .verifier import QccError, QccInstance

VERSION_TAG = "qcc-spec/1"

TOP_KEYS = {
    "version", "seed", "budget", "unitary", "channel", "generator", "links",
    "alpha_budget", "norm", "sweep", "pipeline",
}

GATES = {
    "X": channels.X,
    "Y": channels.Y,
    "Z": channels.Z,
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
}


class SpecError(ValueError):
    """Schema or content problem; ``block`` names the offending section."""

    def __init__(self, block: str, message: str):
        super().__init__(f"[{block}] {message}")
        self.block = block


@dataclass(eq=False)
class SpecDocument:
    version: str
    raw: dict
    seed: int | None
    budget: OptBudget
    unitary: np.ndarray | None = None
    channel: QuantumChannel | None = None
    links: LinkingMapPair | None = None
    alpha_budget: float | None = None
    instance: QccInstance | None = None
    norm: dict | None = None
    sweep: dict | None = None
    pipeline: dict | None = None
    sections: tuple = field(default=())


def _keys(block: str, obj: Any, allowed: set, required: set = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise SpecError(block, f"expected an object, got {type(obj).__name__}")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise SpecError(block, f"unknown key {extra[0]!r} (allowed: {sorted(allowed)})")
    missing = sorted(required - set(obj))
    if missing:
        raise SpecError(block, f"missing required key {missing[0]!r}")
    return obj


def _number(block: str, v: Any, lo: float | None = None) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecError(block, f"expected a number, got {v!r}")
    if lo is not None and v < lo:
        raise SpecError(block, f"value {v} must be >= {lo}")
    return float(v)


def _int(block: str, v: Any, lo: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise SpecError(block, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise SpecError(block, f"value {v} must be >= {lo}")
    return v


def _scalar(block: str, v: Any) -> complex:
    if isinstance(v, bool):
        raise SpecError(block, f"bad matrix entry {v!r}")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(
        isinstance(t, (int, float)) and not isinstance(t, bool) for t in v
    ):
        return complex(v[0], v[1])
    raise SpecError(block, f"matrix entries must be numbers or [re, im] pairs, got {v!r}")


def parse_matrix(block: str, obj: Any) -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) and r for r in obj):
        raise SpecError(block, "matrix must be a non-empty list of non-empty rows")
    width = len(obj[0])
    if any(len(r) != width for r in obj):
        raise SpecError(block, f"ragged matrix: row lengths {[len(r) for r in obj]}")
    m = np.array([[_scalar(block, v) for v in row] for row in obj], dtype=complex)
    if not np.all(np.isfinite(m)):
        raise SpecError(block, "matrix entries must be finite")
    return m


def parse_vector(block: str, obj: Any) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise SpecError(block, "state vector must be a non-empty list")
    v = np.array([_scalar(block, t) for t in obj], dtype=complex)
    n = np.linalg.norm(v)
    if n == 0:
        raise SpecError(block, "state vector is zero")
    return v / n


def _wrap(block: str, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except (ChannelError, LinalgError, NormError, QccError,
            dynamics.DynamicsError, pipeline.PipelineError) as exc:
        raise SpecError(block, str(exc)) from None


def _channel(block: str, obj: Any, dim_hint: int | None = None) -> QuantumChannel:
    """``{"builder": name, "params": {...}, "iid": n}`` or ``{"kraus": [matrix, ...], "iid": n}``.

    A bare string is a builder with default parameters; ``dim_hint`` fills a
    missing dimension ``d``.
    """
    if isinstance(obj, str):
        obj = {"builder": obj}
    obj = _keys(block, obj, {"builder", "params", "kraus", "unitary", "iid"})
    kinds = [k for k in ("builder", "kraus", "unitary") if k in obj]
    if len(kinds) != 1:
        raise SpecError(block, "give exactly one of 'builder', 'kraus', 'unitary'")
    if "builder" in obj:
        name = obj["builder"]
        if name not in channels.BUILDERS:
            raise SpecError(block, f"unknown builder {name!r}; known: {sorted(channels.BUILDERS)}")
        fn = channels.BUILDERS[name]
        params = obj.get("params", {})
        if not isinstance(params, dict):
            raise SpecError(block, "'params' must be an object")
        allowed = set(inspect.signature(fn).parameters)
        extra = sorted(set(params) - allowed)
        if extra:
            raise SpecError(block, f"unknown parameter {extra[0]!r} for builder {name!r} (allowed: {sorted(allowed)})")
        for k, v in params.items():
            if k == "d":
                _int(f"{block}.params", v, 1)
            else:
                _number(f"{block}.params", v)
        if "d" in allowed and "d" not in params and dim_hint is not None:
            params = {**params, "d": dim_hint}
        sig = inspect.signature(fn).parameters
        missing = [k for k, v in sig.items() if v.default is inspect.Parameter.empty and k not in params]
        if missing:
            raise SpecError(block, f"builder {name!r} needs params.{missing[0]}")
        ch = _wrap(block, fn, **params)
    elif "kraus" in obj:
        if "params" in obj:
            raise SpecError(block, "'params' only applies to builders")
        ops = obj["kraus"]
        if not isinstance(ops, list) or not ops:
            raise SpecError(block, "'kraus' must be a non-empty list of matrices")
        mats = [parse_matrix(f"{block}.kraus[{i}]", k) for i, k in enumerate(ops)]
        ch = _wrap(block, channels.from_kraus, mats)
    else:
        ch = _wrap(block, channels.unitary_channel, _unitary(block, obj["unitary"], None))
    if "iid" in obj:
        ch = _wrap(block, channels.iid_noise, ch, _int(block, obj["iid"], 1))
    return ch


def _unitary(block: str, obj: Any, dim: int | None) -> np.ndarray:
    if obj == "identity":
        if dim is None:
            raise SpecError(block, "cannot infer the dimension of 'identity'")
        return np.eye(dim, dtype=complex)
    if isinstance(obj, str):
        if obj not in GATES:
            raise SpecError(block, f"unknown gate {obj!r}; known: identity, {', '.join(GATES)}")
        return GATES[obj].astype(complex)
    if isinstance(obj, dict):
        _keys(block, obj, {"phase"}, {"phase"})
        return np.diag([1.0, np.exp(1j * _number(block, obj["phase"]))])
    u = parse_matrix(block, obj)
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) if u.shape[0] == u.shape[1] else np.inf
    if not dev <= 1e-10:
        raise SpecError(block, "matrix is not unitary")
    return u


def _unitary_dim(obj: Any) -> int | None:
    if isinstance(obj, list):
        return len(obj)
    if isinstance(obj, dict) or obj in GATES:
        return 2
    return None


def _links(obj: Any, dim_comp: int | None, dim_hint: int | None = None) -> LinkingMapPair:
    if obj == "trivial":
        if dim_comp is None:
            raise SpecError("links", "trivial links need a channel or generator to fix the dimension")
        return channels.trivial_links(dim_comp)
    if obj == "repetition":
        return channels.repetition_code_pair()
    if isinstance(obj, dict):
        _keys("links", obj, {"encode", "decode"}, {"encode", "decode"})
        enc = _channel("links.encode", obj["encode"], dim_hint)
        dec = _channel("links.decode", obj["decode"], dim_hint)
        return _wrap("links", LinkingMapPair, enc, dec)
    raise SpecError("links", f"expected 'trivial', 'repetition' or an object, got {obj!r}")


def _generator(obj: Any) -> tuple[dynamics.LindbladGenerator, float]:
    obj = _keys("generator", obj, {"hamiltonian", "jumps", "family", "value", "time"}, {"time"})
    t = _number("generator", obj["time"], 0.0)
    if "family" in obj:
        if "hamiltonian" in obj or "jumps" in obj:
            raise SpecError("generator", "give either a named family or explicit matrices")
        if "value" not in obj:
            raise SpecError("generator", "missing required key 'value'")
        fam = _wrap("generator", dynamics.named_family, obj["family"], [0.0])
        g = _wrap("generator", fam.generator_at, _number("generator", obj["value"], 0.0))
        return g, t
    if "hamiltonian" not in obj:
        raise SpecError("generator", "missing required key 'hamiltonian'")
    h = parse_matrix("generator.hamiltonian", obj["hamiltonian"])
    jumps = obj.get("jumps", [])
    if not isinstance(jumps, list):
        raise SpecError("generator", "'jumps' must be a list of matrices")
    js = [parse_matrix(f"generator.jumps[{i}]", j) for i, j in enumerate(jumps)]
    g = _wrap("generator", dynamics.LindbladGenerator, h.shape[0], h, tuple(js))
    return g, t


def _budget(obj: Any) -> OptBudget:
    obj = _keys("budget", obj, {"restarts", "iters", "step", "workers", "refine"})
    kw = {}
    for k in ("restarts", "iters", "workers", "refine"):
        if k in obj:
            kw[k] = _int("budget", obj[k], 0 if k in ("iters", "refine") else 1)
    if "step" in obj:
        kw["step"] = _number("budget", obj["step"])
        if kw["step"] <= 0:
            raise SpecError("budget", "'step' must be positive")
    return OptBudget(**kw)


def _grid(block: str, obj: Any) -> list[float]:
    if not isinstance(obj, list):
        raise SpecError(block, "grid must be a list of numbers")
    return [_number(block, z) for z in obj]


def _sweep(obj: Any) -> dict:
    obj = _keys("sweep", obj, {"family", "time", "baseline", "grid", "lambdas", "iid"},
                {"family", "time", "baseline"})
    fam = _wrap("sweep", dynamics.named_family, obj["family"], [0.0])
    out = {
        "family": obj["family"],
        "parameter": fam.parameter_name,
        "time": _number("sweep", obj["time"], 0.0),
        "baseline": _number("sweep", obj["baseline"]),
        "grid": _grid("sweep", obj.get("grid", [])),
        "lambdas": _grid("sweep", obj.get("lambdas", list(dynamics.DEFAULT_LAMBDAS))),
        "iid": _int("sweep", obj.get("iid", 1), 1),
    }
    if any(lam <= 0 for lam in out["lambdas"]):
        raise SpecError("sweep", "resolvent lambdas must be positive")
    return out


def _pipeline(obj: Any, inst: QccInstance | None) -> dict:
    obj = _keys("pipeline", obj, {"problem", "prepare", "readout", "p_budget", "trials", "repeats"},
                {"problem", "prepare", "readout", "p_budget"})
    if inst is None:
        raise SpecError("pipeline", "needs a device: give unitary, channel/generator, links and alpha_budget")
    table = obj["problem"]
    if not isinstance(table, dict) or not table or not all(isinstance(v, str) for v in table.values()):
        raise SpecError("pipeline.problem", "problem must map input labels to output labels (strings)")
    inputs = tuple(table)
    d = inst.dim_logical
    prep = _keys("pipeline.prepare", obj["prepare"], set(inputs), set(inputs))
    vectors = {}
    for x, v in prep.items():
        vec = parse_vector(f"pipeline.prepare.{x}", v)
        if vec.shape != (d,):
            raise SpecError(f"pipeline.prepare.{x}", f"state has length {vec.shape[0]}, logical dim is {d}")
        vectors[x] = vec
    readout = obj["readout"]
    if isinstance(readout, dict):
        r = _keys("pipeline.readout", readout, {"outcomes", "basis", "effects"})
        if "effects" in r:
            eff = r["effects"]
            if not isinstance(eff, dict) or not eff:
                raise SpecError("pipeline.readout", "'effects' must map labels to matrices")
            povm = _wrap("pipeline.readout", channels.Povm.from_effects,
                         {y: parse_matrix(f"pipeline.readout.effects.{y}", m) for y, m in eff.items()})
        else:
            outs = r.get("outcomes")
            if not isinstance(outs, list) or not all(isinstance(y, str) for y in outs):
                raise SpecError("pipeline.readout", "'outcomes' must be a list of labels")
            basis = r.get("basis", "computational")
            if basis == "computational":
                mat = np.eye(d)
            elif basis == "output":
                mat = inst.u
            else:
                mat = _unitary("pipeline.readout.basis", basis, d)
            if mat.shape != (d, d) or len(outs) != d:
                raise SpecError("pipeline.readout", f"projective readout needs {d} outcomes on dim {d}")
            povm = _wrap("pipeline.readout", channels.Povm.projective, mat, outs)
    else:
        raise SpecError("pipeline.readout", "readout must be an object with 'effects' or 'outcomes'")
    outputs = tuple(povm.outcomes)
    problem = _wrap("pipeline.problem", pipeline.ClassicalProblem, inputs, outputs, dict(table))
    init = _wrap("pipeline.prepare", pipeline.InitializationMap.from_vectors, vectors)
    return {
        "problem": problem,
        "init": init,
        "readout": povm,
        "p_budget": _number("pipeline", obj["p_budget"], 0.0),
        "trials": _int("pipeline", obj.get("trials", 101), 1),
        "repeats": _int("pipeline", obj.get("repeats", 1000), 1),
    }


def parse_spec(text: str) -> SpecDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("document", f"parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    _keys("document", raw, TOP_KEYS, {"version"})
    if raw["version"] != VERSION_TAG:
        raise SpecError("version", f"unsupported version {raw['version']!r}; expected {VERSION_TAG!r}")
    seed = _int("seed", raw["seed"], 0) if "seed" in raw else None
    doc = SpecDocument(VERSION_TAG, raw, seed, _budget(raw.get("budget", {})), sections=tuple(raw))

    if "channel" in raw and "generator" in raw:
        raise SpecError("channel", "give either 'channel' or 'generator', not both")
    if "channel" in raw:
        doc.channel = _channel("channel", raw["channel"], _unitary_dim(raw.get("unitary")))
    elif "generator" in raw:
        g, t = _generator(raw["generator"])
        doc.channel = _wrap("generator", dynamics.propagator, g, t)
    if "sweep" in raw:
        doc.sweep = _sweep(raw["sweep"])
    if "links" in raw:
        if doc.channel is not None:
            dim_comp = doc.channel.dim_in
        elif doc.sweep is not None:
            dim_comp = 2 ** doc.sweep["iid"]
        else:
            dim_comp = None
        doc.links = _links(raw["links"], dim_comp, _unitary_dim(raw.get("unitary")))
    if "unitary" in raw:
        dim = doc.links.dim_logical if doc.links else (doc.channel.dim_in if doc.channel else None)
        doc.unitary = _unitary("unitary", raw["unitary"], dim)
    if "alpha_budget" in raw:
        doc.alpha_budget = _number("alpha_budget", raw["alpha_budget"], 0.0)

    if doc.channel is not None and doc.unitary is not None:
        if doc.links is None:
            raise SpecError("links", "missing 'links' block")
        doc.instance = _wrap("channel", QccInstance, doc.unitary, doc.channel, doc.links,
                             doc.alpha_budget if doc.alpha_budget is not None else 0.0)
    if "norm" in raw:
        n = _keys("norm", raw["norm"], {"left", "right", "state"})
        doc.norm = {}
        if "left" in n or "right" in n:
            if not ("left" in n and "right" in n):
                raise SpecError("norm", "give both 'left' and 'right' channels")
            doc.norm["left"] = _channel("norm.left", n["left"])
            doc.norm["right"] = _channel("norm.right", n["right"])
            if (doc.norm["left"].dim_in, doc.norm["left"].dim_out) != (doc.norm["right"].dim_in, doc.norm["right"].dim_out):
                raise SpecError("norm", "left and right channels have different dimensions")
        if "state" in n:
            doc.norm["state"] = _wrap("norm.state", channels.check_density, parse_matrix("norm.state", n["state"]))
    if "pipeline" in raw:
        doc.pipeline = _pipeline(raw["pipeline"], doc.instance)
    return doc
