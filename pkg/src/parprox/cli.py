"""Command-line entry point and the JSON problem-file format.

Problem file (``format: 1``)::

    {
      "format": 1,
      "partition": [1, 1],
      "problem": {"family": "convex_program_qp",
                  "P": [[2]], "q": [0], "A": [[-1]], "b": [1]},
      "schedule": {"kind": "jacobi"},
      "run": {"tol": 1e-8, "max_iter": 500, "x0": [0, 0]},
      "checks": {"run_h2": false, "run_h3": true, "trials": 1000, "seed": 0}
    }

``problem`` is either a catalog family (``"family": ...``) or a built-in
operator (``"operator": "identity" | "scale" | "affine_average"``). Unknown
fields are errors. Infinite box bounds are written ``"-inf"`` / ``"inf"``.
Block numbers in schedules are 1-based.

Exit status: 0 converged or checks passed, 1 input error, 2 run did not
converge, 3 a hypothesis check failed.
"""

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import monotone as mono
from .blockspace import BlockVector, make_partition
from .engine import TRACE_LEVELS, RunConfig, run_general
from .errors import ConsistencyError, InputError, InvalidParams, InvalidProblem, ParseError, SchemaError
from .operators import DEFAULT_SLACK, DEFAULT_TRIALS, UniformPairSampler, affine_average, check_h2, check_h3, identity, scale
from .schedule import KINDS, build_schedule, validate_schedule

__all__ = ["ProblemSpec", "parse_problem", "render_problem", "build", "main", "EXIT_OK", "EXIT_INPUT", "EXIT_NOT_CONVERGED", "EXIT_CHECK_FAILED"]

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2
EXIT_CHECK_FAILED = 3

FORMAT_VERSION = 1
BUILTINS = {"identity": (), "scale": ("k",), "affine_average": ("a",)}
FAMILY_FIELDS = {
    "linear": (("M",), ()),
    "separable_prox": (("atoms",), ()),
    "saddle_quadratic": (("P", "q", "A", "b"), ("R",)),
    "convex_program_qp": (("P", "q", "A", "b"), ("enum_cap",)),
    "variational_inequality": (("G", "g"), ("lo", "hi", "enum_cap")),
}
ATOM_FIELDS = {"quadratic": ("a", "c"), "absolute_value": (), "box_indicator": ("lo", "hi")}
SCHEDULE_FIELDS = {
    "jacobi": (),
    "gauss_seidel": (),
    "periodic_full": ("period", "base"),
    "custom": ("J", "S"),
}


@dataclass
class ScheduleSpec:
    kind: str = "jacobi"
    alpha: Optional[int] = None
    horizon: Optional[int] = None
    params: dict = field(default_factory=dict)


@dataclass
class RunSpec:
    tol: float = 1e-8
    max_iter: int = 1000
    workers: int = 1
    trace_level: str = "residuals"
    x0: Optional[list] = None
    reference_point: Optional[list] = None


@dataclass
class ChecksSpec:
    run_h2: bool = True
    run_h3: bool = True
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    slack: float = DEFAULT_SLACK


@dataclass
class ProblemSpec:
    partition: list
    problem: dict
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    run: RunSpec = field(default_factory=RunSpec)
    checks: ChecksSpec = field(default_factory=ChecksSpec)

    @property
    def alpha(self) -> int:
        return len(self.partition)

    @property
    def dim(self) -> int:
        return sum(self.partition)


# --- field readers -----------------------------------------------------------


def _obj(value, path):
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected an object, got {type(value).__name__}")
    return value


def _no_unknown(obj, allowed, path):
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise SchemaError(f"{path}.{extra[0]}" if path else extra[0], "unknown field")


def _number(value, path, allow_inf=False):
    if isinstance(value, str) and allow_inf and value in ("inf", "-inf"):
        return math.inf if value == "inf" else -math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise SchemaError(path, "non-finite number")
    return float(value)


def _integer(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise SchemaError(path, f"must be >= {minimum}")
    return value


def _boolean(value, path):
    if not isinstance(value, bool):
        raise SchemaError(path, f"expected true/false, got {value!r}")
    return value


def _vector(value, path, allow_inf=False):
    if not isinstance(value, list):
        raise SchemaError(path, "expected an array of numbers")
    return [_number(v, f"{path}[{i}]", allow_inf) for i, v in enumerate(value)]


def _matrix(value, path):
    if not isinstance(value, list):
        raise SchemaError(path, "expected a row-major array of arrays")
    rows = [_vector(r, f"{path}[{i}]") for i, r in enumerate(value)]
    if len({len(r) for r in rows}) > 1:
        raise SchemaError(path, "rows have different lengths")
    return rows


def _int_table(value, path):
    if not isinstance(value, list):
        raise SchemaError(path, "expected an array of arrays of integers")
    out = []
    for i, row in enumerate(value):
        if not isinstance(row, list):
            raise SchemaError(f"{path}[{i}]", "expected an array of integers")
        out.append([_integer(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    return out


def _read_problem(obj):
    obj = _obj(obj, "problem")
    if ("family" in obj) == ("operator" in obj):
        raise SchemaError("problem", "give exactly one of 'family' or 'operator'")
    if "operator" in obj:
        name = obj["operator"]
        if name not in BUILTINS:
            raise SchemaError("problem.operator", f"unknown operator {name!r}; expected one of {sorted(BUILTINS)}")
        _no_unknown(obj, ("operator",) + BUILTINS[name], "problem")
        out = {"operator": name}
        for key in BUILTINS[name]:
            if key not in obj:
                raise SchemaError(f"problem.{key}", "missing")
        if name == "scale":
            out["k"] = _number(obj["k"], "problem.k")
        elif name == "affine_average":
            out["a"] = _vector(obj["a"], "problem.a")
        return out

    fam = obj["family"]
    if fam not in FAMILY_FIELDS:
        raise SchemaError("problem.family", f"unknown family {fam!r}; expected one of {list(FAMILY_FIELDS)}")
    required, optional = FAMILY_FIELDS[fam]
    _no_unknown(obj, ("family",) + required + optional, "problem")
    for key in required:
        if key not in obj:
            raise SchemaError(f"problem.{key}", "missing")
    out = {"family": fam}
    for key in required + optional:
        if key not in obj:
            continue
        path = f"problem.{key}"
        val = obj[key]
        if key in ("M", "P", "A", "R", "G"):
            out[key] = _matrix(val, path)
        elif key in ("q", "b", "g"):
            out[key] = _vector(val, path)
        elif key in ("lo", "hi"):
            out[key] = _vector(val, path, allow_inf=True)
        elif key == "enum_cap":
            out[key] = _integer(val, path, minimum=0)
        elif key == "atoms":
            if not isinstance(val, list) or not val:
                raise SchemaError(path, "expected a non-empty array of atoms")
            atoms = []
            for i, a in enumerate(val):
                apath = f"{path}[{i}]"
                a = _obj(a, apath)
                kind = a.get("atom")
                if kind not in ATOM_FIELDS:
                    raise SchemaError(f"{apath}.atom", f"expected one of {sorted(ATOM_FIELDS)}, got {kind!r}")
                _no_unknown(a, ("atom",) + ATOM_FIELDS[kind], apath)
                rec = {"atom": kind}
                for k in ATOM_FIELDS[kind]:
                    if k not in a:
                        raise SchemaError(f"{apath}.{k}", "missing")
                    rec[k] = _number(a[k], f"{apath}.{k}", allow_inf=kind == "box_indicator")
                atoms.append(rec)
            out[key] = atoms
    return out


def _read_schedule(obj):
    obj = _obj(obj, "schedule")
    kind = obj.get("kind", "jacobi")
    if kind not in KINDS:
        raise SchemaError("schedule.kind", f"unknown kind {kind!r}; expected one of {list(KINDS)}")
    _no_unknown(obj, ("kind", "alpha", "horizon") + SCHEDULE_FIELDS[kind], "schedule")
    spec = ScheduleSpec(kind=kind)
    if "alpha" in obj:
        spec.alpha = _integer(obj["alpha"], "schedule.alpha", minimum=1)
    if "horizon" in obj:
        spec.horizon = _integer(obj["horizon"], "schedule.horizon", minimum=1)
    if kind == "periodic_full":
        if "period" not in obj:
            raise SchemaError("schedule.period", "missing")
        spec.params["period"] = _integer(obj["period"], "schedule.period", minimum=1)
        if "base" in obj:
            spec.params["base"] = _int_table(obj["base"], "schedule.base")
    elif kind == "custom":
        for key in ("J", "S"):
            if key not in obj:
                raise SchemaError(f"schedule.{key}", "missing")
            spec.params[key] = _int_table(obj[key], f"schedule.{key}")
    return spec


def _read_run(obj):
    obj = _obj(obj, "run")
    _no_unknown(obj, [f for f in RunSpec.__dataclass_fields__], "run")
    spec = RunSpec()
    if "tol" in obj:
        spec.tol = _number(obj["tol"], "run.tol")
        if spec.tol <= 0:
            raise SchemaError("run.tol", "must be > 0")
    if "max_iter" in obj:
        spec.max_iter = _integer(obj["max_iter"], "run.max_iter", minimum=1)
    if "workers" in obj:
        spec.workers = _integer(obj["workers"], "run.workers", minimum=1)
    if "trace_level" in obj:
        if obj["trace_level"] not in TRACE_LEVELS:
            raise SchemaError("run.trace_level", f"expected one of {list(TRACE_LEVELS)}")
        spec.trace_level = obj["trace_level"]
    for key in ("x0", "reference_point"):
        if obj.get(key) is not None:
            setattr(spec, key, _vector(obj[key], f"run.{key}"))
    return spec


def _read_checks(obj):
    obj = _obj(obj, "checks")
    _no_unknown(obj, [f for f in ChecksSpec.__dataclass_fields__], "checks")
    spec = ChecksSpec()
    for key in ("run_h2", "run_h3"):
        if key in obj:
            setattr(spec, key, _boolean(obj[key], f"checks.{key}"))
    if "trials" in obj:
        spec.trials = _integer(obj["trials"], "checks.trials", minimum=1)
    if "seed" in obj:
        spec.seed = _integer(obj["seed"], "checks.seed", minimum=0)
    if "slack" in obj:
        spec.slack = _number(obj["slack"], "checks.slack")
        if spec.slack < 0:
            raise SchemaError("checks.slack", "must be >= 0")
    return spec


# --- parse / render --------------------------------------------------------


def parse_problem(text: str) -> ProblemSpec:
    """Parse and fully validate a problem file."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    raw = _obj(raw, "<root>")
    _no_unknown(raw, ("format", "partition", "problem", "schedule", "run", "checks"), "")
    if raw.get("format") != FORMAT_VERSION:
        raise SchemaError("format", f"expected {FORMAT_VERSION}, got {raw.get('format')!r}")
    for key in ("partition", "problem"):
        if key not in raw:
            raise SchemaError(key, "missing")
    partition = raw["partition"]
    if not isinstance(partition, list) or not partition:
        raise SchemaError("partition", "expected a non-empty array of block sizes")
    partition = [_integer(v, f"partition[{i}]", minimum=1) for i, v in enumerate(partition)]

    spec = ProblemSpec(
        partition=partition,
        problem=_read_problem(raw["problem"]),
        schedule=_read_schedule(raw.get("schedule", {})),
        run=_read_run(raw.get("run", {})),
        checks=_read_checks(raw.get("checks", {})),
    )
    _check_consistency(spec)
    return spec


def _check_consistency(spec: ProblemSpec):
    alpha, dim = spec.alpha, spec.dim
    sch = spec.schedule
    if sch.alpha is not None and sch.alpha != alpha:
        raise ConsistencyError("schedule.alpha", "partition", f"{sch.alpha} blocks vs {alpha} block sizes")
    if sch.kind == "custom":
        J, S = sch.params["J"], sch.params["S"]
        if len(J) != len(S):
            raise ConsistencyError("schedule.J", "schedule.S", f"{len(J)} vs {len(S)} rows")
        if sch.horizon is not None and sch.horizon != len(J):
            raise ConsistencyError("schedule.horizon", "schedule.J", f"horizon {sch.horizon} vs {len(J)} rows")
        for p, row in enumerate(S):
            if len(row) != alpha:
                raise ConsistencyError(f"schedule.S[{p}]", "partition", f"{len(row)} entries vs {alpha} blocks")
    for key in ("J", "base"):
        for p, row in enumerate(sch.params.get(key, [])):
            if not row:
                raise SchemaError(f"schedule.{key}[{p}]", "update sets must be non-empty")
            for i in row:
                if not 1 <= i <= alpha:
                    raise ConsistencyError(f"schedule.{key}[{p}]", "partition", f"block {i} outside 1..{alpha}")

    for key in ("x0", "reference_point"):
        vec = getattr(spec.run, key)
        if vec is not None and len(vec) != dim:
            raise ConsistencyError(f"run.{key}", "partition", f"{len(vec)} coordinates vs {dim}")

    pr = spec.problem
    if "operator" in pr:
        if pr["operator"] == "affine_average" and len(pr["a"]) != dim:
            raise ConsistencyError("problem.a", "partition", f"{len(pr['a'])} coordinates vs {dim}")
        return
    try:
        prob = _make_problem(pr)
    except InvalidProblem as exc:
        raise SchemaError("problem", str(exc)) from None
    if prob.dim != dim:
        first = {"linear": "M", "separable_prox": "atoms", "variational_inequality": "G"}.get(pr["family"], "P")
        raise ConsistencyError(f"problem.{first}", "partition", f"problem dimension {prob.dim} vs {dim}")


def _make_problem(pr: dict) -> mono.MonotoneProblem:
    fam = pr["family"]
    if fam == "linear":
        return mono.linear(pr["M"])
    if fam == "separable_prox":
        atoms = []
        for a in pr["atoms"]:
            if a["atom"] == "quadratic":
                atoms.append(mono.Atom.quadratic(a["a"], a["c"]))
            elif a["atom"] == "absolute_value":
                atoms.append(mono.Atom.absolute_value())
            else:
                atoms.append(mono.Atom.box_indicator(a["lo"], a["hi"]))
        return mono.separable_prox(atoms)
    if fam == "saddle_quadratic":
        return mono.saddle_quadratic(pr["P"], pr["q"], pr["A"], pr["b"], pr.get("R"))
    cap = pr.get("enum_cap", mono.DEFAULT_ENUM_CAP)
    if fam == "convex_program_qp":
        return mono.convex_program_qp(pr["P"], pr["q"], pr["A"], pr["b"], enum_cap=cap)
    return mono.variational_inequality(pr["G"], pr["g"], pr.get("lo"), pr.get("hi"), enum_cap=cap)


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, list):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def render_problem(spec: ProblemSpec) -> str:
    """Inverse of :func:`parse_problem`."""
    sched = {"kind": spec.schedule.kind}
    if spec.schedule.alpha is not None:
        sched["alpha"] = spec.schedule.alpha
    if spec.schedule.horizon is not None:
        sched["horizon"] = spec.schedule.horizon
    sched.update(spec.schedule.params)
    run = {k: v for k, v in asdict(spec.run).items() if v is not None}
    doc = {
        "format": FORMAT_VERSION,
        "partition": list(spec.partition),
        "problem": spec.problem,
        "schedule": sched,
        "run": run,
        "checks": asdict(spec.checks),
    }
    return json.dumps(_jsonable(doc), indent=2) + "\n"


# --- building runtime objects ----------------------------------------------


@dataclass
class Built:
    partition: object
    operator: object
    schedule: object
    x0: BlockVector
    config: RunConfig
    problem: Optional[mono.MonotoneProblem] = None


def build(spec: ProblemSpec) -> Built:
    part = make_partition(spec.partition)
    pr = spec.problem
    problem = None
    if "operator" in pr:
        name = pr["operator"]
        if name == "identity":
            F = identity(part)
        elif name == "scale":
            F = scale(part, pr["k"])
        else:
            F = affine_average(part, pr["a"])
    else:
        problem = _make_problem(pr)
        F = mono.as_fixed_point_operator(problem, part)
    sch = spec.schedule
    horizon = len(sch.params["J"]) if sch.kind == "custom" else (sch.horizon or spec.run.max_iter)
    try:
        schedule = build_schedule(sch.kind, part.alpha, horizon, sch.params)
    except InvalidParams as exc:
        raise SchemaError("schedule", str(exc)) from None
    x0 = BlockVector(part, spec.run.x0 if spec.run.x0 is not None else np.zeros(part.total))
    cfg = RunConfig(
        tol=spec.run.tol,
        max_iter=spec.run.max_iter,
        workers=spec.run.workers,
        trace_level=spec.run.trace_level,
        reference_point=spec.run.reference_point,
    )
    return Built(part, F, schedule, x0, cfg, problem)


def _load(path) -> ProblemSpec:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_problem(text)


def _run_checks(F, checks: ChecksSpec, which):
    sampler = UniformPairSampler(seed=checks.seed)
    reports = {}
    if "h2" in which:
        reports["h2"] = check_h2(F, sampler, checks.trials, checks.slack)
    if "h3" in which:
        reports["h3"] = check_h3(F, sampler, checks.trials, checks.slack)
    return reports


def _cmd_run(args) -> int:
    spec = _load(args.file)
    run = spec.run
    overrides = {
        "tol": args.tol,
        "max_iter": args.max_iter,
        "workers": args.workers,
    }
    for key, val in overrides.items():
        if val is not None:
            run = replace(run, **{key: val})
    if args.trace and run.trace_level == "none":
        run = replace(run, trace_level="residuals")
    checks = spec.checks if args.seed is None else replace(spec.checks, seed=args.seed)
    spec = replace(spec, run=run, checks=checks)
    if run.tol <= 0 or run.max_iter < 1 or run.workers < 1:
        raise InputError("--tol must be > 0, --max-iter and --workers >= 1")
    built = build(spec)
    F = built.operator

    extra = []
    if not args.no_check:
        wanted = [h for h, on, claim in (("h2", checks.run_h2, F.claims_h2), ("h3", checks.run_h3, F.claims_h3)) if on and claim]
        for name, rep in _run_checks(F, checks, wanted).items():
            if not rep.passed:
                setattr(F, f"claims_{name}", False)
                extra.append(f"HypothesisWarning: claimed {name} refuted by sampling (violation {rep.worst_violation:.3g})")

    result = run_general(F, built.schedule, built.x0, built.config)
    result.warnings = extra + result.warnings
    for w in result.warnings:
        print(w, file=sys.stderr)
    if args.trace:
        result.write_trace_csv(args.trace)
    print(json.dumps(result.summary()))
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _cmd_check(args) -> int:
    spec = _load(args.file)
    checks = spec.checks
    if args.seed is not None:
        checks = replace(checks, seed=args.seed)
    if args.trials is not None:
        if args.trials < 1:
            raise InputError("--trials must be >= 1")
        checks = replace(checks, trials=args.trials)
    F = build(spec).operator
    which = [h for h, on in (("h2", checks.run_h2), ("h3", checks.run_h3)) if on]
    reports = _run_checks(F, checks, which)
    out = {"claims": {"h2": F.claims_h2, "h3": F.claims_h3}}
    out.update({k: r.to_dict() for k, r in reports.items()})
    print(json.dumps(out))
    return EXIT_OK if all(r.passed for r in reports.values()) else EXIT_CHECK_FAILED


def _cmd_validate(args) -> int:
    spec = _load(args.file)
    sched = build(spec).schedule
    if args.window is not None and args.window < 1:
        raise InputError("--window must be >= 1")
    report = validate_schedule(sched, args.window)
    print(json.dumps(report.to_dict()))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parprox", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the block iteration described by a problem file")
    p.add_argument("file")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--workers", type=int)
    p.add_argument("--trace", metavar="PATH", help="write the per-iteration CSV here")
    p.add_argument("--seed", type=int, help="seed for the hypothesis checks")
    p.add_argument("--no-check", action="store_true", help="trust the operator's claims without sampling")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("check", help="sample the nonexpansiveness hypotheses")
    p.add_argument("file")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("validate-schedule", help="report finite-horizon schedule conditions")
    p.add_argument("file")
    p.add_argument("--window", type=int)
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; that code is reserved for non-convergence
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
