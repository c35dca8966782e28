"""Batch experiment runner and command-line interface.

A JSON config names an experiment family, its instance grid, the solvers
to run and parameter overrides. Every run writes a trace CSV; the batch
writes ``summary.csv``, ``comparison.json``, ``runs.json`` and a
``manifest.json`` listing every output file with its SHA-256 hash.

Usage::

    rcsn run --config experiment2_small.json --out-dir out/ --jobs 4
    rcsn summarize --out-dir out/
    rcsn plotdata --out-dir out/ --kind objective
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .baselines import bdca_run, dca_run, oracle_split, plain_trust_region_split, regularize_split
from .core import Status, eval_phi
from .diagnostics import RunResult, classify_rate, summarize, summary_csv
from .envelope import fbe_value, prox_point
from .exceptions import ConfigError, InsufficientData, RCSNError
from .problems import (ball_union_problem, biochem_oracles, gen_ball_union, gen_biochem,
                       gen_trust_region, separable_kink_oracle, trust_region_problem)
from .projected_newton import fixed_point_residual, pn_run
from .solver import ConstantRho, DecreasingRho, SolverConfig, run
from .stepsize import ConstantStep, SelfAdaptiveStep

__all__ = [
    "SCHEMA_VERSION",
    "TRACE_COLUMNS",
    "RunOutcome",
    "ExperimentResult",
    "bundled_config",
    "bundled_config_names",
    "load_config",
    "validate_config",
    "execute",
    "run_experiment",
    "resummarize",
    "emit_plot_data",
    "main",
]

SCHEMA_VERSION = 1
TRACE_COLUMNS = ["k", "phi", "w_norm", "d_norm", "tau", "rho", "backtracks", "wall_ns"]

_SOLVERS = {
    "biochem": {"rcsn_decreasing", "rcsn_decreasing_const", "rcsn_constant", "bdca", "dca"},
    "trust_region": {"dca", "dca_fbe", "bdca_fbe", "pn"},
    "ball_union": {"dca_fbe", "bdca_fbe", "pn"},
    "separable_kink": {"rcsn_newton"},
}

_DEFAULT_PARAMS = {
    "beta": 0.2,
    "sigma": 0.2,
    "zeta": 1e-8,
    "t_min": 1e-6,
    "gamma": 4.0,
    "tau0": 1.0,
    "tau_bar": 50.0,
    "rho_max": 1e15,
    "grad_tol": 1e-8,
    "max_iters": 5000,
    "tau_floor": 1e-14,
    "lambda_factor": 0.8,
    "stop_tol": 1e-4,
    "dca_max_iters": 200000,
    "rho_constant": 1e3,
    "rho_divisor": 10.0,
    "rho_period": 50,
}

_INSTANCE_KEYS = {
    "biochem": {"models", "starts"},
    "trust_region": {"n", "seeds"},
    "ball_union": {"n", "c", "convex", "seeds"},
    "separable_kink": {"n", "starts", "variant"},
}


# ---------------------------------------------------------------------------
# configuration


def bundled_config_names():
    return sorted(p.name for p in resources.files("rcsn.configs").iterdir()
                  if p.name.endswith(".json"))


def bundled_config(name):
    """Parsed bundled config by file name (``.json`` optional)."""
    if not name.endswith(".json"):
        name += ".json"
    return json.loads(resources.files("rcsn.configs").joinpath(name).read_text())


def load_config(path):
    """Read and validate a config file; bundled names are accepted too."""
    path = Path(path)
    try:
        if path.exists():
            cfg = json.loads(path.read_text())
        else:
            cfg = bundled_config(path.name)
    except (OSError, FileNotFoundError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return validate_config(cfg)


def validate_config(cfg):
    """Check keys and bounds; returns the config with defaults filled in."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {cfg.get('schema_version')!r}")
    for key in ("name", "experiment", "instances", "solvers"):
        if key not in cfg:
            raise ConfigError(f"missing key {key!r}")
    exp = cfg["experiment"]
    if exp not in _SOLVERS:
        raise ConfigError(f"unknown experiment {exp!r}")
    unknown = set(cfg) - {"schema_version", "name", "experiment", "instances", "solvers",
                          "params", "reference", "strict", "description"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    bad = set(cfg["solvers"]) - _SOLVERS[exp]
    if bad or not cfg["solvers"]:
        raise ConfigError(f"solvers {sorted(bad)} not available for {exp}")
    missing = _INSTANCE_KEYS[exp] - set(cfg["instances"])
    extra = set(cfg["instances"]) - _INSTANCE_KEYS[exp]
    if missing or extra:
        raise ConfigError(f"instances for {exp} need keys {sorted(_INSTANCE_KEYS[exp])}")
    params = dict(_DEFAULT_PARAMS)
    overrides = cfg.get("params", {})
    unknown = set(overrides) - set(_DEFAULT_PARAMS)
    if unknown:
        raise ConfigError(f"unknown params {sorted(unknown)}")
    params.update(overrides)
    # bound checks through the solver config itself
    SolverConfig(beta=params["beta"], sigma=params["sigma"], zeta=params["zeta"],
                 t_min=params["t_min"], rho_max=params["rho_max"], grad_tol=params["grad_tol"],
                 max_iters=params["max_iters"], tau_floor=params["tau_floor"])
    if not params["gamma"] > 1:
        raise ConfigError(f"gamma must exceed 1, got {params['gamma']}")
    if not 0 < params["lambda_factor"] < 1:
        raise ConfigError(f"lambda_factor must lie in (0, 1), got {params['lambda_factor']}")
    if not params["stop_tol"] > 0:
        raise ConfigError(f"stop_tol must be positive, got {params['stop_tol']}")
    ref = cfg.get("reference")
    if ref is not None and ref not in cfg["solvers"]:
        raise ConfigError(f"reference {ref!r} is not among the solvers")
    out = dict(cfg)
    out["params"] = params
    out.setdefault("strict", False)
    return out


# ---------------------------------------------------------------------------
# runs


@dataclass
class RunOutcome:
    """One solver run: summary fields plus the trace and returned point."""

    result: RunResult
    trace: object
    solution: np.ndarray
    extra: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    outcomes: list
    rows: list
    comparisons: dict
    exit_code: int


def _config(params, **kw):
    base = dict(beta=params["beta"], sigma=params["sigma"], zeta=params["zeta"],
                t_min=params["t_min"], rho_max=params["rho_max"], grad_tol=params["grad_tol"],
                max_iters=params["max_iters"], tau_floor=params["tau_floor"])
    base.update(kw)
    return SolverConfig(**base)


def _adaptive(params):
    return SelfAdaptiveStep(gamma=params["gamma"], t_min=params["t_min"], tau0=params["tau0"])


def _rate(trace, x_star):
    try:
        return classify_rate(trace, x_star)
    except InsufficientData:
        return None


def _outcome(instance_id, seed, solver, trace, value, solution, rate=None, **extra):
    res = RunResult(instance_id, seed, solver, str(trace.status), trace.final_phi,
                    trace.iterations, trace.total_backtracks, float(value), rate,
                    trace.records[-1].wall_ns if trace.records else 0)
    return RunOutcome(res, trace, np.asarray(solution, dtype=float), extra)


def _biochem_task(key, cfg):
    model_seed, start = key
    params = cfg["params"]
    model, x0 = gen_biochem(model_seed)
    if start > 0:
        x0 = np.random.default_rng([model_seed, start]).uniform(-2.0, 2.0, size=model.m)
    iid = f"bio_m{model_seed:03d}_x{start:02d}"
    product = biochem_oracles(model, "product")
    outcomes = []
    for solver in cfg["solvers"]:
        if solver.startswith("rcsn"):
            if solver == "rcsn_constant":
                strategy = ConstantRho(params["rho_constant"])
            else:
                strategy = DecreasingRho(params["rho_divisor"], params["rho_period"])
            step = ConstantStep(params["tau_bar"]) if solver == "rcsn_decreasing_const" \
                else _adaptive(params)
            trace = run(product, x0, _config(params, rho_strategy=strategy), step)
        else:
            split = oracle_split(biochem_oracles(model, "dc"))
            if solver == "bdca":
                trace = bdca_run(split, x0, stop_tol=params["stop_tol"],
                                 max_iters=params["max_iters"], sigma=params["sigma"],
                                 beta=params["beta"], stepsize=_adaptive(params))
            else:
                trace = dca_run(split, x0, stop_tol=params["stop_tol"],
                                max_iters=params["max_iters"])
        x = trace.final_x
        rate = _rate(trace, x) if trace.status == Status.STATIONARY else None
        outcomes.append(_outcome(iid, model_seed, solver, trace, trace.final_phi, x, rate,
                                 m=model.m, n=model.n))
    return outcomes


def _trust_region_task(key, cfg):
    n, seed = key
    params = cfg["params"]
    inst = gen_trust_region(n, seed)
    problem = trust_region_problem(inst, params["lambda_factor"])
    iid = f"tr_n{n:04d}_s{seed:03d}"
    outcomes = []
    target = None
    # the plain DCA value is the target of the accelerated solvers
    order = sorted(cfg["solvers"], key=lambda s: s != "dca")
    for solver in order:
        if solver == "dca":
            trace = dca_run(plain_trust_region_split(inst.Q, inst.b, inst.r), inst.x0,
                            stop_tol=params["stop_tol"], max_iters=params["dca_max_iters"])
            sol = trace.final_x
            target = inst.objective(sol)
        elif solver == "dca_fbe":
            trace = dca_run(regularize_split(None, None, problem, "dca"), inst.x0,
                            stop_tol=params["stop_tol"], max_iters=params["dca_max_iters"])
            sol = prox_point(problem, trace.final_x)
        elif solver == "bdca_fbe":
            trace = bdca_run(regularize_split(None, None, problem, "bdca"), inst.x0,
                             stop_tol=params["stop_tol"], max_iters=params["dca_max_iters"],
                             sigma=params["sigma"], beta=params["beta"],
                             stepsize=_adaptive(params), phi_target=target)
            sol = prox_point(problem, trace.final_x)
        else:
            trace = pn_run(problem, inst.x0, _config(params, phi_target=target), _adaptive(params))
            sol = prox_point(problem, trace.final_x)
        extra = {"target": target, "feasibility": problem.psi.distance(sol),
                 "fixed_point_residual": fixed_point_residual(problem, trace.final_x),
                 "solution_residual": fixed_point_residual(problem, sol)}
        outcomes.append(_outcome(iid, seed, solver, trace, inst.objective(sol), sol, **extra))
    return outcomes


def _ball_union_task(key, cfg):
    n, c, convex, seed = key
    params = cfg["params"]
    inst = gen_ball_union(n, c, convex, seed)
    problem = ball_union_problem(inst, params["lambda_factor"])
    iid = f"bu_n{n:02d}_c{c:.2f}_{'cvx' if convex else 'ncv'}_s{seed:03d}"
    outcomes = []
    for solver in cfg["solvers"]:
        if solver == "pn":
            trace = pn_run(problem, inst.x0, _config(params), _adaptive(params))
        elif solver == "dca_fbe":
            trace = dca_run(regularize_split(None, None, problem, "dca"), inst.x0,
                            stop_tol=params["stop_tol"], max_iters=params["dca_max_iters"])
        else:
            trace = bdca_run(regularize_split(None, None, problem, "bdca"), inst.x0,
                             stop_tol=params["stop_tol"], max_iters=params["dca_max_iters"],
                             sigma=params["sigma"], beta=params["beta"],
                             stepsize=_adaptive(params))
        sol = prox_point(problem, trace.final_x)
        extra = {"objective": inst.objective(sol), "feasibility": problem.psi.distance(sol),
                 "fixed_point_residual": fixed_point_residual(problem, trace.final_x),
                 "solution_residual": fixed_point_residual(problem, sol),
                 "convex": convex}
        outcomes.append(_outcome(iid, seed, solver, trace, fbe_value(problem, sol), sol, **extra))
    return outcomes


def _separable_task(key, cfg):
    n, start, variant = key
    params = cfg["params"]
    oracle = separable_kink_oracle(n, variant)
    x0 = np.random.default_rng([n, start]).uniform(-5.0, 5.0, size=n)
    conf = _config(params, rho_strategy=ConstantRho(0.0))
    trace = run(oracle, x0, conf, ConstantStep(params["tau_bar"]))
    x = trace.final_x
    limit = np.array([min((-2.0, 0.0, 2.0), key=lambda s: abs(xi - s)) for xi in x])
    iid = f"sk_{variant}_n{n}_x{start:03d}"
    return [_outcome(iid, start, "rcsn_newton", trace, trace.final_phi, x, _rate(trace, limit),
                     limit=limit.tolist())]


_TASKS = {"biochem": _biochem_task, "trust_region": _trust_region_task,
          "ball_union": _ball_union_task, "separable_kink": _separable_task}


def _task_keys(cfg):
    inst = cfg["instances"]
    exp = cfg["experiment"]
    if exp == "biochem":
        return [(m, s) for m in inst["models"] for s in range(inst["starts"])]
    if exp == "trust_region":
        return [(n, s) for n in inst["n"] for s in inst["seeds"]]
    if exp == "ball_union":
        return [(n, c, cv, s) for n in inst["n"] for c in inst["c"]
                for cv in inst["convex"] for s in inst["seeds"]]
    return [(n, s, inst["variant"]) for n in inst["n"] for s in range(inst["starts"])]


def _run_task(args):
    key, cfg = args
    return _TASKS[cfg["experiment"]](key, cfg)


# ---------------------------------------------------------------------------
# output


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _trace_csv(trace):
    lines = [",".join(TRACE_COLUMNS)]
    for r in trace.records:
        lines.append(",".join(_fmt(v) for v in (r.k, r.phi, r.w_norm, r.d_norm, r.tau, r.rho,
                                                r.backtracks, r.wall_ns)))
    return "\n".join(lines) + "\n"


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def _write_summary(out_dir, results, reference):
    rows, comparisons = summarize(results, reference=reference)
    (out_dir / "summary.csv").write_text(summary_csv(rows))
    (out_dir / "comparison.json").write_text(
        json.dumps({"reference": reference, "counts": comparisons}, indent=2, sort_keys=True) + "\n")
    return rows, comparisons


def _write_manifest(out_dir, cfg):
    files = sorted(p for p in out_dir.rglob("*") if p.is_file() and p.name != "manifest.json")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "seeds": sorted({str(k) for k in _task_keys(cfg)}),
        "library_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "files": {str(p.relative_to(out_dir)): _sha256(p) for p in files},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def execute(cfg, out_dir=None, jobs=1, strict=None):
    """Run a validated config, optionally writing outputs to ``out_dir``.

    Returns
    -------
    ExperimentResult
        ``exit_code`` is 2 when ``strict`` is set and a run ended in
        ``DirectionFailure``, otherwise 0.
    """
    cfg = validate_config(cfg)
    strict = cfg["strict"] if strict is None else strict
    keys = _task_keys(cfg)
    tasks = [(k, cfg) for k in keys]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(_run_task, tasks))
    else:
        batches = [_run_task(t) for t in tasks]
    outcomes = sorted((o for b in batches for o in b),
                      key=lambda o: (o.result.instance_id, o.result.solver))
    results = [o.result for o in outcomes]
    reference = cfg.get("reference")
    rows, comparisons = summarize(results, reference=reference)
    failed = any(o.result.status == str(Status.DIRECTION_FAILURE) for o in outcomes)
    code = 2 if strict and failed else 0
    if out_dir is not None:
        out_dir = Path(out_dir)
        try:
            (out_dir / "traces").mkdir(parents=True, exist_ok=True)
            for o in outcomes:
                name = f"{o.result.instance_id}__{o.result.solver}.csv"
                (out_dir / "traces" / name).write_text(_trace_csv(o.trace))
            _write_summary(out_dir, results, reference)
            runs = [{"instance_id": o.result.instance_id, "seed": o.result.seed,
                     "solver": o.result.solver, "status": o.result.status,
                     "final_phi": _jsonable(o.result.final_phi), "iters": o.result.iters,
                     "backtracks": o.result.backtracks, "value": _jsonable(o.result.value),
                     "rate_class": o.result.rate.kind if o.result.rate else None,
                     "mu": o.result.rate.mu if o.result.rate else None,
                     "bound": o.result.rate.bound if o.result.rate else None}
                    for o in outcomes]
            (out_dir / "runs.json").write_text(
                json.dumps({"reference": reference, "runs": runs}, indent=1, sort_keys=True) + "\n")
            _write_manifest(out_dir, cfg)
        except OSError as exc:
            raise RCSNError(f"cannot write outputs to {out_dir}: {exc}") from exc
    return ExperimentResult(outcomes, rows, comparisons, code)


def run_experiment(config_path, out_dir, jobs=1, strict=None):
    """Load ``config_path``, run it and write outputs; returns the exit code."""
    cfg = load_config(config_path)
    return execute(cfg, out_dir, jobs=jobs, strict=strict).exit_code


def _load_runs(out_dir):
    payload = json.loads((Path(out_dir) / "runs.json").read_text())
    results = []
    from .diagnostics import RateClass

    for r in payload["runs"]:
        rate = RateClass(r["rate_class"], r["mu"], r["bound"]) if r["rate_class"] else None
        results.append(RunResult(r["instance_id"], r["seed"], r["solver"], r["status"],
                                 float(r["final_phi"]), r["iters"], r["backtracks"],
                                 float(r["value"]), rate))
    return payload.get("reference"), results


def resummarize(out_dir):
    """Rebuild ``summary.csv`` and ``comparison.json`` from ``runs.json``."""
    out_dir = Path(out_dir)
    reference, results = _load_runs(out_dir)
    return _write_summary(out_dir, results, reference)


def _read_trace(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def emit_plot_data(out_dir, kind):
    """Write plain CSV series for plotting.

    ``kind`` is ``"objective"`` (phi against iteration for every run),
    ``"stepsize"`` (phi and accepted stepsize per iteration) or ``"ratio"``
    (per-instance iteration, backtrack and time ratios of each solver
    against the reference solver).

    Returns
    -------
    Path
        The written file.
    """
    out_dir = Path(out_dir)
    traces = sorted((out_dir / "traces").glob("*.csv"))
    if not traces:
        raise RCSNError(f"no traces under {out_dir}")
    target = out_dir / f"plot_{kind}.csv"
    try:
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if kind in ("objective", "stepsize"):
                header = ["instance_id", "solver", "k", "phi"] + (["tau"] if kind == "stepsize" else [])
                writer.writerow(header)
                for path in traces:
                    iid, solver = path.stem.split("__")
                    for row in _read_trace(path):
                        vals = [iid, solver, row["k"], row["phi"]]
                        if kind == "stepsize":
                            vals.append(row["tau"])
                        writer.writerow(vals)
            elif kind == "ratio":
                reference, results = _load_runs(out_dir)
                if reference is None:
                    raise RCSNError("ratio data needs a reference solver in the config")
                wall = {}
                for path in traces:
                    iid, solver = path.stem.split("__")
                    rows = _read_trace(path)
                    wall[iid, solver] = int(rows[-1]["wall_ns"]) if rows else 0
                ref = {r.instance_id: r for r in results if r.solver == reference}
                writer.writerow(["instance_id", "seed", "solver", "iter_ratio",
                                 "backtrack_ratio", "time_ratio"])
                for r in sorted(results, key=lambda r: (r.instance_id, r.solver)):
                    if r.solver == reference:
                        continue
                    base = ref[r.instance_id]
                    writer.writerow([
                        r.instance_id, r.seed, r.solver,
                        repr(r.iters / base.iters) if base.iters else "inf",
                        repr(r.backtracks / base.backtracks) if base.backtracks else "inf",
                        repr(wall[r.instance_id, r.solver] / max(wall[r.instance_id, reference], 1)),
                    ])
            else:
                raise RCSNError(f"unknown plot kind {kind!r}")
    except OSError as exc:
        raise RCSNError(f"cannot write {target}: {exc}") from exc
    return target


# ---------------------------------------------------------------------------
# command line


def _parser():
    parser = argparse.ArgumentParser(prog="rcsn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True,
                       help="config path or bundled name (%s)" % ", ".join(bundled_config_names()))
    p_run.add_argument("--out-dir", required=True)
    p_run.add_argument("--strict", action="store_true",
                       help="exit with code 2 if any run ends in DirectionFailure")
    p_run.add_argument("--jobs", type=int, default=1)
    p_sum = sub.add_parser("summarize", help="rebuild summary files from runs.json")
    p_sum.add_argument("--out-dir", required=True)
    p_plot = sub.add_parser("plotdata", help="write CSV series for plotting")
    p_plot.add_argument("--out-dir", required=True)
    p_plot.add_argument("--kind", choices=["objective", "stepsize", "ratio"], default="objective")
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            code = run_experiment(args.config, args.out_dir, jobs=max(1, args.jobs),
                                  strict=True if args.strict else None)
            print(f"wrote results to {args.out_dir}")
            return code
        if args.command == "summarize":
            _, comparisons = resummarize(args.out_dir)
            for solver, counts in comparisons.items():
                print(f"{solver}: {counts}")
            return 0
        path = emit_plot_data(args.out_dir, args.kind)
        print(f"wrote {path}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except RCSNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
