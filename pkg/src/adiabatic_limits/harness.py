"""Command-line experiments: single runs, sweeps, 3SAT runs, bound batteries.

Exit status is 0 when every bound held, 1 when any slack fell below
tolerance, and 2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import bounds
from .evolution import ConfigError, IntegratorConfig, UnreachableTargetError, evolve, min_time_search
from .hamiltonian import (
    AdiabaticProblem,
    EigenLadder,
    ValidationError,
    block_partition,
    build_3sat_problem,
    build_projector_problem,
    build_search_problem,
    complement_dim,
    h_search_table,
    make_diagonal,
)
from .hilbert import DimensionError, MAX_QUBITS
from .satio import CnfFormula, DimacsError, h_weight, read_dimacs, satisfying_assignments

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
EXHAUSTIVE_COUNT_MAX_VARS = 20
H0_KINDS = ("search", "halves", "quarters")
SWEEP_N_COLUMNS = ["n", "N", "minT", "general_T_bound", "ratio"]
SWEEP_T_COLUMNS = ["T", "success", "ceiling", "slack"]


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: str
    n: int | None = None
    E1: float = 1.0
    T: float | None = None
    problem: str = "search"
    h0: str = "search"
    w: int | None = None
    schedule: str = "linear"
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    p_target: float = 0.5
    c: float = 0.5
    T_max: float = 1e6
    seed: int = 0
    ratio: float = 4.0
    cnf: str | None = None
    out: str | None = None
    csv: str | None = None
    timing: bool = False

    def as_record(self) -> dict:
        d = asdict(self)
        d.pop("out"), d.pop("csv"), d.pop("timing")
        return d


def h0_table(kind: str, n: int) -> np.ndarray:
    """Crafted Hadamard-basis tables: the search table, two halves, four quarters."""
    if kind == "search":
        return h_search_table(n)
    blocks = {"halves": 2, "quarters": 4}[kind]
    ladder = EigenLadder(tuple(float(k) for k in range(blocks)))
    return make_diagonal(block_partition(n, blocks), ladder, "hadamard").table


def random_3sat(n_vars: int, ratio: float, rng: np.random.Generator) -> CnfFormula:
    """Uniform random 3-CNF: each clause picks 3 distinct variables and random signs."""
    if n_vars < 3:
        raise UsageError("random 3SAT needs at least 3 variables")
    m = max(1, round(ratio * n_vars))
    clauses = []
    for _ in range(m):
        vars_ = rng.choice(n_vars, size=3, replace=False) + 1
        signs = rng.choice((-1, 1), size=3)
        clauses.append(tuple(int(v * s) for v, s in zip(vars_, signs)))
    return CnfFormula(n_vars, tuple(clauses))


def random_satisfiable_3sat(n_vars: int, ratio: float, rng: np.random.Generator, max_tries: int = 10_000) -> CnfFormula:
    for _ in range(max_tries):
        cnf = random_3sat(n_vars, ratio, rng)
        if satisfying_assignments(cnf).size:
            return cnf
    raise RuntimeError(f"no satisfiable instance in {max_tries} draws")


def build_problem(cfg: RunConfig, T: float | None = None) -> AdiabaticProblem:
    T = cfg.T if T is None else T
    w = cfg.w if cfg.w is not None else int(np.random.default_rng(cfg.seed).integers(1 << cfg.n))
    if cfg.problem == "search":
        return build_search_problem(cfg.n, w, cfg.E1, T, cfg.schedule)
    if cfg.problem == "projector":
        return build_projector_problem(cfg.n, w, h0_table(cfg.h0, cfg.n), cfg.E1, T, cfg.schedule)
    raise UsageError(f"unknown problem {cfg.problem!r}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, IntegratorConfig):
        return asdict(obj)
    return obj


def dumps(record) -> str:
    return json.dumps(_jsonable(record), sort_keys=True, indent=2) + "\n"


def _violations(reports: Sequence[bounds.BoundReport]) -> list[str]:
    return [r.bound_name for r in reports if not r.holds]


def _run_record(problem: AdiabaticProblem, cfg: RunConfig) -> dict:
    start = time.perf_counter()
    _, traj = evolve(problem, cfg.integrator)
    wall = time.perf_counter() - start
    reports = bounds.verify_trajectory(problem, traj, cfg.c)
    record = {
        "config": cfg.as_record(),
        "N": problem.dim,
        "w": problem.target,
        "final_success": float(traj["success"][-1]),
        "beta0_sq_final": float(traj["beta0_sq"][-1]),
        "max_norm_drift": traj.max_norm_drift,
        "steps": traj.steps,
        "dt": traj.dt,
        "bounds": [r.to_dict() for r in reports],
        "violations": _violations(reports),
    }
    if cfg.timing:
        record["wall_time"] = wall
    return record


def cmd_run(cfg: RunConfig) -> tuple[dict, int]:
    if cfg.n is None or cfg.T is None:
        raise UsageError("run needs --n and --t")
    record = _run_record(build_problem(cfg), cfg)
    return record, EXIT_VIOLATION if record["violations"] else EXIT_OK


def _n_row(args) -> dict:
    cfg, n = args
    cfg = RunConfig(**{**cfg.__dict__, "n": n})
    family: Callable[[float], AdiabaticProblem] = lambda T: build_problem(cfg, T)
    probe = family(1.0)
    t_bound = bounds.general_T_bound(
        cfg.p_target, probe.dim, len(probe.solutions), probe.H0.ladder.top, complement_dim(probe.H0)
    )
    try:
        min_t = min_time_search(family, cfg.p_target, config=cfg.integrator, T_cap=cfg.T_max)
    except UnreachableTargetError:
        return {"n": n, "N": probe.dim, "minT": "unreachable", "general_T_bound": t_bound, "ratio": ""}
    ratio = min_t / t_bound if t_bound > 0 else math.inf
    return {"n": n, "N": probe.dim, "minT": min_t, "general_T_bound": t_bound, "ratio": ratio}


def _t_row(args) -> dict:
    cfg, T = args
    problem = build_problem(cfg, T)
    _, traj = evolve(problem, cfg.integrator)
    success = float(traj["success"][-1])
    ceiling = bounds.success_ceiling(problem.E1, T, problem.dim)
    return {"T": T, "success": success, "ceiling": ceiling, "slack": ceiling - success}


def worker_count() -> int:
    raw = os.environ.get("ABL_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"ABL_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError("ABL_THREADS must be >= 1")
    return value


def _pool_map(fn, jobs: list) -> list:
    workers = min(worker_count(), len(jobs))
    if workers <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def cmd_sweep(cfg: RunConfig, n_values: Sequence[int], t_values: Sequence[float]) -> tuple[dict, int]:
    if len(n_values) > 1 or (len(n_values) == 1 and not t_values):
        if not n_values:
            raise UsageError("empty n range")
        rows = _pool_map(_n_row, [(cfg, n) for n in sorted(n_values)])
        rows.sort(key=lambda r: r["n"])
        columns = SWEEP_N_COLUMNS
        bad = [r for r in rows if r["minT"] != "unreachable" and r["minT"] < r["general_T_bound"] - bounds.TRAJECTORY_TOL]
        result = {"kind": "n-sweep", "config": cfg.as_record(), "columns": columns, "rows": rows}
        fit = [(r["n"], r["minT"]) for r in rows if r["minT"] not in ("unreachable", 0.0)]
        if len(fit) >= 2:
            result["log2_minT_slope"] = float(np.polyfit(*zip(*[(n, math.log2(t)) for n, t in fit]), 1)[0])
    else:
        if not t_values:
            raise UsageError("empty T range")
        if len(n_values) != 1:
            raise UsageError("a T sweep needs exactly one --n")
        cfg = RunConfig(**{**cfg.__dict__, "n": n_values[0]})
        rows = _pool_map(_t_row, [(cfg, T) for T in sorted(t_values)])
        rows.sort(key=lambda r: r["T"])
        columns = SWEEP_T_COLUMNS
        bad = [r for r in rows if r["slack"] < -bounds.TRAJECTORY_TOL]
        result = {"kind": "T-sweep", "config": cfg.as_record(), "columns": columns, "rows": rows}
    return result, EXIT_VIOLATION if bad else EXIT_OK


def cmd_sat(cfg: RunConfig) -> tuple[dict, int]:
    if cfg.cnf:
        cnf = read_dimacs(cfg.cnf)
        source = cfg.cnf
    else:
        if cfg.n is None:
            raise UsageError("sat needs --cnf or --n for a random instance")
        cnf = random_3sat(cfg.n, cfg.ratio, np.random.default_rng(cfg.seed))
        source = "random"
    if cnf.n_vars > MAX_QUBITS:
        raise UsageError(f"{cnf.n_vars} variables exceed the {MAX_QUBITS}-qubit memory guard")
    T = 1.0 if cfg.T is None else cfg.T
    problem = build_3sat_problem(cnf, T, cfg.schedule)
    n_sol = len(problem.solutions)
    record = {
        "config": cfg.as_record(),
        "source": source,
        "n_vars": cnf.n_vars,
        "n_clauses": len(cnf.clauses),
        "solutions_count": n_sol if cnf.n_vars <= EXHAUSTIVE_COUNT_MAX_VARS else None,
        "h_of_zero": h_weight(cnf, 0),
        "steps": None,
    }
    start = time.perf_counter()
    _, traj = evolve(problem, cfg.integrator)
    wall = time.perf_counter() - start
    record["steps"] = traj.steps
    record["max_norm_drift"] = traj.max_norm_drift
    if n_sol == 0:
        record["note"] = "unsatisfiable instance; success metrics omitted"
        reports = []
    else:
        record["final_success"] = float(traj["success"][-1])
        record["initial_success"] = n_sol / problem.dim
        reports = bounds.verify_trajectory(problem, traj, cfg.c)
    record["bounds"] = [r.to_dict() for r in reports]
    record["violations"] = _violations(reports)
    if cfg.timing:
        record["wall_time"] = wall
    return record, EXIT_VIOLATION if record["violations"] else EXIT_OK


def cmd_verify(cfg: RunConfig, n_values, e1_values, t_tokens, h0_kinds=H0_KINDS) -> tuple[dict, int]:
    """Projector-problem battery: every F table x n x E1 x T, with all bound reports."""
    rows = []
    for n in n_values:
        N = 1 << n
        for kind in h0_kinds:
            for E1 in e1_values:
                for T in [resolve_time(tok, N) for tok in t_tokens]:
                    run = RunConfig(**{**cfg.__dict__, "n": n, "E1": E1, "T": T, "problem": "projector", "h0": kind})
                    problem = build_problem(run)
                    _, traj = evolve(problem, run.integrator)
                    reports = bounds.verify_trajectory(problem, traj, run.c)
                    rows.append({
                        "n": n, "h0": kind, "E1": E1, "T": T,
                        "final_success": float(traj["success"][-1]),
                        "min_slack": min(r.slack for r in reports if r.applicable and r.slack is not None),
                        "violations": _violations(reports),
                    })
    failed = [r for r in rows if r["violations"]]
    result = {"kind": "verify", "config": cfg.as_record(), "rows": rows, "failed": len(failed)}
    return result, EXIT_VIOLATION if failed else EXIT_OK


def zalka_min_slack(n: int, trials: int, seed: int, w: int = 0, chunk: int = 4096) -> float:
    rng = np.random.default_rng(seed)
    N = 1 << n
    worst = math.inf
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        states = rng.standard_normal((m, N)) + 1j * rng.standard_normal((m, N))
        states /= np.linalg.norm(states, axis=1, keepdims=True)
        worst = min(worst, float(bounds.zalka_slack_batch(states, w).min()))
        done += m
    return worst


def cmd_zalka_test(n: int, trials: int, seed: int) -> tuple[dict, int]:
    if trials < 1:
        raise UsageError("trials must be >= 1")
    if n is None:
        raise UsageError("zalka-test needs --n")
    slack = zalka_min_slack(n, trials, seed)
    ok = slack >= -bounds.ALGEBRAIC_TOL
    record = {"n": n, "trials": trials, "seed": seed, "min_slack": slack, "passed": ok}
    return record, EXIT_OK if ok else EXIT_VIOLATION


_SQRT_TOKEN = re.compile(r"^(?P<k>[0-9.]*)\*?sqrtN(?:/(?P<d>[0-9.]+))?$")


def resolve_time(token: str | float, N: int) -> float:
    """Numbers pass through; ``sqrtN``, ``2sqrtN``, ``sqrtN/4`` scale with sqrt(N)."""
    if isinstance(token, (int, float)):
        return float(token)
    m = _SQRT_TOKEN.match(token.strip())
    if m:
        k = float(m["k"]) if m["k"] else 1.0
        d = float(m["d"]) if m["d"] else 1.0
        return k * math.sqrt(N) / d
    return float(token)


def parse_int_list(text: str) -> list[int]:
    """``6..12`` (inclusive) or ``6,8,10``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def parse_float_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adiabatic-limits", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, n_help="qubit count"):
        p.add_argument("--n", help=n_help)
        p.add_argument("--e1", default="1.0", help="scale E1 of the final Hamiltonian")
        p.add_argument("--t", help="total time T")
        p.add_argument("--schedule", choices=("linear", "smoothstep", "local"), default="linear")
        p.add_argument("--integrator", choices=("strang", "rk4"), default="strang")
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--sample-every", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--c", type=float, default=0.5, help="target success used by the T lower bound")
        p.add_argument("--out", help="write JSON here instead of stdout")
        p.add_argument("--csv", nargs="?", const="-", help="also write flat CSV (to PATH, or stdout)")
        p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical output)")

    def problem_flags(p):
        p.add_argument("--problem", choices=("search", "projector"), default="search")
        p.add_argument("--h0", choices=H0_KINDS, default="search", help="F table for projector problems")
        p.add_argument("--w", type=int, default=None, help="marked string as an integer (default: drawn from --seed)")

    p = sub.add_parser("run", help="one evolution plus bound reports")
    common(p)
    problem_flags(p)

    p = sub.add_parser("sweep", help="min-T over an n range, or success over a T range")
    common(p, "qubit counts, e.g. 6..12 or 6,8")
    problem_flags(p)
    p.add_argument("--p-target", type=float, default=0.5)
    p.add_argument("--t-max", type=float, default=1e6, help="cap for the min-T search")

    p = sub.add_parser("sat", help="3SAT instance from DIMACS (or random with --n)")
    common(p)
    p.add_argument("--cnf", help="DIMACS CNF file")
    p.add_argument("--ratio", type=float, default=4.0, help="clause/variable ratio for random instances")

    p = sub.add_parser("verify", help="projector bound battery over n, E1, T")
    common(p, "qubit counts, e.g. 6,8,10")
    p.add_argument("--h0", default=",".join(H0_KINDS), help="comma list of F tables")

    p = sub.add_parser("zalka-test", help="random-vector check of the overlap inequality")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--csv", nargs="?", const="-")
    return parser


def _config(args, experiment: str, **extra) -> RunConfig:
    integrator = IntegratorConfig(args.integrator, args.dt, args.sample_every)
    return RunConfig(
        experiment=experiment,
        E1=float(args.e1) if "," not in args.e1 else 1.0,
        schedule=args.schedule,
        integrator=integrator,
        c=args.c,
        seed=args.seed,
        out=args.out,
        csv=args.csv,
        timing=args.timing,
        **extra,
    )


def _emit(result: dict, out: str | None, csv_target: str | None, rows: list[dict] | None, columns=None):
    text = dumps(result)
    if out:
        Path(out).write_text(text)
    elif csv_target != "-":
        sys.stdout.write(text)
    if csv_target is None:
        return
    rows = rows if rows is not None else [_flat(result)]
    columns = columns or list(rows[0])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _jsonable(v) for k, v in row.items()})
    if csv_target == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(csv_target).write_text(buf.getvalue())


def _flat(record: dict) -> dict:
    row = {}
    for key, value in record.items():
        if key == "bounds":
            for r in value:
                row[f"slack_{r['bound_name']}"] = r["slack"]
        elif isinstance(value, dict):
            row.update({f"{key}_{k}": v for k, v in value.items() if not isinstance(v, dict)})
        elif not isinstance(value, list):
            row[key] = value
    return row


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "zalka-test":
            result, status = cmd_zalka_test(args.n, args.trials, args.seed)
            _emit(result, args.out, args.csv, None)
            return status
        if args.command == "run":
            cfg = _config(args, args.problem, n=_one_int(args.n), T=_opt_float(args.t),
                          problem=args.problem, h0=args.h0, w=args.w)
            result, status = cmd_run(cfg)
            _emit(result, args.out, args.csv, None)
        elif args.command == "sat":
            cfg = _config(args, "sat", n=_opt_int(args.n), T=_opt_float(args.t), cnf=args.cnf, ratio=args.ratio)
            result, status = cmd_sat(cfg)
            _emit(result, args.out, args.csv, None)
        elif args.command == "sweep":
            n_values = parse_int_list(args.n or "")
            cfg = _config(args, "sweep", problem=args.problem, h0=args.h0, w=args.w,
                          p_target=args.p_target, T_max=args.t_max)
            t_values = [resolve_time(tok, 1 << n_values[0]) for tok in parse_float_list(args.t)] if args.t and n_values else []
            result, status = cmd_sweep(cfg, n_values, t_values)
            _emit(result, args.out, args.csv, result["rows"], result["columns"])
        else:
            cfg = _config(args, "verify")
            n_values = parse_int_list(args.n or "6,8,10")
            e1_values = [float(x) for x in parse_float_list(args.e1)]
            t_tokens = parse_float_list(args.t or "1,sqrtN/4,sqrtN")
            kinds = parse_float_list(args.h0)
            if not n_values or not e1_values or not t_tokens or set(kinds) - set(H0_KINDS):
                raise UsageError("verify needs nonempty --n, --e1, --t and known --h0 kinds")
            result, status = cmd_verify(cfg, n_values, e1_values, t_tokens, kinds)
            _emit(result, args.out, args.csv, result["rows"])
        return status
    except (UsageError, ConfigError, ValidationError, DimensionError, DimacsError, ValueError, OSError) as exc:
        print(f"adiabatic-limits: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _one_int(text):
    if text is None:
        return None
    values = parse_int_list(text)
    if len(values) != 1:
        raise UsageError(f"expected a single --n, got {text!r}")
    return values[0]


def _opt_int(text):
    return None if text is None else _one_int(text)


def _opt_float(text):
    return None if text is None else float(text)


if __name__ == "__main__":
    sys.exit(main())
