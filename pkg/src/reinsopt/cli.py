"""Command-line entry point.

Subcommands: generate, preprocess, optimize, solve, census, estimate-qbb,
evaluate. Exit codes: 0 success, 1 infeasible / nothing found, 2 usage or
configuration error. Progress goes to stderr so stdout stays parseable.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .annealing import AnnealSchedule, load_bounds, run as anneal_run
from .annealing import default_penalty_scales
from .bnb import BnbProblem, census, make_problem, solve_cascade, write_census_csv
from .contracts import (
    Contract,
    contract_to_dict,
    evaluate_contract,
    load_contract,
    load_pricing,
)
from .errors import ReinsoptError
from .events import (
    SyntheticSpec,
    compress,
    compute_min_attachments,
    generate_synthetic,
    load_events,
    save_events,
)
from .qbb import HardwareModel, estimate, format_report
from .risk import build_report, load_constraints
from .store import build_store, load_store, save_store

__all__ = ["main", "build_parser"]


def _log(args, message: str) -> None:
    if getattr(args, "verbose", 0) > 0:
        print(message, file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reinsopt",
        description="Catastrophe excess-of-loss reinsurance optimization toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"reinsopt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file whose keys mirror the flags of this subcommand")
        p.add_argument("--threads", type=int, default=1, help="worker threads where supported")
        p.add_argument("-v", "--verbose", action="count", default=0)

    p = sub.add_parser("generate", help="write a synthetic Pareto event-loss table")
    p.add_argument("--groups", type=int, required=True)
    p.add_argument("--years", type=int, default=1000)
    p.add_argument("--events-per-year", type=int, default=50)
    p.add_argument("--scale", type=float, default=1.2)
    p.add_argument("--constant-scale", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help=".csv or binary .rxev output path")
    common(p)

    p = sub.add_parser("preprocess", help="compress events and build a cumulative-loss store")
    p.add_argument("--in", dest="infile", required=True, help="event table (.csv or .rxev)")
    p.add_argument("--grouping", required=True, help="JSON mapping peril name -> group name")
    p.add_argument("--p-attach", type=float, default=0.1)
    p.add_argument("--grid", type=int, default=80, help="threshold grid points per peril")
    p.add_argument("--out", required=True, help="store output path (.rsto)")
    common(p)

    p = sub.add_parser("optimize", help="simulated-annealing contract search")
    p.add_argument("--store", required=True)
    p.add_argument("--contract-bounds", required=True, help="state-space bounds JSON")
    p.add_argument("--constraints", help="constraints JSON (optional)")
    p.add_argument("--pricing", required=True, help="pricing curve JSON")
    p.add_argument("--t0", type=float, default=10.0)
    p.add_argument("--tf", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", default="empty", help="'empty' or a contract JSON path")
    p.add_argument("--gross-profit", type=float, default=0.0)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--no-cache", action="store_true")
    p.add_argument("--out-dir", required=True)
    common(p)

    p = sub.add_parser("solve", help="exact branch & bound on the simplified problem")
    p.add_argument("--groups", type=int, help="number of peril groups (synthetic mode)")
    p.add_argument("--bits", type=int, default=1, help="binary-search halvings per variable")
    p.add_argument("--rho", type=float, default=0.1)
    p.add_argument("--p-attach", type=float, default=0.1)
    p.add_argument("--risk", choices=("tvar", "aep"), default="tvar")
    p.add_argument("--beta", type=float, default=0.995)
    p.add_argument("--kmax", default="AUTO", help="risk budget, or AUTO for 0.95 of gross tail risk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--years", type=int, default=1000)
    p.add_argument("--events-per-year", type=int, default=50)
    p.add_argument("--scale", type=float, default=1.2)
    p.add_argument("--synthetic", action="store_true", help="build the instance from the generator")
    p.add_argument("--store", help="precomputed store (requires --geometry)")
    p.add_argument("--geometry", help="JSON with groups/a_min/a_max/l_max for --store mode")
    p.add_argument("--out", default="result.json")
    common(p)

    p = sub.add_parser("census", help="tree-size census over synthetic instances")
    p.add_argument("--b", default="1,2,3", help="comma-separated halving depths")
    p.add_argument("--n-max", type=int, default=16)
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--years", type=int, default=1000)
    p.add_argument("--events-per-year", type=int, default=50)
    p.add_argument("--scale", type=float, default=1.2)
    p.add_argument("--out", required=True, help="census CSV path; a PNG is written alongside")
    common(p)

    p = sub.add_parser("estimate-qbb", help="quantum-vs-classical crossover estimate")
    p.add_argument("--toffoli-rate", type=float, default=1e5)
    p.add_argument("--ands-per-add", type=int, default=15)
    p.add_argument("--classical-ops", type=float, default=1.9e11)
    p.add_argument("--budget", type=float, default=1e6)
    p.add_argument("--events", type=int, help="per-oracle event count for the verdict")
    p.add_argument("--json", action="store_true", help="emit JSON on stdout instead of text")
    p.add_argument("--out", help="also write the JSON report to this file")
    common(p)

    p = sub.add_parser("evaluate", help="risk report for one contract against a store")
    p.add_argument("--store", required=True)
    p.add_argument("--contract", required=True)
    p.add_argument("--pricing", required=True)
    p.add_argument("--constraints")
    p.add_argument("--gross-profit", type=float, default=0.0)
    p.add_argument("--out", help="also write the report JSON here")
    common(p)

    return parser


def _apply_config(argv: list[str]) -> list[str]:
    """Inject --config file entries as flags right after the subcommand.

    User-provided flags come later on the line, so argparse lets them win.
    """
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    try:
        path = argv[i + 1]
    except IndexError:
        return argv  # argparse will report the missing value
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    injected: list[str] = []
    for key, value in cfg.items():
        flag = "--" + str(key).replace("_", "-")
        if isinstance(value, bool):
            if value:
                injected.append(flag)
        else:
            injected.extend([flag, str(value)])
    # the subcommand is the first non-flag token
    for pos, token in enumerate(argv):
        if not token.startswith("-"):
            return argv[: pos + 1] + injected + argv[pos + 1 :]
    return argv


def _cmd_generate(args) -> int:
    spec = SyntheticSpec(
        num_groups=args.groups,
        years=args.years,
        events_per_year=args.events_per_year,
        scale_base=args.scale,
        seed=args.seed,
        constant_scale=args.constant_scale,
    )
    table = generate_synthetic(spec)
    save_events(table, args.out)
    _log(args, f"wrote {table.loss.size} events over {table.num_trial_years} years to {args.out}")
    return 0


def _cmd_preprocess(args) -> int:
    table = load_events(args.infile)
    with open(args.grouping, encoding="utf-8") as fh:
        name_to_group = json.load(fh)
    try:
        grouping = {table.peril_names.index(name): g for name, g in name_to_group.items()}
    except ValueError as exc:
        raise ReinsoptError(f"grouping file names a peril absent from the table: {exc}") from exc
    amin = compute_min_attachments(table, grouping, args.p_attach)
    small, base, report = compress(table, amin, grouping)
    _log(args, f"compression: kept {report.events_after} of {report.events_before} events")
    # one grid per group so layer boundaries land on every member peril's grid
    grids = {}
    for gname in sorted(set(grouping.values())):
        perils = [p for p, g in grouping.items() if g == gname]
        losses = small.loss[np.isin(small.peril_id, perils)]
        cut = amin[gname]
        hi = float(losses.max()) if losses.size else max(cut, 1.0)
        lo = max(cut, 1e-9)
        grid = np.array([hi]) if lo >= hi else np.geomspace(lo, hi, args.grid)
        for p in perils:
            grids[p] = grid
    store = build_store(small, thresholds=grids, base=base)
    save_store(store, args.out)
    _log(args, f"wrote store with {store.num_trial_years} years to {args.out}")
    return 0


def _load_eval_inputs(args):
    store = load_store(args.store)
    pricing = load_pricing(args.pricing)
    constraints = load_constraints(args.constraints) if args.constraints else []
    return store, pricing, constraints


def _cmd_evaluate(args) -> int:
    store, pricing, constraints = _load_eval_inputs(args)
    contract = load_contract(args.contract)
    baseline = evaluate_contract(
        Contract(contract.grouping, {}), store, pricing, args.gross_profit
    )
    constraints = default_penalty_scales(
        constraints, build_report(baseline).avg_net_profit
    )
    result = evaluate_contract(contract, store, pricing, args.gross_profit)
    report = build_report(result, constraints)
    payload = report.to_dict()
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    return 0


def _cmd_optimize(args) -> int:
    store, pricing, constraints = _load_eval_inputs(args)
    bounds = load_bounds(args.contract_bounds)
    schedule = AnnealSchedule(
        t_initial=args.t0,
        t_final=args.tf,
        steps=args.steps,
        restarts=args.restarts,
        seed=args.seed,
    )
    start = None if args.start == "empty" else load_contract(args.start)
    res = anneal_run(
        store,
        pricing,
        constraints,
        bounds,
        schedule,
        start=start,
        gross_profit=args.gross_profit,
        top_n=args.top_n,
        cache=not args.no_cache,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(out_dir / "trace.csv", "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if fh.tell() == 0:
            writer.writerow(
                ["chain", "step", "objective", "best_objective", "temperature", "move", "accepted"]
            )
        for r in res.trace:
            writer.writerow(
                [r.chain, r.step, repr(r.objective), repr(r.best_objective),
                 repr(r.temperature), r.move, int(r.accepted)]
            )
    with open(out_dir / "space.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tvar", "avg_net_profit", "feasible"])
        for tv, profit, feasible in res.space:
            writer.writerow([repr(tv), repr(profit), int(feasible)])

    from .plots import plot_space, plot_trace

    plot_trace(res.trace, out_dir / "trace.png")
    plot_space(res.space, out_dir / "space.png")

    payload = {
        "baseline": res.baseline.to_dict(),
        "evaluations": res.evaluations,
        "cache_stats": dict(res.cache_stats),
        "best": [
            {"contract": contract_to_dict(c), "report": r.to_dict()}
            for c, r in res.best_feasible
        ],
    }
    with open(out_dir / "best.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    if res.best is None:
        print("no feasible contract found", file=sys.stderr)
        return 1
    _log(args, f"best objective {res.best[1].objective!r} ({len(res.best_feasible)} feasible)")
    return 0


def _solve_problem_from_args(args) -> BnbProblem:
    if args.store:
        if not args.geometry:
            raise ReinsoptError("--store mode requires --geometry")
        store = load_store(args.store)
        with open(args.geometry, encoding="utf-8") as fh:
            geo = json.load(fh)
        problem = dict(
            store=store,
            groups=tuple(tuple(g) for g in geo["groups"]),
            a_min=np.asarray(geo["a_min"], dtype=np.float64),
            a_max=np.asarray(geo["a_max"], dtype=np.float64),
            l_max=np.asarray(geo["l_max"], dtype=np.float64),
            b=args.bits,
            rho=args.rho,
            risk_kind=args.risk,
            beta=args.beta,
        )
        if args.kmax == "AUTO":
            from .risk import aep as _aep, tvar as _tvar

            gross = store.gross_yearly()
            fn = _tvar if args.risk == "tvar" else _aep
            k_max = 0.95 * fn(gross, args.beta)
        else:
            k_max = float(args.kmax)
        return BnbProblem(k_max=k_max, **problem)
    return make_problem(
        n=args.groups,
        b=args.bits,
        seed=args.seed,
        years=args.years,
        events_per_year=args.events_per_year,
        scale_base=args.scale,
        rho=args.rho,
        p_attach=args.p_attach,
        risk_kind=args.risk,
        beta=args.beta,
        k_max=None if args.kmax == "AUTO" else float(args.kmax),
    )


def _cmd_solve(args) -> int:
    if not args.store and args.groups is None:
        raise ReinsoptError("solve needs --groups (synthetic mode) or --store with --geometry")
    problem = _solve_problem_from_args(args)
    res = solve_cascade(problem)
    payload = {
        "feasible": res.feasible,
        "objective": res.objective,
        "layers": [{"attachment": a, "limit": l} for a, l in res.layers],
        "k_value": res.k_value,
        "k_max": problem.k_max,
        "min_achievable_k": res.min_achievable_k,
        "total_nodes": res.total_nodes,
        "stats": {
            "nodes_visited": res.stats.nodes_visited,
            "expansions": res.stats.expansions,
            "pruned_by_profit": res.stats.pruned_by_profit,
            "pruned_by_risk": res.stats.pruned_by_risk,
            "leaves": res.stats.leaves,
            "exhaustive_leaf_count": res.stats.exhaustive_leaf_count,
            "reduction_factor": res.stats.reduction_factor,
        },
        "suffix_pi_max": [
            {"suffix_start": s.suffix_start, "pi_max": s.pi_max} for s in res.suffix
        ],
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    print(text)
    return 0 if res.feasible else 1


def _cmd_census(args) -> int:
    b_values = tuple(int(v) for v in str(args.b).split(",") if v != "")

    def progress(row):
        print(
            f"census b={row.b} n={row.n} instance={row.instance} "
            f"nodes={row.total_nodes}",
            file=sys.stderr,
        )

    result = census(
        b_values=b_values,
        n_max=args.n_max,
        instances=args.instances,
        seed=args.seed,
        years=args.years,
        events_per_year=args.events_per_year,
        scale_base=args.scale,
        threads=args.threads,
        out=args.out,
        progress=progress if args.verbose else None,
    )
    write_census_csv(result, args.out)

    from .plots import plot_census

    plot_census(result, Path(args.out).with_suffix(".png"))
    print(json.dumps({"c1": result.c1, "c0": result.c0, "rows": len(result.rows)}))
    return 0


def _cmd_estimate_qbb(args) -> int:
    model = HardwareModel(
        toffoli_rate=args.toffoli_rate,
        and_gates_per_add=args.ands_per_add,
        classical_ops_per_second=args.classical_ops,
        max_runtime=args.budget,
    )
    report = estimate(model, event_count=args.events)
    payload = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    print(payload if args.json else format_report(report))
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    return 0


_HANDLERS = {
    "generate": _cmd_generate,
    "preprocess": _cmd_preprocess,
    "optimize": _cmd_optimize,
    "solve": _cmd_solve,
    "census": _cmd_census,
    "estimate-qbb": _cmd_estimate_qbb,
    "evaluate": _cmd_evaluate,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(argv)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ReinsoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
