"""Command-line front end: ``stodyn {solve,bounds,evaluate,simulate,partition,bench}``.

Exit status is 0 on success, 2 when a model is infeasible and 1 on errors.
"""

from __future__ import annotations

import argparse
import ast
import json
import logging
import os
import sys

from . import bench
from .evaluate import exact_policy_cost, simulate_policy
from .linloss import SearchConfig, linearize, minimax_error, optimize_partition, uniform_partition
from .models import (
    ConfigurationError, Direction, LotSizingInstance, Measure, Policy, SolverConfig,
    SolverUnavailable, Status, build_model, extract_policy, solve,
)
from .probdist import DemandProcess, from_dict

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2
DEFAULT_SEGMENTS = 11

_TOP_KEYS = {"horizon", "costs", "initial_inventory", "service", "shortage", "demand", "partition", "name"}
_COST_KEYS = {"a", "v", "h", "b", "s"}
_SERVICE_KEYS = {"measure", "level", "penalty_basis"}
_PARTITION_KEYS = {"strategy", "W", "search"}
_SEARCH_KEYS = {"population", "step", "seed"}


class InstanceFileError(ValueError):
    pass


def _reject_unknown(obj, allowed, where):
    if not isinstance(obj, dict):
        raise InstanceFileError(f"{where}: expected an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise InstanceFileError(f"{where}: unknown key {extra[0]!r}")


def _require(obj, key, where):
    if key not in obj:
        raise InstanceFileError(f"{where}: missing key {key!r}")
    return obj[key]


def parse_instance(doc: dict) -> tuple[LotSizingInstance, dict]:
    """Decode an instance document; returns the instance and its partition block."""
    _reject_unknown(doc, _TOP_KEYS, "instance")
    costs = _require(doc, "costs", "instance")
    _reject_unknown(costs, _COST_KEYS, "costs")
    service = _require(doc, "service", "instance")
    _reject_unknown(service, _SERVICE_KEYS, "service")
    partition = doc.get("partition", {}) or {}
    _reject_unknown(partition, _PARTITION_KEYS, "partition")
    _reject_unknown(partition.get("search", {}) or {}, _SEARCH_KEYS, "partition.search")

    demand = _require(doc, "demand", "instance")
    if not isinstance(demand, list) or not demand:
        raise InstanceFileError("demand: expected a nonempty array")
    laws = []
    for k, item in enumerate(demand):
        try:
            laws.append(from_dict(item))
        except (ValueError, TypeError, KeyError) as exc:
            raise InstanceFileError(f"demand[{k}]: {exc}") from exc
    horizon = _require(doc, "horizon", "instance")
    if horizon != len(laws):
        raise InstanceFileError(f"horizon: {horizon} does not match {len(laws)} demand entries")
    measure = _require(service, "measure", "service")
    try:
        inst = LotSizingInstance(
            DemandProcess(laws),
            a=float(_require(costs, "a", "costs")),
            v=float(costs.get("v", 0.0)),
            h=float(costs.get("h", 1.0)),
            b=float(costs.get("b", 0.0)),
            s=None if costs.get("s") is None else float(costs["s"]),
            I0=float(doc.get("initial_inventory", 0.0)),
            measure=measure,
            level=service.get("level"),
            shortage=doc.get("shortage", "backorder"),
            penalty_basis=service.get("penalty_basis", "per_period"),
            name=str(doc.get("name", "")),
        )
    except (ValueError, TypeError) as exc:
        raise InstanceFileError(str(exc)) from exc
    return inst, partition


def instance_to_dict(inst: LotSizingInstance, partition: dict | None = None) -> dict:
    costs = {"a": inst.a, "v": inst.v, "h": inst.h}
    if inst.measure is Measure.PENALTY:
        costs["b"] = inst.b
    if inst.s is not None:
        costs["s"] = inst.s
    service = {"measure": inst.measure.value}
    if inst.level is not None:
        service["level"] = inst.level
    if inst.penalty_basis.value != "per_period":
        service["penalty_basis"] = inst.penalty_basis.value
    doc = {
        "horizon": inst.N, "costs": costs, "initial_inventory": inst.I0, "service": service,
        "shortage": inst.shortage.value, "demand": inst.demand.to_list(),
    }
    if inst.name:
        doc["name"] = inst.name
    if partition:
        doc["partition"] = partition
    return doc


def load_instance(path) -> tuple[LotSizingInstance, dict]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFileError(f"{path}: not valid JSON ({exc})") from exc
    return parse_instance(doc)


def parse_policy(text: str) -> Policy:
    """A JSON object or Python dict literal ``{review: level}``, or a file holding one."""
    if os.path.exists(text):
        with open(text) as fh:
            text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError:
        try:
            raw = ast.literal_eval(text.strip())
        except (ValueError, SyntaxError) as exc:
            raise ConfigurationError(f"cannot parse policy {text!r}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("policy must map review periods to levels")
    return Policy({int(k): float(v) for k, v in raw.items()})


def _search_cfg(block: dict, args) -> SearchConfig:
    block = block or {}
    return SearchConfig(
        population_size=getattr(args, "population", None) or block.get("population"),
        step_size=getattr(args, "step", None) or block.get("step", 0.002),
        seed=getattr(args, "seed_search", None) if getattr(args, "seed_search", None) is not None
        else block.get("seed", 0))


def _linearizations(inst, partition, args):
    W = args.segments or partition.get("W") or DEFAULT_SEGMENTS
    strategy = args.strategy or partition.get("strategy") or bench.default_strategy(inst)
    return bench.linearizations_for(inst, int(W), strategy, _search_cfg(partition.get("search"), args)), W, strategy


def _solver(args) -> SolverConfig:
    cfg = SolverConfig()
    if getattr(args, "time_limit", None):
        cfg.time_limit = float(args.time_limit)
    return cfg


def _directions(arg):
    if arg in (None, "both"):
        return [Direction.LOWER, Direction.UPPER]
    return [Direction.parse(arg)]


def cmd_solve(args, out) -> int:
    inst, partition = load_instance(args.instance)
    lins, W, strategy = _linearizations(inst, partition, args)
    code = EXIT_OK
    for direction in _directions(args.direction):
        model = build_model(inst, lins, direction)
        if args.lp_out:
            path = args.lp_out if len(_directions(args.direction)) == 1 else f"{args.lp_out}.{direction.value}"
            with open(path, "w") as fh:
                fh.write(model.to_lp())
        sol = solve(model, _solver(args))
        tag = "lb" if direction is Direction.LOWER else "ub"
        if sol.status is Status.INFEASIBLE:
            print(f"{tag}: infeasible (W={W}, {strategy})", file=out)
            code = EXIT_INFEASIBLE
            continue
        if not sol.optimal:
            print(f"{tag}: {sol.status.value}: {sol.message}", file=out)
            code = max(code, EXIT_ERROR) if code != EXIT_INFEASIBLE else code
            continue
        print(f"{tag}: objective = {sol.objective:.6f}  policy = {extract_policy(sol, inst)}", file=out)
    return code


def cmd_bounds(args, out) -> int:
    inst, partition = load_instance(args.instance)
    lins, W, strategy = _linearizations(inst, partition, args)
    res = bench.solve_bounds(inst, lins, _solver(args))
    print(f"W = {W}  partition = {strategy}", file=out)
    for key in ("lb", "ub"):
        obj = res[f"{key}_objective"]
        print(f"{key}_objective = {'' if obj is None else f'{obj:.6f}'}  status = {res[f'{key}_status'].value}",
              file=out)
    if res["status"] is Status.INFEASIBLE:
        return EXIT_INFEASIBLE
    if res["status"] is not Status.OPTIMAL:
        return EXIT_ERROR
    print(f"gap = {res['gap']:.6g}", file=out)
    print(f"exact_cost_of_ub_policy = {res['exact_ub_policy']:.6f}", file=out)
    print(f"ub_policy = {res['ub_policy']}", file=out)
    return EXIT_OK


def cmd_evaluate(args, out) -> int:
    inst, _ = load_instance(args.instance)
    report = exact_policy_cost(parse_policy(args.policy), inst)
    out.write(report.to_csv_row() if args.csv else report.to_text())
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    inst, _ = load_instance(args.instance)
    report = simulate_policy(parse_policy(args.policy), inst, reps=args.reps, seed=args.seed, workers=args.workers)
    out.write(report.to_csv_row() if args.csv else report.to_text())
    return EXIT_OK


def _read_inputs(items):
    laws = []
    for item in items:
        if os.path.exists(item):
            with open(item) as fh:
                doc = json.load(fh)
            if isinstance(doc, dict) and "demand" in doc:
                inst, _ = parse_instance(doc)
                N = inst.N
                laws.extend(inst.demand.convolution(j, t).law for t in range(1, N + 1) for j in range(1, t + 1))
                continue
        else:
            doc = json.loads(item)
        docs = doc if isinstance(doc, list) else [doc]
        laws.extend(from_dict(d) for d in docs)
    return laws


def cmd_partition(args, out) -> int:
    laws = _read_inputs(args.inputs)
    W = args.segments or DEFAULT_SEGMENTS
    if args.uniform:
        partition = uniform_partition(W)
    else:
        partition = optimize_partition(laws, W, _search_cfg({}, args))
    print(f"minimax error {minimax_error(laws, partition):.10g} "
          f"(uniform {minimax_error(laws, uniform_partition(W)):.10g})", file=sys.stderr)
    if len(laws) == 1:
        out.write(linearize(laws[0], partition).dump())
    else:
        for p in partition:
            print(f"{p:.12g}", file=out)
    return EXIT_OK


_BENCH_KEYS = {"testbed", "heterogeneous", "W", "strategies", "time_limit", "workers", "search", "evaluate"}


def load_bench_config(path):
    with open(path) as fh:
        doc = json.load(fh)
    _reject_unknown(doc, _BENCH_KEYS, "bench config")
    tb = dict(doc.get("testbed", {}))
    allowed = set(bench.TestBedConfig.__dataclass_fields__)
    _reject_unknown(tb, allowed, "testbed")
    for k, v in tb.items():
        if isinstance(v, list):
            tb[k] = tuple(v)
    cfg = bench.TestBedConfig(**tb)
    cfg.validate()
    search = doc.get("search") or {}
    _reject_unknown(search, _SEARCH_KEYS, "search")
    return cfg, doc, SearchConfig(population_size=search.get("population"),
                                  step_size=search.get("step", 0.002), seed=search.get("seed", 0))


def cmd_bench(args, out) -> int:
    cfg, doc, search = load_bench_config(args.config)
    instances = bench.generate_testbed(cfg)
    if doc.get("heterogeneous"):
        instances = [i.with_demand(bench.heterogeneous_process(i.N, i.demand.means())) for i in instances]
    solver = SolverConfig(time_limit=float(doc.get("time_limit", 120.0)))
    rows = bench.run_gap_study(instances, doc.get("W", [2, 3, 4, 7, 11]), doc.get("strategies"), solver,
                               search=search, workers=args.workers or int(doc.get("workers", 1)),
                               evaluate=bool(doc.get("evaluate", True)))
    bench.write_csv(rows, args.out)
    summary_path = args.summary or os.path.splitext(args.out)[0] + "_summary.csv"
    summary = bench.summarize(rows)
    bench.write_csv(summary, summary_path, bench.SUMMARY_COLUMNS)
    print(f"{len(rows)} rows -> {args.out}; summary -> {summary_path}", file=out)
    for s in summary:
        print(f"{s['measure']}/{s['shortage']} {s['partition_strategy']} W={s['W']}: "
              f"median gap {s['median_gap']:.4g} ({s['n_optimal']}/{s['n']} optimal)", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stodyn", description="Bounds for stochastic lot sizing via piecewise loss functions")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def model_opts(sp):
        sp.add_argument("--instance", required=True)
        sp.add_argument("--segments", "-W", type=int)
        sp.add_argument("--strategy", choices=("table", "uniform", "search"))
        sp.add_argument("--time-limit", type=float)
        sp.add_argument("--population", type=int)
        sp.add_argument("--step", type=float)
        sp.add_argument("--seed-search", type=int)

    sp = sub.add_parser("solve", help="solve the bound model(s) and print the policy")
    model_opts(sp)
    sp.add_argument("--direction", default="both", choices=("lb", "ub", "both"))
    sp.add_argument("--lp-out", help="also write the model in LP format")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("bounds", help="LB, UB, gap and exact cost of the UB policy")
    model_opts(sp)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("evaluate", help="exact evaluation of a policy")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--policy", required=True)
    sp.add_argument("--csv", action="store_true")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("simulate", help="Monte Carlo evaluation of a policy")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--policy", required=True)
    sp.add_argument("--reps", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--csv", action="store_true")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("partition", help="partition search over a set of laws")
    sp.add_argument("--segments", "-W", type=int)
    sp.add_argument("--inputs", nargs="+", required=True,
                    help="distribution literals (JSON), files holding them, or instance files")
    sp.add_argument("--uniform", action="store_true", help="skip the search")
    sp.add_argument("--population", type=int)
    sp.add_argument("--step", type=float)
    sp.add_argument("--seed-search", type=int)
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("bench", help="run the gap study over a test bed")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--summary")
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_bench)
    return p


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args, out)
    except SolverUnavailable as exc:
        print(f"environment error: {exc}", file=sys.stderr)
    except (InstanceFileError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


def main():  # pragma: no cover
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
