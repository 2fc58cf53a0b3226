"""Command-line entry point.

Subcommands: partition, evaluate, validate, gen, oracle, bench.  All
randomness derives from one --seed via the splitmix expansion in
`mfspart.seeds`, so identical flags and seeds reproduce identical solution
and report files byte for byte (as long as no wall-clock limit binds).

Exit codes: 0 success, 2 parse/usage error, 3 proven infeasible,
4 budget exhausted without a feasible placement, 5 constraint violations.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import dataclass

from . import io as mio
from .assign import SearchBudget, parallel_assign
from .coarsen import CoarseningConfig, build_hierarchy
from .metrics import report as metrics_report
from .metrics import total_hop_distance, validate
from .model import Hypergraph, Placement
from .oracle import exhaustive_partition
from .refine import ALL_OPS, OP_ALIASES, project_to_finer, refine_level
from .seeds import TAG_ASSIGN, TAG_COARSEN, TAG_GEN, sub_seed
from .topology import MfsTopology, compute_hop_matrix

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_BUDGET = 4
EXIT_VIOLATIONS = 5


def parse_ops(text: str) -> tuple[str, ...]:
    if text.strip().lower() in ("none", ""):
        return ()
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        kind = OP_ALIASES.get(tok, tok)
        if kind not in ALL_OPS:
            raise ValueError(f"unknown op '{tok}' (use mv,ex,rep,del or none)")
        out.append(kind)
    return tuple(out)


@dataclass
class PipelineResult:
    placement: Placement | None
    status: str  # "ok" | "infeasible" | "budget"
    thd: int | None = None


def run_pipeline(
    h: Hypergraph,
    t: MfsTopology,
    *,
    seed: int = 1,
    alpha0: float = 0.5,
    dalpha: float = 3.0,
    n_final: int | None = None,
    min_reduction: float = 0.95,
    n_seeds: int = 4,
    assign_budget: int | None = 32,
    assign_max_nodes: int | None = 200_000,
    stall_delta: float = 0.02,
    rho: float = 0.3,
    assign_variant: str = "nodes",
    ops: tuple[str, ...] = ALL_OPS,
    max_replicas: int | None = None,
    allow_zero_gain: bool = False,
    time_limit: float | None = None,
    refine_observer=None,
) -> PipelineResult:
    """Coarsen, assign, then project-and-refine back to the original graph.

    `refine_observer`, when given, is called once per refinement pass with
    that pass's hypergraph and must return a per-op callback (or None);
    test instrumentation hooks in through it.
    """
    start = time.monotonic()
    hm = compute_hop_matrix(t)
    cfg = CoarseningConfig(
        alpha0=alpha0,
        dalpha=dalpha,
        n_final=n_final,
        min_reduction=min_reduction,
        seed=sub_seed(seed, TAG_COARSEN),
    )
    levels = build_hierarchy(h, t, cfg)
    coarsest = levels[-1].hypergraph if levels else h

    remaining = None if time_limit is None else max(0.1, time_limit - (time.monotonic() - start))
    budget = SearchBudget(
        max_solutions=assign_budget,
        time_limit=remaining,
        stall_delta=stall_delta,
        rho=rho,
        max_nodes=assign_max_nodes,
    )
    seeds = [sub_seed(seed, TAG_ASSIGN, i) for i in range(n_seeds)]
    res = parallel_assign(coarsest, t, hm, budget, seeds, assign_variant)
    if res.placement is None:
        return PipelineResult(None, "infeasible" if res.status == "complete" else "budget")

    def time_left() -> bool:
        return time_limit is None or (time.monotonic() - start) < time_limit

    p = res.placement
    if time_left():
        p = refine_level(
            coarsest, p, t, hm, ops=ops, max_replicas=max_replicas,
            allow_zero_gain=allow_zero_gain,
            observer=refine_observer(coarsest) if refine_observer else None,
        )
    for i in range(len(levels) - 1, -1, -1):
        p = project_to_finer(levels[i], p)
        fine_h = levels[i - 1].hypergraph if i > 0 else h
        if time_left():
            p = refine_level(
                fine_h, p, t, hm, ops=ops, max_replicas=max_replicas,
                allow_zero_gain=allow_zero_gain,
                observer=refine_observer(fine_h) if refine_observer else None,
            )
    return PipelineResult(p, "ok", total_hop_distance(h, p, hm))


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_instance(args) -> tuple[Hypergraph, MfsTopology]:
    h = mio.parse_hypergraph(_read(args.hypergraph))
    t = mio.parse_topology(_read(args.topology))
    mio.InstanceBundle(h, t)  # k agreement check
    return h, t


def _add_pipeline_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--seed", type=int, default=1, help="master seed (all RNG derives from it)")
    sp.add_argument("--alpha0", type=float, default=0.5)
    sp.add_argument("--dalpha", type=float, default=3.0)
    sp.add_argument("--nfinal", type=int, default=None, help="coarsest size target (default max(128, 16K))")
    sp.add_argument("--min-reduction", type=float, default=0.95)
    sp.add_argument("--seeds", type=int, default=4, help="number of perturbed assignment searches")
    sp.add_argument("--assign-budget", type=int, default=32, help="max solutions per search")
    sp.add_argument("--assign-max-nodes", type=int, default=200_000)
    sp.add_argument("--stall-delta", type=float, default=0.02)
    sp.add_argument("--rho", type=float, default=0.3)
    sp.add_argument("--assign-variant", choices=("nodes", "fpgas"), default="nodes")
    sp.add_argument("--ops", default="mv,ex,rep,del", help="refinement ops subset, or 'none'")
    sp.add_argument("--max-replicas", type=int, default=None, help="cap on replicates per level")
    sp.add_argument("--allow-zero-gain", action="store_true")
    sp.add_argument("--time-limit", type=float, default=None, help="seconds; may break reproducibility")


def _pipeline_kwargs(args) -> dict:
    return dict(
        seed=args.seed,
        alpha0=args.alpha0,
        dalpha=args.dalpha,
        n_final=args.nfinal,
        min_reduction=args.min_reduction,
        n_seeds=args.seeds,
        assign_budget=args.assign_budget,
        assign_max_nodes=args.assign_max_nodes,
        stall_delta=args.stall_delta,
        rho=args.rho,
        assign_variant=args.assign_variant,
        ops=parse_ops(args.ops),
        max_replicas=args.max_replicas,
        allow_zero_gain=args.allow_zero_gain,
        time_limit=args.time_limit,
    )


def cmd_partition(args) -> int:
    try:
        h, t = _load_instance(args)
    except (mio.ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    result = run_pipeline(h, t, **_pipeline_kwargs(args))
    if result.placement is None:
        if result.status == "infeasible":
            print("no solution: assignment search space exhausted", file=sys.stderr)
            return EXIT_INFEASIBLE
        print("no solution within budget", file=sys.stderr)
        return EXIT_BUDGET
    _write(args.output, mio.write_solution(result.placement))
    rep = metrics_report(h, t, result.placement)
    _write(args.report, rep.to_text())
    return EXIT_OK


def cmd_evaluate(args) -> int:
    try:
        h, t = _load_instance(args)
        p = mio.parse_solution(_read(args.solution))
    except (mio.ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if p.num_vertices != h.num_vertices:
        print(
            f"error: solution covers {p.num_vertices} vertices, instance has {h.num_vertices}",
            file=sys.stderr,
        )
        return EXIT_PARSE
    rep = metrics_report(h, t, p)
    _write(args.report, rep.to_text())
    bad = validate(h, t, p)
    for vio in bad:
        print(f"violation: {vio.kind} at {vio.index}: {vio.observed} > {vio.limit} {vio.detail}",
              file=sys.stderr)
    return EXIT_VIOLATIONS if bad else EXIT_OK


def cmd_validate(args) -> int:
    try:
        h, t = _load_instance(args)
        p = mio.parse_solution(_read(args.solution))
    except (mio.ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    bad = validate(h, t, p)
    for vio in bad:
        print(f"violation: {vio.kind} at {vio.index}: {vio.observed} > {vio.limit} {vio.detail}")
    return EXIT_VIOLATIONS if bad else EXIT_OK


def cmd_gen(args) -> int:
    try:
        bundle = mio.gen_instance(
            sub_seed(args.seed, TAG_GEN),
            args.vertices,
            args.edges,
            args.fpgas,
            args.types,
            spare=args.spare,
            max_fanout=args.max_fanout,
            hub_fraction=args.hub_fraction,
            hub_fanout=args.hub_fanout,
            locality=args.locality,
            extra_links=args.extra_links,
            max_vertex_weight=args.max_vertex_weight,
            max_edge_weight=args.max_edge_weight,
            io_limit=args.io_limit,
            hop_max=args.hop_max,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    _write(args.prefix + ".hg", mio.write_hypergraph(bundle.hypergraph))
    _write(args.prefix + ".topo", mio.write_topology(bundle.topology))
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        h, t = _load_instance(args)
    except (mio.ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    p, thd = exhaustive_partition(h, t)
    if p is None:
        print("no solution")
        return EXIT_INFEASIBLE
    print(f"thd {thd}")
    sys.stdout.write(mio.write_solution(p))
    return EXIT_OK


def cmd_bench(args) -> int:
    arms = [a.strip() for a in args.arms.split(";") if a.strip()]
    rows = []
    for idx in range(args.count):
        gen_seed = sub_seed(args.seed, TAG_GEN, idx)
        bundle = mio.gen_instance(
            gen_seed,
            args.vertices,
            args.edges,
            args.fpgas,
            args.types,
            spare=args.spare,
            hub_fraction=args.hub_fraction,
            hub_fanout=args.hub_fanout,
        )
        for arm in arms:
            t0 = time.monotonic()
            res = run_pipeline(
                bundle.hypergraph,
                bundle.topology,
                seed=args.seed,
                ops=parse_ops(arm),
                n_seeds=args.seeds,
                assign_budget=args.assign_budget,
                assign_max_nodes=args.assign_max_nodes,
                alpha0=args.alpha0,
                dalpha=args.dalpha,
            )
            dt = time.monotonic() - t0
            if res.placement is None:
                rows.append((f"gen{idx:03d}", args.seed, arm, "", "", "", f"{dt:.3f}"))
                continue
            rep = metrics_report(bundle.hypergraph, bundle.topology, res.placement)
            rows.append(
                (
                    f"gen{idx:03d}",
                    args.seed,
                    arm,
                    rep.total_hop_distance,
                    rep.cut_size,
                    rep.replica_count,
                    f"{dt:.3f}",
                )
            )
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(["instance", "seed", "arm", "thd", "cut", "replicas", "runtime_s"])
        writer.writerows(rows)
        # summary: per arm, mean THD and the mean of per-instance ratios
        # against the first arm (rows without a finite baseline are skipped)
        by_arm: dict[str, dict[str, int]] = {arm: {} for arm in arms}
        for r in rows:
            if r[3] != "":
                by_arm[r[2]][r[0]] = r[3]
        base = by_arm[arms[0]]
        writer.writerow([])
        writer.writerow(["arm", "mean_thd", "mean_ratio_vs_first"])
        for arm in arms:
            vals = list(by_arm[arm].values())
            mean_thd = sum(vals) / len(vals) if vals else float("nan")
            ratios = [
                by_arm[arm][inst] / base[inst]
                for inst in by_arm[arm]
                if base.get(inst, 0) > 0
            ]
            mean_ratio = sum(ratios) / len(ratios) if ratios else float("nan")
            writer.writerow([arm, f"{mean_thd:.2f}", f"{mean_ratio:.4f}"])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mfspart", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("partition", help="partition an instance end to end")
    sp.add_argument("hypergraph")
    sp.add_argument("topology")
    sp.add_argument("-o", "--output", default="-", help="solution file ('-' = stdout)")
    sp.add_argument("--report", default="-", help="metrics report file ('-' = stdout)")
    _add_pipeline_flags(sp)
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("evaluate", help="score a solution and print the metrics report")
    sp.add_argument("hypergraph")
    sp.add_argument("topology")
    sp.add_argument("solution")
    sp.add_argument("--report", default="-")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("validate", help="list constraint violations of a solution")
    sp.add_argument("hypergraph")
    sp.add_argument("topology")
    sp.add_argument("solution")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("gen", help="generate a random instance")
    sp.add_argument("prefix", help="output path prefix (.hg and .topo are appended)")
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--vertices", type=int, default=100)
    sp.add_argument("--edges", type=int, default=200)
    sp.add_argument("--fpgas", type=int, default=4)
    sp.add_argument("--types", type=int, default=2)
    sp.add_argument("--spare", type=float, default=0.25)
    sp.add_argument("--max-fanout", type=int, default=8)
    sp.add_argument("--hub-fraction", type=float, default=0.1)
    sp.add_argument("--hub-fanout", type=int, default=16)
    sp.add_argument("--locality", type=int, default=None)
    sp.add_argument("--extra-links", type=int, default=None)
    sp.add_argument("--max-vertex-weight", type=int, default=4)
    sp.add_argument("--max-edge-weight", type=int, default=3)
    sp.add_argument("--io-limit", type=int, default=None)
    sp.add_argument("--hop-max", type=int, default=None)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("oracle", help="exhaustive optimum for tiny instances")
    sp.add_argument("hypergraph")
    sp.add_argument("topology")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("bench", help="run ops-subset arms over a generated suite, emit CSV")
    sp.add_argument("--out", default="-")
    sp.add_argument("--arms", default="none;mv,ex;mv,ex,rep,del")
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--vertices", type=int, default=200)
    sp.add_argument("--edges", type=int, default=400)
    sp.add_argument("--fpgas", type=int, default=4)
    sp.add_argument("--types", type=int, default=2)
    sp.add_argument("--spare", type=float, default=0.3)
    sp.add_argument("--hub-fraction", type=float, default=0.15)
    sp.add_argument("--hub-fanout", type=int, default=12)
    sp.add_argument("--seeds", type=int, default=2)
    sp.add_argument("--assign-budget", type=int, default=16)
    sp.add_argument("--assign-max-nodes", type=int, default=20_000)
    sp.add_argument("--alpha0", type=float, default=0.5)
    sp.add_argument("--dalpha", type=float, default=3.0)
    sp.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
