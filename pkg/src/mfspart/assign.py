"""Initial placement: heat-ordered depth-first search with pruning.

Hypernodes are placed in descending node-heat order, trying FPGAs in
descending FPGA-heat order.  A branch dies when the partial cost already
matches the incumbent, a per-FPGA I/O budget is exceeded, or a resource
capacity is exceeded.  When consecutive complete solutions are nearly
equal, the search retreats to a fraction of the current depth and abandons
that whole subtree, which forces it into a different region.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .model import Hypergraph, Placement
from .topology import HopMatrix, MfsTopology, hop_sum


@dataclass
class HeatScores:
    fpga_heat: list[float]
    node_heat: list[float]


@dataclass
class SearchBudget:
    max_solutions: int | None = 32
    time_limit: float | None = None  # seconds; breaks reproducibility if it binds
    stall_delta: float = 0.02
    rho: float = 0.3
    max_nodes: int | None = 200_000

    def __post_init__(self):
        if not (0 < self.stall_delta < 1):
            raise ValueError("stall_delta must be in (0, 1)")
        if not (0 < self.rho < 1):
            raise ValueError("rho must be in (0, 1)")


@dataclass
class AssignResult:
    placement: Placement | None
    thd: int | None
    status: str  # "complete": search space exhausted; "budget": stopped early
    solutions: int = 0
    nodes: int = 0

    @property
    def feasible(self) -> bool:
        return self.placement is not None


def fpga_heat(t: MfsTopology, hm: HopMatrix, f: int) -> float:
    """Squared capacity mass over hop-sum; larger means big and central."""
    if t.k_fpgas == 1:
        return 1.0
    num = sum(c * c for c in t.capacities[f])
    return num / hop_sum(t, hm, f)


def node_heat(h: Hypergraph, v: int) -> int:
    """Connected signal volume times squared resource usage."""
    w2 = sum(x * x for x in h.vertices[v].weight)
    total_w = sum(h.edges[e].weight for e in h.incidence[v])
    return total_w * w2


def compute_heats(h: Hypergraph, t: MfsTopology, hm: HopMatrix) -> HeatScores:
    return HeatScores(
        fpga_heat=[fpga_heat(t, hm, f) for f in range(t.k_fpgas)],
        node_heat=[float(node_heat(h, v)) for v in range(h.num_vertices)],
    )


def perturb_heats(heats: HeatScores, seed: int, variant: str = "nodes") -> HeatScores:
    """Multiplicative jitter, uniform in [0.9, 1.1], on one heat family."""
    rng = np.random.default_rng(seed)
    if variant == "nodes":
        jitter = rng.uniform(0.9, 1.1, size=len(heats.node_heat))
        return HeatScores(
            fpga_heat=list(heats.fpga_heat),
            node_heat=[h * j for h, j in zip(heats.node_heat, jitter)],
        )
    if variant == "fpgas":
        jitter = rng.uniform(0.9, 1.1, size=len(heats.fpga_heat))
        return HeatScores(
            fpga_heat=[h * j for h, j in zip(heats.fpga_heat, jitter)],
            node_heat=list(heats.node_heat),
        )
    raise ValueError(f"unknown perturbation variant '{variant}'")


def should_deep_backtrack(thd_prev: int, thd_new: int, delta: float) -> bool:
    """Stall detector: consecutive solutions differ by less than delta."""
    if thd_prev <= 0:
        return False
    return abs(thd_new - thd_prev) / thd_prev < delta


def backtrack_depth(depth: int, rho: float) -> int:
    return int(rho * depth)


def dfs_assign(
    h: Hypergraph,
    t: MfsTopology,
    hm: HopMatrix,
    budget: SearchBudget,
    heats: HeatScores | None = None,
) -> AssignResult:
    """Best feasible unreplicated placement found within the budget.

    status "complete" with a placement means the search space was
    exhausted, so the result is optimal for this objective; "complete"
    without a placement proves infeasibility.
    """
    if heats is None:
        heats = compute_heats(h, t, hm)
    n = h.num_vertices
    kf = t.k_fpgas
    krt = t.num_resource_types
    order = sorted(range(n), key=lambda v: (-heats.node_heat[v], v))
    fpga_order = sorted(range(kf), key=lambda f: (-heats.fpga_heat[f], f))
    dist = hm.rows()
    caps = [list(c.values) for c in t.capacities]
    io_limits = t.io_limits
    io_limited = any(l is not None for l in io_limits)
    hop_max = t.hop_max
    weights = [v.weight.values for v in h.vertices]
    edges = h.edges
    inc = h.incidence

    rem = [len(e.members) for e in edges]
    asg = [-1] * n
    usage = [[0] * krt for _ in range(kf)]
    io = [0] * kf
    partial = 0

    best_asg: list[int] | None = None
    best_thd: int | None = None
    prev_thd: int | None = None
    solutions = 0
    nodes = 0
    status = "complete"
    start = time.monotonic()

    # Per-depth undo records: (v, f, cost_added, io_deltas)
    undo: list[tuple[int, int, int, list[tuple[int, int]]]] = [None] * n  # type: ignore
    cand_idx = [0] * (n + 1)

    def try_place(v: int, f: int) -> bool:
        nonlocal partial
        wv = weights[v]
        cap = caps[f]
        urow = usage[f]
        for i in range(krt):
            if urow[i] + wv[i] > cap[i]:
                return False
        for i in range(krt):
            urow[i] += wv[i]
        asg[v] = f
        cost_added = 0
        io_deltas: list[tuple[int, int]] = []
        ok = True
        completed: list[int] = []
        for e in inc[v]:
            rem[e] -= 1
            if rem[e] == 0:
                completed.append(e)
        for e in completed:
            edge = edges[e]
            s = asg[edge.source]
            drow = dist[s]
            w = edge.weight
            dset = {asg[d] for d in edge.drains}
            units = 0
            external = False
            for d in dset:
                hd = drow[d]
                if hop_max is not None and hd > hop_max:
                    ok = False
                units += hd
                if d != s:
                    external = True
                    io_deltas.append((d, w))
            cost_added += w * units
            if external:
                io_deltas.append((s, w))
        partial += cost_added
        if ok and best_thd is not None and partial >= best_thd:
            ok = False
        for f2, amt in io_deltas:
            io[f2] += amt
        if ok and io_limited:
            for f2, _ in io_deltas:
                lim = io_limits[f2]
                if lim is not None and io[f2] > lim:
                    ok = False
                    break
        if not ok:
            _unplace(v, f, cost_added, io_deltas)
            return False
        undo[depth] = (v, f, cost_added, io_deltas)
        return True

    def _unplace(v: int, f: int, cost_added: int, io_deltas: list[tuple[int, int]]) -> None:
        nonlocal partial
        partial -= cost_added
        for f2, amt in io_deltas:
            io[f2] -= amt
        for e in inc[v]:
            rem[e] += 1
        asg[v] = -1
        wv = weights[v]
        urow = usage[f]
        for i in range(krt):
            urow[i] -= wv[i]

    depth = 0
    while True:
        if depth == n:
            # Complete solution; the incumbent-THD prune guarantees strict improvement.
            solutions += 1
            best_thd = partial
            best_asg = list(asg)
            if budget.max_solutions is not None and solutions >= budget.max_solutions:
                status = "budget"
                break
            if prev_thd is not None and should_deep_backtrack(
                prev_thd, partial, budget.stall_delta
            ):
                target = backtrack_depth(depth, budget.rho)
            else:
                target = depth - 1
            prev_thd = partial
            while depth > target:
                depth -= 1
                _unplace(*undo[depth])
            continue
        i = cand_idx[depth]
        if i >= kf:
            if depth == 0:
                break  # exhausted: proven result
            depth -= 1
            _unplace(*undo[depth])
            continue
        cand_idx[depth] = i + 1
        nodes += 1
        if budget.max_nodes is not None and nodes > budget.max_nodes:
            status = "budget"
            break
        if budget.time_limit is not None and nodes % 1000 == 0:
            if time.monotonic() - start > budget.time_limit:
                status = "budget"
                break
        if try_place(order[depth], fpga_order[i]):
            depth += 1
            cand_idx[depth] = 0

    placement = Placement(best_asg) if best_asg is not None else None
    return AssignResult(placement, best_thd, status, solutions, nodes)


def parallel_assign(
    h: Hypergraph,
    t: MfsTopology,
    hm: HopMatrix,
    budget: SearchBudget,
    seeds: list[int],
    variant: str = "nodes",
) -> AssignResult:
    """Independent searches with per-seed heat jitter; deterministic
    reduction to the lowest THD, ties to the lowest seed value.

    A search that exhausts its space proves optimality (or infeasibility)
    for the whole portfolio, so remaining seeds are skipped: the visit
    order cannot change what an exhaustive search finds.
    """
    if not seeds:
        raise ValueError("need at least one seed")
    base = compute_heats(h, t, hm)
    best: AssignResult | None = None
    best_key: tuple | None = None
    total_nodes = 0
    total_solutions = 0
    any_complete_infeasible = False
    for idx, seed in enumerate(seeds):
        res = dfs_assign(h, t, hm, budget, perturb_heats(base, seed, variant))
        total_nodes += res.nodes
        total_solutions += res.solutions
        if res.placement is None:
            if res.status == "complete":
                any_complete_infeasible = True
                break
            continue
        key = (res.thd, seed, idx)
        if best_key is None or key < best_key:
            best_key = key
            best = res
        if res.status == "complete":
            break
    if best is None:
        status = "complete" if any_complete_infeasible else "budget"
        return AssignResult(None, None, status, total_solutions, total_nodes)
    return AssignResult(best.placement, best.thd, best.status, total_solutions, total_nodes)
