"""Acceptance suite: one test per criterion, one PASS line per criterion.

Run with `pytest -s tests/test_acceptance.py` to see the lines as they
print.  The generated suites are fixed by seed; every tolerance is pinned
here.
"""

import itertools
import random
import time

import numpy as np
import pytest
from scipy.sparse.csgraph import floyd_warshall

from mfspart.cli import run_pipeline
from mfspart.io import gen_instance, write_solution
from mfspart.metrics import report, total_hop_distance, validate
from mfspart.model import Placement, ResourceVector
from mfspart.oracle import exhaustive_partition, full_gain_recompute
from mfspart.refine import Op, RefineState, refine_level
from mfspart.topology import MfsTopology, compute_hop_matrix


def ok(criterion, text):
    print(f"\nACCEPTANCE {criterion}: PASS  {text}")


# fixed 30-instance generator suite for the ablation criteria (>= 25% spare)
SUITE30_GEN = dict(
    n_vertices=300, n_edges=520, k_fpgas=6, n_resource_types=2,
    spare=0.6, hub_fraction=0.25, hub_fanout=16, driver_fraction=0.03,
    max_vertex_weight=6,
)
SUITE30_PIPE = dict(n_seeds=2, assign_budget=16, assign_max_nodes=4000, n_final=48)
SUITE30_SEEDS = [4000 + i for i in range(30)]

# tiny-instance suite for the oracle-optimality criterion
TINY_COUNT = 200


class RefineAudit:
    """Per-pass THD monotonicity and intermediate validity collector."""

    def __init__(self, topo, hm):
        self.topo = topo
        self.hm = hm
        self.calls = 0
        self.ops = 0
        self.monotone = True
        self.all_valid = True

    def __call__(self, h):
        self.calls += 1
        last = [None]

        def watch(op, placement, thd):
            self.ops += 1
            if last[0] is not None and thd > last[0]:
                self.monotone = False
            last[0] = thd
            if validate(h, self.topo, placement, self.hm):
                self.all_valid = False

        return watch


@pytest.fixture(scope="module")
def tiny_suite():
    """Criterion 1 run: solver vs oracle on 200 tiny instances, with every
    refinement pass audited for criterion 4."""
    t_start = time.monotonic()
    stats = {
        "optimal": 0, "feasible": 0, "infeasible": 0,
        "audits": [], "never_better": True,
    }
    for i in range(TINY_COUNT):
        n = 6 + i % 5
        k = 2 + i % 2
        b = gen_instance(
            9000 + i, n, int(1.8 * n), k, 1 + i % 2,
            spare=0.35, hub_fraction=0.15, hub_fanout=4,
        )
        hm = compute_hop_matrix(b.topology)
        opt_p, opt_thd = exhaustive_partition(b.hypergraph, b.topology, hm)
        audit = RefineAudit(b.topology, hm)
        res = run_pipeline(
            b.hypergraph, b.topology, seed=i,
            ops=("move", "exchange"),  # replication disabled
            refine_observer=audit,
        )
        stats["audits"].append(audit)
        if opt_p is None:
            stats["infeasible"] += 1
            assert res.placement is None
            continue
        assert res.placement is not None, f"instance {i}: solver found nothing"
        got = total_hop_distance(b.hypergraph, res.placement, hm)
        assert validate(b.hypergraph, b.topology, res.placement, hm) == []
        if got < opt_thd:
            stats["never_better"] = False
        stats["feasible"] += 1
        if got == opt_thd:
            stats["optimal"] += 1
    stats["elapsed"] = time.monotonic() - t_start
    return stats


def test_criterion_1_oracle_optimality(tiny_suite):
    s = tiny_suite
    assert s["never_better"], "solver beat the exhaustive oracle: objective mismatch"
    assert s["feasible"] > 0
    ratio = s["optimal"] / s["feasible"]
    assert ratio >= 0.60, f"only {ratio:.1%} of instances hit the optimum"
    assert s["elapsed"] < 60.0, f"suite took {s['elapsed']:.1f}s (limit 60s)"
    ok(1, f"THD never below optimum; optimum hit on {ratio:.1%} "
          f"of {s['feasible']} feasible instances in {s['elapsed']:.1f}s")


def _replication_friendly_state(seed):
    b = gen_instance(
        seed, 28, 52, 4, 2, spare=0.8,
        hub_fraction=0.25, hub_fanout=10, driver_fraction=0.08,
    )
    hm = compute_hop_matrix(b.topology)
    res = run_pipeline(b.hypergraph, b.topology, seed=seed,
                       ops=("move", "exchange"), assign_max_nodes=3000, n_seeds=1)
    assert res.placement is not None
    return b.hypergraph, b.topology, hm, res.placement


def test_criterion_2_gain_exactness():
    rng = random.Random(0xACCE2)
    checked = 0
    kind_counts = {"move": 0, "exchange": 0, "replicate": 0, "delete": 0}
    kinds_cycle = ("move", "exchange", "replicate", "delete")
    seed = 0
    while checked < 10_000:
        h, t, hm, p = _replication_friendly_state(20_000 + seed)
        seed += 1
        state = RefineState(h, t, hm, p)
        for step in range(200):
            if checked >= 10_000:
                break
            entries = list(state.entries())
            if not entries:
                break
            want = kinds_cycle[step % 4]
            pool = [op for op in entries if op.kind == want] or entries
            op = pool[rng.randrange(len(pool))]
            expected = full_gain_recompute(h, state.p, hm, op)
            assert op.gain == expected, (
                f"{op} stored {op.gain} != recomputed {expected}"
            )
            checked += 1
            kind_counts[op.kind] += 1
            # march the state along with any feasible entry
            rng.shuffle(entries)
            for cand in entries:
                if state.try_apply(cand.kind, cand.v, cand.dest) is not None:
                    break
            else:
                break
    assert checked >= 10_000
    assert all(c >= 250 for c in kind_counts.values()), kind_counts
    ok(2, f"{checked} randomized gains exact (integer equality); per kind {kind_counts}")


def test_criterion_3_replicate_delete_inverse():
    rng = random.Random(0xACCE3)
    pairs = 0
    seed = 0
    while pairs < 1_000:
        h, t, hm, p = _replication_friendly_state(30_000 + seed)
        seed += 1
        state = RefineState(h, t, hm, p)
        stuck = 0
        while pairs < 1_000 and stuck < 40:
            reps = [op for op in state.entries() if op.kind == "replicate"]
            rng.shuffle(reps)
            done = False
            for op in reps:
                before_text = report(h, t, state.p, hm).to_text()
                before_usage = [list(r) for r in state.usage]
                before_io = list(state.io)
                before_thd = state.thd
                if state.try_apply("replicate", op.v, op.dest) is None:
                    continue
                assert state.try_apply("delete", op.v, op.dest) is not None
                assert report(h, t, state.p, hm).to_text() == before_text
                assert state.usage == before_usage
                assert state.io == before_io
                assert state.thd == before_thd
                pairs += 1
                done = True
                break
            if not done:
                stuck += 1
                # shake the state with any feasible op to expose new pairs
                entries = list(state.entries())
                rng.shuffle(entries)
                for cand in entries:
                    if state.try_apply(cand.kind, cand.v, cand.dest) is not None:
                        break
                else:
                    break
    assert pairs >= 1_000
    ok(3, f"{pairs} replicate-then-delete pairs restored THD, cut, usage, io bit-exactly")


def test_criterion_4_monotone_valid_refinement(tiny_suite):
    audits = tiny_suite["audits"]
    assert audits, "criterion 1 produced no refinement passes"
    assert all(a.monotone for a in audits)
    assert all(a.all_valid for a in audits)
    calls = sum(a.calls for a in audits)
    ops = sum(a.ops for a in audits)
    # extra coverage: refine unrefined assignments with all four operators
    extra_ops = 0
    for seed in range(12):
        b = gen_instance(40_000 + seed, 80, 140, 4, 2, spare=0.7,
                         hub_fraction=0.25, hub_fanout=10, driver_fraction=0.06)
        hm = compute_hop_matrix(b.topology)
        res = run_pipeline(b.hypergraph, b.topology, seed=seed, ops=(),
                           assign_max_nodes=3000, n_seeds=1)
        assert res.placement is not None
        audit = RefineAudit(b.topology, hm)
        refine_level(b.hypergraph, res.placement, b.topology, hm,
                     observer=audit(b.hypergraph))
        assert audit.monotone and audit.all_valid
        extra_ops += audit.ops
    assert extra_ops >= 100
    ok(4, f"THD non-increasing and states valid across {calls} refinement passes "
          f"({ops} ops) plus {extra_ops} all-operator ops")


@pytest.fixture(scope="module")
def suite30():
    arms = {}
    for name, extra in {
        "none": dict(ops=()),
        "mvex": dict(ops=("move", "exchange")),
        "all": dict(),
        "fixed": dict(alpha0=3.5, dalpha=0.0),
    }.items():
        arms[name] = []
        for seed in SUITE30_SEEDS:
            b = gen_instance(seed, **SUITE30_GEN)
            res = run_pipeline(b.hypergraph, b.topology, seed=7,
                               **SUITE30_PIPE, **extra)
            assert res.placement is not None
            hm = compute_hop_matrix(b.topology)
            assert validate(b.hypergraph, b.topology, res.placement, hm) == []
            arms[name].append(res.thd)
    return arms


def test_criterion_5_operator_ablation(suite30):
    mean = lambda xs: sum(xs) / len(xs)
    m_none, m_mvex, m_all = mean(suite30["none"]), mean(suite30["mvex"]), mean(suite30["all"])
    assert m_all <= 0.90 * m_mvex, f"all-ops {m_all:.1f} vs mv+ex {m_mvex:.1f}"
    assert m_mvex <= 0.70 * m_none, f"mv+ex {m_mvex:.1f} vs none {m_none:.1f}"
    ok(5, f"mean THD none={m_none:.1f} -> mv+ex={m_mvex:.1f} "
          f"({m_mvex/m_none:.2f}x) -> all={m_all:.1f} ({m_all/m_mvex:.2f}x)")


def test_criterion_6_dynamic_alpha(suite30):
    mean = lambda xs: sum(xs) / len(xs)
    dyn, fix = suite30["all"], suite30["fixed"]
    wins = sum(1 for d, f in zip(dyn, fix) if d < f)
    assert mean(dyn) <= mean(fix), f"dynamic {mean(dyn):.1f} vs fixed {mean(fix):.1f}"
    assert wins >= 0.60 * len(dyn), f"dynamic strictly better on only {wins}/{len(dyn)}"
    ok(6, f"dynamic alpha mean {mean(dyn):.1f} vs fixed {mean(fix):.1f}; "
          f"strictly better on {wins}/{len(dyn)}")


def test_criterion_7_incremental_speedup():
    b = gen_instance(77, 100_000, 100_000, 8, 2, spare=0.4,
                     locality=64, hub_fraction=0.05, hub_fanout=10)
    h, t = b.hypergraph, b.topology
    hm = compute_hop_matrix(t)
    block = (h.num_vertices + t.k_fpgas - 1) // t.k_fpgas
    p = Placement([min(v // block, t.k_fpgas - 1) for v in range(h.num_vertices)])
    assert validate(h, t, p, hm) == []
    t0 = time.monotonic()
    out_inc = refine_level(h, p, t, hm, incremental=True, max_ops=12)
    t_inc = time.monotonic() - t0
    t0 = time.monotonic()
    out_full = refine_level(h, p, t, hm, incremental=False, max_ops=12)
    t_full = time.monotonic() - t0
    assert out_inc == out_full, "variants must produce identical placements"
    speedup = t_full / t_inc
    assert speedup >= 1.5, f"incremental only {speedup:.2f}x faster"
    ok(7, f"incremental {t_inc:.1f}s vs full-recompute {t_full:.1f}s "
          f"({speedup:.1f}x) on 100k vertices / 100k nets / K=8")


def test_criterion_8_determinism(tmp_path):
    from mfspart.cli import main

    cases = [
        dict(gen=["gen", "--seed", "4001", "--vertices", "300", "--edges", "520",
                  "--fpgas", "6", "--types", "2", "--spare", "0.6",
                  "--hub-fraction", "0.25", "--hub-fanout", "16"],
             flags=["--seed", "7", "--seeds", "2", "--assign-budget", "16",
                    "--assign-max-nodes", "4000", "--nfinal", "48"]),
        dict(gen=["gen", "--seed", "9003", "--vertices", "9", "--edges", "16",
                  "--fpgas", "3", "--types", "1", "--spare", "0.35"],
             flags=["--seed", "3", "--ops", "mv,ex"]),
    ]
    for ci, case in enumerate(cases):
        prefix = tmp_path / f"det{ci}"
        assert main(case["gen"][:1] + [str(prefix)] + case["gen"][1:]) == 0
        outs = []
        for rep in range(2):
            sol = tmp_path / f"det{ci}_{rep}.sol"
            repf = tmp_path / f"det{ci}_{rep}.report"
            code = main(["partition", str(prefix) + ".hg", str(prefix) + ".topo",
                         "-o", str(sol), "--report", str(repf)] + case["flags"])
            assert code == 0
            outs.append((sol.read_bytes(), repf.read_bytes()))
        assert outs[0] == outs[1], f"case {ci} not byte-identical"
    ok(8, "identical flags and seeds reproduce byte-identical solution and report files")


def test_criterion_9_hop_matrix_equivalence():
    rng = random.Random(0xACCE9)
    for trial in range(100):
        k = rng.randrange(2, 65)
        links = set()
        nodes = list(range(k))
        rng.shuffle(nodes)
        for i in range(1, k):
            a, b = nodes[i], nodes[rng.randrange(i)]
            links.add((min(a, b), max(a, b)))
        for _ in range(rng.randrange(0, 2 * k)):
            a, b = rng.randrange(k), rng.randrange(k)
            if a != b:
                links.add((min(a, b), max(a, b)))
        t = MfsTopology([ResourceVector([1])] * k, sorted(links))
        hm = compute_hop_matrix(t)
        adj = np.zeros((k, k))
        for a, b in t.links:
            adj[a][b] = adj[b][a] = 1
        fw = floyd_warshall(adj, directed=False, unweighted=True)
        assert (hm.as_array() == fw.astype(np.int64)).all(), f"trial {trial}"
    ok(9, "BFS hop matrices equal Floyd-Warshall on 100 random topologies (K<=64)")


def _crafted_hop_state():
    """Path of 4 FPGAs with a 3-hop crossing; valid and io-active."""
    from mfspart.model import Hypergraph

    h = Hypergraph.build(
        [[1]] * 6,
        [(2, 0, [5]), (1, 1, [2, 3]), (1, 4, [5])],
    )
    caps = [ResourceVector([100])] * 4
    t = MfsTopology(caps, [(0, 1), (1, 2), (2, 3)])
    hm = compute_hop_matrix(t)
    p = Placement([0, 1, 1, 2, 3, 3])
    assert validate(h, t, p, hm) == []
    return h, t, hm, p, report(h, t, p, hm)


def test_criterion_10_validator_completeness():
    rng = random.Random(0xACCE10)
    base_states = [_crafted_hop_state()]
    seed = 0
    while len(base_states) < 12:
        b = gen_instance(50_000 + seed, 18, 30, 4, 2, spare=0.6,
                         hub_fraction=0.2, hub_fanout=6, extra_links=0)
        seed += 1
        hm = compute_hop_matrix(b.topology)
        res = run_pipeline(b.hypergraph, b.topology, seed=seed,
                           assign_max_nodes=3000, n_seeds=1)
        if res.placement is None:
            continue
        rep = report(b.hypergraph, b.topology, res.placement, hm)
        base_states.append((b.hypergraph, b.topology, hm, res.placement, rep))
    hop_ready = [s for s in base_states if s[4].max_hop_used >= 2]
    io_ready = [s for s in base_states if any(x > 0 for x in s[4].fpga_io)]
    assert hop_ready and io_ready, "fuzz base states lack injectable shapes"
    kinds = ("resource", "io", "hop", "placement")
    done = {k: 0 for k in kinds}
    trials = 0
    attempts = 0
    while trials < 1_000:
        attempts += 1
        assert attempts < 20_000, f"fuzz loop stalled: {done}"
        kind = kinds[trials % 4]
        if kind == "hop":
            h, t, hm, p, rep = hop_ready[rng.randrange(len(hop_ready))]
        elif kind == "io":
            h, t, hm, p, rep = io_ready[rng.randrange(len(io_ready))]
        else:
            h, t, hm, p, rep = base_states[rng.randrange(len(base_states))]
        if kind == "resource":
            f = rng.randrange(t.k_fpgas)
            i = rng.randrange(t.num_resource_types)
            used = rep.fpga_usage[f][i]
            if used < 1:
                continue
            caps = [list(c.values) for c in t.capacities]
            caps[f][i] = used - 1
            t2 = MfsTopology([ResourceVector(c) for c in caps], t.links,
                             t.io_limits, t.hop_max)
            bad = validate(h, t2, p, hm)
        elif kind == "io":
            busy = [f for f in range(t.k_fpgas) if rep.fpga_io[f] > 0]
            if not busy:
                continue
            f = busy[rng.randrange(len(busy))]
            limits = list(t.io_limits)
            limits[f] = rep.fpga_io[f] - 1
            t2 = MfsTopology(t.capacities, t.links, limits, t.hop_max)
            bad = validate(h, t2, p, hm)
        elif kind == "hop":
            if rep.max_hop_used < 2:
                continue
            t2 = MfsTopology(t.capacities, t.links, t.io_limits,
                             rep.max_hop_used - 1)
            bad = validate(h, t2, p, hm)
        else:
            q = p.copy()
            v = rng.randrange(h.num_vertices)
            if rng.random() < 0.5:
                q.replicas[v].add(q.original[v])
            else:
                q.original[v] = t.k_fpgas + 3
            bad = validate(h, t, q, hm)
        assert bad, f"trial {trials}: injected {kind} violation not detected"
        assert {v.kind for v in bad} == {kind}, (
            f"trial {trials}: expected only {kind}, got {[v.kind for v in bad]}"
        )
        done[kind] += 1
        trials += 1
    assert all(c > 0 for c in done.values())
    ok(10, f"1000 single-violation injections all detected with the right kind {done}")
