import itertools
import random

import pytest

from mfspart.io import gen_instance
from mfspart.metrics import total_hop_distance, validate
from mfspart.model import Hypergraph, Placement, ResourceVector
from mfspart.oracle import (
    best_single_replication,
    exhaustive_partition,
    full_gain_recompute,
)
from mfspart.refine import Op
from mfspart.topology import MfsTopology, compute_hop_matrix

from conftest import fanout_story, path_topology


def test_single_vertex_all_feasible():
    h = Hypergraph.build([[1]], [])
    t = path_topology(3, cap=5)
    p, thd = exhaustive_partition(h, t)
    assert thd == 0
    assert p.original == [0]  # lexicographically smallest among ties


def test_two_vertex_nine_case_table():
    h = Hypergraph.build([[1], [1]], [(2, 0, [1])])
    t = path_topology(3, cap=5)
    hm = compute_hop_matrix(t)
    # hand enumeration of all nine assignments
    best = None
    for a0 in range(3):
        for a1 in range(3):
            cost = 2 * hm.dist[a0][a1]
            if best is None or cost < best[0]:
                best = (cost, [a0, a1])
    p, thd = exhaustive_partition(h, t, hm)
    assert thd == best[0] == 0
    assert p.original == best[1] == [0, 0]


def test_two_vertex_forced_split():
    h = Hypergraph.build([[1], [1]], [(2, 0, [1])])
    t = path_topology(3, cap=1)
    p, thd = exhaustive_partition(h, t)
    assert thd == 2
    assert p.original == [0, 1]  # lex smallest of the optimal splits


def test_infeasible_returns_none():
    h = Hypergraph.build([[9]], [])
    t = path_topology(2, cap=5)
    assert exhaustive_partition(h, t) == (None, None)


def test_guard_refuses_huge_enumeration():
    h = Hypergraph.build([[1]] * 30, [])
    t = path_topology(4, cap=100)
    with pytest.raises(ValueError, match="refusing"):
        exhaustive_partition(h, t)


def test_oracle_agrees_with_pure_python_brute_force():
    for seed in range(8):
        b = gen_instance(seed, 5, 9, 3, 1, spare=0.3, io_limit=30, hop_max=2)
        h, t = b.hypergraph, b.topology
        hm = compute_hop_matrix(t)
        best = None
        for asg in itertools.product(range(t.k_fpgas), repeat=h.num_vertices):
            p = Placement(list(asg))
            if validate(h, t, p, hm):
                continue
            cost = total_hop_distance(h, p, hm)
            if best is None or cost < best[0]:
                best = (cost, list(asg))
        got_p, got_thd = exhaustive_partition(h, t, hm)
        if best is None:
            assert got_p is None and got_thd is None
        else:
            assert got_thd == best[0]
            assert got_p.original == best[1]
            assert validate(h, t, got_p, hm) == []


def test_oracle_deterministic():
    b = gen_instance(4, 7, 12, 3, 1)
    a = exhaustive_partition(b.hypergraph, b.topology)
    c = exhaustive_partition(b.hypergraph, b.topology)
    assert a[1] == c[1]
    assert a[0].original == c[0].original


def test_chunking_does_not_change_result():
    b = gen_instance(6, 8, 14, 3, 1)
    a = exhaustive_partition(b.hypergraph, b.topology, chunk=64)
    c = exhaustive_partition(b.hypergraph, b.topology, chunk=1 << 15)
    assert a[1] == c[1] and a[0].original == c[0].original


def test_best_single_replication_story():
    h, t, p = fanout_story(src_fpga=1)
    hm = compute_hop_matrix(t)
    assert best_single_replication(h, p, hm, t) == (1, 2, 2)


def test_best_single_replication_skips_saturated_fpga():
    h = Hypergraph.build([[1], [1]], [(1, 0, [1])])
    caps = [ResourceVector([2]), ResourceVector([1])]
    t = MfsTopology(caps, [(0, 1)])
    hm = compute_hop_matrix(t)
    p = Placement([0, 1])  # FPGA 1 is full
    best = best_single_replication(h, p, hm, t)
    # replicating vertex 0 onto FPGA 1 would be the win but cannot fit;
    # the only feasible replication is vertex 1 onto FPGA 0
    assert best == (1, 0, 0)


def test_full_gain_recompute_noop_and_inverse():
    h, t, p = fanout_story(src_fpga=1)
    hm = compute_hop_matrix(t)
    g_rep = full_gain_recompute(h, p, hm, Op("replicate", 1, 2))
    q = p.copy()
    q.add_replica(1, 2)
    g_del = full_gain_recompute(h, q, hm, Op("delete", 1, 2))
    assert g_rep + g_del == 0
    assert g_rep == 2
    # a move back onto its own FPGA changes nothing
    assert full_gain_recompute(h, p, hm, Op("move", 0, p.original[0])) == 0
