import random

import pytest

from mfspart.io import gen_instance
from mfspart.model import Hypergraph, Placement, ResourceVector
from mfspart.topology import MfsTopology, compute_hop_matrix


def path_topology(k, cap=100, types=1, io_limit=None, hop_max=None):
    caps = [ResourceVector([cap] * types) for _ in range(k)]
    links = [(i, i + 1) for i in range(k - 1)]
    limits = [io_limit] * k
    return MfsTopology(caps, links, limits, hop_max)


def ring_topology(k, cap=100, types=1):
    caps = [ResourceVector([cap] * types) for _ in range(k)]
    links = [(i, (i + 1) % k) for i in range(k)]
    return MfsTopology(caps, links)


def fanout_story(src_fpga):
    """Vertex 0 feeds vertex 1; vertex 1 feeds drains 2,3,4 on FPGA 2 and a
    local consumer 5 on its own FPGA 1.  Vertex 0 sits on `src_fpga`
    (path topology 0-1-2).  Replicating vertex 1 onto FPGA 2 makes the
    three fanout nets local at the cost of delivering the feeder net there."""
    h = Hypergraph.build(
        [[1]] * 6,
        [
            (1, 0, [1]),
            (1, 1, [2]),
            (1, 1, [3]),
            (1, 1, [4]),
            (1, 1, [5]),
        ],
    )
    t = path_topology(3, cap=100)
    p = Placement([src_fpga, 1, 2, 2, 2, 1])
    return h, t, p


def random_feasible_state(seed, n=24, m=48, k_fpgas=4, types=2, spare=0.6):
    """Generated instance plus a placement that passes validation."""
    from mfspart.cli import run_pipeline

    bundle = gen_instance(seed, n, m, k_fpgas, types, spare=spare)
    res = run_pipeline(
        bundle.hypergraph, bundle.topology, seed=seed, ops=("move", "exchange")
    )
    assert res.placement is not None
    return bundle.hypergraph, bundle.topology, res.placement


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
