"""A first look at the data model and the objective.

Build a five-net circuit by hand, place it on a three-FPGA path, and watch
how the total hop distance responds to a replica.
"""

from mfspart import (
    Hypergraph,
    MfsTopology,
    Placement,
    ResourceVector,
    compute_hop_matrix,
    cut_size,
    report,
    total_hop_distance,
)

# A feeder vertex (0) drives a fanout cell (1); the fanout cell drives
# three consumers on a remote FPGA and one local consumer.
h = Hypergraph.build(
    [[1]] * 6,
    [
        (1, 0, [1]),  # feeder -> fanout cell
        (1, 1, [2]),
        (1, 1, [3]),
        (1, 1, [4]),
        (1, 1, [5]),  # local consumer
    ],
)

topo = MfsTopology(
    capacities=[ResourceVector([10])] * 3,
    links=[(0, 1), (1, 2)],
)
hm = compute_hop_matrix(topo)
print("hop matrix:", hm.dist)

p = Placement([1, 1, 2, 2, 2, 1])
print("THD before replication:", total_hop_distance(h, p, hm))
print("cut size before:", cut_size(h, p))

# Copy the fanout cell onto FPGA 2: its three remote consumers become
# local, and the price is delivering the feeder signal to the copy.
p.add_replica(1, 2)
print("THD after replicating vertex 1 onto FPGA 2:",
      total_hop_distance(h, p, hm))
print("cut size after:", cut_size(h, p))

print("\nfull report:")
print(report(h, topo, p).to_text())
