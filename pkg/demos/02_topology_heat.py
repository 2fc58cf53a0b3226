"""Topological centrality: hop sums and heat values.

On a path of FPGAs the middle node is the cheapest place for busy logic;
the heat value formalizes that by dividing squared capacity mass by the
hop sum to everywhere else.
"""

from mfspart import MfsTopology, ResourceVector, compute_hop_matrix, hop_sum
from mfspart.assign import compute_heats

topo = MfsTopology(
    capacities=[ResourceVector([8]), ResourceVector([8]), ResourceVector([8]),
                ResourceVector([16]), ResourceVector([8])],
    links=[(0, 1), (1, 2), (2, 3), (3, 4)],
)
hm = compute_hop_matrix(topo)

for f in range(topo.k_fpgas):
    print(f"FPGA {f}: hop_sum={hop_sum(topo, hm, f)}")

from mfspart import Hypergraph

h = Hypergraph.build([[2], [1], [3]], [(2, 0, [1, 2]), (1, 2, [0])])
heats = compute_heats(h, topo, hm)
print("fpga heat:", [round(x, 2) for x in heats.fpga_heat])
print("node heat:", heats.node_heat)
print("note how FPGA 3 wins despite being off-center: capacity is squared")
