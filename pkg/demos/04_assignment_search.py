"""Heat-guided DFS assignment with deep backtracking.

Hot nodes go first, onto hot FPGAs; the three pruning rules (cost bound,
I/O budget, capacity) keep the tree small, and the stall-triggered deep
backtrack jumps out of look-alike solution valleys.
"""

from mfspart import SearchBudget, compute_hop_matrix, gen_instance
from mfspart.assign import compute_heats, dfs_assign, parallel_assign
from mfspart.metrics import total_hop_distance, validate

bundle = gen_instance(5, 40, 70, 4, 2, spare=0.5)
h, topo = bundle.hypergraph, bundle.topology
hm = compute_hop_matrix(topo)

budget = SearchBudget(max_solutions=64, max_nodes=50_000, stall_delta=0.02, rho=0.3)
res = dfs_assign(h, topo, hm, budget)
print(f"single search: thd={res.thd} status={res.status} "
      f"solutions={res.solutions} nodes={res.nodes}")
print("violations:", validate(h, topo, res.placement, hm))

# a small portfolio of jittered node orders, deterministic reduction
multi = parallel_assign(h, topo, hm, budget, seeds=[1, 2, 3, 4])
print(f"portfolio of 4 seeds: thd={multi.thd} (nodes={multi.nodes})")
assert multi.thd <= res.thd or multi.thd == res.thd
