"""End to end: generate an instance, partition it, check the answer.

The same flow is available from the shell:

    mfspart gen /tmp/demo --seed 3 --vertices 250 --edges 430 --fpgas 6
    mfspart partition /tmp/demo.hg /tmp/demo.topo -o /tmp/demo.sol --report /tmp/demo.report
    mfspart evaluate /tmp/demo.hg /tmp/demo.topo /tmp/demo.sol
"""

from mfspart import compute_hop_matrix, gen_instance, report, validate
from mfspart.cli import run_pipeline
from mfspart.oracle import exhaustive_partition

bundle = gen_instance(3, 250, 430, 6, 2, spare=0.6,
                      hub_fraction=0.25, hub_fanout=12, driver_fraction=0.04)
h, topo = bundle.hypergraph, bundle.topology

res = run_pipeline(h, topo, seed=42, n_seeds=2,
                   assign_budget=16, assign_max_nodes=4000, n_final=48)
print("pipeline status:", res.status, " THD:", res.thd)
print("violations:", validate(h, topo, res.placement))
print(report(h, topo, res.placement).to_text())

# on tiny instances the exhaustive oracle confirms optimality
tiny = gen_instance(8, 9, 16, 3, 1, spare=0.4)
opt_p, opt_thd = exhaustive_partition(tiny.hypergraph, tiny.topology)
got = run_pipeline(tiny.hypergraph, tiny.topology, seed=1,
                   ops=("move", "exchange"))
print(f"tiny instance: solver {got.thd} vs exhaustive optimum {opt_thd}")
