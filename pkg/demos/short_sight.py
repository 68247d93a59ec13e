"""Why a chain needs to see three hops: a Door on an odd cycle.

With visibility 2 the leader cannot see the tail of its own chain when it comes
around the cycle, and two robots end up on adjacent vertices.  With visibility
3 the same schedules all finish on a maximal independent set.
"""
from misfill import SchedulerPolicy, SimulationConfig, attach_doors, build_graph, run
from misfill.verify import is_independent, is_maximal_independent

n = 9
cycle = build_graph([(i, 1, (i + 1) % n, 2) for i in range(n)])
g, doors = attach_doors(cycle, [0])

for z in (2, 3):
    for kind in ("FSYNC", "SSYNC", "ASYNC"):
        out = run(g, doors, SchedulerPolicy(kind=kind, seed=1), SimulationConfig(visibility=z))
        final = out.final_occupied
        print(f"z={z} {kind:5s} occupied={sorted(final)} "
              f"independent={is_independent(g, final)} maximal={is_maximal_independent(g, final)}")
