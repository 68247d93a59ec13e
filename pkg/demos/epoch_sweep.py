"""Random connected graphs, one or more Doors, and the measured epoch counts.

Prints one line per graph size with the worst epochs / m^2 seen, where m is the
number of robots placed.  Run with ``python demos/epoch_sweep.py [doors]``.
"""
import random
import sys

from misfill import SchedulerPolicy, SimulationConfig, attach_doors, random_connected_graph, run
from misfill.verify import enumerate_mis, epoch_bound

k = int(sys.argv[1]) if len(sys.argv) > 1 else 1
protocol = "IND" if k == 1 else "MULTIND"

worst = 0.0
for n in range(max(3, k), 13):
    ratios = []
    for seed in range(10):
        rng = random.Random(f"{n}:{seed}")
        g, doors = attach_doors(random_connected_graph(n, 5, seed), rng.sample(range(n), k))
        out = run(g, doors, SchedulerPolicy(kind="SSYNC", seed=seed), SimulationConfig(protocol=protocol))
        assert frozenset(out.final_occupied) in enumerate_mis(g)
        ratios.append(out.epochs / out.m**2)
        if k == 1:
            assert out.epochs <= epoch_bound(out.m)
    worst = max(worst, max(ratios))
    print(f"n={n:2d}  mean epochs/m^2 {sum(ratios) / len(ratios):.2f}  max {max(ratios):.2f}")

print(f"{protocol}: every run ended on a maximal independent set; max epochs/m^2 = {worst:.2f}")
