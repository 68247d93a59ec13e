"""Step through the smallest instance: a single vertex with one Door attached.

Run with ``python demos/door_path_walkthrough.py``.
"""
from misfill import SchedulerPolicy, attach_doors, build_graph, run
from misfill.engine import configuration_at

g, doors = attach_doors(build_graph([], n=1), [0])
d = doors.doors[0]
print(f"anchor {d.anchor}, buffer {d.buffer}, door {d.door}")

out = run(g, doors, SchedulerPolicy(kind="FSYNC"))

# every event the engine recorded, minus the per-cycle bookkeeping
for ev in out.trace:
    if ev.kind not in ("Meta", "Look", "ComputeDone"):
        print(ev.tick, ev.robot, ev.kind, ev.vertex, ev.detail)

# the configuration at the end of each round
for t in range(1, out.ticks + 1):
    print(t, dict(sorted(configuration_at(out.trace, t).items())))

print("final", sorted(out.final_occupied), "robots", out.m, "epochs", out.epochs)
