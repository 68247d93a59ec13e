"""Command line: ``run``, ``sweep`` and ``replay``.

Exit status: 0 when every hard monitor passes, 1 on a monitor failure,
2 on a configuration error.
"""
from __future__ import annotations

import argparse
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .engine import (
    ReplayDivergence,
    SchedulerPolicy,
    SimulationConfig,
    epoch_frames,
    read_trace,
    replay,
    run,
    write_trace,
)
from .graph import GraphError, attach_doors, load_graph, random_connected_graph
from .verify import check_trace, compute_epochs, enumerate_mis, epoch_bound, hard_failures

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
DEFAULT_VISIBILITY = {"IND": 3, "MULTIND": 5}


class ConfigError(Exception):
    pass


def _bool(text: str) -> bool:
    return str(text).lower() in ("1", "true", "yes", "on")


def _resolve(args, settings: dict) -> dict:
    """Merge graph-file ``set`` lines with flags; flags win."""
    def pick(name, default, conv=str):
        flag = getattr(args, name, None)
        if flag is not None and flag is not False:
            return flag
        if name in settings:
            try:
                return conv(settings[name])
            except ValueError:
                raise ConfigError(f"bad value for {name}: {settings[name]!r}") from None
        return default

    opts = {
        "protocol": pick("protocol", "ind").upper(),
        "sched": pick("sched", "fsync").upper(),
        "seed": pick("seed", [0], lambda s: [int(x) for x in s.split(",")]),
        "visibility": pick("visibility", None, int),
        "unsafe": pick("unsafe", False, _bool),
        "max_ticks": pick("max_ticks", None, int),
        "max_delay": pick("max_delay", 5, int),
        "activation": pick("activation", "random"),
        "frames": pick("frames", False, _bool),
    }
    if opts["protocol"] not in DEFAULT_VISIBILITY:
        raise ConfigError(f"unknown protocol {opts['protocol']!r}")
    if opts["sched"] not in ("FSYNC", "SSYNC", "ASYNC"):
        raise ConfigError(f"unknown scheduler {opts['sched']!r}")
    z = opts["visibility"]
    if z is not None and z < DEFAULT_VISIBILITY[opts["protocol"]] and not opts["unsafe"]:
        raise ConfigError(
            f"visibility {z} is below the {opts['protocol']} default of "
            f"{DEFAULT_VISIBILITY[opts['protocol']]}; pass --unsafe to allow it"
        )
    return opts


def _write_reports(path: Path, reports) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")


def _summary_row(out, reports, n, seed) -> list:
    failed = [r.name for r in hard_failures(reports)]
    return [n, seed, out.m, out.epochs, epoch_bound(out.m), int(out.terminated), out.collision_count,
            "pass" if not failed else "fail:" + ",".join(failed)]


SUMMARY_HEADER = ["n", "seed", "m", "epochs", "ind_bound", "terminated", "collisions", "status"]


def _write_tsv(path: Path, header, rows, footer=()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(str(x) for x in row) + "\n")
        for line in footer:
            fh.write(f"# {line}\n")


def cmd_run(args) -> int:
    path = Path(args.graph)
    if not path.is_file():
        raise ConfigError(f"graph file not found: {path}")
    try:
        g, doors, settings = load_graph(path)
    except GraphError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    opts = _resolve(args, settings)
    out_dir = Path(args.out)
    seeds = opts["seed"]
    cfg = SimulationConfig(
        protocol=opts["protocol"], visibility=opts["visibility"],
        max_ticks=opts["max_ticks"], max_delay=opts["max_delay"],
    )
    status = EXIT_OK
    rows = []
    for seed in seeds:
        dest = out_dir if len(seeds) == 1 else out_dir / f"seed-{seed}"
        dest.mkdir(parents=True, exist_ok=True)
        policy = SchedulerPolicy(kind=opts["sched"], activation=opts["activation"], seed=seed)
        out = run(g, doors, policy, cfg)
        reports = check_trace(out.trace, g, doors, cfg.protocol)
        write_trace(out.trace, dest / "trace.jsonl")
        _write_reports(dest / "report.jsonl", reports)
        if opts["frames"]:
            frames = dest / "frames"
            frames.mkdir(exist_ok=True)
            for i, dot in enumerate(epoch_frames(out.trace, g, doors)):
                (frames / f"epoch-{i}.dot").write_text(dot)
        rows.append(_summary_row(out, reports, g.n, seed))
        failed = hard_failures(reports)
        for r in failed:
            print(f"seed {seed}: FAIL {r.name}: {r.first_violation}", file=sys.stderr)
        print(f"seed {seed}: m={out.m} epochs={out.epochs} {out.reason} {'pass' if not failed else 'fail'}")
        if failed:
            status = EXIT_FAIL
    _write_tsv(out_dir / "summary.tsv", SUMMARY_HEADER, rows)
    return status


def _sweep_one(job):
    n, seed, max_deg, k, protocol, sched = job
    rng = random.Random(f"{n}:{seed}")
    h = random_connected_graph(n, max_deg, rng.randrange(2**32))
    anchors = rng.sample(range(n), k)
    g, doors = attach_doors(h, anchors)
    cfg = SimulationConfig(protocol=protocol)
    out = run(g, doors, SchedulerPolicy(kind=sched, seed=seed), cfg)
    reports = check_trace(out.trace, g, doors, protocol)
    oracle = "skipped"
    if g.n <= 20 and out.terminated:
        oracle = "member" if frozenset(out.final_occupied) in enumerate_mis(g) else "absent"
    row = _summary_row(out, reports, n, seed)
    if oracle == "absent":
        row[-1] = "fail:oracle" if row[-1] == "pass" else row[-1] + ",oracle"
    return row + [oracle]


def cmd_sweep(args) -> int:
    if args.n_min > args.n_max or args.n_min < 1:
        raise ConfigError(f"empty n range [{args.n_min}, {args.n_max}]")
    if args.doors < 1 or args.doors > args.n_min:
        raise ConfigError(f"cannot place {args.doors} doors on graphs with {args.n_min} vertices")
    if args.seeds < 1:
        raise ConfigError("--seeds must be >= 1")
    protocol = (args.protocol or ("ind" if args.doors == 1 else "multind")).upper()
    sched = (args.sched or "ssync").upper()
    if protocol not in DEFAULT_VISIBILITY:
        raise ConfigError(f"unknown protocol {protocol!r}")
    if sched not in ("FSYNC", "SSYNC", "ASYNC"):
        raise ConfigError(f"unknown scheduler {sched!r}")
    jobs = [(n, s, args.max_deg, args.doors, protocol, sched)
            for n in range(args.n_min, args.n_max + 1) for s in range(args.seeds)]
    try:
        if args.workers > 1:
            with ProcessPoolExecutor(args.workers) as pool:
                rows = list(pool.map(_sweep_one, jobs))
        else:
            rows = [_sweep_one(j) for j in jobs]
    except GraphError as exc:
        raise ConfigError(str(exc)) from None
    rows.sort(key=lambda r: (r[0], r[1]))
    const = max((r[3] / (r[2] * r[2]) for r in rows if r[2]), default=0.0)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    footer = [f"protocol\t{protocol}", f"sched\t{sched}", f"max_epochs_over_m2\t{const:.4f}"]
    _write_tsv(out_dir / "summary.tsv", SUMMARY_HEADER + ["oracle"], rows, footer)
    failures = [r for r in rows if r[-2] != "pass"]
    print(f"{len(rows)} runs, {len(failures)} failing; max epochs/m^2 = {const:.4f}")
    return EXIT_FAIL if failures else EXIT_OK


def cmd_replay(args) -> int:
    tpath, gpath = Path(args.trace), Path(args.graph)
    for p in (tpath, gpath):
        if not p.is_file():
            raise ConfigError(f"file not found: {p}")
    try:
        g, doors, _ = load_graph(gpath)
        trace = read_trace(tpath)
    except (GraphError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load inputs: {exc}") from None
    if not trace or trace[0].kind != "Meta":
        raise ConfigError("trace has no Meta header")
    meta = trace[0].detail
    cfg = SimulationConfig(protocol=meta["protocol"], visibility=meta["visibility"], max_delay=meta["max_delay"])
    try:
        same = replay(trace, g, doors, cfg, strict=True)
    except ReplayDivergence as exc:
        print(f"replay diverged: {exc}")
        return EXIT_FAIL
    print("replay identical" if same else "replay diverged")
    return EXIT_OK if same else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="misfill", description="Simulate and verify MIS filling by luminous robots.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="simulate one graph file and check the trace")
    r.add_argument("--graph", required=True)
    r.add_argument("--protocol", choices=["ind", "multind"])
    r.add_argument("--sched", choices=["fsync", "ssync", "async"])
    r.add_argument("--seed", type=int, nargs="+")
    r.add_argument("--visibility", type=int)
    r.add_argument("--unsafe", action="store_true", help="allow visibility below the protocol default")
    r.add_argument("--frames", action="store_true", help="write one DOT frame per epoch")
    r.add_argument("--max-ticks", dest="max_ticks", type=int)
    r.add_argument("--max-delay", dest="max_delay", type=int)
    r.add_argument("--activation", choices=["random", "roundrobin"])
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run random graphs over a size range")
    s.add_argument("--n-min", dest="n_min", type=int, required=True)
    s.add_argument("--n-max", dest="n_max", type=int, required=True)
    s.add_argument("--max-deg", dest="max_deg", type=int, default=5)
    s.add_argument("--doors", type=int, default=1)
    s.add_argument("--seeds", type=int, default=5)
    s.add_argument("--protocol", choices=["ind", "multind"])
    s.add_argument("--sched", choices=["fsync", "ssync", "async"])
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replay", help="re-execute a trace and compare")
    p.add_argument("--trace", required=True)
    p.add_argument("--graph", required=True)
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
