import csv
import json

import pytest

from misfill.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main
from misfill.engine import read_trace

PATH3 = "graph 3\nedge 0 1 1 1\nedge 1 2 2 1\ndoor 1 0\n"
ODD_CYCLE = "graph 7\n" + "".join(f"edge {i} 1 {(i + 1) % 7} 2\n" for i in range(7)) + "door 1 0\n"
TRIANGLE_OF_DOORS = "graph 3\nedge 0 1 1 2\nedge 1 1 2 2\nedge 2 1 0 2\ndoor 1 0\ndoor 2 1\ndoor 3 2\n"


@pytest.fixture
def graph_file(tmp_path):
    def write(text, name="g.txt"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


def reports(path):
    return [json.loads(line) for line in open(path / "report.jsonl")]


def summary(path):
    rows = [r for r in csv.reader(open(path / "summary.tsv"), delimiter="\t") if r and not r[0].startswith("#")]
    return [dict(zip(rows[0], r)) for r in rows[1:]]


def test_run_three_path_passes(graph_file, tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--graph", graph_file(PATH3), "--protocol", "ind", "--sched", "fsync",
                 "--seed", "1", "--frames", "--out", str(out)])
    assert code == EXIT_OK
    assert all(r["passed"] for r in reports(out) if r["hard"])
    assert (out / "trace.jsonl").is_file()
    assert any((out / "frames").glob("epoch-*.dot"))
    assert summary(out)[0]["status"] == "pass"


def test_short_sight_fails_the_run(graph_file, tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--graph", graph_file(ODD_CYCLE), "--sched", "fsync", "--seed", "1",
                 "--visibility", "2", "--unsafe", "--out", str(out)])
    assert code == EXIT_FAIL
    failed = {r["name"] for r in reports(out) if not r["passed"]}
    assert failed & {"final_mis", "no_adjacent_finished"}


def test_short_sight_needs_unsafe_flag(graph_file, tmp_path):
    code = main(["run", "--graph", graph_file(ODD_CYCLE), "--visibility", "2", "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG


def test_missing_graph_file(tmp_path):
    assert main(["run", "--graph", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_malformed_graph_file(graph_file, tmp_path):
    assert main(["run", "--graph", graph_file("graph 2\nbogus\n"), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_empty_size_range(tmp_path):
    assert main(["sweep", "--n-min", "6", "--n-max", "5", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_file_settings_apply_and_flags_win(graph_file, tmp_path):
    g = graph_file(PATH3 + "set sched ssync\nset seed 4\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--graph", g, "--out", str(a)]) == EXIT_OK
    assert main(["run", "--graph", g, "--sched", "fsync", "--out", str(b)]) == EXIT_OK
    assert read_trace(a / "trace.jsonl")[0].detail["sched"] == "SSYNC"
    assert summary(a)[0]["seed"] == "4"
    assert read_trace(b / "trace.jsonl")[0].detail["sched"] == "FSYNC"


def test_several_seeds_get_their_own_folders(graph_file, tmp_path):
    code = main(["run", "--graph", graph_file(ODD_CYCLE), "--sched", "async", "--seed", "1", "2", "3",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert [r["seed"] for r in summary(tmp_path)] == ["1", "2", "3"]
    assert all((tmp_path / f"seed-{s}" / "trace.jsonl").is_file() for s in (1, 2, 3))


def test_equal_runs_write_identical_traces(graph_file, tmp_path):
    g = graph_file(ODD_CYCLE)
    for name in ("a", "b"):
        assert main(["run", "--graph", g, "--sched", "ssync", "--seed", "7", "--out", str(tmp_path / name)]) == EXIT_OK
    assert (tmp_path / "a" / "trace.jsonl").read_bytes() == (tmp_path / "b" / "trace.jsonl").read_bytes()


def test_replay_round_trip(graph_file, tmp_path, capsys):
    g = graph_file(ODD_CYCLE)
    main(["run", "--graph", g, "--sched", "async", "--seed", "3", "--out", str(tmp_path / "r")])
    capsys.readouterr()
    assert main(["replay", "--trace", str(tmp_path / "r" / "trace.jsonl"), "--graph", g]) == EXIT_OK
    assert "replay identical" in capsys.readouterr().out


def test_replay_against_other_graph_fails(graph_file, tmp_path):
    main(["run", "--graph", graph_file(ODD_CYCLE), "--seed", "3", "--out", str(tmp_path / "r")])
    other = graph_file(PATH3, "other.txt")
    assert main(["replay", "--trace", str(tmp_path / "r" / "trace.jsonl"), "--graph", other]) == EXIT_FAIL


def test_sweep_writes_sorted_summary(tmp_path):
    code = main(["sweep", "--n-min", "3", "--n-max", "6", "--seeds", "3", "--workers", "2", "--out", str(tmp_path)])
    assert code == EXIT_OK
    rows = summary(tmp_path)
    assert [(int(r["n"]), int(r["seed"])) for r in rows] == [(n, s) for n in range(3, 7) for s in range(3)]
    assert all(r["status"] == "pass" and r["oracle"] == "member" for r in rows)
    assert all(int(r["epochs"]) <= int(r["ind_bound"]) for r in rows)
    footer = [line for line in open(tmp_path / "summary.tsv") if line.startswith("#")]
    assert any("max_epochs_over_m2" in line for line in footer)


def test_multi_door_sweep(tmp_path):
    code = main(["sweep", "--n-min", "4", "--n-max", "7", "--doors", "2", "--seeds", "2", "--out", str(tmp_path)])
    assert code == EXIT_OK


def test_triangle_of_doors_fills_only_strongest(graph_file, tmp_path):
    # each anchor sees the other two, so only the rank-1 chain enters the triangle
    code = main(["run", "--graph", graph_file(TRIANGLE_OF_DOORS), "--protocol", "multind", "--sched", "ssync",
                 "--seed", "0", "1", "2", "--out", str(tmp_path)])
    assert code == EXIT_OK
    for s in (0, 1, 2):
        trace = read_trace(tmp_path / f"seed-{s}" / "trace.jsonl")
        final = {}
        for ev in trace:
            if ev.kind in ("Spawn", "MoveEnd"):
                final[ev.robot] = ev.vertex
        anchors = {v for v in final.values() if v < 3}
        assert anchors == {0}
