import csv

import pytest

from netprobe.cli import main


def run_cli(*args):
    return main([str(a) for a in args])


@pytest.fixture()
def graph_file(tmp_path):
    out = tmp_path / "ba.txt"
    assert run_cli("generate", "--oracle.model", "BA", "--oracle.N", 250, "--oracle.m", 2,
                   "--oracle.m0", 2, "--out", out) == 0
    return out


def test_generate_writes_edge_list(graph_file):
    lines = graph_file.read_text().splitlines()
    assert len(lines) == 1 + 248 * 2
    assert all(len(line.split()) == 2 for line in lines)


def test_sample_writes_node_and_edge_lists(graph_file, tmp_path):
    out = tmp_path / "s"
    assert run_cli("sample", "--oracle.model", "FILE", "--oracle.path", graph_file, "--out", out) == 0
    nodes = set((out / "sample_nodes.txt").read_text().split())
    edges = [line.split() for line in (out / "sample_edges.txt").read_text().splitlines()]
    assert edges and all(u in nodes and v in nodes for u, v in edges)


def test_run_report_and_config_echo(graph_file, tmp_path):
    common = ["--oracle.model", "FILE", "--oracle.path", graph_file, "--set", "run.budget=30",
              "--run.trials", 2]
    assert run_cli("run", *common, "--out", tmp_path / "htr", "--check") == 0
    assert run_cli("run", *common, "--policy.kind", "HIGH_DEGREE", "--out", tmp_path / "hd") == 0
    for name in ("results.csv", "weights.csv", "features.csv", "summary.csv", "config.ini"):
        assert (tmp_path / "htr" / name).exists()
    assert not (tmp_path / "hd" / "weights.csv").exists()
    assert "budget = 30" in (tmp_path / "htr" / "config.ini").read_text()

    # the echoed config reproduces the run byte for byte
    assert run_cli("run", "--config", tmp_path / "htr" / "config.ini", "--out", tmp_path / "again") == 0
    assert (tmp_path / "again" / "results.csv").read_bytes() == (tmp_path / "htr" / "results.csv").read_bytes()


def test_report_prints_gain(graph_file, tmp_path, capsys):
    common = ["--oracle.model", "FILE", "--oracle.path", graph_file, "--run.budget", 20, "--run.trials", 2]
    run_cli("run", *common, "--out", tmp_path / "a")
    run_cli("run", *common, "--policy.kind", "RANDOM", "--out", tmp_path / "b")
    capsys.readouterr()
    assert run_cli("report", tmp_path / "a" / "results.csv", tmp_path / "b" / "results.csv") == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert len(rows) == 1
    c_htr, c_base = float(rows[0]["c_htr"]), float(rows[0]["c_base"])
    assert float(rows[0]["gain_percent"]) == pytest.approx((c_htr - c_base) / c_base * 100)


def test_sweep_grid(graph_file, tmp_path):
    assert run_cli("sweep", "--oracle.model", "FILE", "--oracle.path", graph_file, "--run.budget", 15,
                   "--run.trials", 1, "--k-grid", "1,ln", "--eps-grid", "0.1,0.2c", "--out", tmp_path) == 0
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert [(r["k"], r["epsilon0"], r["decay"]) for r in rows] == [
        ("1", "0.1", "1"), ("1", "0.2", "0"), ("ln", "0.1", "1"), ("ln", "0.2", "0")]
    assert sum(r["best"] == "1" for r in rows) == 1


def test_errors_exit_with_status_2(tmp_path, capsys):
    assert run_cli("run", "--policy.kind", "BOGUS", "--out", tmp_path) == 2
    assert run_cli("run", "--set", "run.nosuch=1", "--out", tmp_path) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        run_cli("run", "--set", "novalue", "--out", tmp_path)
