import json
import os

import numpy as np
import pytest

from persist_test import io as pio
from persist_test.cli import main

from test_workflow import write_dataset


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def diagram_files(tmp_path):
    paths = {}
    for g, r in [("a", 1.0), ("b", 0.5), ("c", 1.0)]:
        for i in range(3):
            cloud = tmp_path / f"{g}{i}.csv"
            assert run("sample", "--kind", "circle", "--radii", r, "--n", 10, "--sigma", 0.05, "--seed", 10 * i + ord(g),
                       "--out", cloud) == 0
            out = tmp_path / f"d_{g}{i}.csv"
            assert run("diagram", cloud, "--r-max", 2.5, "--out", out) == 0
            paths.setdefault(g, []).append(str(out))
    return paths


class TestSample:
    def test_wedge(self, tmp_path):
        out = tmp_path / "w.csv"
        assert run("sample", "--kind", "wedge", "--radii", "1,1", "--n", 60, "--sigma", 0.3333, "--seed", 7, "--out", out) == 0
        assert pio.read_cloud(out).shape == (60, 2)

    def test_input_error_exit_code(self, tmp_path, capsys):
        assert run("sample", "--kind", "wedge", "--radii", "1", "--n", 5, "--out", tmp_path / "x.csv") == 2
        assert "error" in capsys.readouterr().err


class TestDiagram:
    def test_dimensions(self, tmp_path):
        cloud = tmp_path / "c.csv"
        run("sample", "--kind", "circle", "--n", 12, "--out", cloud)
        out = tmp_path / "d.csv"
        assert run("diagram", cloud, "--out", out) == 0
        dgs = pio.read_diagrams(out)
        assert set(dgs) == {0, 1}
        assert len(dgs[1]) == 1

    def test_precomputed(self, tmp_path):
        X = np.random.default_rng(0).normal(size=(6, 2))
        D = np.linalg.norm(X[:, None] - X[None], axis=2)
        pio.write_cloud(tmp_path / "x.csv", X)
        pio.write_cloud(tmp_path / "D.csv", D)
        run("diagram", tmp_path / "x.csv", "--r-max", 3, "--out", tmp_path / "a.csv")
        run("diagram", tmp_path / "D.csv", "--precomputed", "--r-max", 3, "--out", tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()

    def test_resource_exit_code(self, tmp_path):
        X = np.random.default_rng(0).normal(size=(400, 2))
        pio.write_cloud(tmp_path / "x.csv", X)
        assert run("diagram", tmp_path / "x.csv", "--hom-dim", 2, "--out", tmp_path / "d.csv") == 3


class TestDistanceAndTest:
    def test_pipeline(self, tmp_path, diagram_files, capsys):
        files = diagram_files["a"] + diagram_files["b"]
        assert run("distance", *files, "--out", tmp_path / "m.csv") == 0
        ids, D = pio.read_distance_matrix(tmp_path / "m.csv")
        assert ids == ["d_a0", "d_a1", "d_a2", "d_b0", "d_b1", "d_b2"]
        capsys.readouterr()
        assert run("test", "--group", "A=" + ",".join(diagram_files["a"]), "--group", "B=" + ",".join(diagram_files["b"])) == 0
        direct = json.loads(capsys.readouterr().out)
        assert run("test", "--distances", tmp_path / "m.csv", "--group", "A=d_a0,d_a1,d_a2", "--group", "B=d_b0,d_b1,d_b2") == 0
        via_matrix = json.loads(capsys.readouterr().out)
        assert direct["p_value"] == via_matrix["p_value"] == 0.1
        assert set(direct) >= {"statistic", "p_value", "replicates", "mode", "seed", "groups", "pairwise"}

    def test_posthoc_and_null_dump(self, tmp_path, diagram_files):
        out = tmp_path / "r.json"
        groups = [f"--group={g}=" + ",".join(p) for g, p in diagram_files.items()]
        assert run("test", *groups, "--posthoc", "always", "--dump-null", tmp_path / "null.csv", "--out", out) == 0
        rep = json.loads(out.read_text())
        assert [p["pair"] for p in rep["pairwise"]] == [["a", "b"], ["a", "c"], ["b", "c"]]
        assert (tmp_path / "null.csv").read_text().count("\n") == 1 + rep["replicates"]

    def test_bad_group_spec(self, diagram_files):
        assert run("test", "--group", "A", "--group", "B=x") == 2


class TestSimulate:
    def test_config(self, tmp_path):
        cfg = tmp_path / "s.toml"
        cfg.write_text(
            'name = "t"\ntrials = 2\nn_perms = 100\nclouds_per_group = 3\n'
            '[[spaces]]\nkind = "circle"\nlabel = "a"\npoints = 8\n'
            '[[spaces]]\nkind = "wedge"\nradii = [0.5, 0.5]\nlabel = "b"\npoints = 8\n'
        )
        assert run("simulate", "--config", cfg, "--out", tmp_path / "rep", "--quiet") == 0
        assert sorted(os.listdir(tmp_path / "rep")) == ["config.json", "pvalues.csv", "report.csv", "tables.txt"]

    def test_needs_one_source(self, tmp_path):
        assert run("simulate", "--out", tmp_path / "rep") == 2


class TestDataCommands:
    @pytest.fixture
    def data(self, tmp_path):
        return write_dataset(tmp_path / "data.csv", {"normal": 60, "suspect": 30, "pathologic": 24}, [1, 1, 3])

    def test_analyze_and_rerun_from_rows(self, tmp_path, data):
        common = ["--input", data, "--header", "--features", "f1,f2,f3", "--group-column", "status"]
        assert run("analyze", *common, "--clouds", 4, "--points", 6, "--out", tmp_path / "a") == 0
        rep = json.loads((tmp_path / "a" / "report.json").read_text())
        assert rep["replicates"] == 34650
        assert run("analyze", *common, "--rows-from", tmp_path / "a" / "report.json", "--out", tmp_path / "b") == 0
        assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()

    def test_standardize_recorded(self, tmp_path, data):
        common = ["--input", data, "--header", "--features", "f1,f2", "--group-column", "status"]
        assert run("analyze", *common, "--standardize", "--clouds", 2, "--points", 5, "--out", tmp_path / "s") == 0
        assert json.loads((tmp_path / "s" / "report.json").read_text())["config"]["standardized"] is True

    def test_representativeness_then_analyze(self, tmp_path, data):
        common = ["--input", data, "--header", "--features", "f1,f2,f3", "--group-column", "status"]
        assert run("representativeness", *common, "--group", "normal", "--spaces", 2, "--clouds", 4, "--points", 6,
                   "--trials", 3, "--n-perms", 200, "--out", tmp_path / "sel") == 0
        sel = json.loads((tmp_path / "sel" / "selection.json").read_text())
        assert len(sel["rows"]) == 24
        assert (tmp_path / "sel" / "trials.csv").read_text().count("\n") == 4
        assert run("analyze", *common, "--clouds", 4, "--points", 6, "--use-selection", tmp_path / "sel" / "selection.json",
                   "--out", tmp_path / "a") == 0
        rep = json.loads((tmp_path / "a" / "report.json").read_text())
        used = sorted(r for c in rep["clouds"] if c["group"] == "normal" for r in c["rows"])
        assert used == sorted(sel["rows"])

    def test_errors(self, tmp_path, data):
        common = ["--input", data, "--header", "--group-column", "status", "--out", tmp_path / "x"]
        assert run("analyze", *common, "--features", "f1,nope") == 2
        assert run("analyze", *common, "--features", "f1", "--clouds", 5, "--points", 6) == 2
        assert run("analyze", "--input", tmp_path / "missing.csv", "--features", "a", "--group-column", "g",
                   "--out", tmp_path / "x") == 2
