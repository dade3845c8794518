import os

import numpy as np
import pytest

from persist_test import InputError, ScenarioConfig, SpaceSpec, TrialPlan, load_config, preset, run_scenario, run_trial
from persist_test.simulation import PRESETS, percent_significant

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def tiny(seed=0, trials=3, posthoc="never", **kw):
    specs = [SpaceSpec("circle", [1.0], label="a"), SpaceSpec("circle", [0.5], label="b"),
             SpaceSpec("wedge", [0.5, 0.5], label="c")]
    return ScenarioConfig(TrialPlan(specs, 3, 8, seed), trials=trials, n_perms=200, posthoc=posthoc, **kw)


class TestConfig:
    def test_r_max_rule(self):
        assert tiny().resolved_r_max() == pytest.approx(1.1 * 2.0)
        assert tiny(r_max=3.0).resolved_r_max() == 3.0

    @pytest.mark.parametrize("kw", [dict(trials=0), dict(alpha=1.0), dict(posthoc="sometimes"), dict(r_max=-1.0),
                                    dict(sweep={"points_per_cloud": [0]})])
    def test_invalid(self, kw):
        with pytest.raises(InputError):
            tiny(**kw)

    def test_cells(self):
        cfg = tiny(sweep={"points_per_cloud": [6, 12], "noise_sigma": [0.0, 0.5]})
        assert cfg.cells() == [([6] * 3, 0.0), ([6] * 3, 0.5), ([12] * 3, 0.0), ([12] * 3, 0.5)]

    @pytest.mark.parametrize("name", sorted(os.listdir(CONFIGS)))
    def test_shipped_configs_load(self, name):
        cfg = load_config(os.path.join(CONFIGS, name))
        assert len(cfg.plan.specs) == 3

    def test_round_trip(self):
        cfg = load_config(os.path.join(CONFIGS, "wedges_unit.toml"))
        again = ScenarioConfig.from_dict(cfg.to_dict())
        assert again.to_dict() == cfg.to_dict()

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text('bogus = 1\n[[spaces]]\nkind = "circle"\npoints = 5\n[[spaces]]\nkind = "circle"\nlabel="b"\npoints = 5\n')
        with pytest.raises(InputError):
            load_config(path)

    def test_bad_toml(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("trials = \n")
        with pytest.raises(InputError):
            load_config(path)

    @pytest.mark.parametrize("name", PRESETS)
    def test_presets(self, name):
        cfg = preset(name, desk=True)
        assert cfg.trials == 20 and cfg.n_perms == 2000


class TestRun:
    def test_trial_deterministic(self):
        cfg = tiny(posthoc="always")
        a = run_trial(cfg.plan, cfg, 1)
        b = run_trial(cfg.plan, cfg, 1)
        assert a == b
        assert set(a.posthoc) == {"a vs b", "a vs c", "b vs c"}

    def test_gated(self):
        cfg = tiny(posthoc="gated", alpha=0.01)
        out = [run_trial(cfg.plan, cfg, t) for t in range(3)]
        assert all((o.posthoc is not None) == (o.p_value <= 0.01) for o in out)

    def test_report_bytes_reproducible(self, tmp_path):
        cfg = tiny(posthoc="always", sweep={"points_per_cloud": [6, 8], "noise_sigma": [0.0, 0.1]})
        run_scenario(cfg).write(tmp_path / "one")
        run_scenario(cfg).write(tmp_path / "two")
        for name in ["report.csv", "pvalues.csv", "tables.txt", "config.json"]:
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()

    def test_report_contents(self):
        rep = run_scenario(tiny(posthoc="always", sweep={"points_per_cloud": [6], "noise_sigma": [0.0]}))
        rows = rep.rows()
        assert len(rows) == 4
        assert all(0 <= float(r["percent_significant"]) <= 100 for r in rows)
        assert len(rep.cells[0].outcomes) == 3
        assert rep.pvalues_csv().count("\n") == 1 + 3 * 4
        assert "Sample Size" in rep.text_table()

    def test_single_trial_all_or_nothing(self):
        rep = run_scenario(tiny(trials=1))
        assert rep.cells[0].percent(0.05) in (0.0, 100.0)

    def test_failing_cell_does_not_abort(self):
        # a single-point cloud cannot be split over two wedge components
        cfg = tiny(sweep={"points_per_cloud": [1, 6], "noise_sigma": [0.0]})
        rep = run_scenario(cfg)
        assert rep.cells[0].error and "trial 0" in rep.cells[0].error
        assert rep.cells[1].error is None and len(rep.cells[1].outcomes) == 3

    def test_parallel_matches_serial(self):
        cfg = tiny()
        assert run_scenario(cfg, n_jobs=2).to_csv() == run_scenario(cfg).to_csv()


def test_percent_significant():
    assert percent_significant([0.01, 0.05, 0.2, 0.5]) == 50.0


@pytest.mark.slow
def test_wedge_power_grows_with_sample_size():
    cfg = preset("wedges-unit", desk=True)
    cfg.sweep = {"points_per_cloud": [12, 24, 48], "noise_sigma": [0.0]}
    cfg.posthoc = "never"
    pct = [c.percent(0.05) for c in run_scenario(cfg).cells]
    assert pct[1] >= pct[0] - 10 and pct[2] >= pct[1] - 10
