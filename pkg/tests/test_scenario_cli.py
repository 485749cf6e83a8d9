import copy
import json

import numpy as np
import pytest

from hierdetect import cli, scenario
from hierdetect.exceptions import AssumptionViolation, ConfigError


def test_bundled_scenario_matches_example_parameters(example_cfg):
    s = example_cfg.model.subsystems[0]
    np.testing.assert_allclose(s.a_ii, [[1, 0.25], [-0.055, 0.995]])
    np.testing.assert_allclose(s.b_i, [[0], [0.05]])
    np.testing.assert_allclose(example_cfg.model.subsystems[1].neighbors[0], [[0.005, 0], [0, 0]])
    assert example_cfg.model.dt == 0.25 and example_cfg.controllers[0].rate == 0.955
    np.testing.assert_allclose(example_cfg.regulators[0].l, [[1.384]])
    assert example_cfg.monitor.safety_factor == pytest.approx(2.1506, abs=1e-4)
    assert example_cfg.attack.k_a == 16 and example_cfg.attack.attacked == {0}


def _mutated(tree, fn):
    t = copy.deepcopy(tree)
    fn(t)
    return t


def test_missing_field_is_named(example_tree):
    t = _mutated(example_tree, lambda t: t["model"]["subsystems"][0].pop("b_i"))
    with pytest.raises(ConfigError, match=r"model\.subsystems\[0\]\.b_i"):
        scenario.parse_scenario(t)


def test_destabilizing_gain_is_assumption_violation(example_tree):
    t = _mutated(example_tree, lambda t: t["control"]["subsystems"][2].update(k=[[0.0, 0.0]]))
    with pytest.raises(AssumptionViolation, match="subsystem 2"):
        scenario.parse_scenario(t)


def test_rate_below_spectral_radius(example_tree):
    t = _mutated(example_tree, lambda t: t["control"]["subsystems"][0].update(b=0.9))
    with pytest.raises(AssumptionViolation, match="spectral radius"):
        scenario.parse_scenario(t)


@pytest.mark.parametrize("bad", [0, -3])
def test_horizon_must_be_positive(example_tree, bad):
    with pytest.raises(ConfigError, match="horizon"):
        scenario.parse_scenario(_mutated(example_tree, lambda t: t.update(horizon=bad)))


def test_wrong_types(example_tree):
    with pytest.raises(ConfigError):
        scenario.parse_scenario(_mutated(example_tree, lambda t: t.update(horizon="ten")))
    with pytest.raises(ConfigError):
        scenario.parse_scenario(_mutated(example_tree, lambda t: t["monitor"].update(safety_factor="big")))


def test_read_tree_errors(tmp_path):
    with pytest.raises(ConfigError, match="no such"):
        scenario.read_tree(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        scenario.read_tree(bad)


def test_cli_validate_only(capsys):
    assert cli.main(["paper_example", "--validate-only"]) == 0
    assert "ok" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path, example_tree):
    assert cli.main([str(tmp_path / "nope.json")]) == cli.EXIT_CONFIG
    t = _mutated(example_tree, lambda t: t["control"]["subsystems"][0].update(k=[[0.0, 0.0]]))
    p = tmp_path / "unstable.json"
    p.write_text(json.dumps(t))
    assert cli.main([str(p)]) == cli.EXIT_ASSUMPTION
    assert cli.main(["paper_example", "--project", "0:9", "--validate-only"]) == cli.EXIT_CONFIG
    with pytest.raises(SystemExit):
        cli.main(["paper_example", "--project", "zero"])


def test_cli_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    code = cli.main(["paper_example", "--no-if", "--horizon-override", "40", "--seed", "3",
                     "--out-dir", str(out), "--project", "2:6", "--project", "0:1"])
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["detection.csv", "projection_0_1.csv", "projection_2_6.csv", "summary.json", "timeseries.csv"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["horizon"] == 40 and summary["seed"] == 3
    assert "first detection" in capsys.readouterr().out


def test_cli_reports_lp_failure(monkeypatch, tmp_path):
    from hierdetect import simulation
    from hierdetect.exceptions import LPError

    def boom(*a, **k):
        raise LPError("step 5: solver status 7")
    monkeypatch.setattr(simulation, "run", boom)
    assert cli.main(["paper_example", "--out-dir", str(tmp_path)]) == cli.EXIT_NUMERICAL
