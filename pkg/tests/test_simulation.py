import ast
import csv
import json
from pathlib import Path

import numpy as np
import pytest

import hierdetect
from hierdetect import simulation


def test_nominal_run_has_no_detection(nominal_run):
    s = nominal_run.summary()
    assert s["detection_steps"] == 0
    assert s["containment_violations_d_s"] == [] and s["containment_violations_e_ell"] == []


def test_attacked_run_pattern(attacked_run):
    empty = attacked_run.empty
    t = np.arange(len(empty)) * 0.25
    assert not empty[t <= 4].any()
    assert empty[(t > 4) & (t <= 20)].any()
    # after the sign flip the detector briefly loses the attack, then regains it
    first = int(np.argmax(empty))
    gap = np.flatnonzero(~empty[first:])
    assert gap.size and empty[first + gap[-1] + 1:].all()


def test_transmitted_estimate_of_attacked_subsystem_is_nominal(attacked_run, nominal_run):
    np.testing.assert_allclose(attacked_run.d_hat_la[:, :2], nominal_run.d_hat_la[:, :2], atol=1e-8)


def test_emit_contract(tmp_path, attacked_run):
    files = simulation.emit(attacked_run, tmp_path)
    assert {p.name for p in files} >= {"timeseries.csv", "detection.csv", "summary.json"}
    with (tmp_path / "timeseries.csv").open() as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    assert header[:4] == ["k", "t_seconds", "x_0_0", "x_0_1"]
    assert header.index("eps_bar_0") < header.index("x_1_0")
    assert len(rows) - 1 == attacked_run.horizon
    with (tmp_path / "detection.csv").open() as fh:
        det = list(csv.DictReader(fh))
    assert len(det) == attacked_run.horizon
    assert all(r["witness_0"] == "" for r in det if r["empty"] == "1")
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["detection_steps"] == sum(r["empty"] == "1" for r in det)


def test_min_i_f_consistent(tmp_path, attacked_run_if):
    simulation.emit(attacked_run_if, tmp_path)
    with (tmp_path / "detection.csv").open() as fh:
        vals = [float(r["i_f"]) for r in csv.DictReader(fh)]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert min(vals) == summary["min_i_f"]


def test_projection_polygons(tmp_path, example_cfg):
    out = simulation.run(example_cfg, compute_if=False, projections=[(2, 6)])
    simulation.emit(out, tmp_path)
    with (tmp_path / "projection_2_6.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert {r["set"] for r in rows} == {"D_ell", "D_s"}
    assert {int(r["k"]) for r in rows} == set(range(example_cfg.horizon))


def _imports(path: Path) -> set:
    tree = ast.parse(path.read_text())
    names = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom) and node.level:
            names.update(a.name for a in node.names) if node.module is None else names.add(node.module)
    return names


@pytest.mark.parametrize("local_module", ["observer.py", "control.py", "model.py"])
def test_local_level_does_not_reach_supervisory_data(local_module):
    root = Path(hierdetect.__file__).parent
    assert not _imports(root / local_module) & {"monitor", "simulation", "scenario", "attack"}
