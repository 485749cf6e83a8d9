"""Scenario files: JSON trees describing plant, controllers, observers, monitor and attack.

Matrices are nested row lists. Subsystem indices are zero-based everywhere.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import attack as atk
from . import control, model, observer
from .exceptions import (
    AssumptionViolation,
    ConfigError,
    DestabilizingGainError,
    DimensionError,
    RegulatorError,
)
from .monitor import MonitorConfig
from .setops import BallTemplate

log = logging.getLogger(__name__)

SAFETY_AUTO = "auto"


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    projections: tuple = ()
    projection_steps: tuple | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    model: model.LssModel
    controllers: tuple
    schedule: control.ReferenceSchedule
    alphas: tuple
    x0: tuple
    eps0: tuple
    monitor: MonitorConfig
    attack: atk.AttackScenario
    output: OutputConfig
    horizon: int
    seed: int = 0
    compute_if: bool = True
    if_samples: int = 1000
    min_dwell: int = control.DEFAULT_MIN_DWELL
    max_step: float = control.DEFAULT_MAX_STEP
    regulators: tuple = field(default=(), compare=False)
    gain_reports: tuple = field(default=(), compare=False)

    def with_attack(self, scenario: atk.AttackScenario) -> "ScenarioConfig":
        return replace(self, attack=scenario)

    def nominal(self) -> "ScenarioConfig":
        return replace(self, attack=atk.AttackScenario.none())


def _get(tree, key, path, kind=None, default=...):
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in tree:
        if default is ...:
            raise ConfigError(f"{path}.{key}: required field is missing")
        return default
    val = tree[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"{path}.{key}: expected {getattr(kind, '__name__', kind)}")
    return val


def _matrix(val, path) -> np.ndarray:
    try:
        arr = np.atleast_2d(np.asarray(val, dtype=float))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: not a numeric matrix ({exc})") from None
    if arr.ndim != 2 or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{path}: expected a finite 2-D matrix")
    return arr


def _vector(val, path) -> np.ndarray:
    try:
        arr = np.asarray(val, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: not a numeric vector ({exc})") from None
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{path}: entries must be finite")
    return arr


def _segments(val, path, dim):
    if not isinstance(val, list):
        raise ConfigError(f"{path}: expected a list of [step, value] pairs")
    out = []
    for n, item in enumerate(val):
        if not (isinstance(item, list) and len(item) == 2 and isinstance(item[0], int)):
            raise ConfigError(f"{path}[{n}]: expected [step, value]")
        v = _vector(item[1], f"{path}[{n}][1]")
        if dim is not None and v.size != dim:
            raise ConfigError(f"{path}[{n}][1]: expected length {dim}, got {v.size}")
        out.append((item[0], v))
    return out


def _parse_model(tree) -> model.LssModel:
    subs_raw = _get(tree, "subsystems", "model", list)
    if not subs_raw:
        raise ConfigError("model.subsystems: at least one subsystem is required")
    subs = []
    for i, s in enumerate(subs_raw):
        p = f"model.subsystems[{i}]"
        nbrs_raw = _get(s, "neighbors", p, dict, {})
        try:
            nbrs = {int(j): _matrix(a, f"{p}.neighbors.{j}") for j, a in nbrs_raw.items()}
        except ValueError:
            raise ConfigError(f"{p}.neighbors: keys must be integer subsystem indices") from None
        try:
            subs.append(model.SubsystemModel(
                _matrix(_get(s, "a_ii", p), f"{p}.a_ii"),
                _matrix(_get(s, "b_i", p), f"{p}.b_i"),
                _matrix(_get(s, "c_i", p), f"{p}.c_i"),
                _matrix(_get(s, "q_i", p), f"{p}.q_i"),
                nbrs,
            ))
        except DimensionError as exc:
            raise ConfigError(f"{p}: {exc}") from None
    try:
        return model.LssModel(tuple(subs), float(_get(tree, "dt", "model", (int, float), 0.25)))
    except (ValueError, DimensionError) as exc:
        raise ConfigError(f"model: {exc}") from None


def _per_subsystem(val, count, path):
    if isinstance(val, list):
        if len(val) != count:
            raise ConfigError(f"{path}: expected {count} entries, got {len(val)}")
        return val
    return [val] * count


def _parse_attack(tree, mdl) -> atk.AttackScenario:
    if tree is None:
        return atk.AttackScenario.none()
    p = "attack"
    attacked = _get(tree, "attacked", p, list, [])
    for i in attacked:
        if not isinstance(i, int) or not 0 <= i < mdl.size:
            raise ConfigError(f"{p}.attacked: invalid subsystem index {i!r}")
    inputs = {}
    for key, seg in _get(tree, "input", p, dict, {}).items():
        i = int(key)
        inputs[i] = _segments(seg, f"{p}.input.{key}", mdl.subsystems[i].m)
    tampers = {}
    for key, seg in _get(tree, "tamper", p, dict, {}).items():
        i = int(key)
        tampers[i] = _segments(seg, f"{p}.tamper.{key}", mdl.subsystems[i].n)
    try:
        return atk.AttackScenario(
            attacked=frozenset(attacked),
            k_a=int(_get(tree, "k_a", p, int, 0)),
            input_segments=inputs,
            cover=_get(tree, "cover", p, str, atk.COVER_NONE),
            tamper_segments=tampers,
            knowledge=_get(tree, "knowledge", p, str, atk.KNOWLEDGE_GLOBAL),
        )
    except ValueError as exc:
        raise ConfigError(f"{p}: {exc}") from None


def parse_scenario(tree: dict, name: str = "scenario") -> ScenarioConfig:
    """Build a validated config from an already-parsed JSON tree."""
    if not isinstance(tree, dict):
        raise ConfigError("top level: expected an object")
    mdl = _parse_model(_get(tree, "model", "", dict))
    count = mdl.size
    horizon = _get(tree, "horizon", "", int)
    if horizon < 1:
        raise ConfigError(f"horizon: must be >= 1, got {horizon}")

    ctrl = _get(tree, "control", "", dict)
    ctrl_subs = _get(ctrl, "subsystems", "control", list)
    if len(ctrl_subs) != count:
        raise ConfigError(f"control.subsystems: expected {count} entries, got {len(ctrl_subs)}")
    gains, rates, eps0_cfg = [], [], []
    for i, c in enumerate(ctrl_subs):
        p = f"control.subsystems[{i}]"
        gains.append(_matrix(_get(c, "k", p), f"{p}.k"))
        rate = _get(c, "b", p, (int, float))
        if not 0 <= rate < 1:
            raise ConfigError(f"{p}.b: must lie in [0, 1), got {rate}")
        rates.append(float(rate))
        eps0_cfg.append(_get(c, "eps0", p, (int, float, type(None)), None))
    refs_raw = _get(ctrl, "references", "control", list, [[] for _ in range(count)])
    if len(refs_raw) != count:
        raise ConfigError(f"control.references: expected {count} schedules")
    try:
        schedule = control.ReferenceSchedule(
            tuple(_segments(r, f"control.references[{i}]", mdl.subsystems[i].q) for i, r in enumerate(refs_raw)),
            tuple(s.q for s in mdl.subsystems),
        )
    except ValueError as exc:
        raise ConfigError(f"control.references: {exc}") from None

    obs = _get(tree, "observer", "", dict, {})
    alphas = tuple(float(a) for a in _per_subsystem(
        _get(obs, "alpha", "observer", (int, float, list), observer.DEFAULT_ALPHA), count, "observer.alpha"))
    for i, a in enumerate(alphas):
        if not 0 < a <= 1:
            raise ConfigError(f"observer.alpha[{i}]: must lie in (0, 1], got {a}")

    x0_raw = tree.get("initial_state")
    if x0_raw is None:
        x0 = tuple(np.zeros(n) for n in mdl.dims)
    else:
        x0_list = _per_subsystem(x0_raw, count, "initial_state")
        x0 = tuple(_vector(v, f"initial_state[{i}]") for i, v in enumerate(x0_list))
        for i, v in enumerate(x0):
            if v.size != mdl.dims[i]:
                raise ConfigError(f"initial_state[{i}]: expected length {mdl.dims[i]}")

    mon = _get(tree, "monitor", "", dict, {})
    safety = _get(mon, "safety_factor", "monitor", (int, float, str), 1.0)
    if isinstance(safety, str) and safety != SAFETY_AUTO:
        raise ConfigError(f"monitor.safety_factor: expected a number or {SAFETY_AUTO!r}")
    try:
        template = BallTemplate(_get(mon, "template", "monitor", str, "box"),
                                int(_get(mon, "template_count", "monitor", int, 1)))
    except ValueError as exc:
        raise ConfigError(f"monitor.template: {exc}") from None

    out = _get(tree, "output", "", dict, {})
    projections = []
    for n, pair in enumerate(_get(out, "projections", "output", list, [])):
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, int) for v in pair)):
            raise ConfigError(f"output.projections[{n}]: expected [i, j]")
        projections.append(tuple(pair))
    proj_steps = out.get("projection_steps")

    # -- structural checks ------------------------------------------------
    problems = model.validate(mdl)
    regs, reports = [], []
    for i, s in enumerate(mdl.subsystems):
        try:
            regs.append(control.solve_regulator(s.a_ii, s.b_i, s.c_i, s.q_i, k=gains[i]))
        except RegulatorError as exc:
            problems.append(f"subsystem {i}: {exc}")
            continue
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                rep = control.validate_gain(s.a_ii, s.b_i, gains[i], rates[i], horizon=max(horizon, 200))
            for w in caught:
                # the automatic safety factor absorbs the transient overshoot
                log.log(logging.INFO if safety == SAFETY_AUTO else logging.WARNING, "subsystem %d: %s", i, w.message)
        except DestabilizingGainError as exc:
            problems.append(f"subsystem {i}: {exc}")
            continue
        if rates[i] < rep.spectral_radius:
            problems.append(f"subsystem {i}: rate b={rates[i]} is below the spectral radius {rep.spectral_radius:.4f}")
        reports.append(rep)
    if problems:
        raise AssumptionViolation(problems)
    for msg in schedule.check_limits(_get(ctrl, "min_dwell", "control", int, control.DEFAULT_MIN_DWELL),
                                     _get(ctrl, "max_step", "control", (int, float), control.DEFAULT_MAX_STEP)):
        log.warning(msg)

    if safety == SAFETY_AUTO:
        safety = max(1.0, max(r.violation_factor for r in reports))
    eps0 = tuple(
        float(np.linalg.norm(x0[i] - regs[i].pi @ schedule.value(i, 0))) if e is None else float(e)
        for i, e in enumerate(eps0_cfg)
    )
    try:
        mon_cfg = MonitorConfig(
            template=template,
            generator_cap=int(_get(mon, "generator_cap", "monitor", int, 200)),
            lp_tol=float(_get(mon, "lp_tol", "monitor", (int, float), 1e-9)),
            safety_factor=float(safety),
            es_mode=_get(mon, "es_mode", "monitor", str, "coupling_block"),
        )
    except ValueError as exc:
        raise ConfigError(f"monitor: {exc}") from None

    return ScenarioConfig(
        name=str(tree.get("name", name)),
        model=mdl,
        controllers=tuple(control.ControllerConfig(g, r, e) for g, r, e in zip(gains, rates, eps0)),
        schedule=schedule,
        alphas=alphas,
        x0=x0,
        eps0=eps0,
        monitor=mon_cfg,
        attack=_parse_attack(tree.get("attack"), mdl),
        output=OutputConfig(
            directory=str(_get(out, "dir", "output", str, "out")),
            projections=tuple(projections),
            projection_steps=None if proj_steps is None else tuple(int(k) for k in proj_steps),
        ),
        horizon=horizon,
        seed=int(_get(tree, "seed", "", int, 0)),
        compute_if=bool(_get(mon, "compute_if", "monitor", bool, True)),
        if_samples=int(_get(mon, "if_samples", "monitor", int, 1000)),
        min_dwell=int(_get(ctrl, "min_dwell", "control", int, control.DEFAULT_MIN_DWELL)),
        max_step=float(_get(ctrl, "max_step", "control", (int, float), control.DEFAULT_MAX_STEP)),
        regulators=tuple(regs),
        gain_reports=tuple(reports),
    )


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("hierdetect") / "scenarios" / f"{name}.json"))


def read_tree(path) -> dict:
    p = Path(path)
    if not p.exists() and not p.suffix:
        candidate = bundled_path(str(path))
        if candidate.exists():
            p = candidate
    try:
        return json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such scenario file") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def load_scenario(path) -> ScenarioConfig:
    """Parse and validate a scenario file, or a bundled scenario by name."""
    return parse_scenario(read_tree(path), name=Path(str(path)).stem)
