"""Lockstep driver for local controllers/observers and the supervisory monitor.

Per step ``k`` the local level computes ``u0``, applies the input attack,
steps its observer and transmits the (possibly tampered) estimate; the
supervisory level then builds both estimation sets, checks their
intersection and advances its bounds; finally the plant advances.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import attack as atk
from . import control, model, monitor, observer, setops
from .exceptions import LPError
from .scenario import ScenarioConfig

log = logging.getLogger(__name__)


@dataclass
class RunOutputs:
    """Time series of one run; arrays are indexed ``[k, component]``."""

    config: ScenarioConfig
    x: np.ndarray
    r: np.ndarray
    u0: np.ndarray
    a_u: np.ndarray
    a_d: np.ndarray
    d: np.ndarray
    d_hat_l: np.ndarray
    d_hat_la: np.ndarray
    d_hat_s: np.ndarray
    eps_bar: np.ndarray
    records: list
    in_d_s: np.ndarray
    in_e_ell: np.ndarray
    polygons: dict = field(default_factory=dict)
    sets: list = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.records)

    @property
    def empty(self) -> np.ndarray:
        return np.array([r.empty for r in self.records], dtype=bool)

    @property
    def i_f(self) -> np.ndarray:
        return np.array([np.nan if r.i_f is None else r.i_f for r in self.records])

    def summary(self) -> dict:
        empty = self.empty
        first = int(np.argmax(empty)) if empty.any() else None
        i_f = self.i_f
        dt = self.config.model.dt
        bad_s = np.flatnonzero(~self.in_d_s).tolist()
        bad_e = np.flatnonzero(~self.in_e_ell).tolist()
        return {
            "scenario": self.config.name,
            "horizon": self.horizon,
            "dt": dt,
            "seed": self.config.seed,
            "safety_factor": self.config.monitor.safety_factor,
            "first_detection_step": first,
            "first_detection_time": None if first is None else first * dt,
            "detection_steps": int(empty.sum()),
            "detection_duty_cycle": float(empty.mean()),
            "min_i_f": None if np.all(np.isnan(i_f)) else float(np.nanmin(i_f)),
            "containment_violations_d_s": bad_s,
            "containment_violations_e_ell": bad_e,
        }


def _if_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


def run(config: ScenarioConfig, *, compute_if: bool | None = None, keep_sets: bool = False,
        check_containment: bool = True, projections=None) -> RunOutputs:
    """Simulate ``config.horizon`` steps; deterministic given the config's seed."""
    mdl = config.model
    n_sub = mdl.size
    dims = mdl.dims
    off = mdl.offsets
    n_tot = int(off[-1])
    compute_if = config.compute_if if compute_if is None else compute_if
    projections = config.output.projections if projections is None else tuple(projections)
    proj_steps = None if config.output.projection_steps is None else set(config.output.projection_steps)

    gains = [c.k for c in config.controllers]
    regs = list(config.regulators) or [
        control.solve_regulator(s.a_ii, s.b_i, s.c_i, s.q_i, k=g) for s, g in zip(mdl.subsystems, gains)
    ]
    designs = [observer.design_ruio(s.a_ii, s.b_i, a) for s, a in zip(mdl.subsystems, config.alphas)]
    knowledge = monitor.SupervisoryKnowledge.build(mdl, regs, [c.rate for c in config.controllers], designs)
    mon = monitor.Monitor(knowledge, config.schedule, config.eps0, config.monitor)

    state = model.LssState(tuple(np.array(v, dtype=float) for v in config.x0), 0)
    obs = [observer.init_state(d, state.x[i]) for i, d in enumerate(designs)]
    scen = config.attack
    if scen.knowledge == atk.KNOWLEDGE_GLOBAL:
        replicas = {None: atk.DeviationReplica.zeros(mdl)}
    else:
        replicas = {i: atk.DeviationReplica.zeros(mdl) for i in sorted(scen.attacked)}

    H = config.horizon
    m_tot = sum(s.m for s in mdl.subsystems)
    q_tot = sum(s.q for s in mdl.subsystems)
    out = {name: np.zeros((H, n_tot)) for name in ("x", "a_d", "d", "d_hat_l", "d_hat_la", "d_hat_s")}
    out.update(u0=np.zeros((H, m_tot)), a_u=np.zeros((H, m_tot)), r=np.zeros((H, q_tot)),
               eps_bar=np.zeros((H, n_sub)))
    in_d_s = np.ones(H, dtype=bool)
    in_e_ell = np.ones(H, dtype=bool)
    records, sets = [], []
    polygons = {pair: [] for pair in projections}

    for k in range(H):
        r_now, _ = control.reference_at(config.schedule, k)
        d_true = model.coupling(mdl, state)
        u0, a_u, d_hat_l, a_d = [], [], [], []
        for i, s in enumerate(mdl.subsystems):
            u0_i = control.control_law(state.x[i], r_now[i], gains[i], regs[i].l)
            a_u_i = atk.input_attack_at(scen, i, k, s.m)
            obs[i], dl = observer.ruio_step(designs[i], obs[i], u0_i + a_u_i, state.x[i])
            if scen.cover == atk.COVER_STEALTHY and i in scen.attacked and k >= scen.k_a:
                rep = replicas[None if scen.knowledge == atk.KNOWLEDGE_GLOBAL else i]
                ad = atk.stealthy_cover(rep, designs, i)
            else:
                ad = atk.tamper_at(scen, i, k, s.n)
            u0.append(u0_i)
            a_u.append(a_u_i)
            d_hat_l.append(dl)
            a_d.append(ad)
        d_hat_la = [observer.transmit(dl, ad) for dl, ad in zip(d_hat_l, a_d)]

        eps_k = mon.eps_bar.copy()
        try:
            rec = mon.step(np.concatenate(d_hat_la))
            step_sets = mon.last
            if compute_if:
                i_f = monitor.intersection_fraction(step_sets.d_ell, step_sets.d_s, config.if_samples,
                                                    _if_seed(config.seed, k), config.monitor.lp_tol)
                rec = monitor.DetectionRecord(rec.k, rec.empty, i_f, rec.witness)
        except LPError as exc:
            raise LPError(f"step {k}: {exc}") from exc
        records.append(rec)
        if keep_sets:
            sets.append(step_sets)
        d_vec = np.concatenate(d_true)
        if check_containment:
            tol = config.monitor.lp_tol
            in_d_s[k] = setops.contains(step_sets.d_s, d_vec, tol)
            in_e_ell[k] = setops.contains(step_sets.e_ell, d_vec - np.concatenate(d_hat_l), tol)
        for pair in projections:
            if proj_steps is None or k in proj_steps:
                polygons[pair].append((k, setops.polygon(setops.project(step_sets.d_ell, pair)),
                                       setops.polygon(setops.project(step_sets.d_s, pair))))

        out["x"][k] = state.stacked()
        out["r"][k] = np.concatenate(r_now)
        out["u0"][k] = np.concatenate(u0)
        out["a_u"][k] = np.concatenate(a_u)
        out["a_d"][k] = np.concatenate(a_d)
        out["d"][k] = d_vec
        out["d_hat_l"][k] = np.concatenate(d_hat_l)
        out["d_hat_la"][k] = np.concatenate(d_hat_la)
        out["d_hat_s"][k] = monitor.supervisory_estimate(knowledge.a_c, knowledge.pis, r_now)
        out["eps_bar"][k] = eps_k

        for key, rep in replicas.items():
            if key is None:
                replicas[key] = atk.deviation_step(rep, mdl, gains, designs, a_u)
            else:
                only = [a if i == key else np.zeros_like(a) for i, a in enumerate(a_u)]
                replicas[key] = atk.deviation_step(rep, mdl, gains, designs, only, atk.KNOWLEDGE_LOCAL, key)
        state = model.step(mdl, state, u0, model.AttackSignals(tuple(a_u), tuple(a_d)))

    bad = np.flatnonzero(~(in_d_s & in_e_ell))
    if scen.active:
        bad = bad[bad < scen.k_a]
    if check_containment and bad.size:
        log.warning("containment failed at %d nominal step(s), first at k=%d; safety factor %.3f may be too small",
                    bad.size, bad[0], config.monitor.safety_factor)
    return RunOutputs(config=config, records=records, in_d_s=in_d_s, in_e_ell=in_e_ell,
                      polygons=polygons, sets=sets, **out)


# -- emission -------------------------------------------------------------


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return ""
    return repr(float(v))


def timeseries_table(outputs: RunOutputs) -> tuple[list, list]:
    cfg = outputs.config
    mdl = cfg.model
    off = mdl.offsets
    m_off = np.r_[0, np.cumsum([s.m for s in mdl.subsystems])]
    q_off = np.r_[0, np.cumsum([s.q for s in mdl.subsystems])]
    header = ["k", "t_seconds"]
    spans = []
    for i, s in enumerate(mdl.subsystems):
        for name, arr, lo, hi in (
            ("x", outputs.x, off[i], off[i + 1]),
            ("r", outputs.r, q_off[i], q_off[i + 1]),
            ("u0", outputs.u0, m_off[i], m_off[i + 1]),
            ("a_u", outputs.a_u, m_off[i], m_off[i + 1]),
            ("d", outputs.d, off[i], off[i + 1]),
            ("d_hat_l", outputs.d_hat_l, off[i], off[i + 1]),
            ("d_hat_la", outputs.d_hat_la, off[i], off[i + 1]),
            ("d_hat_s", outputs.d_hat_s, off[i], off[i + 1]),
        ):
            header += [f"{name}_{i}_{c}" for c in range(hi - lo)]
            spans.append((arr, lo, hi))
        header.append(f"eps_bar_{i}")
        spans.append((outputs.eps_bar, i, i + 1))
    rows = []
    for k in range(outputs.horizon):
        row = [str(k), _fmt(k * mdl.dt)]
        for arr, lo, hi in spans:
            row += [_fmt(v) for v in arr[k, lo:hi]]
        rows.append(row)
    return header, rows


def detection_table(outputs: RunOutputs) -> tuple[list, list]:
    n = outputs.d.shape[1]
    dt = outputs.config.model.dt
    header = ["k", "t_seconds", "empty", "i_f"] + [f"witness_{c}" for c in range(n)]
    rows = []
    for rec in outputs.records:
        wit = [""] * n if rec.witness is None else [_fmt(v) for v in rec.witness]
        rows.append([str(rec.k), _fmt(rec.k * dt), str(int(rec.empty)), _fmt(rec.i_f)] + wit)
    return header, rows


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def emit(outputs: RunOutputs, out_dir) -> list[Path]:
    """Write timeseries, detection log, projection polygons and summary into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    p = out_dir / "timeseries.csv"
    _write_csv(p, *timeseries_table(outputs))
    written.append(p)
    p = out_dir / "detection.csv"
    _write_csv(p, *detection_table(outputs))
    written.append(p)
    for (a, b), entries in outputs.polygons.items():
        rows = []
        for k, poly_l, poly_s in entries:
            for label, poly in (("D_ell", poly_l), ("D_s", poly_s)):
                rows += [[str(k), label, str(v), _fmt(x), _fmt(y)] for v, (x, y) in enumerate(poly)]
        p = out_dir / f"projection_{a}_{b}.csv"
        _write_csv(p, ["k", "set", "vertex", "x", "y"], rows)
        written.append(p)
    p = out_dir / "summary.json"
    p.write_text(json.dumps(outputs.summary(), indent=2, sort_keys=True) + "\n")
    written.append(p)
    return written
