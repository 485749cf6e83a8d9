"""Supervisory estimation sets and the empty-intersection detection test.

Conventions: ``E_ell`` bounds ``d - d_hat_ell`` (the negated observer error), so
the local set is ``d_hat_ell ⊕ E_ell`` and its recursion is
``E_ell+ = M E_ell ⊕ (-T_d) (D_s(k) ⊕ -D_s(k+1))`` with ``T_d`` the block of the
observer's ``T`` that acts on the coupling increment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from . import setops
from .setops import BallTemplate, ConstrainedZonotope

ES_COUPLING_BLOCK = "coupling_block"
ES_PROJECTION = "projection"


@dataclass(frozen=True)
class MonitorConfig:
    template: BallTemplate = field(default_factory=BallTemplate)
    generator_cap: int = setops.DEFAULT_GENERATOR_CAP
    lp_tol: float = setops.LP_TOL
    safety_factor: float = 1.0
    es_mode: str = ES_COUPLING_BLOCK

    def __post_init__(self):
        if self.safety_factor < 1:
            raise ValueError("safety factor must be >= 1")
        if self.es_mode not in (ES_COUPLING_BLOCK, ES_PROJECTION):
            raise ValueError(f"unknown E^s interpretation {self.es_mode!r}")


@dataclass(frozen=True)
class SupervisoryKnowledge:
    """Everything the supervisory level knows: coupling, Pi, rates, observer M and T."""

    a_c: np.ndarray
    pis: tuple
    rates: tuple
    m: np.ndarray
    t_d: np.ndarray
    dims: tuple

    @property
    def offsets(self) -> np.ndarray:
        return np.r_[0, np.cumsum(self.dims)]

    @classmethod
    def build(cls, model, regs, rates, designs) -> "SupervisoryKnowledge":
        return cls(
            a_c=model.coupling_matrix(),
            pis=tuple(r.pi for r in regs),
            rates=tuple(float(b) for b in rates),
            m=block_diag(*[d.m for d in designs]),
            t_d=block_diag(*[d.t_coupling for d in designs]),
            dims=tuple(model.dims),
        )


@dataclass(frozen=True)
class DetectionRecord:
    k: int
    empty: bool
    i_f: float | None = None
    witness: np.ndarray | None = None

    def __post_init__(self):
        if self.empty and self.witness is not None:
            raise ValueError("an empty intersection has no witness")
        if self.i_f is not None and not 0 <= self.i_f <= 1:
            raise ValueError("i_f must lie in [0, 1]")


@dataclass(frozen=True)
class StepSets:
    """Sets the monitor used for the detection test at step ``k``."""

    k: int
    eps_bar: np.ndarray
    d_s: ConstrainedZonotope
    d_ell: ConstrainedZonotope
    e_ell: ConstrainedZonotope


def supervisory_estimate(a_c, pis, r) -> np.ndarray:
    """``A_c Pi r`` with ``Pi = blockdiag(pis)`` and ``r`` stacked."""
    pi = block_diag(*pis)
    return np.asarray(a_c) @ (pi @ np.concatenate([np.ravel(v) for v in r]))


def epsilon_bound_update(eps_bar, d_hat_s_i, e_s_radius, pi_i, r_i, r_i_next, rate) -> float:
    """One step of the tracking-error norm bound for a single subsystem."""
    jump = np.linalg.norm(np.ravel(r_i_next) - np.ravel(r_i))
    return float(rate * eps_bar + np.linalg.norm(d_hat_s_i) + e_s_radius
                 + np.linalg.norm(np.atleast_2d(pi_i), 2) * jump)


def build_E(eps_bars, dims, template: BallTemplate | None = None) -> ConstrainedZonotope:
    """Product of per-subsystem ball enclosures of radius ``eps_bars[i]``."""
    return setops.cartesian_product(
        [setops.enclose_ball(n, float(e), template) for n, e in zip(dims, eps_bars)]
    )


def supervisory_set(d_hat_s, E: ConstrainedZonotope, a_c) -> ConstrainedZonotope:
    return setops.drop_zero_generators(setops.translate(setops.linear_map(a_c, E), d_hat_s))


def local_error_set_update(E_ell, m, t_d, D_s_k, D_s_k1,
                           cap: int = setops.DEFAULT_GENERATOR_CAP) -> ConstrainedZonotope:
    d_bar = setops.minkowski_sum(D_s_k, setops.negate(D_s_k1))
    nxt = setops.minkowski_sum(setops.linear_map(m, E_ell), setops.linear_map(-np.asarray(t_d), d_bar))
    return setops.reduce_order(nxt, cap)


def local_set(d_hat_la, E_ell: ConstrainedZonotope) -> ConstrainedZonotope:
    return setops.translate(E_ell, d_hat_la)


def detect(D_ell, D_s, k: int = 0, tol: float = setops.LP_TOL) -> DetectionRecord:
    both = setops.intersect(D_ell, D_s)
    empty, cert = setops.is_empty(both, tol)
    witness = None if empty else setops.witness_point(both, cert)
    return DetectionRecord(k, empty, None, witness)


def intersection_fraction(D_ell, D_s, n_samples: int = 1000, seed: int = 0,
                          tol: float = setops.LP_TOL) -> float:
    """Monte-Carlo estimate of ``Vol(D_ell ∩ D_s) / min(Vol(D_ell), Vol(D_s))``.

    Samples each set and counts how many land in the other; the larger of the
    two fractions is returned. ``D_s`` is sampled first, and if all of its
    samples fall inside ``D_ell`` the estimate is 1 without sampling ``D_ell``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    for z in (D_ell, D_s):
        if z.n_con and setops.is_empty(z, tol)[0]:
            return 0.0
    if setops.is_empty(setops.intersect(D_ell, D_s), tol)[0]:
        return 0.0
    s_seed, l_seed = np.random.SeedSequence(seed).generate_state(2)
    pts = setops.sample(D_s, n_samples, seed=int(s_seed), tol=tol)
    f_s = float(np.mean(setops.contains_many(D_ell, pts, tol)))
    if f_s == 1.0:
        return 1.0
    pts = setops.sample(D_ell, n_samples, seed=int(l_seed), tol=tol)
    f_l = float(np.mean(setops.contains_many(D_s, pts, tol)))
    return max(f_s, f_l)


def _block_rows(mat: np.ndarray, offsets, i: int) -> np.ndarray:
    return mat[offsets[i]:offsets[i + 1]]


class Monitor:
    """Supervisory detector advanced once per step.

    ``eps0`` holds the initial tracking-error bounds. The reference schedule
    is needed because the error-set recursion looks one step ahead.
    """

    def __init__(self, knowledge: SupervisoryKnowledge, schedule, eps0,
                 config: MonitorConfig | None = None, d_hat_guess=None):
        self.knowledge = knowledge
        self.schedule = schedule
        self.config = config or MonitorConfig()
        self.k = 0
        self.eps_bar = np.asarray(eps0, dtype=float).copy()
        if np.any(self.eps_bar < 0) or not np.all(np.isfinite(self.eps_bar)):
            raise ValueError("initial bounds must be finite and nonnegative")
        n = int(sum(knowledge.dims))
        guess = np.zeros(n) if d_hat_guess is None else np.asarray(d_hat_guess, dtype=float)
        self._E = self._enclosure(self.eps_bar)
        self.D_s = self._supervisory(self._E, self._refs(0))
        # initial observer error is d(0) - d_hat(0), and d(0) lies in D_s(0)
        self.E_ell = setops.translate(self.D_s, -guess)
        self.last: StepSets | None = None

    def _refs(self, k):
        return [self.schedule.value(i, k) for i in range(len(self.knowledge.dims))]

    def _enclosure(self, eps_bar):
        return build_E(self.config.safety_factor * eps_bar, self.knowledge.dims, self.config.template)

    def _supervisory(self, E, refs):
        kn = self.knowledge
        return supervisory_set(supervisory_estimate(kn.a_c, kn.pis, refs), E, kn.a_c)

    def _es_radius(self, E, i):
        kn = self.knowledge
        off = kn.offsets
        if self.config.es_mode == ES_PROJECTION:
            sel = np.eye(off[-1])[off[i]:off[i + 1]]
        else:
            sel = _block_rows(kn.a_c, off, i)
        return setops.radius_bound(setops.linear_map(sel, E))

    def step(self, d_hat_la) -> DetectionRecord:
        """Run the detection test for the current step, then advance to the next."""
        kn, cfg = self.knowledge, self.config
        off = kn.offsets
        k = self.k
        d_ell = local_set(d_hat_la, self.E_ell)
        record = detect(d_ell, self.D_s, k, cfg.lp_tol)

        r_now, r_next = self._refs(k), self._refs(k + 1)
        d_hat_s = supervisory_estimate(kn.a_c, kn.pis, r_now)
        eps_next = np.array([
            epsilon_bound_update(self.eps_bar[i], d_hat_s[off[i]:off[i + 1]], self._es_radius(self._E, i),
                                 kn.pis[i], r_now[i], r_next[i], kn.rates[i])
            for i in range(len(kn.dims))
        ])
        E_next = self._enclosure(eps_next)
        D_s_next = self._supervisory(E_next, r_next)
        E_ell_next = local_error_set_update(self.E_ell, kn.m, kn.t_d, self.D_s, D_s_next, cfg.generator_cap)

        self.last = StepSets(k, self.eps_bar, self.D_s, d_ell, self.E_ell)
        self.eps_bar, self._E, self.D_s, self.E_ell = eps_next, E_next, D_s_next, E_ell_next
        self.k += 1
        return record
