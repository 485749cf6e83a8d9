"""Decentralised tracking controllers and the reference schedule."""

from __future__ import annotations

import warnings
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .exceptions import DestabilizingGainError, RegulatorError

SOLVE_TOL = 1e-10
DEFAULT_MIN_DWELL = 20
DEFAULT_MAX_STEP = 10.0


@dataclass(frozen=True)
class RegulatorSolution:
    pi: np.ndarray
    gamma: np.ndarray
    l: np.ndarray
    residual: float


@dataclass(frozen=True)
class ControllerConfig:
    k: np.ndarray
    rate: float
    eps0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "k", np.atleast_2d(np.asarray(self.k, dtype=float)))
        if not 0 <= self.rate < 1:
            raise ValueError(f"contraction rate must lie in [0, 1), got {self.rate}")
        if self.eps0 < 0:
            raise ValueError("initial bound must be nonnegative")


def solve_regulator(a, b, c, q, s=None, k=None) -> RegulatorSolution:
    """Solve ``Pi S = A Pi + B Gamma`` and ``0 = C Pi + Q`` for ``(Pi, Gamma)``.

    The pair is found from one stacked linear system in ``vec(Pi), vec(Gamma)``
    built with Kronecker products, so any ``S`` works. When a feedback gain
    ``k`` is given, the feedforward gain ``Gamma - k Pi`` is returned as ``l``.
    """
    a, b, c, q = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (a, b, c, q))
    n, m = b.shape
    p, nq = q.shape
    s = np.eye(nq) if s is None else np.atleast_2d(np.asarray(s, dtype=float))
    i_n, i_q = np.eye(n), np.eye(nq)
    top = np.hstack([np.kron(s.T, i_n) - np.kron(i_q, a), -np.kron(i_q, b)])
    bot = np.hstack([np.kron(i_q, c), np.zeros((p * nq, m * nq))])
    lhs = np.vstack([top, bot])
    rhs = np.r_[np.zeros(n * nq), -q.ravel(order="F")]
    sol, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    pi = sol[: n * nq].reshape((n, nq), order="F")
    gamma = sol[n * nq:].reshape((m, nq), order="F")
    res = max(np.linalg.norm(pi @ s - a @ pi - b @ gamma), np.linalg.norm(c @ pi + q))
    if res > SOLVE_TOL * (1 + np.linalg.norm(a, 2)):
        raise RegulatorError(f"regulator equations unsolvable (residual {res:.3e})")
    l = gamma if k is None else gamma - np.atleast_2d(k) @ pi
    return RegulatorSolution(pi, gamma, l, float(res))


def feedforward_gain(reg: RegulatorSolution, k) -> np.ndarray:
    return reg.gamma - np.atleast_2d(np.asarray(k, dtype=float)) @ reg.pi


def control_law(x, r, k, l) -> np.ndarray:
    """``u0 = K x + L r``."""
    return np.atleast_2d(k) @ np.asarray(x, dtype=float).reshape(-1) + np.atleast_2d(l) @ np.asarray(
        r, dtype=float).reshape(-1)


@dataclass(frozen=True)
class ReferenceSchedule:
    """Piecewise-constant references: ``switches[i]`` is a list of ``(step, value)``."""

    switches: tuple
    dims: tuple

    def __post_init__(self):
        sw = tuple(tuple((int(k), np.asarray(v, dtype=float).reshape(-1)) for k, v in seg)
                   for seg in self.switches)
        object.__setattr__(self, "switches", sw)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        for i, seg in enumerate(sw):
            steps = [k for k, _ in seg]
            if steps and steps[0] != 0:
                raise ValueError(f"schedule {i} must start at step 0")
            if any(b <= a for a, b in zip(steps, steps[1:])):
                raise ValueError(f"schedule {i} switch steps must be strictly increasing")
            for _, v in seg:
                if v.size != self.dims[i]:
                    raise ValueError(f"schedule {i} values must have length {self.dims[i]}")

    @classmethod
    def constant(cls, values) -> "ReferenceSchedule":
        values = [np.asarray(v, dtype=float).reshape(-1) for v in values]
        return cls(tuple(((0, v),) for v in values), tuple(v.size for v in values))

    def value(self, i: int, k: int) -> np.ndarray:
        seg = self.switches[i]
        if not seg:
            return np.zeros(self.dims[i])
        idx = bisect_right([s for s, _ in seg], k) - 1
        return seg[max(idx, 0)][1].copy()

    def check_limits(self, min_dwell=DEFAULT_MIN_DWELL, max_step=DEFAULT_MAX_STEP) -> list[str]:
        """Warnings for switches closer than ``min_dwell`` or jumps above ``max_step``."""
        out = []
        for i, seg in enumerate(self.switches):
            prev_k, prev_v = 0, np.zeros(self.dims[i])
            for n, (k, v) in enumerate(seg):
                if n >= 2 and k - prev_k < min_dwell:
                    out.append(f"reference {i}: switches at {prev_k} and {k} are closer than {min_dwell} steps")
                if np.linalg.norm(v - prev_v) > max_step:
                    out.append(f"reference {i}: jump at step {k} exceeds {max_step}")
                prev_k, prev_v = k, v
        return out


def reference_at(schedule: ReferenceSchedule, k: int) -> tuple[list, list]:
    """References at steps ``k`` and ``k + 1`` for every subsystem."""
    if k < 0:
        raise ValueError("step index must be nonnegative")
    now = [schedule.value(i, k) for i in range(len(schedule.dims))]
    nxt = [schedule.value(i, k + 1) for i in range(len(schedule.dims))]
    return now, nxt


@dataclass(frozen=True)
class GainReport:
    spectral_radius: float
    violation_factor: float
    violation_step: int
    sampled_violation_factor: float

    @property
    def transient_violation(self) -> bool:
        return self.violation_factor > 1 + 1e-12


def validate_gain(a, b, k, rate: float, horizon: int = 200, samples: int = 64,
                  seed: int = 0) -> GainReport:
    """Spectral radius of ``A + B K`` and how far ``||(A+BK)^k|| <= rate^k`` fails.

    ``violation_factor`` is ``max_k ||(A+BK)^k||_2 / rate^k`` over the horizon;
    it is the smallest constant ``c`` with ``||(A+BK)^k v|| <= c rate^k ||v||``.
    The sampled variant checks random unit vectors only.
    """
    a_cl = np.atleast_2d(a) + np.atleast_2d(b) @ np.atleast_2d(k)
    rho = float(np.max(np.abs(np.linalg.eigvals(a_cl))))
    if rho >= 1:
        raise DestabilizingGainError(f"closed-loop spectral radius {rho:.4f} >= 1")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((a_cl.shape[0], samples))
    v /= np.linalg.norm(v, axis=0)
    power = np.eye(a_cl.shape[0])
    worst, worst_k, sampled = 1.0, 0, 1.0
    for step in range(1, horizon + 1):
        power = a_cl @ power
        scale = rate ** step if rate > 0 else 0.0
        norm = np.linalg.norm(power, 2)
        ratio = np.inf if scale == 0 and norm > 0 else (norm / scale if scale else 1.0)
        if ratio > worst:
            worst, worst_k = float(ratio), step
        if scale:
            sampled = max(sampled, float(np.max(np.linalg.norm(power @ v, axis=0)) / scale))
    if worst > 1 + 1e-12:
        warnings.warn(
            f"||A_cl^k|| exceeds rate^k by up to {worst:.3f}x (step {worst_k})",
            RuntimeWarning, stacklevel=2,
        )
    return GainReport(rho, worst, worst_k, sampled)
