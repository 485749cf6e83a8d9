"""Reduced unknown-input observer estimating each subsystem's incoming coupling.

The observer runs on the extended state ``[x; d]`` with
``A_ext = [[A, I], [0, I]]``, ``C_ext = [I 0]``, ``B_ext = [B; 0]`` and
estimates the lower block through the selection ``[0 I]``.

Design matrices satisfy ``M T - R C_ext - T A_ext = 0``, ``T + H C_ext = [0 I]``
and ``G = T B_ext``. With that sign convention for ``R`` the state update is
``xi+ = M xi + G u - R y``, which gives the error recursion
``e+ = M e - T d_bar`` for ``e = d_hat - d``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_ALPHA = 0.5


@dataclass(frozen=True)
class RuioDesign:
    m: np.ndarray
    g: np.ndarray
    r: np.ndarray
    h: np.ndarray
    t: np.ndarray
    alpha: float

    @property
    def t_coupling(self) -> np.ndarray:
        """Block of ``t`` acting on the coupling increment."""
        n = self.m.shape[0]
        return self.t[:, n:]


@dataclass(frozen=True)
class DesignReport:
    sylvester: float
    selection: float
    input: float
    m_norm: float

    @property
    def residuals(self) -> tuple[float, float, float, float]:
        """The three equation residuals plus the excess of ``||M||`` over one."""
        return self.sylvester, self.selection, self.input, max(0.0, self.m_norm - 1.0)

    @property
    def ok(self) -> bool:
        return self.m_norm < 1 and max(self.sylvester, self.selection, self.input) <= 1e-12


@dataclass(frozen=True)
class RuioState:
    xi: np.ndarray


def extended_system(a, b):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n = a.shape[0]
    a_ext = np.block([[a, np.eye(n)], [np.zeros((n, n)), np.eye(n)]])
    c_ext = np.hstack([np.eye(n), np.zeros((n, n))])
    b_ext = np.vstack([b, np.zeros((n, b.shape[1]))])
    select = np.hstack([np.zeros((n, n)), np.eye(n)])
    return a_ext, b_ext, c_ext, select


def design_ruio(a, b, alpha: float = DEFAULT_ALPHA) -> RuioDesign:
    """Closed-form observer with ``H = alpha I`` and ``M = (1 - alpha) I``.

    With ``T = [-alpha I, I]`` the design equations give
    ``R = alpha A - alpha (1 - alpha) I`` and ``G = -alpha B``.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n = a.shape[0]
    eye = np.eye(n)
    return RuioDesign(
        m=(1 - alpha) * eye,
        g=-alpha * b,
        r=alpha * a - alpha * (1 - alpha) * eye,
        h=alpha * eye,
        t=np.hstack([-alpha * eye, eye]),
        alpha=float(alpha),
    )


def verify_design(design: RuioDesign, a, b) -> DesignReport:
    a_ext, b_ext, c_ext, select = extended_system(a, b)
    d = design
    return DesignReport(
        sylvester=float(np.linalg.norm(d.m @ d.t - d.r @ c_ext - d.t @ a_ext)),
        selection=float(np.linalg.norm(d.t + d.h @ c_ext - select)),
        input=float(np.linalg.norm(d.g - d.t @ b_ext)),
        m_norm=float(np.linalg.norm(d.m, 2)),
    )


def init_state(design: RuioDesign, y0, d_guess=None) -> RuioState:
    """Initial observer state so that the first estimate equals ``d_guess``."""
    y0 = np.asarray(y0, dtype=float).reshape(-1)
    guess = np.zeros(design.m.shape[0]) if d_guess is None else np.asarray(d_guess, dtype=float)
    return RuioState(guess - design.h @ y0)


def ruio_step(design: RuioDesign, state: RuioState, u, y) -> tuple[RuioState, np.ndarray]:
    """Emit ``xi + H y`` for the current step, then advance ``xi``."""
    u = np.asarray(u, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    d_hat = state.xi + design.h @ y
    xi = design.m @ state.xi + design.g @ u - design.r @ y
    return RuioState(xi), d_hat


def transmit(d_hat, a_d=None) -> np.ndarray:
    d_hat = np.asarray(d_hat, dtype=float)
    return d_hat.copy() if a_d is None else d_hat + np.asarray(a_d, dtype=float)
