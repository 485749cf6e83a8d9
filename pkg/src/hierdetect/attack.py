"""Attack signals, the attack-induced deviation replica, and stealthiness tools.

Because the closed loop is linear, an attacked run splits into the nominal
run plus a deviation driven only by the attack. The replica propagates that
deviation for every subsystem and every observer, which is what an attacker
with full model knowledge needs to cancel the change in a transmitted
estimate.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space, orth

COVER_NONE = "none"
COVER_STEALTHY = "stealthy_cover"
COVER_EXPLICIT = "explicit"
KNOWLEDGE_GLOBAL = "global"
KNOWLEDGE_LOCAL = "local"

_SUBSPACE_TOL = 1e-10


def _segment_value(segments, k, dim):
    if not segments:
        return np.zeros(dim)
    idx = bisect_right([s for s, _ in segments], k) - 1
    if idx < 0:
        return np.zeros(dim)
    return np.asarray(segments[idx][1], dtype=float).reshape(-1).copy()


@dataclass(frozen=True)
class AttackScenario:
    """Which subsystems are compromised, from when, and with what.

    ``input_segments[i]`` and ``tamper_segments[i]`` are lists of
    ``(start_step, value)`` pairs holding piecewise-constant signals.
    """

    attacked: frozenset = frozenset()
    k_a: int = 0
    input_segments: dict = field(default_factory=dict)
    cover: str = COVER_NONE
    tamper_segments: dict = field(default_factory=dict)
    knowledge: str = KNOWLEDGE_GLOBAL

    def __post_init__(self):
        object.__setattr__(self, "attacked", frozenset(int(i) for i in self.attacked))
        if self.k_a < 0:
            raise ValueError("attack start step must be nonnegative")
        if self.cover not in (COVER_NONE, COVER_STEALTHY, COVER_EXPLICIT):
            raise ValueError(f"unknown cover policy {self.cover!r}")
        if self.knowledge not in (KNOWLEDGE_GLOBAL, KNOWLEDGE_LOCAL):
            raise ValueError(f"unknown attacker knowledge {self.knowledge!r}")
        for segs in (self.input_segments, self.tamper_segments):
            for i, seg in segs.items():
                steps = [s for s, _ in seg]
                if any(b <= a for a, b in zip(steps, steps[1:])):
                    raise ValueError(f"attack segments for subsystem {i} must have increasing steps")

    @classmethod
    def none(cls) -> "AttackScenario":
        return cls()

    @property
    def active(self) -> bool:
        return bool(self.attacked)


def input_attack_at(scenario: AttackScenario, i: int, k: int, dim: int = 1) -> np.ndarray:
    if i not in scenario.attacked or k < scenario.k_a:
        return np.zeros(dim)
    return _segment_value(scenario.input_segments.get(i), k, dim)


def tamper_at(scenario: AttackScenario, i: int, k: int, dim: int) -> np.ndarray:
    """Explicit transmitted-estimate tamper ``a_d``; zero unless the cover is explicit."""
    if scenario.cover != COVER_EXPLICIT or i not in scenario.attacked or k < scenario.k_a:
        return np.zeros(dim)
    return _segment_value(scenario.tamper_segments.get(i), k, dim)


@dataclass(frozen=True)
class DeviationReplica:
    delta_x: tuple
    delta_xi: tuple

    @classmethod
    def zeros(cls, model) -> "DeviationReplica":
        return cls(tuple(np.zeros(n) for n in model.dims), tuple(np.zeros(n) for n in model.dims))


def deviation_estimates(replica: DeviationReplica, designs) -> list[np.ndarray]:
    """Attack-induced change of every local coupling estimate at the current step."""
    return [xi + d.h @ dx for xi, dx, d in zip(replica.delta_xi, replica.delta_x, designs)]


def deviation_step(replica: DeviationReplica, model, gains, designs, a_u,
                   knowledge: str = KNOWLEDGE_GLOBAL, focus: int | None = None) -> DeviationReplica:
    """Advance the attack-induced component of states and observer states.

    With ``knowledge="local"`` the replica ignores coupling feedback and only
    tracks subsystem ``focus``; this is the cheaper, imperfect attacker.
    """
    dx, dxi = replica.delta_x, replica.delta_xi
    new_x, new_xi = [], []
    for i, (s, k, d) in enumerate(zip(model.subsystems, gains, designs)):
        a_i = np.asarray(a_u[i], dtype=float).reshape(-1)
        if knowledge == KNOWLEDGE_LOCAL and i != focus:
            new_x.append(np.zeros(s.n))
            new_xi.append(np.zeros(s.n))
            continue
        du = np.atleast_2d(k) @ dx[i] + a_i
        x_next = s.a_ii @ dx[i] + s.b_i @ du
        if knowledge == KNOWLEDGE_GLOBAL:
            for j, a_ij in s.neighbors.items():
                x_next = x_next + a_ij @ dx[j]
        new_x.append(x_next)
        new_xi.append(d.m @ dxi[i] + d.g @ du - d.r @ dx[i])
    return DeviationReplica(tuple(new_x), tuple(new_xi))


def stealthy_cover(replica: DeviationReplica, designs, i: int) -> np.ndarray:
    """Tamper that restores subsystem ``i``'s transmitted estimate to its nominal value."""
    d = designs[i]
    return -(replica.delta_xi[i] + d.h @ replica.delta_x[i])


# -- controlled invariance ------------------------------------------------


def _span(*bases) -> np.ndarray:
    mats = [b for b in bases if b.size]
    if not mats:
        return np.zeros((bases[0].shape[0], 0))
    return orth(np.hstack(mats), rcond=_SUBSPACE_TOL)


def _intersection(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    n = u.shape[0]
    if u.shape[1] == 0 or w.shape[1] == 0:
        return np.zeros((n, 0))
    coef = null_space(np.hstack([u, -w]), rcond=_SUBSPACE_TOL)
    if coef.shape[1] == 0:
        return np.zeros((n, 0))
    return orth(u @ coef[: u.shape[1]], rcond=_SUBSPACE_TOL)


def _preimage(a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Basis of ``{x : a x in span(w)}``."""
    n = a.shape[1]
    proj_perp = np.eye(a.shape[0]) - (w @ w.T if w.size else 0.0)
    basis = null_space(proj_perp @ a, rcond=_SUBSPACE_TOL)
    return basis if basis.size else np.zeros((n, 0))


def controlled_invariant_subspace(a, b, kernel_basis, max_iter: int | None = None) -> np.ndarray:
    """Largest ``(a, b)``-controlled-invariant subspace inside ``span(kernel_basis)``.

    Iterates ``V <- K0 ∩ a^{-1}(V + Im b)`` from ``V = K0`` until the
    dimension stops shrinking.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    k0 = kernel_basis
    v = k0
    im_b = orth(b, rcond=_SUBSPACE_TOL) if np.any(b) else np.zeros((a.shape[0], 0))
    for _ in range(max_iter or a.shape[0] + 1):
        nxt = _intersection(k0, _preimage(a, _span(v, im_b)))
        if nxt.shape[1] == v.shape[1]:
            return nxt
        v = nxt
    return v


def globally_stealthy_existence(model, i: int, k_gain) -> tuple[bool, np.ndarray]:
    """Whether subsystem ``i`` admits a nonzero attack invisible to all out-neighbors.

    Returns the flag and an orthonormal basis of the supremal controlled
    invariant subspace of ``(A_ii + B_i K_i, B_i)`` inside the common kernel of
    the outgoing coupling blocks.
    """
    s = model.subsystems[i]
    outs = [model.subsystems[j].neighbors[i] for j in model.out_neighbors(i)]
    k0 = null_space(np.vstack(outs), rcond=_SUBSPACE_TOL) if outs else np.eye(s.n)
    a_cl = s.a_ii + s.b_i @ np.atleast_2d(k_gain)
    basis = controlled_invariant_subspace(a_cl, s.b_i, k0)
    return basis.shape[1] > 0, basis


def confined_input(basis, a_cl, b, delta_x, desired, drift=None) -> np.ndarray:
    """Input closest to ``desired`` that keeps the next deviation in ``span(basis)``.

    Solves ``min ||a - desired||`` subject to
    ``P_perp (a_cl delta_x + b a + drift) = 0``.
    """
    a_cl = np.atleast_2d(a_cl)
    b = np.atleast_2d(b)
    desired = np.asarray(desired, dtype=float).reshape(-1)
    free = a_cl @ np.asarray(delta_x, dtype=float)
    if drift is not None:
        free = free + drift
    p_perp = np.eye(a_cl.shape[0]) - basis @ basis.T
    lhs, rhs = p_perp @ b, -p_perp @ free
    a0, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    ns = null_space(lhs, rcond=_SUBSPACE_TOL)
    if ns.size:
        a0 = a0 + ns @ (ns.T @ (desired - a0))
    return a0
