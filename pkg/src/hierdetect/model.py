"""Partitioned LTI plant with physical coupling between subsystems."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError

RANK_TOL = 1e-8


def _mat(a) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SubsystemModel:
    """One subsystem ``x+ = a_ii x + b_i u + sum_j a_ij x_j``.

    ``neighbors`` maps neighbor index ``j`` to the coupling block ``a_ij``.
    ``c_i`` and ``q_i`` define the tracking error ``c_i x + q_i r``.
    """

    a_ii: np.ndarray
    b_i: np.ndarray
    c_i: np.ndarray
    q_i: np.ndarray
    neighbors: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "a_ii", _mat(self.a_ii))
        object.__setattr__(self, "b_i", _mat(self.b_i))
        object.__setattr__(self, "c_i", _mat(self.c_i))
        object.__setattr__(self, "q_i", _mat(self.q_i))
        object.__setattr__(self, "neighbors", {int(j): _mat(a) for j, a in sorted(self.neighbors.items())})
        n = self.a_ii.shape[0]
        if self.a_ii.shape != (n, n):
            raise DimensionError(f"a_ii must be square, got {self.a_ii.shape}")
        if self.b_i.shape[0] != n:
            raise DimensionError(f"b_i has {self.b_i.shape[0]} rows, expected {n}")
        if self.c_i.shape[1] != n:
            raise DimensionError(f"c_i has {self.c_i.shape[1]} columns, expected {n}")
        if self.q_i.shape[0] != self.c_i.shape[0]:
            raise DimensionError("q_i and c_i must have the same number of rows")
        for j, a in self.neighbors.items():
            if a.shape[0] != n:
                raise DimensionError(f"coupling from {j} has {a.shape[0]} rows, expected {n}")

    @property
    def n(self) -> int:
        return self.a_ii.shape[0]

    @property
    def m(self) -> int:
        return self.b_i.shape[1]

    @property
    def q(self) -> int:
        return self.q_i.shape[1]


@dataclass(frozen=True)
class LssModel:
    subsystems: tuple
    dt: float = 0.25

    def __post_init__(self):
        subs = tuple(self.subsystems)
        object.__setattr__(self, "subsystems", subs)
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        for i, s in enumerate(subs):
            for j, a in s.neighbors.items():
                if not 0 <= j < len(subs) or j == i:
                    raise ValueError(f"subsystem {i} lists invalid neighbor {j}")
                if a.shape[1] != subs[j].n:
                    raise DimensionError(
                        f"coupling a_{i}{j} has {a.shape[1]} columns, subsystem {j} has {subs[j].n} states"
                    )

    @property
    def size(self) -> int:
        return len(self.subsystems)

    @property
    def dims(self) -> list[int]:
        return [s.n for s in self.subsystems]

    @property
    def offsets(self) -> np.ndarray:
        return np.r_[0, np.cumsum(self.dims)]

    def out_neighbors(self, i: int) -> list[int]:
        """Subsystems physically influenced by subsystem ``i``."""
        return [j for j, s in enumerate(self.subsystems) if i in s.neighbors]

    def stacked_a(self) -> np.ndarray:
        off = self.offsets
        a = np.zeros((off[-1], off[-1]))
        for i, s in enumerate(self.subsystems):
            a[off[i]:off[i + 1], off[i]:off[i + 1]] = s.a_ii
            for j, aij in s.neighbors.items():
                a[off[i]:off[i + 1], off[j]:off[j + 1]] = aij
        return a

    def coupling_matrix(self) -> np.ndarray:
        """``A - blockdiag(A_ii)``: maps the stacked state to the stacked coupling."""
        off = self.offsets
        a = self.stacked_a()
        for i in range(self.size):
            a[off[i]:off[i + 1], off[i]:off[i + 1]] = 0.0
        return a


@dataclass(frozen=True)
class LssState:
    x: tuple
    k: int = 0

    @classmethod
    def zeros(cls, model: LssModel) -> "LssState":
        return cls(tuple(np.zeros(n) for n in model.dims), 0)

    def stacked(self) -> np.ndarray:
        return np.concatenate(self.x)


@dataclass(frozen=True)
class AttackSignals:
    """Per-subsystem input attack ``a_u`` and transmitted-estimate tamper ``a_d``."""

    a_u: tuple
    a_d: tuple

    @classmethod
    def zeros(cls, model: LssModel) -> "AttackSignals":
        return cls(tuple(np.zeros(s.m) for s in model.subsystems),
                   tuple(np.zeros(s.n) for s in model.subsystems))


def _rank(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    sv = np.linalg.svd(a, compute_uv=False)
    return int(np.sum(sv > RANK_TOL * max(sv[0], 1.0)))


def controllability_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    blocks = [b]
    for _ in range(a.shape[0] - 1):
        blocks.append(a @ blocks[-1])
    return np.hstack(blocks)


def validate(model: LssModel) -> list[str]:
    """Check controllability of each ``(a_ii, b_i)`` and ``ker c_i ⊆ ker a_ji``.

    Returns a list of human-readable violations; empty means all hold.
    """
    problems = []
    for i, s in enumerate(model.subsystems):
        if _rank(controllability_matrix(s.a_ii, s.b_i)) < s.n:
            problems.append(f"subsystem {i}: (a_ii, b_i) is not controllable")
        for j in model.out_neighbors(i):
            a_ji = model.subsystems[j].neighbors[i]
            if _rank(np.vstack([s.c_i, a_ji])) != _rank(s.c_i):
                problems.append(f"subsystem {i}: ker c_{i} is not contained in ker a_{j}{i}")
    return problems


def coupling(model: LssModel, states) -> list[np.ndarray]:
    """``d_i = sum_{j in N_i} a_ij x_j`` for every subsystem."""
    xs = states.x if isinstance(states, LssState) else states
    if len(xs) != model.size:
        raise DimensionError(f"expected {model.size} state vectors, got {len(xs)}")
    out = []
    for s in model.subsystems:
        d = np.zeros(s.n)
        for j, a in s.neighbors.items():
            d = d + a @ xs[j]
        out.append(d)
    return out


def step(model: LssModel, state: LssState, u0, attacks: AttackSignals | None = None) -> LssState:
    """Synchronous update of all subsystems with ``u = u0 + a_u``."""
    d = coupling(model, state)
    nxt = []
    for i, s in enumerate(model.subsystems):
        u = np.asarray(u0[i], dtype=float).reshape(-1)
        if attacks is not None:
            u = u + attacks.a_u[i]
        if u.size != s.m:
            raise DimensionError(f"input {i} has length {u.size}, expected {s.m}")
        nxt.append(s.a_ii @ state.x[i] + s.b_i @ u + d[i])
    return LssState(tuple(nxt), state.k + 1)


EXAMPLE_A_II = [[1.0, 0.25], [-0.055, 0.995]]
EXAMPLE_B_I = [[0.0], [0.05]]
EXAMPLE_A_IJ = [[0.005, 0.0], [0.0, 0.0]]


def chain_model(count: int, a_ii, b_i, c_i, q_i, a_ij, dt: float = 0.25) -> LssModel:
    """Identical subsystems coupled in series to their immediate neighbors."""
    subs = []
    for i in range(count):
        nbrs = {j: a_ij for j in (i - 1, i + 1) if 0 <= j < count}
        subs.append(SubsystemModel(a_ii, b_i, c_i, q_i, nbrs))
    return LssModel(tuple(subs), dt)


def example_model(count: int = 4) -> LssModel:
    """The four-subsystem series chain, tracking the first state of each."""
    return chain_model(count, EXAMPLE_A_II, EXAMPLE_B_I, [[1.0, 0.0]], [[-1.0]], EXAMPLE_A_IJ)
