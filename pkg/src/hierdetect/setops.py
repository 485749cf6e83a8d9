"""Constrained zonotopes and the set algebra the detector runs on.

A constrained zonotope is ``{c + G b : ||b||_inf <= 1, A b = b_vec}``. Linear
maps, Minkowski sums, Cartesian products and intersections are exact in this
representation; emptiness and membership reduce to small LPs.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag, null_space

from . import _lp
from .exceptions import DimensionError, EmptySetError

LP_TOL = _lp.LP_TOL
DEFAULT_GENERATOR_CAP = 200


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ConstrainedZonotope:
    """Immutable constrained zonotope.

    Attributes:
        center: shape (n,)
        generators: shape (n, n_g)
        con_matrix: shape (n_c, n_g)
        con_vector: shape (n_c,)
    """

    center: np.ndarray
    generators: np.ndarray
    con_matrix: np.ndarray
    con_vector: np.ndarray

    def __init__(self, center, generators=None, con_matrix=None, con_vector=None):
        c = np.asarray(center, dtype=float).reshape(-1)
        n = c.size
        g = np.zeros((n, 0)) if generators is None else np.asarray(generators, dtype=float)
        if g.ndim == 1:
            g = g.reshape(n, -1)
        if g.shape[0] != n:
            raise DimensionError(f"generators have {g.shape[0]} rows, center has {n}")
        ng = g.shape[1]
        a = np.zeros((0, ng)) if con_matrix is None else np.asarray(con_matrix, dtype=float)
        if a.ndim == 1:
            a = a.reshape(0, ng) if a.size == 0 else a.reshape(1, -1)
        b = np.zeros(a.shape[0]) if con_vector is None else np.asarray(con_vector, dtype=float).reshape(-1)
        if a.shape[1] != ng:
            raise DimensionError(f"con_matrix has {a.shape[1]} columns, generators have {ng}")
        if a.shape[0] != b.size:
            raise DimensionError(f"con_matrix has {a.shape[0]} rows, con_vector has {b.size}")
        object.__setattr__(self, "center", _frozen(c))
        object.__setattr__(self, "generators", _frozen(g))
        object.__setattr__(self, "con_matrix", _frozen(a))
        object.__setattr__(self, "con_vector", _frozen(b))

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def n_gen(self) -> int:
        return self.generators.shape[1]

    @property
    def n_con(self) -> int:
        return self.con_matrix.shape[0]

    @property
    def is_zonotope(self) -> bool:
        return self.n_con == 0

    def to_record(self) -> dict:
        return {
            "center": self.center.tolist(),
            "generators": self.generators.tolist(),
            "con_matrix": self.con_matrix.tolist(),
            "con_vector": self.con_vector.tolist(),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ConstrainedZonotope":
        c = np.asarray(rec["center"], dtype=float)
        g = np.asarray(rec["generators"], dtype=float).reshape(c.size, -1)
        a = np.asarray(rec.get("con_matrix", []), dtype=float).reshape(-1, g.shape[1])
        return cls(c, g, a, rec.get("con_vector", []))

    def __repr__(self) -> str:
        return f"ConstrainedZonotope(dim={self.dim}, n_gen={self.n_gen}, n_con={self.n_con})"


@dataclass(frozen=True)
class LpCertificate:
    """Outcome of the emptiness LP.

    ``witness_beta`` is the minimiser of ``||beta||_inf`` over the equality
    constraints and is only present when the set is nonempty.
    """

    feasible: bool
    witness_beta: np.ndarray | None
    objective: float


# -- constructors ---------------------------------------------------------


def point(v) -> ConstrainedZonotope:
    v = np.asarray(v, dtype=float).reshape(-1)
    return ConstrainedZonotope(v, np.zeros((v.size, 0)))


def zonotope(center, generators) -> ConstrainedZonotope:
    return ConstrainedZonotope(center, generators)


def box(lower, upper) -> ConstrainedZonotope:
    lo = np.asarray(lower, dtype=float).reshape(-1)
    hi = np.asarray(upper, dtype=float).reshape(-1)
    if lo.shape != hi.shape or np.any(hi < lo):
        raise ValueError("box bounds must satisfy lower <= upper elementwise")
    return ConstrainedZonotope((lo + hi) / 2, np.diag((hi - lo) / 2))


# -- exact operations -----------------------------------------------------


def linear_map(mat, z: ConstrainedZonotope) -> ConstrainedZonotope:
    """Image of ``z`` under ``x -> mat @ x``."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.shape[1] != z.dim:
        raise DimensionError(f"map has {mat.shape[1]} columns, set has dimension {z.dim}")
    return ConstrainedZonotope(mat @ z.center, mat @ z.generators, z.con_matrix, z.con_vector)


def minkowski_sum(z1: ConstrainedZonotope, z2: ConstrainedZonotope) -> ConstrainedZonotope:
    if z1.dim != z2.dim:
        raise DimensionError(f"cannot add sets of dimension {z1.dim} and {z2.dim}")
    return ConstrainedZonotope(
        z1.center + z2.center,
        np.hstack([z1.generators, z2.generators]),
        block_diag(z1.con_matrix, z2.con_matrix).reshape(z1.n_con + z2.n_con, z1.n_gen + z2.n_gen),
        np.r_[z1.con_vector, z2.con_vector],
    )


def translate(z: ConstrainedZonotope, v) -> ConstrainedZonotope:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != z.dim:
        raise DimensionError(f"shift has length {v.size}, set has dimension {z.dim}")
    return ConstrainedZonotope(z.center + v, z.generators, z.con_matrix, z.con_vector)


def negate(z: ConstrainedZonotope) -> ConstrainedZonotope:
    return ConstrainedZonotope(-z.center, -z.generators, z.con_matrix, z.con_vector)


def cartesian_product(sets) -> ConstrainedZonotope:
    sets = list(sets)
    if not sets:
        raise ValueError("cartesian_product needs at least one set")
    if len(sets) == 1:
        return sets[0]
    n_g = sum(s.n_gen for s in sets)
    n_c = sum(s.n_con for s in sets)
    return ConstrainedZonotope(
        np.concatenate([s.center for s in sets]),
        block_diag(*[s.generators for s in sets]).reshape(sum(s.dim for s in sets), n_g),
        block_diag(*[s.con_matrix for s in sets]).reshape(n_c, n_g),
        np.concatenate([s.con_vector for s in sets]),
    )


def intersect(z1: ConstrainedZonotope, z2: ConstrainedZonotope) -> ConstrainedZonotope:
    """Exact intersection; the result keeps ``z1``'s center and generators."""
    if z1.dim != z2.dim:
        raise DimensionError(f"cannot intersect sets of dimension {z1.dim} and {z2.dim}")
    g = np.hstack([z1.generators, np.zeros((z1.dim, z2.n_gen))])
    a = np.vstack([
        np.hstack([z1.con_matrix, np.zeros((z1.n_con, z2.n_gen))]),
        np.hstack([np.zeros((z2.n_con, z1.n_gen)), z2.con_matrix]),
        np.hstack([z1.generators, -z2.generators]),
    ])
    b = np.r_[z1.con_vector, z2.con_vector, z2.center - z1.center]
    return ConstrainedZonotope(z1.center, g, a, b)


def project(z: ConstrainedZonotope, coords) -> ConstrainedZonotope:
    coords = [int(i) for i in coords]
    if any(i < 0 or i >= z.dim for i in coords):
        raise IndexError(f"coordinates {coords} out of range for dimension {z.dim}")
    sel = np.zeros((len(coords), z.dim))
    sel[np.arange(len(coords)), coords] = 1.0
    return linear_map(sel, z)


# -- LP-backed queries ----------------------------------------------------


def _scaled_rows(eq: np.ndarray, rhs: np.ndarray, tol: float):
    """Normalise rows to unit max-coefficient and drop rows with no coefficients.

    Returns ``None`` when a coefficient-free row has a nonzero right-hand side.
    """
    scale = np.max(np.abs(eq), axis=1) if eq.shape[1] else np.zeros(eq.shape[0])
    live = scale > 0
    if np.any(np.abs(rhs[~live]) > tol):
        return None
    return eq[live] / scale[live, None], rhs[live] / scale[live]


def _scaled_eq(eq: np.ndarray, tol: float):
    """Row normalisation for a fixed matrix with varying right-hand sides."""
    scale = np.max(np.abs(eq), axis=1) if eq.shape[1] else np.zeros(eq.shape[0])
    live = scale > 0
    return eq[live] / scale[live, None], live, scale


def is_empty(z: ConstrainedZonotope, tol: float = LP_TOL) -> tuple[bool, LpCertificate]:
    """Decide emptiness by minimising ``||beta||_inf`` over ``A beta = b``."""
    if z.n_con == 0:
        return False, LpCertificate(True, np.zeros(z.n_gen), 0.0)
    scaled = _scaled_rows(z.con_matrix, z.con_vector, tol)
    if scaled is None:
        return True, LpCertificate(False, None, float("inf"))
    res = _lp.min_inf_norm(*scaled, tol=tol)
    if not res.feasible or res.objective > 1 + tol:
        return True, LpCertificate(False, None, res.objective)
    return False, LpCertificate(True, res.x, res.objective)


def witness_point(z: ConstrainedZonotope, cert: LpCertificate) -> np.ndarray:
    if not cert.feasible:
        raise EmptySetError("no witness for an empty set")
    return z.center + z.generators @ cert.witness_beta


def _membership_system(z: ConstrainedZonotope):
    eq = np.vstack([z.con_matrix, z.generators])
    return eq


def contains(z: ConstrainedZonotope, x, tol: float = LP_TOL) -> bool:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != z.dim:
        raise DimensionError(f"point has length {x.size}, set has dimension {z.dim}")
    return bool(contains_many(z, x[None, :], tol)[0])


def contains_many(z: ConstrainedZonotope, points, tol: float = LP_TOL) -> np.ndarray:
    """Membership of each row of ``points``; one warm-started LP per point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != z.dim:
        raise DimensionError(f"points have length {pts.shape[1]}, set has dimension {z.dim}")
    eq = _membership_system(z)
    rhs = np.hstack([np.broadcast_to(z.con_vector, (len(pts), z.n_con)), pts - z.center])
    eq_s, live, scale = _scaled_eq(eq, tol)
    dead_ok = np.all(np.abs(rhs[:, ~live]) <= tol, axis=1)
    out = np.zeros(len(pts), dtype=bool)
    todo = np.flatnonzero(dead_ok)
    if todo.size:
        t = _lp.min_inf_norm_batch(eq_s, rhs[todo][:, live] / scale[live], tol=tol)
        out[todo] = t <= 1 + tol
    return out


def support(z: ConstrainedZonotope, direction, tol: float = LP_TOL) -> tuple[float, np.ndarray]:
    """Support value ``max_{x in z} <direction, x>`` and a maximiser."""
    d = np.asarray(direction, dtype=float).reshape(-1)
    if d.size != z.dim:
        raise DimensionError(f"direction has length {d.size}, set has dimension {z.dim}")
    w = z.generators.T @ d
    if z.n_con == 0:
        beta = np.sign(w)
        return float(d @ z.center + np.abs(w).sum()), z.center + z.generators @ beta
    res = _lp.linprog(-w, a_eq=z.con_matrix, b_eq=z.con_vector,
                      lb=-np.ones(z.n_gen), ub=np.ones(z.n_gen), tol=tol)
    if not res.feasible:
        raise EmptySetError("support function of an empty set")
    return float(d @ z.center - res.objective), z.center + z.generators @ res.x


def interval_hull(z: ConstrainedZonotope, tol: float = LP_TOL) -> tuple[np.ndarray, np.ndarray]:
    if z.n_con == 0:
        r = np.abs(z.generators).sum(axis=1)
        return z.center - r, z.center + r
    lo, hi = np.empty(z.dim), np.empty(z.dim)
    for i in range(z.dim):
        e = np.zeros(z.dim)
        e[i] = 1.0
        hi[i] = support(z, e, tol)[0]
        lo[i] = -support(z, -e, tol)[0]
    return lo, hi


def radius_bound(z: ConstrainedZonotope) -> float:
    """``||c|| + sum ||g_j||``; ignores constraints, so always an upper bound."""
    return float(np.linalg.norm(z.center) + np.linalg.norm(z.generators, axis=0).sum())


# -- ball enclosures ------------------------------------------------------


@dataclass(frozen=True)
class BallTemplate:
    """Shape of the unit-ball enclosure.

    ``kind="box"`` is the axis-aligned cube. ``kind="refined"`` intersects the
    cube with ``count`` rotated copies per coordinate plane, which gives a
    constrained zonotope that hugs the ball more tightly.
    """

    kind: str = "box"
    count: int = 1

    def __post_init__(self):
        if self.kind not in ("box", "refined"):
            raise ValueError(f"unknown enclosure template {self.kind!r}")
        if self.count < 1:
            raise ValueError("template count must be >= 1")


def _plane_rotation(n: int, i: int, j: int, theta: float) -> np.ndarray:
    r = np.eye(n)
    c, s = np.cos(theta), np.sin(theta)
    r[i, i], r[i, j], r[j, i], r[j, j] = c, -s, s, c
    return r


@functools.lru_cache(maxsize=64)
def _unit_template(dim: int, template: BallTemplate) -> ConstrainedZonotope:
    cube = ConstrainedZonotope(np.zeros(dim), np.eye(dim))
    if template.kind == "box" or dim < 2:
        return cube
    out = cube
    for i, j in itertools.combinations(range(dim), 2):
        for q in range(1, template.count + 1):
            theta = q * (np.pi / 2) / (template.count + 1)
            out = intersect(out, linear_map(_plane_rotation(dim, i, j, theta), cube))
    return out


def enclose_ball(dim: int, radius: float, template: BallTemplate | None = None) -> ConstrainedZonotope:
    """Constrained zonotope containing ``{x : ||x||_2 <= radius}``."""
    if radius < 0:
        raise ValueError(f"radius must be nonnegative, got {radius}")
    if radius == 0:
        return point(np.zeros(dim))
    unit = _unit_template(int(dim), template or BallTemplate())
    return ConstrainedZonotope(unit.center, radius * unit.generators, unit.con_matrix, unit.con_vector)


# -- order control --------------------------------------------------------


def drop_zero_generators(z: ConstrainedZonotope) -> ConstrainedZonotope:
    """Remove generator columns that are zero in both G and A (exact)."""
    keep = np.any(z.generators != 0, axis=0) | np.any(z.con_matrix != 0, axis=0)
    if np.all(keep):
        return z
    return ConstrainedZonotope(z.center, z.generators[:, keep], z.con_matrix[:, keep], z.con_vector)


def reduce_order(z: ConstrainedZonotope, cap: int = DEFAULT_GENERATOR_CAP) -> ConstrainedZonotope:
    """Outer-approximate ``z`` with at most ``cap`` generators.

    Unconstrained generators with the smallest ``||g||_1 - ||g||_inf`` are
    lifted into their interval hull. If the constrained part alone exceeds the
    cap, the whole set is replaced by its interval hull.
    """
    z = drop_zero_generators(z)
    if z.n_gen <= cap:
        return z
    n = z.dim
    free = ~np.any(z.con_matrix != 0, axis=0)
    bound_idx = np.flatnonzero(~free)
    free_idx = np.flatnonzero(free)
    keep = cap - n - bound_idx.size
    if keep < 0:
        lo, hi = interval_hull(z)
        return drop_zero_generators(box(lo, hi))
    g_free = z.generators[:, free_idx]
    score = np.abs(g_free).sum(axis=0) - np.abs(g_free).max(axis=0)
    order = np.argsort(score, kind="stable")
    lifted, kept = order[: free_idx.size - keep], np.sort(order[free_idx.size - keep:])
    hull = np.abs(g_free[:, lifted]).sum(axis=1)
    hull_g = np.diag(hull)[:, hull > 0]
    g = np.hstack([z.generators[:, bound_idx], g_free[:, kept], hull_g])
    a = np.hstack([z.con_matrix[:, bound_idx], np.zeros((z.n_con, kept.size + hull_g.shape[1]))])
    return ConstrainedZonotope(z.center, g, a, z.con_vector)


# -- sampling -------------------------------------------------------------

BURN_IN_PER_GENERATOR = 50
THINNING = 5


def _interior_beta(z: ConstrainedZonotope, tol: float) -> np.ndarray:
    """Point of the beta-polytope with the largest margin to the cube faces."""
    n = z.n_gen
    if z.n_con == 0:
        return np.zeros(n)
    # variables (beta, s): maximise s with -1 + s <= beta_j <= 1 - s
    eye = np.eye(n)
    a_ub = np.vstack([np.hstack([eye, np.ones((n, 1))]), np.hstack([-eye, np.ones((n, 1))])])
    res = _lp.linprog(
        np.r_[np.zeros(n), -1.0],
        a_ub=a_ub, b_ub=np.ones(2 * n),
        a_eq=np.hstack([z.con_matrix, np.zeros((z.n_con, 1))]), b_eq=z.con_vector,
        lb=np.r_[-np.ones(n), 0.0], ub=np.r_[np.ones(n), 1.0], tol=tol,
    )
    if not res.feasible:
        empty, cert = is_empty(z, tol)
        if empty:
            raise EmptySetError("cannot sample an empty set")
        return np.clip(cert.witness_beta, -1, 1)
    return res.x[:n]


def sample(z: ConstrainedZonotope, count: int, seed: int = 0,
           burn_in: int | None = None, thin: int = THINNING,
           tol: float = LP_TOL) -> np.ndarray:
    """Hit-and-run samples of ``z``, returned as a ``(count, dim)`` array.

    The walk is uniform on the feasible ``beta`` polytope and is mapped to
    state space through ``c + G beta``. Directions are drawn uniformly on the
    unit sphere of the constraint null space.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if z.n_con:
        empty, _ = is_empty(z, tol)
        if empty:
            raise EmptySetError("cannot sample an empty set")
    if z.n_gen == 0 or count == 0:
        return np.tile(z.center, (count, 1))
    beta = _interior_beta(z, tol)
    basis = null_space(z.con_matrix) if z.n_con else None
    if basis is not None and basis.shape[1] == 0:
        return np.tile(z.center + z.generators @ beta, (count, 1))
    k = z.n_gen if basis is None else basis.shape[1]
    burn = BURN_IN_PER_GENERATOR * z.n_gen if burn_in is None else burn_in
    steps = burn + count * thin
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((steps, k))
    if basis is not None:
        dirs = dirs @ basis.T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    u = rng.random(steps)
    out = np.empty((count, z.n_gen))
    kept = 0
    for s in range(steps):
        d = dirs[s]
        nz = np.abs(d) > 1e-14
        dn = d[nz]
        bn = beta[nz]
        up = (1.0 - bn) / dn
        dn_ = (-1.0 - bn) / dn
        hi = np.min(np.where(dn > 0, up, dn_))
        lo = np.max(np.where(dn > 0, dn_, up))
        if hi > lo:
            beta = np.clip(beta + (lo + u[s] * (hi - lo)) * d, -1.0, 1.0)
        if s >= burn and (s - burn) % thin == thin - 1:
            out[kept] = beta
            kept += 1
    return z.center + out @ z.generators.T


# -- plotting support -----------------------------------------------------


def polygon(z: ConstrainedZonotope, n_dirs: int = 64, tol: float = LP_TOL) -> np.ndarray:
    """Counter-clockwise vertices of a 2D set.

    Exact for zonotopes; for constrained zonotopes the support points in
    ``n_dirs`` evenly spaced directions.
    """
    if z.dim != 2:
        raise DimensionError("polygon needs a 2D set; project first")
    if z.n_con == 0:
        g = z.generators[:, np.linalg.norm(z.generators, axis=0) > 0]
        if g.shape[1] == 0:
            return z.center[None, :].copy()
        # orient every generator into the upper half plane, then walk by angle
        flip = (g[1] < 0) | ((g[1] == 0) & (g[0] < 0))
        g = np.where(flip, -g, g)
        g = g[:, np.argsort(np.arctan2(g[1], g[0]), kind="stable")]
        start = z.center - g.sum(axis=1)
        edges = np.hstack([2 * g, -2 * g])
        verts = start + np.cumsum(edges, axis=1).T
        verts = np.vstack([start, verts[:-1]])
    else:
        angles = np.linspace(0, 2 * np.pi, n_dirs, endpoint=False)
        verts = np.array([support(z, (np.cos(a), np.sin(a)), tol)[1] for a in angles])
    # collapse repeated vertices (parallel generators, shared LP optima)
    eps = 1e-8 * (1.0 + np.abs(verts).max())
    keep = np.r_[True, np.linalg.norm(np.diff(verts, axis=0), axis=1) > eps]
    verts = verts[keep]
    if len(verts) > 1 and np.linalg.norm(verts[-1] - verts[0]) <= eps:
        verts = verts[:-1]
    return verts
