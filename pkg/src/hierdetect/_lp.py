"""Thin HiGHS wrapper for the small dense LPs used by the set algebra.

Every call builds its own solver instance, so the functions here are
reentrant. Batched membership queries keep one instance alive and only swap
the equality right-hand side, which lets the dual simplex warm start.
"""

from __future__ import annotations

from dataclasses import dataclass

import highspy
import numpy as np
import scipy.sparse as sp

from .exceptions import LPError

LP_TOL = 1e-9

_INF = highspy.kHighsInf


@dataclass(frozen=True)
class LpResult:
    feasible: bool
    x: np.ndarray | None
    objective: float


def _new_solver(tol: float) -> highspy.Highs:
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("primal_feasibility_tolerance", tol)
    h.setOptionValue("dual_feasibility_tolerance", tol)
    h.setOptionValue("random_seed", 0)
    return h


def _pass(h, cost, matrix, row_lo, row_hi, col_lo, col_hi):
    a = sp.csc_matrix(matrix)
    lp = highspy.HighsLp()
    lp.num_col_ = a.shape[1]
    lp.num_row_ = a.shape[0]
    lp.col_cost_ = np.asarray(cost, dtype=float)
    lp.col_lower_ = np.asarray(col_lo, dtype=float)
    lp.col_upper_ = np.asarray(col_hi, dtype=float)
    lp.row_lower_ = np.asarray(row_lo, dtype=float)
    lp.row_upper_ = np.asarray(row_hi, dtype=float)
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = a.indptr.astype(np.int32)
    lp.a_matrix_.index_ = a.indices.astype(np.int32)
    lp.a_matrix_.value_ = a.data.astype(float)
    h.passModel(lp)


def _collect(h, n_col: int) -> LpResult:
    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kOptimal:
        x = np.array(h.getSolution().col_value[:n_col], dtype=float)
        return LpResult(True, x, float(h.getInfo().objective_function_value))
    if status in (
        highspy.HighsModelStatus.kInfeasible,
        highspy.HighsModelStatus.kUnboundedOrInfeasible,
    ):
        return LpResult(False, None, float("inf"))
    raise LPError(f"HiGHS returned status {h.modelStatusToString(status)}")


def _min_inf_norm_matrix(eq: np.ndarray):
    """Rows [eq 0; I -1; -I -1] over variables (beta, t)."""
    m, n = eq.shape
    eye = sp.identity(n, format="csr")
    ones = np.ones((n, 1))
    top = sp.hstack([sp.csr_matrix(eq), sp.csr_matrix((m, 1))])
    up = sp.hstack([eye, sp.csr_matrix(-ones)])
    dn = sp.hstack([-eye, sp.csr_matrix(-ones)])
    return sp.vstack([top, up, dn]).tocsc()


def min_inf_norm(eq: np.ndarray, rhs: np.ndarray, tol: float = LP_TOL) -> LpResult:
    """Minimise ``max |beta_j|`` subject to ``eq @ beta = rhs``.

    ``x`` of the result holds only ``beta``; ``objective`` is the attained
    infinity norm, or ``inf`` when the equality system is infeasible.
    """
    eq = np.atleast_2d(np.asarray(eq, dtype=float))
    rhs = np.asarray(rhs, dtype=float).ravel()
    m, n = eq.shape
    if n == 0:
        ok = bool(np.all(np.abs(rhs) <= tol))
        return LpResult(ok, np.zeros(0) if ok else None, 0.0 if ok else float("inf"))
    h = _new_solver(tol)
    cost = np.r_[np.zeros(n), 1.0]
    row_lo = np.r_[rhs, -_INF * np.ones(2 * n)]
    row_hi = np.r_[rhs, np.zeros(2 * n)]
    col_lo = np.r_[-_INF * np.ones(n), 0.0]
    col_hi = _INF * np.ones(n + 1)
    _pass(h, cost, _min_inf_norm_matrix(eq), row_lo, row_hi, col_lo, col_hi)
    res = _collect(h, n + 1)
    if not res.feasible:
        return res
    return LpResult(True, res.x[:n], float(res.x[n]))


def min_inf_norm_batch(eq: np.ndarray, rhs_rows: np.ndarray, tol: float = LP_TOL) -> np.ndarray:
    """Attained ``max |beta_j|`` for each right-hand side in ``rhs_rows``.

    Infeasible right-hand sides give ``inf``.
    """
    eq = np.atleast_2d(np.asarray(eq, dtype=float))
    rhs_rows = np.atleast_2d(np.asarray(rhs_rows, dtype=float))
    m, n = eq.shape
    out = np.empty(len(rhs_rows))
    if n == 0:
        ok = np.all(np.abs(rhs_rows) <= tol, axis=1)
        out[:] = np.where(ok, 0.0, np.inf)
        return out
    h = _new_solver(tol)
    cost = np.r_[np.zeros(n), 1.0]
    first = rhs_rows[0] if len(rhs_rows) else np.zeros(m)
    row_lo = np.r_[first, -_INF * np.ones(2 * n)]
    row_hi = np.r_[first, np.zeros(2 * n)]
    col_lo = np.r_[-_INF * np.ones(n), 0.0]
    col_hi = _INF * np.ones(n + 1)
    _pass(h, cost, _min_inf_norm_matrix(eq), row_lo, row_hi, col_lo, col_hi)
    idx = np.arange(m, dtype=np.int32)
    for p, rhs in enumerate(rhs_rows):
        if p:
            h.changeRowsBounds(m, idx, rhs, rhs)
        res = _collect(h, n + 1)
        out[p] = res.x[n] if res.feasible else np.inf
    return out


def linprog(cost, a_ub=None, b_ub=None, a_eq=None, b_eq=None, lb=None, ub=None,
            tol: float = LP_TOL) -> LpResult:
    """General ``min cost @ x`` with inequality, equality and box constraints."""
    cost = np.asarray(cost, dtype=float)
    n = cost.size
    blocks, lo, hi = [], [], []
    if a_ub is not None and len(b_ub):
        blocks.append(np.atleast_2d(a_ub))
        lo.append(-_INF * np.ones(len(b_ub)))
        hi.append(np.asarray(b_ub, dtype=float))
    if a_eq is not None and len(b_eq):
        blocks.append(np.atleast_2d(a_eq))
        lo.append(np.asarray(b_eq, dtype=float))
        hi.append(np.asarray(b_eq, dtype=float))
    matrix = np.vstack(blocks) if blocks else np.zeros((0, n))
    col_lo = -_INF * np.ones(n) if lb is None else np.where(np.isfinite(lb), lb, -_INF)
    col_hi = _INF * np.ones(n) if ub is None else np.where(np.isfinite(ub), ub, _INF)
    h = _new_solver(tol)
    _pass(h, cost, matrix, np.concatenate(lo) if lo else [], np.concatenate(hi) if hi else [],
          col_lo, col_hi)
    return _collect(h, n)
