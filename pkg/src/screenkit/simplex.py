"""Dense two-phase simplex solver for small linear programs.

Solves min c^T x subject to A x <= b, x >= 0. Rows with negative RHS get
artificial variables and a phase-1 feasibility solve. Pivoting uses the
largest-violation rule and falls back to Bland's rule permanently once
the objective stalls, which guards against cycling on degenerate bases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, IterationLimitError, ScreenkitError

TOL = 1e-9
STALL_LIMIT = 64  # degenerate pivots before switching to Bland's rule


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    fun: float
    iterations: int


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    colvals = T[:, col].copy()
    colvals[row] = 0.0
    T -= np.outer(colvals, T[row])
    basis[row] = col


def _choose_entering(z: np.ndarray, allowed: int, bland: bool) -> int:
    zz = z[:allowed]
    if bland:
        idx = np.flatnonzero(zz < -TOL)
        return int(idx[0]) if idx.size else -1
    j = int(np.argmin(zz))
    return j if zz[j] < -TOL else -1


def _choose_leaving(T: np.ndarray, m: int, col: int, basis: np.ndarray) -> int:
    ratios = np.full(m, np.inf)
    pos = T[:m, col] > TOL
    ratios[pos] = T[:m, -1][pos] / T[:m, col][pos]
    best = np.min(ratios)
    if not np.isfinite(best):
        return -1
    # ties broken by lowest basis index (part of the anti-cycling guard)
    cand = np.flatnonzero(ratios <= best + TOL)
    return int(cand[np.argmin(basis[cand])])


def _run_phase(T: np.ndarray, basis: np.ndarray, zrow: np.ndarray, m: int,
               allowed: int, max_iter: int, iters: int) -> int:
    bland = False
    stall = 0
    obj = -float(zrow[-1])  # zrow[-1] carries the negated objective value
    while True:
        col = _choose_entering(zrow, allowed, bland)
        if col < 0:
            return iters
        row = _choose_leaving(T, m, col, basis)
        if row < 0:
            raise ScreenkitError("linear program is unbounded")
        _pivot(T, basis, row, col)
        zrow -= zrow[col] * T[row]
        iters += 1
        if iters > max_iter:
            raise IterationLimitError(f"simplex exceeded {max_iter} pivots")
        new_obj = -float(zrow[-1])
        if new_obj > obj - TOL:
            stall += 1
            if stall >= STALL_LIMIT:
                bland = True
        else:
            stall = 0
        obj = new_obj


def solve_lp(c: np.ndarray, A_ub: np.ndarray, b_ub: np.ndarray,
             max_iter: int = 200_000) -> LPResult:
    """Minimize c^T x subject to A_ub x <= b_ub, x >= 0."""
    c = np.asarray(c, dtype=float).reshape(-1)
    A = np.asarray(A_ub, dtype=float)
    b = np.asarray(b_ub, dtype=float).reshape(-1)
    n_rows, n = A.shape
    if c.shape[0] != n or b.shape[0] != n_rows:
        raise ValueError("inconsistent LP dimensions")
    n_slack = n_rows

    neg = b < 0
    art_rows = np.flatnonzero(neg)
    n_art = art_rows.size
    # columns: structural | slack | artificial | rhs
    T = np.zeros((n_rows, n + n_slack + n_art + 1))
    T[:, :n] = A
    T[:, n:n + n_slack] = np.eye(n_rows)
    T[:, -1] = b
    T[neg] *= -1.0  # slack coefficient becomes -1, rhs becomes positive
    for k, r in enumerate(art_rows):
        T[r, n + n_slack + k] = 1.0
    basis = np.empty(n_rows, dtype=int)
    basis[~neg] = n + np.flatnonzero(~neg)
    basis[neg] = n + n_slack + np.arange(n_art)

    cost2 = np.zeros(n + n_slack + n_art)
    cost2[:n] = c
    iters = 0
    m = n_rows

    if n_art:
        cost1 = np.zeros(n + n_slack + n_art)
        cost1[n + n_slack:] = 1.0
        z1 = np.concatenate([cost1 - cost1[basis] @ T[:, :-1],
                             [-float(cost1[basis] @ T[:, -1])]])
        # artificial columns may not re-enter; structural and slack may
        iters = _run_phase(T, basis, z1, m, n + n_slack, max_iter, iters)
        if -z1[-1] > 1e-7:
            raise InfeasibleError("no feasible point for the linear program")
        # drive leftover artificials out of the basis; rows where that is
        # impossible are redundant constraints and are dropped
        drop = []
        for r in np.flatnonzero(basis >= n + n_slack):
            cols = np.flatnonzero(np.abs(T[r, :n + n_slack]) > TOL)
            if cols.size:
                _pivot(T, basis, r, int(cols[0]))
            else:
                drop.append(r)
        if drop:
            keep = np.setdiff1d(np.arange(m), drop)
            T = T[keep]
            basis = basis[keep]
            m = keep.size
        T = np.delete(T, np.s_[n + n_slack:n + n_slack + n_art], axis=1)
        cost2 = cost2[:n + n_slack]

    z2 = np.concatenate([cost2 - cost2[basis] @ T[:, :-1],
                         [-float(cost2[basis] @ T[:, -1])]])
    iters = _run_phase(T, basis, z2, m, n + n_slack, max_iter, iters)

    x = np.zeros(n + n_slack)
    x[basis] = T[:, -1]
    fun = float(cost2[basis] @ T[:, -1])
    return LPResult(x=x[:n], fun=fun, iterations=iters)
