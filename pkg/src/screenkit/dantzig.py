"""Dantzig selector paths and the two-step selector with least-squares refit.

The selector minimizes the L1 norm of the coefficients subject to a bound
s on the maximum absolute correlation between the residual and the model
columns. It is solved as a linear program over the split beta = b+ - b-
(2p nonnegative variables, 2p inequality rows). The two-step procedure
refits each path support by ordinary least squares and picks the bound s
by the small-sample corrected information criterion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ModelMatrix, ScreeningOutcome, least_squares
from .errors import InfeasibleError
from .simplex import solve_lp

PATH_POINTS = 50
PATH_FLOOR = 1e-3  # smallest grid value as a fraction of s_max
FEAS_TOL = 1e-6
SUPPORT_TOL = 1e-8


def _as_array(H) -> np.ndarray:
    return H.H if isinstance(H, ModelMatrix) else np.asarray(H, dtype=float)


def dantzig_solve(H, y: np.ndarray, s: float) -> np.ndarray:
    """L1-minimal coefficients with ||H^T (y - H beta)||_inf <= s."""
    Hm = _as_array(H)
    y = np.asarray(y, dtype=float).reshape(-1)
    if s < 0:
        raise InfeasibleError("the correlation bound s must be nonnegative")
    if np.any(np.all(Hm == 0, axis=0)):
        raise ValueError("model matrix has an all-zero column")
    p = Hm.shape[1]
    G = Hm.T @ Hm
    corr = Hm.T @ y
    A_ub = np.block([[G, -G], [-G, G]])
    b_ub = np.concatenate([corr + s, s - corr])
    cost = np.ones(2 * p)
    res = solve_lp(cost, A_ub, b_ub)
    beta = res.x[:p] - res.x[p:]
    resid_corr = np.max(np.abs(corr - G @ beta))
    if resid_corr > s + FEAS_TOL * max(1.0, abs(s)):
        raise InfeasibleError(f"solver returned an infeasible point ({resid_corr} > {s})")
    return beta


@dataclass(frozen=True)
class DantzigPath:
    s_grid: np.ndarray           # decreasing bounds
    coefficients: np.ndarray     # len(grid) x p
    feasibility: np.ndarray      # max |H^T residual correlation| per point

    def l1_norms(self) -> np.ndarray:
        return np.abs(self.coefficients).sum(axis=1)


def default_grid(H, y: np.ndarray, points: int = PATH_POINTS) -> np.ndarray:
    Hm = _as_array(H)
    y = np.asarray(y, dtype=float).reshape(-1)
    s_max = float(np.max(np.abs(Hm.T @ y)))
    if s_max == 0:
        return np.zeros(1)
    return np.geomspace(s_max, s_max * PATH_FLOOR, points)


def dantzig_path(H, y: np.ndarray, s_grid: np.ndarray | None = None) -> DantzigPath:
    """Coefficient path over a decreasing grid of correlation bounds.

    The default grid runs log-spaced from s_max = ||H^T y||_inf down to
    s_max/1000 in 50 points; the first point always yields beta = 0.
    """
    Hm = _as_array(H)
    y = np.asarray(y, dtype=float).reshape(-1)
    grid = default_grid(Hm, y) if s_grid is None else np.asarray(s_grid, dtype=float)
    if grid.size and np.any(np.diff(grid) > 0):
        raise ValueError("the bound grid must be decreasing")
    G = Hm.T @ Hm
    corr = Hm.T @ y
    coefs = np.zeros((grid.size, Hm.shape[1]))
    feas = np.zeros(grid.size)
    for k, s in enumerate(grid):
        coefs[k] = dantzig_solve(Hm, y, float(s))
        feas[k] = float(np.max(np.abs(corr - G @ coefs[k])))
    return DantzigPath(s_grid=grid, coefficients=coefs, feasibility=feas)


def aicc(n: int, rss: float, k: int) -> float:
    """Small-sample corrected criterion n*ln(RSS/n) + 2k + 2k(k+1)/(n-k-1)."""
    if n - k - 1 <= 0:
        raise ValueError("criterion undefined when n - k - 1 <= 0")
    rss = max(rss, 1e-300)
    return n * np.log(rss / n) + 2 * k + 2 * k * (k + 1) / (n - k - 1)


@dataclass(frozen=True)
class GaussDantzigResult:
    outcome: ScreeningOutcome
    path: DantzigPath
    chosen_s: float
    chosen_index: int
    refit_terms: tuple[int, ...]        # term indices at the chosen point
    refit_coefficients: np.ndarray
    criterion_values: np.ndarray
    empty_path: bool = False


def gauss_dantzig(
    H: ModelMatrix,
    y: np.ndarray,
    threshold: float = 0.0,
    s_grid: np.ndarray | None = None,
    max_support_fraction: float = 0.5,
    truth: set[int] | None = None,
) -> GaussDantzigResult:
    """Path + refit + information-criterion choice of the bound s.

    For every path point the nonzero support is refit by least squares and
    scored with the corrected criterion using k = |support| + 1; points
    whose support cannot be refit (n - k - 1 <= 0, or a rank-deficient
    submatrix) are excluded, as are supports larger than
    ``max_support_fraction`` of the run count: on noiseless responses the
    path end refits toward interpolation, where RSS collapses and the
    criterion diverges regardless of penalty. A variable is declared
    active when it appears in a refit term whose coefficient exceeds the
    threshold in absolute value (the intercept term maps to no variable).
    """
    Hm = H.H
    n, p = Hm.shape
    d = H.design.d
    cap = max(3, int(np.floor(max_support_fraction * n)))
    path = dantzig_path(Hm, y, s_grid)
    crit = np.full(path.s_grid.size, np.inf)
    supports: list[tuple[int, ...]] = []
    fits: list[np.ndarray | None] = []
    for k_idx in range(path.s_grid.size):
        support = tuple(int(u) for u in np.flatnonzero(np.abs(path.coefficients[k_idx]) > SUPPORT_TOL))
        supports.append(support)
        kk = len(support) + 1
        if not support or n - kk - 1 <= 0 or kk > cap:
            fits.append(None)
            continue
        try:
            fit = least_squares(Hm[:, support], y)
        except Exception:
            fits.append(None)
            continue
        fits.append(fit.beta)
        crit[k_idx] = aicc(n, fit.rss, kk)
    if not np.isfinite(crit).any():
        outcome = ScreeningOutcome.build([], {"coefficient": (0.0,) * p}, truth, d,
                                         method="gauss-dantzig")
        return GaussDantzigResult(outcome, path, float(path.s_grid[0]) if path.s_grid.size else 0.0,
                                  0, (), np.zeros(0), crit, empty_path=True)
    best = int(np.argmin(crit))
    support = supports[best]
    beta = fits[best]
    selected: set[int] = set()
    term_coef = np.zeros(p)
    for coef, u in zip(beta, support):
        term_coef[u] = coef
        if abs(coef) > threshold:
            selected.update(H.terms.variables_of(u))
    outcome = ScreeningOutcome.build(
        selected, {"coefficient": tuple(term_coef)}, truth, d, method="gauss-dantzig")
    return GaussDantzigResult(outcome, path, float(path.s_grid[best]), best,
                              support, beta, crit)
