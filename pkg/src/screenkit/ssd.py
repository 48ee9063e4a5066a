"""Supersaturated designs: construction and optimality criteria.

Half-fraction and interaction-augmentation constructions from Hadamard
matrices, the average squared column inner-product criterion with its
lower bound for balanced designs, a Bayesian D-style posterior
determinant criterion, and a simulated-annealing design search.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Coding, Design
from .errors import ScreenkitError
from .factorial import HadamardMatrix

DEFAULT_TAU2 = 5.0
DEFAULT_RESTARTS = 20
DEFAULT_MOVES = 20_000


@dataclass(frozen=True)
class SSDCriterionValue:
    criterion: str                 # "es2" or "bayesd"
    value: float
    orthogonal_pairs: int
    max_abs_inner: float
    lower_bound: float | None = None   # es2 only; None when unavailable
    tau2: float | None = None          # bayesd only


def es2_lower_bound(n: int, d: int) -> float | None:
    """Lower bound on the balanced-design criterion, or None if unavailable.

    Derived by minimizing the sum of squared row inner products subject to
    their fixed total and to each being an integer congruent to d mod 2;
    defined for balanced designs, hence even n.
    """
    if d < 2 or n < 2 or n % 2 != 0:
        return None
    m2 = n * (n - 1) // 2
    if (n * d) % 2 != 0:
        return None
    total = -n * d // 2  # sum of row inner products over unordered pairs
    parity = d % 2
    num = total - m2 * parity
    if num % 2 != 0:
        return None
    u_total = num // 2
    base, k = divmod(u_total, m2)
    sumsq_u = k * (base + 1) ** 2 + (m2 - k) * base ** 2
    sumsq_r = 4 * sumsq_u + 4 * parity * u_total + m2 * parity
    grand = n * d * d + 2 * sumsq_r - d * n * n
    return grand / (d * (d - 1))


def _pair_stats(X: np.ndarray) -> tuple[float, int, float, np.ndarray]:
    d = X.shape[1]
    S = X.T @ X
    iu = np.triu_indices(d, 1)
    s = S[iu]
    sum_sq = float(np.sum(s ** 2))
    value = 2.0 / (d * (d - 1)) * sum_sq
    return value, int(np.sum(s == 0)), float(np.max(np.abs(s))) if s.size else 0.0, s


def es2(design: Design) -> SSDCriterionValue:
    """Average squared inner product between distinct design columns."""
    if design.coding is not Coding.TWO_LEVEL:
        raise ValueError("criterion defined for two-level designs")
    if design.d < 2:
        raise ValueError("need at least two variables")
    value, orth, max_abs, _ = _pair_stats(design.runs)
    balanced = np.all(design.runs.sum(axis=0) == 0)
    bound = es2_lower_bound(design.n, design.d) if balanced else None
    return SSDCriterionValue("es2", value, orth, max_abs, lower_bound=bound)


def es2_extended(design: Design) -> float:
    """Unbalanced extension: averages squared inner products over the
    design columns together with the all-ones intercept column."""
    X = np.hstack([np.ones((design.n, 1)), design.runs])
    d1 = X.shape[1]
    S = X.T @ X
    iu = np.triu_indices(d1, 1)
    return float(2.0 / (d1 * (d1 - 1)) * np.sum(S[iu] ** 2))


def bayes_d(design: Design, tau2: float = DEFAULT_TAU2) -> SSDCriterionValue:
    """Posterior determinant criterion |H*^T H* + K/tau2|^(1/(d+1)).

    H* prepends the intercept column; K is the identity with a zero in the
    intercept position, so only the variable effects are shrunk a priori.
    """
    if tau2 <= 0:
        raise ValueError("tau2 must be positive")
    n, d = design.n, design.d
    Hs = np.hstack([np.ones((n, 1)), design.runs])
    K = np.eye(d + 1)
    K[0, 0] = 0.0
    M = Hs.T @ Hs + K / tau2
    sign, logdet = np.linalg.slogdet(M)
    if sign <= 0 or not np.isfinite(logdet):
        raise ScreenkitError("posterior information matrix is not positive definite")
    value = float(np.exp(logdet / (d + 1)))
    _, orth, max_abs, _ = _pair_stats(design.runs)
    return SSDCriterionValue("bayesd", value, orth, max_abs, tau2=tau2)


def _as_pb_design(source: HadamardMatrix | Design) -> Design:
    if isinstance(source, Design):
        return source
    from .factorial import plackett_burman

    return plackett_burman(source.order)


def lin_ssd(source: HadamardMatrix | Design, branch_col: int, keep_level: int = 1) -> Design:
    """Half-fraction supersaturated design from a Plackett-Burman array.

    Keeps the rows where the branch column (1-based) equals ``keep_level``
    and drops that column, giving n/2 runs for n-2 variables. A Hadamard
    matrix argument is first put in Plackett-Burman form (canonical stored
    array for order 12).
    """
    pb = _as_pb_design(source)
    if not 1 <= branch_col <= pb.d:
        raise ValueError(f"branch column must be in 1..{pb.d}")
    if keep_level not in (-1, 1):
        raise ValueError("keep_level must be +1 or -1")
    X = pb.runs
    rows = X[X[:, branch_col - 1] == keep_level]
    runs = np.delete(rows, branch_col - 1, axis=1)
    return Design(
        runs, Coding.TWO_LEVEL,
        provenance=f"lin-ssd:n={pb.n},branch=x{branch_col},keep={keep_level:+d}",
    )


def wu_ssd(source: HadamardMatrix | Design, interaction_pairs: Sequence[tuple[int, int]]) -> Design:
    """Supersaturated design appending interaction columns as new variables."""
    pb = _as_pb_design(source)
    cols = [pb.runs]
    for a, b in interaction_pairs:
        if not (1 <= a <= pb.d and 1 <= b <= pb.d) or a == b:
            raise ValueError(f"interaction pair ({a},{b}) must reference two distinct columns")
        cols.append((pb.runs[:, a - 1] * pb.runs[:, b - 1])[:, None])
    runs = np.hstack(cols)
    return Design(
        runs, Coding.TWO_LEVEL,
        provenance=f"wu-ssd:n={pb.n},pairs={len(interaction_pairs)}",
    )


def _random_balanced(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    X = np.empty((n, d))
    half = np.array([-1.0, 1.0]).repeat(n // 2)
    for j in range(d):
        X[:, j] = rng.permutation(half)
    return X


def search_ssd(
    n: int,
    d: int,
    criterion: str = "es2",
    tau2: float = DEFAULT_TAU2,
    restarts: int = DEFAULT_RESTARTS,
    moves: int = DEFAULT_MOVES,
    seed: int | None = None,
) -> Design:
    """Stochastic search for a supersaturated design under a criterion.

    With the inner-product criterion and even n, moves are within-column
    swaps of opposite cells, so column balance is preserved; odd n falls
    back to the extended (intercept-including) criterion with single-cell
    flips. Restarts are independent; the best final design wins, ties by
    lowest restart index. Deterministic given the seed.
    """
    if n < 4 or d < 2:
        raise ValueError("need n >= 4 and d >= 2")
    if criterion not in ("es2", "bayesd"):
        raise ValueError("criterion must be 'es2' or 'bayesd'")
    streams = np.random.SeedSequence(seed).spawn(restarts)
    best_X, best_val = None, np.inf
    for r in range(restarts):
        rng = np.random.default_rng(streams[r])
        if criterion == "es2" and n % 2 == 0:
            X, val = _search_es2_balanced(n, d, rng, moves)
        elif criterion == "es2":
            X, val = _search_flip(n, d, rng, moves, lambda M: _ext_es2_array(M))
        else:
            X, val = _search_flip(n, d, rng, moves, lambda M: -_bayesd_logdet(M, tau2))
        if val < best_val - 1e-12:
            best_X, best_val = X, val
    tag = f"search-ssd:n={n},d={d},criterion={criterion},seed={seed}"
    return Design(best_X, Coding.TWO_LEVEL, provenance=tag)


def _ext_es2_array(X: np.ndarray) -> float:
    Xs = np.hstack([np.ones((X.shape[0], 1)), X])
    d1 = Xs.shape[1]
    S = Xs.T @ Xs
    iu = np.triu_indices(d1, 1)
    return float(2.0 / (d1 * (d1 - 1)) * np.sum(S[iu] ** 2))


def _bayesd_logdet(X: np.ndarray, tau2: float) -> float:
    n, d = X.shape
    Hs = np.hstack([np.ones((n, 1)), X])
    K = np.eye(d + 1)
    K[0, 0] = 0.0
    sign, logdet = np.linalg.slogdet(Hs.T @ Hs + K / tau2)
    return logdet / (d + 1) if sign > 0 else -np.inf


def _search_es2_balanced(n: int, d: int, rng: np.random.Generator, moves: int):
    """Swap-move annealing on the sum of squared column inner products."""
    X = _random_balanced(n, d, rng)
    S = X.T @ X  # maintained incrementally
    scale = 2.0 / (d * (d - 1))

    def sum_sq() -> float:
        iu = np.triu_indices(d, 1)
        return float(np.sum(S[iu] ** 2))

    current = sum_sq()
    best, best_val = X.copy(), current
    # initial temperature from the typical move size
    t = max(current / (n * d), 1.0)
    for step in range(moves):
        j = rng.integers(d)
        plus = np.flatnonzero(X[:, j] > 0)
        minus = np.flatnonzero(X[:, j] < 0)
        r1 = plus[rng.integers(plus.size)]
        r2 = minus[rng.integers(minus.size)]
        # swap the +1 at r1 with the -1 at r2 in column j; S[k,j] shifts by
        # -2*X[r1,k]*X[r1,j] - 2*X[r2,k]*X[r2,j]
        delta_col = -2.0 * X[r1] * X[r1, j] - 2.0 * X[r2] * X[r2, j]
        new_sj = S[:, j] + delta_col
        new_sj[j] = S[j, j]
        old = S[:, j].copy()
        old[j] = 0.0
        new = new_sj.copy()
        new[j] = 0.0
        delta = float(np.sum(new ** 2) - np.sum(old ** 2))
        accept = delta <= 0 or rng.random() < np.exp(-delta / max(t, 1e-9))
        if accept:
            X[r1, j] = -X[r1, j]
            X[r2, j] = -X[r2, j]
            S[:, j] = new_sj
            S[j, :] = new_sj
            current += delta
            if current < best_val - 1e-12:
                best, best_val = X.copy(), current
                if best_val <= 0:
                    break
        t *= 0.9997
    return best, scale * best_val


def _search_flip(n: int, d: int, rng: np.random.Generator, moves: int, objective):
    """Single-cell coordinate-exchange annealing on a generic objective."""
    X = np.where(rng.random((n, d)) < 0.5, 1.0, -1.0)
    current = objective(X)
    best, best_val = X.copy(), current
    deltas = []
    for _ in range(64):
        i, j = rng.integers(n), rng.integers(d)
        X[i, j] = -X[i, j]
        deltas.append(abs(objective(X) - current))
        X[i, j] = -X[i, j]
    t = max(float(np.mean(deltas)), 1e-6)
    for step in range(moves):
        i, j = rng.integers(n), rng.integers(d)
        X[i, j] = -X[i, j]
        cand = objective(X)
        delta = cand - current
        if delta <= 0 or rng.random() < np.exp(-delta / max(t, 1e-12)):
            current = cand
            if current < best_val - 1e-12:
                best, best_val = X.copy(), current
        else:
            X[i, j] = -X[i, j]
        t *= 0.999
    return best, best_val
