"""Latin hypercube sampling, distance criteria and trajectory plans.

LHS construction (random, orthogonal-array based, annealing-optimized
under the inverse-distance or projection criteria) plus grid trajectory
plans for elementary-effects screening.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .core import Coding, Design

DEFAULT_Q = 15
DEFAULT_SWAPS = 10_000
COOLING = 0.95


def _lhs_from_ranks(ranks: np.ndarray, rng: np.random.Generator | None, jitter: str,
                    inverse_cdf: Callable[[np.ndarray], np.ndarray] | None) -> np.ndarray:
    """Map 1-based rank matrix to points: x = F^-1((rank - 1 + u)/n)."""
    n = ranks.shape[0]
    if jitter == "midpoint":
        u = np.full(ranks.shape, 0.5)
    elif jitter == "uniform":
        u = rng.random(ranks.shape)
    else:
        raise ValueError("jitter must be 'uniform' or 'midpoint'")
    pts = (ranks - 1 + u) / n
    if inverse_cdf is not None:
        pts = inverse_cdf(pts)
    return pts


def lhs_random(
    n: int,
    d: int,
    distribution: str | Callable[[np.ndarray], np.ndarray] = "uniform",
    seed: int | None = None,
    jitter: str = "uniform",
) -> Design:
    """Random Latin hypercube sample: one point per equal-probability bin.

    Each column is an independent random permutation of ranks 1..n with
    per-cell jitter u (midpoint mode fixes u = 0.5 for determinism).
    ``distribution`` is "uniform" or an inverse-CDF callable mapping [0,1)
    values elementwise.
    """
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    rng = np.random.default_rng(seed)
    ranks = np.column_stack([rng.permutation(n) + 1 for _ in range(d)]).astype(float)
    inv = None if distribution == "uniform" else distribution
    pts = _lhs_from_ranks(ranks, rng, jitter, inv)
    coding = Coding.UNIT if inv is None else Coding.SYMMETRIC
    if inv is not None and (pts.min() < -1 or pts.max() > 1):
        raise ValueError("inverse CDF must map into [-1, 1]")
    return Design(pts, coding, provenance=f"lhs-random:n={n},d={d},seed={seed},jitter={jitter}")


def lhs_oa(
    oa: np.ndarray,
    seed: int | None = None,
    jitter: str = "uniform",
) -> Design:
    """Latin hypercube built on a symmetric orthogonal array.

    The n/s occurrences of each symbol in a column are mapped to a random
    permutation of the corresponding block of ranks, so coarsening the
    result back to s levels reproduces the array while each axis keeps
    exact n-bin stratification.
    """
    O = np.asarray(oa)
    if O.ndim != 2:
        raise ValueError("orthogonal array must be 2-D")
    n, d = O.shape
    symbols = np.unique(O)
    s = symbols.size
    if n % s != 0:
        raise ValueError("symbol count must divide the run count")
    per = n // s
    rng = np.random.default_rng(seed)
    ranks = np.empty((n, d))
    for j in range(d):
        for k, sym in enumerate(symbols):
            idx = np.flatnonzero(O[:, j] == sym)
            if idx.size != per:
                raise ValueError("array is not symmetric: unequal symbol counts")
            ranks[idx, j] = rng.permutation(per) + k * per + 1
    pts = _lhs_from_ranks(ranks, rng, jitter, None)
    return Design(pts, Coding.UNIT, provenance=f"lhs-oa:n={n},d={d},seed={seed}")


def oa_full_factorial(s: int, k: int) -> np.ndarray:
    """The s^k full factorial as an orthogonal array of strength k."""
    grids = np.meshgrid(*[np.arange(s)] * k, indexing="ij")
    return np.column_stack([g.ravel() for g in grids])


def phi_q(design: Design | np.ndarray, q: float = DEFAULT_Q) -> float:
    """Inverse-distance aggregate (sum of dist^-q)^(1/q); small is spread out."""
    X = design.runs if isinstance(design, Design) else np.asarray(design, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("need at least two points")
    d2 = _pairwise_sq_dists(X)
    if np.any(d2 <= 0):
        return float("inf")
    return float(np.sum(d2 ** (-q / 2.0)) ** (1.0 / q))


def maxpro(design: Design | np.ndarray) -> float:
    """Projection criterion: mean over pairs of 1/prod_l (x_il - x_jl)^2."""
    X = design.runs if isinstance(design, Design) else np.asarray(design, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    total = 0.0
    for i in range(n - 1):
        diff2 = (X[i + 1:] - X[i]) ** 2
        if np.any(diff2 == 0):
            return float("inf")
        total += float(np.sum(np.exp(-np.log(diff2).sum(axis=1))))
    return total / (n * (n - 1) / 2)


def _pairwise_sq_dists(X: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    sq = np.sum(X ** 2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2 * X @ X.T
    iu = np.triu_indices(n, 1)
    return np.maximum(d2[iu], 0.0)


def lhs_optimize(
    n: int,
    d: int,
    objective: str = "phi_q",
    q: float = DEFAULT_Q,
    swaps: int = DEFAULT_SWAPS,
    seed: int | None = None,
    jitter: str = "midpoint",
) -> Design:
    """Annealed element swaps within columns, preserving LHS stratification.

    Minimizes the chosen criterion ("phi_q" or "maxpro"); the returned
    design is never worse than the starting random LHS.
    """
    if objective not in ("phi_q", "maxpro"):
        raise ValueError("objective must be 'phi_q' or 'maxpro'")
    rng = np.random.default_rng(seed)
    start = lhs_random(n, d, seed=rng.integers(2 ** 63), jitter=jitter)
    X = np.array(start.runs)

    if objective == "phi_q":
        crit = lambda M: phi_q(M, q)
    else:
        crit = maxpro

    current = crit(X)
    best, best_val = X.copy(), current
    # temperature from the typical move size over probe swaps
    probe = []
    for _ in range(100):
        j, r1, r2 = rng.integers(d), rng.integers(n), rng.integers(n)
        if r1 == r2:
            continue
        X[[r1, r2], j] = X[[r2, r1], j]
        probe.append(abs(crit(X) - current))
        X[[r1, r2], j] = X[[r2, r1], j]
    t = max(float(np.mean(probe)) if probe else 1e-3, 1e-12)
    for step in range(swaps):
        j, r1, r2 = rng.integers(d), rng.integers(n), rng.integers(n)
        if r1 == r2:
            continue
        X[[r1, r2], j] = X[[r2, r1], j]
        cand = crit(X)
        delta = cand - current
        if delta <= 0 or rng.random() < np.exp(-delta / max(t, 1e-300)):
            current = cand
            if current < best_val:
                best, best_val = X.copy(), current
        else:
            X[[r1, r2], j] = X[[r2, r1], j]
        t *= COOLING ** (1.0 / max(swaps / 100.0, 1.0))
    return Design(best, Coding.UNIT,
                  provenance=f"lhs-{objective}:n={n},d={d},q={q},seed={seed}")


def to_symmetric(design: Design) -> Design:
    """Affine map of a unit-cube design onto [-1, 1]^d."""
    if design.coding is not Coding.UNIT:
        raise ValueError("expected a unit-interval design")
    return Design(2.0 * design.runs - 1.0, Coding.SYMMETRIC, design.names,
                  provenance=design.provenance + "|to[-1,1]")


@dataclass(frozen=True)
class MorrisPlan:
    """Grid trajectory plan: r chains of d+1 points, one step per variable."""

    design: Design
    r: int
    delta: float
    f: int

    def __post_init__(self):
        d = self.design.d
        if self.design.n != (d + 1) * self.r:
            raise ValueError("plan must have (d+1)*r rows")

    @property
    def d(self) -> int:
        return self.design.d

    def trajectories(self) -> list[np.ndarray]:
        d = self.d
        X = self.design.runs
        return [X[j * (d + 1):(j + 1) * (d + 1)] for j in range(self.r)]


def default_delta(f: int) -> float:
    return f / (2.0 * (f - 1))


def morris_plan(
    d: int,
    r: int,
    f: int = 4,
    delta: float | None = None,
    seed: int | None = None,
) -> MorrisPlan:
    """Random trajectory plan on the f-level grid in [0, 1]^d.

    Each trajectory starts at a random grid point x with x + delta*e_i in
    the grid for every i, then changes one variable at a time by +/-delta:
    per column the step direction is randomized, and the order in which
    variables move is shuffled, independently per trajectory.
    """
    if d < 1 or r < 1:
        raise ValueError("need d >= 1 and r >= 1")
    if f < 2 or f % 2 != 0:
        raise ValueError("grid level count f must be even and >= 2")
    if delta is None:
        delta = default_delta(f)
    step_units = delta * (f - 1)
    if abs(step_units - round(step_units)) > 1e-9:
        raise ValueError(f"delta={delta} is not a multiple of the grid spacing 1/{f - 1}")
    step_units = int(round(step_units))
    if not 1 <= step_units <= f - 1:
        raise ValueError("delta must move within the grid")
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(r):
        # base point: uniform over grid values with room to step up by delta
        base_idx = rng.integers(0, f - step_units, size=d)
        B = np.tril(np.ones((d + 1, d), dtype=np.int64), -1)
        flip = rng.random(d) < 0.5
        B[:, flip] = 1 - B[:, flip]  # flipped columns step downward from base+delta
        B = B[:, rng.permutation(d)]  # shuffle which variable moves at each step
        idx = base_idx[None, :] + step_units * B
        rows.append(idx / (f - 1))
    runs = np.vstack(rows)
    design = Design(runs, Coding.UNIT,
                    provenance=f"morris:d={d},r={r},f={f},delta={delta},seed={seed}")
    plan = MorrisPlan(design, r, float(delta), f)
    _validate_plan(plan)
    return plan


def _validate_plan(plan: MorrisPlan) -> None:
    grid = np.arange(plan.f) / (plan.f - 1)
    X = plan.design.runs
    if not np.all(np.isclose(X[..., None], grid[None, None, :], atol=1e-9).any(axis=2)):
        raise ValueError("plan points left the grid")
    for traj in plan.trajectories():
        diffs = np.diff(traj, axis=0)
        changed = ~np.isclose(diffs, 0.0, atol=1e-12)
        if not np.all(changed.sum(axis=1) == 1):
            raise ValueError("consecutive rows must differ in exactly one coordinate")
        steps = diffs[changed]
        if not np.allclose(np.abs(steps), plan.delta, atol=1e-9):
            raise ValueError("steps must have magnitude delta")


def write_morris_plan(plan: MorrisPlan, csv_path: str | Path, meta_path: str | Path) -> None:
    from .io import write_design

    write_design(plan.design, csv_path)
    d = plan.d
    meta = {
        "r": plan.r,
        "delta": plan.delta,
        "f": plan.f,
        "trajectory_rows": [[j * (d + 1), (j + 1) * (d + 1)] for j in range(plan.r)],
    }
    Path(meta_path).write_text(json.dumps(meta, indent=2) + "\n", newline="\n")


def read_morris_plan(csv_path: str | Path, meta_path: str | Path) -> MorrisPlan:
    from .io import read_design

    design = read_design(csv_path, Coding.UNIT)
    meta = json.loads(Path(meta_path).read_text())
    return MorrisPlan(design, int(meta["r"]), float(meta["delta"]), int(meta["f"]))
