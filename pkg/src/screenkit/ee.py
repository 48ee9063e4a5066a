"""Model-free screening analyses.

Elementary effects (finite-difference derivative estimates from
trajectory plans) with their sensitivity moments, and the odd/even
output contrasts of systematic fractional replicate designs with the
normalized sensitivity indices built from them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ScreeningOutcome
from .errors import CorruptPlanError
from .spacefill import MorrisPlan


@dataclass(frozen=True)
class EEIndices:
    """Per-variable moments of the elementary effect sample."""

    mu: np.ndarray        # mean effect
    sigma: np.ndarray     # sample standard deviation (divisor r-1)
    mu_star: np.ndarray   # mean absolute effect
    r: int
    ee_matrix: np.ndarray  # r x d raw elementary effects


def elementary_effects(plan: MorrisPlan, y: np.ndarray) -> np.ndarray:
    """One elementary effect per variable per trajectory.

    For each consecutive pair of rows differing by +/-delta in coordinate
    i, the effect is the output difference divided by the signed step, so
    a decreasing step yields the forward-derivative sign convention.
    Returns an r x d array.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    d = plan.d
    if y.shape[0] != plan.design.n:
        raise ValueError("response length must match the plan")
    effects = np.full((plan.r, d), np.nan)
    for t, traj in enumerate(plan.trajectories()):
        yt = y[t * (d + 1):(t + 1) * (d + 1)]
        for l in range(d):
            step = traj[l + 1] - traj[l]
            moved = np.flatnonzero(np.abs(step) > 1e-12)
            if moved.size != 1:
                raise CorruptPlanError(
                    f"trajectory {t}, step {l}: rows differ in {moved.size} coordinates"
                )
            i = moved[0]
            if not np.isnan(effects[t, i]):
                raise CorruptPlanError(f"trajectory {t}: variable x{i + 1} moved twice")
            effects[t, i] = (yt[l + 1] - yt[l]) / step[i]
    return effects


def ee_indices(effects: np.ndarray) -> EEIndices:
    """Sensitivity moments mu, sigma, mu* of an r x d effect sample.

    sigma uses divisor r-1 and requires r >= 2.
    """
    effects = np.asarray(effects, dtype=float)
    if effects.ndim != 2:
        raise ValueError("effects must be an r x d array")
    r = effects.shape[0]
    if r < 2:
        raise ValueError("sigma is undefined for r < 2; need at least two trajectories")
    mu = effects.mean(axis=0)
    sigma = effects.std(axis=0, ddof=1)
    mu_star = np.abs(effects).mean(axis=0)
    return EEIndices(mu=mu, sigma=sigma, mu_star=mu_star, r=r, ee_matrix=effects)


@dataclass(frozen=True)
class CotterIndices:
    """Odd/even contrasts and sensitivity shares from a 2d+2 run plan."""

    odd: np.ndarray    # per-variable odd-order contrast
    even: np.ndarray   # per-variable even-order contrast
    m: np.ndarray      # |odd| + |even|
    share: np.ndarray  # m / sum(m)


def cotter_contrasts(y: np.ndarray, d: int | None = None) -> CotterIndices:
    """Contrasts from outputs ordered as the systematic replicate plan.

    y[0] is the all-low run, y[1..d] the one-high runs, y[d+1..2d] the
    one-low runs and y[2d+1] the all-high run. The odd contrast for
    variable i is ((y_hi - y_onelow_i) + (y_onehigh_i - y_lo))/4 and the
    even contrast the analogous difference.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size < 6 or y.size % 2 != 0:
        raise ValueError(f"expected 2d+2 outputs for some d >= 2, got {y.size}")
    if d is not None and y.size != 2 * d + 2:
        raise ValueError(f"expected {2 * d + 2} outputs for d={d}, got {y.size}")
    d = (y.size - 2) // 2
    hi, lo = y[2 * d + 1], y[0]
    one_high = y[1:d + 1]
    one_low = y[d + 1:2 * d + 1]
    odd = 0.25 * ((hi - one_low) + (one_high - lo))
    even = 0.25 * ((hi - one_low) - (one_high - lo))
    m = np.abs(odd) + np.abs(even)
    total = m.sum()
    share = m / total if total > 0 else np.zeros_like(m)
    return CotterIndices(odd=odd, even=even, m=m, share=share)


def cotter_sensitivity(
    indices: CotterIndices,
    threshold: float = 0.01,
    truth: set[int] | None = None,
) -> ScreeningOutcome:
    """Select the variables whose sensitivity share exceeds the threshold.

    Also reports the pair of extreme elementary effects each contrast is
    equivalent to: share_i is proportional to max(|ee_high_i|, |ee_low_i|).
    """
    if indices.m.sum() <= 0:
        raise ValueError("all contrasts are zero; shares are undefined")
    d = indices.share.size
    selected = {i + 1 for i in range(d) if indices.share[i] > threshold}
    ee_high = indices.odd + indices.even   # (y_hi - y_onelow_i)/2
    ee_low = indices.odd - indices.even    # (y_onehigh_i - y_lo)/2
    stats = {
        "share": tuple(indices.share),
        "odd": tuple(indices.odd),
        "even": tuple(indices.even),
        "ee_extreme_max": tuple(np.maximum(np.abs(ee_high), np.abs(ee_low))),
    }
    return ScreeningOutcome.build(selected, stats, truth, d, method="sfrd-cotter")
