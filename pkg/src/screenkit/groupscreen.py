"""Screening by experimenting on groups of variables.

Two-stage factorial group screening (classical and interaction-aware),
sequential bifurcation with optional mirror-image runs and replicated
noisy assessment, and iterated random-grouping fractional factorials.
All methods drive a user oracle: a function from a settings vector to a
real output, wrapped with an invocation counter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .core import Coding, Design, ScreeningOutcome, TermSet, build_model_matrix, least_squares
from .errors import ScreenkitError
from .factorial import full_factorial, hadamard, plackett_burman, regular_fraction

PB_ORDERS = (4, 8, 12, 16, 20, 24)

# resolution V fractions: defining words per variable count (full factorial
# below five variables)
RES_V_WORDS: dict[int, tuple[tuple[int, ...], ...]] = {
    5: ((1, 2, 3, 4, 5),),
    6: ((1, 2, 3, 4, 5, 6),),
    7: ((1, 2, 3, 4, 5, 6, 7),),
    8: ((1, 2, 3, 4, 7), (1, 2, 5, 6, 8)),
}


class Oracle:
    """Callable wrapper that counts evaluations and tags failures."""

    def __init__(self, fn: Callable[[np.ndarray], float], name: str = "oracle"):
        self._fn = fn
        self.name = name
        self.calls = 0

    def __call__(self, x: np.ndarray) -> float:
        self.calls += 1
        try:
            return float(self._fn(np.asarray(x, dtype=float)))
        except Exception as exc:
            raise ScreenkitError(f"{self.name} failed at call {self.calls}") from exc

    def evaluate_rows(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            try:
                out[i] = self(row)
            except ScreenkitError as exc:
                raise ScreenkitError(f"{exc} (design run {i + 1})") from exc.__cause__
        return out


def ensure_oracle(fn) -> Oracle:
    return fn if isinstance(fn, Oracle) else Oracle(fn)


@dataclass(frozen=True)
class Grouping:
    """Partition of variables 1..d into g groups (1-based group labels)."""

    assignment: tuple[int, ...]  # assignment[i-1] = group of variable i

    def __post_init__(self):
        groups = set(self.assignment)
        if not groups:
            raise ValueError("empty grouping")
        if groups != set(range(1, len(groups) + 1)):
            raise ValueError("groups must be labelled 1..g with no gaps")

    @property
    def d(self) -> int:
        return len(self.assignment)

    @property
    def g(self) -> int:
        return max(self.assignment)

    def members(self, group: int) -> tuple[int, ...]:
        return tuple(i + 1 for i, a in enumerate(self.assignment) if a == group)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(self.members(j)) for j in range(1, self.g + 1))

    @staticmethod
    def balanced(d: int, g: int) -> "Grouping":
        """Consecutive blocks of near-equal size."""
        if not 1 <= g <= d:
            raise ValueError("need 1 <= g <= d")
        base, extra = divmod(d, g)
        assignment = []
        for j in range(1, g + 1):
            assignment += [j] * (base + (1 if j <= extra else 0))
        return Grouping(tuple(assignment))


def smallest_pb_design(k: int) -> Design:
    """Smallest supported Plackett-Burman style design with >= k columns."""
    for order in PB_ORDERS:
        if order - 1 >= k:
            return plackett_burman(order)
    raise ScreenkitError(f"no stored orthogonal design with {k} columns (max {PB_ORDERS[-1] - 1})")


def resolution_v_design(k: int) -> Design:
    """Smallest catalogued design estimating all mains and 2fi for k variables."""
    if k < 1:
        raise ValueError("need k >= 1")
    if k <= 4:
        return full_factorial(k)
    if k in RES_V_WORDS:
        return regular_fraction(k, RES_V_WORDS[k])[0]
    raise ScreenkitError(f"no catalogued high-resolution design for {k} variables (max 8)")


@dataclass(frozen=True)
class GSRun:
    """Audit record of a two-stage group screening run."""

    grouping: Grouping
    mode: str
    stage1_design: Design                 # on the grouped variables
    stage1_effects: dict[str, float]
    carried_groups: tuple[int, ...]
    carried_variables: tuple[int, ...]
    stage2_design: Design | None          # on the carried variables
    n1: int
    n2: int
    total_runs: int
    outcome: ScreeningOutcome


def _expand_grouped(grouped_runs: np.ndarray, grouping: Grouping) -> np.ndarray:
    cols = [grouped_runs[:, grouping.assignment[i] - 1] for i in range(grouping.d)]
    return np.column_stack(cols)


def _threshold_decision(effects: np.ndarray, delta: float) -> np.ndarray:
    return np.abs(effects) > delta


def _ttest_decision(H: np.ndarray, y: np.ndarray, level: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-coefficient t-tests; requires residual degrees of freedom."""
    n, p = H.shape
    if n <= p:
        raise ScreenkitError("t-test rule needs replication: no residual degrees of freedom")
    beta, rss = least_squares(H, y)
    dof = n - p
    sigma2 = rss / dof
    cov = sigma2 * np.linalg.inv(H.T @ H)
    se = np.sqrt(np.diag(cov))
    tvals = np.divide(beta, se, out=np.zeros_like(beta), where=se > 0)
    pvals = 2 * stats.t.sf(np.abs(tvals), dof)
    return pvals < level, beta


def group_screen(
    oracle,
    grouping: Grouping,
    stage1: str = "classical",
    delta: float = 1.0,
    decision_rule: str = "threshold",
    level: float = 0.2,
    replicates: int = 1,
    seed: int | None = None,
    truth: set[int] | None = None,
) -> GSRun:
    """Two-stage group screening against an oracle.

    Stage 1 experiments on the g grouped variables (orthogonal two-level
    design for "classical" mode; a full-interaction design for
    "interaction" mode, which also carries groups involved in large
    grouped interactions). Carried variables get an individual follow-up
    design and the same decision rule picks the active ones. The
    "threshold" rule compares |coefficient| > delta; the "ttest" rule
    needs replicated runs and tests at the given level.
    """
    oracle = ensure_oracle(oracle)
    if stage1 not in ("classical", "interaction"):
        raise ValueError("stage1 must be 'classical' or 'interaction'")
    if decision_rule not in ("threshold", "ttest"):
        raise ValueError("decision_rule must be 'threshold' or 'ttest'")
    if decision_rule == "ttest" and replicates < 2:
        raise ValueError("the t-test rule needs replicates >= 2")
    start_calls = oracle.calls
    g = grouping.g

    gdesign = smallest_pb_design(g) if stage1 == "classical" else resolution_v_design(g)
    grouped_runs = np.repeat(gdesign.runs[:, :g], replicates, axis=0)
    X1 = _expand_grouped(grouped_runs, grouping)
    y1 = oracle.evaluate_rows(X1)
    n1 = X1.shape[0]

    terms = (TermSet.main_effects(g) if stage1 == "classical" else TermSet.with_two_fi(g))
    gd = Design(grouped_runs, Coding.TWO_LEVEL,
                names=tuple(f"g{j}" for j in range(1, g + 1)),
                provenance=f"group-stage1:{gdesign.provenance}")
    H1 = build_model_matrix(gd, terms)
    if decision_rule == "threshold":
        beta1, _ = least_squares(H1, y1)
        active_terms = _threshold_decision(beta1[1:], delta)
    else:
        flags, beta1 = _ttest_decision(H1.H, y1, level)
        active_terms = flags[1:]
    labels = H1.labels[1:]
    effects = {lab: float(b) for lab, b in zip(labels, beta1[1:])}

    carried_groups: set[int] = set()
    for flag, term in zip(active_terms, terms.terms[1:]):
        if flag:
            carried_groups.update(v for v, _ in term)
    carried_groups_t = tuple(sorted(carried_groups))
    carried_vars = tuple(v for j in carried_groups_t for v in grouping.members(j))

    if not carried_vars:
        outcome = ScreeningOutcome.build([], {}, truth, grouping.d, method=f"group-{stage1}")
        return GSRun(grouping, stage1, gd, effects, (), (), None, n1, 0,
                     oracle.calls - start_calls, outcome)

    k = len(carried_vars)
    sdesign = smallest_pb_design(k) if stage1 == "classical" else resolution_v_design(k)
    sruns = np.repeat(sdesign.runs[:, :k], replicates, axis=0)
    X2 = -np.ones((sruns.shape[0], grouping.d))
    for col, v in enumerate(carried_vars):
        X2[:, v - 1] = sruns[:, col]
    y2 = oracle.evaluate_rows(X2)
    n2 = X2.shape[0]

    terms2 = (TermSet.main_effects(k) if stage1 == "classical" else TermSet.with_two_fi(k))
    sd = Design(sruns, Coding.TWO_LEVEL,
                names=tuple(f"x{v}" for v in carried_vars),
                provenance=f"group-stage2:{sdesign.provenance}")
    H2 = build_model_matrix(sd, terms2)
    if decision_rule == "threshold":
        beta2, _ = least_squares(H2, y2)
        active2 = _threshold_decision(beta2[1:], delta)
    else:
        flags2, beta2 = _ttest_decision(H2.H, y2, level)
        active2 = flags2[1:]

    selected: set[int] = set()
    for flag, term in zip(active2, terms2.terms[1:]):
        if flag:
            selected.update(carried_vars[v - 1] for v, _ in term)
    stats_map = {"stage2_coefficient": tuple(float(b) for b in beta2[1:1 + k])}
    outcome = ScreeningOutcome.build(selected, stats_map, truth, grouping.d,
                                     method=f"group-{stage1}")
    return GSRun(grouping, stage1, gd, effects, carried_groups_t, carried_vars,
                 sd, n1, n2, oracle.calls - start_calls, outcome)


@dataclass(frozen=True)
class BifurcationResult:
    outcome: ScreeningOutcome
    runs: int
    trace: tuple[str, ...]


def sequential_bifurcation(
    oracle,
    d: int,
    delta: float = 0.0,
    ordering: Sequence[int] | None = None,
    foldover: bool = False,
    replicates: int = 1,
    level: float = 0.05,
    truth: set[int] | None = None,
) -> BifurcationResult:
    """Adaptive binary group splitting driven by output contrasts.

    Maintains points y(k) = output with the first k variables (in the
    given ordering) high and the rest low. A group (a, b] splits when
    y(b) - y(a) exceeds delta; the first subgroup size is the largest
    power of two below the group size, except even halves when d itself
    is a power of two. With ``foldover`` every assessment also runs the
    mirror image and uses half the difference, cancelling every
    even-order interaction. With ``replicates`` > 1 a one-sided
    two-sample t-test at ``level`` replaces the threshold rule.
    Assumes effect signs have been made nonnegative by level interchange.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    oracle = ensure_oracle(oracle)
    order = tuple(ordering) if ordering is not None else tuple(range(1, d + 1))
    if sorted(order) != list(range(1, d + 1)):
        raise ValueError("ordering must be a permutation of 1..d")
    start_calls = oracle.calls
    d_pow2 = d & (d - 1) == 0

    cache: dict[int, np.ndarray] = {}

    def point(k: int) -> np.ndarray:
        """Replicated group observations at prefix size k."""
        if k not in cache:
            x = -np.ones(d)
            x[[v - 1 for v in order[:k]]] = 1.0
            vals = []
            for _ in range(replicates):
                if foldover:
                    vals.append(0.5 * (oracle(x) - oracle(-x)))
                else:
                    vals.append(oracle(x))
            cache[k] = np.asarray(vals)
        return cache[k]

    def exceeds(a: int, b: int) -> bool:
        ya, yb = point(a), point(b)
        if replicates == 1:
            return float(yb[0] - ya[0]) > delta
        t, p = stats.ttest_ind(yb, ya, equal_var=True)
        return (t > 0) and (p / 2 < level)

    trace: list[str] = []
    active: set[int] = set()
    work = [(0, d)]
    while work:
        a, b = work.pop()
        size = b - a
        if not exceeds(a, b):
            trace.append(f"group ({a},{b}] inert")
            continue
        if size == 1:
            active.add(order[a])
            trace.append(f"variable x{order[a]} active")
            continue
        if d_pow2:
            first = size // 2
        else:
            first = 1
            while first * 2 < size:
                first *= 2
        trace.append(f"split ({a},{b}] at {a + first}")
        # examine the tail group first so runs grow left to right
        work.append((a + first, b))
        work.append((a, a + first))
    outcome = ScreeningOutcome.build(active, {}, truth, d, method="sequential-bifurcation")
    return BifurcationResult(outcome, oracle.calls - start_calls, tuple(trace))


@dataclass(frozen=True)
class IFFDResult:
    outcome: ScreeningOutcome
    runs: int
    stage_active_groups: tuple[tuple[int, ...], ...]
    membership_counts: tuple[int, ...]
    curvature: float | None


def iffd(
    oracle,
    d: int,
    g: int,
    stages: int,
    midlevel_prob: float = 0.25,
    sign_flip_prob: float = 0.5,
    delta: float | None = None,
    seed: int | None = None,
    truth: set[int] | None = None,
) -> IFFDResult:
    """Iterated fractional factorial screening with random regrouping.

    Each stage folds a g x g Hadamard matrix (g a power of two) into a
    2g-run design, assigns variables to groups and groups to columns at
    random, and flips each variable's level coding with the given
    probability. A stage is a curvature stage (all variables at the mid
    level 0) with probability ``midlevel_prob``; such stages contribute a
    curvature estimate but no group decisions. Variables active in every
    deciding stage's flagged groups form the selection. Group flagging
    uses |effect| > delta, or a relative tenth-of-maximum rule when delta
    is None.
    """
    if g < 1 or g & (g - 1) != 0:
        raise ValueError("group count g must be a power of two")
    if d < g:
        raise ValueError("need d >= g")
    oracle = ensure_oracle(oracle)
    rng = np.random.default_rng(seed)
    start_calls = oracle.calls
    Hm = hadamard(g).matrix.astype(float)
    D = np.vstack([Hm, -Hm])  # foldover: balanced, mains clear of 2fi

    stage_sets: list[tuple[int, ...]] = []
    mid_outputs: list[float] = []
    normal_means: list[float] = []
    counts = np.zeros(d, dtype=int)
    for _ in range(stages):
        if rng.random() < midlevel_prob:
            y0 = oracle(np.zeros(d))
            mid_outputs.append(y0)
            continue
        assign = rng.integers(1, g + 1, size=d)
        col_of_group = rng.permutation(g)
        signs = np.where(rng.random(d) < sign_flip_prob, -1.0, 1.0)
        X = np.empty((2 * g, d))
        for i in range(d):
            X[:, i] = signs[i] * D[:, col_of_group[assign[i] - 1]]
        y = oracle.evaluate_rows(X)
        normal_means.append(float(np.mean(y)))
        effects = D.T @ y / (2 * g)
        mags = np.abs(effects)
        if delta is not None:
            flags = mags > delta
        else:
            flags = mags > 0.1 * mags.max() if mags.max() > 0 else np.zeros(g, bool)
        flagged_cols = set(np.flatnonzero(flags))
        active_vars = tuple(
            i + 1 for i in range(d) if col_of_group[assign[i] - 1] in flagged_cols
        )
        stage_sets.append(active_vars)
        for v in active_vars:
            counts[v - 1] += 1

    if stage_sets:
        selected = set(stage_sets[0])
        for s in stage_sets[1:]:
            selected &= set(s)
    else:
        selected = set()
    curvature = None
    if mid_outputs and normal_means:
        curvature = float(np.mean(mid_outputs) - np.mean(normal_means))
    outcome = ScreeningOutcome.build(
        selected, {"stage_membership": tuple(int(c) for c in counts)}, truth, d,
        method="iffd")
    return IFFDResult(outcome, oracle.calls - start_calls, tuple(stage_sets),
                      tuple(int(c) for c in counts), curvature)
