"""Shared data model for screening experiments.

Designs, polynomial term sets, model matrices, least squares, alias
matrices, half-normal plot data and the screening quality metrics
(sensitivity, type I error rate, false discovery rate).

Variable indices in user-facing structures (terms, selected sets) are
1-based, matching the x1..xd column naming used everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy import linalg as sla
from scipy.stats import norm

from .errors import SingularMatrixError

RANK_TOL = 1e-8  # singular values below RANK_TOL * s_max count as zero

Term = tuple[tuple[int, int], ...]  # ((variable, power), ...), 1-based, empty = intercept


class Coding(str, Enum):
    """Value set declared for the entries of a design."""

    TWO_LEVEL = "two-level"            # {-1, +1}
    THREE_LEVEL = "three-level"        # {-1, 0, +1}
    UNIT = "unit-interval"             # [0, 1]
    SYMMETRIC = "symmetric-interval"   # [-1, 1]


def _check_coding(runs: np.ndarray, coding: Coding) -> None:
    if coding is Coding.TWO_LEVEL:
        ok = np.isin(runs, (-1.0, 1.0)).all()
    elif coding is Coding.THREE_LEVEL:
        ok = np.isin(runs, (-1.0, 0.0, 1.0)).all()
    elif coding is Coding.UNIT:
        ok = ((runs >= 0.0) & (runs <= 1.0)).all()
    else:
        ok = ((runs >= -1.0) & (runs <= 1.0)).all()
    if not ok:
        raise ValueError(f"design entries violate {coding.value} coding")


@dataclass(frozen=True)
class Design:
    """An n x d array of variable settings plus level-coding metadata."""

    runs: np.ndarray
    coding: Coding = Coding.SYMMETRIC
    names: tuple[str, ...] = ()
    provenance: str = ""

    def __post_init__(self):
        runs = np.array(self.runs, dtype=float)
        if runs.ndim != 2 or runs.shape[0] < 1 or runs.shape[1] < 1:
            raise ValueError("design requires an n x d array with n, d >= 1")
        _check_coding(runs, self.coding)
        names = tuple(self.names) or tuple(f"x{i}" for i in range(1, runs.shape[1] + 1))
        if len(names) != runs.shape[1]:
            raise ValueError("number of names must equal number of variables")
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        runs.setflags(write=False)
        object.__setattr__(self, "runs", runs)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.runs.shape[0]

    @property
    def d(self) -> int:
        return self.runs.shape[1]


def term_label(term: Term, names: Sequence[str] | None = None) -> str:
    """Human-readable label for a monomial, e.g. ``1``, ``x2``, ``x1*x3``, ``x4^2``."""
    if not term:
        return "1"

    def name(i: int) -> str:
        return names[i - 1] if names is not None else f"x{i}"

    parts = [name(v) if p == 1 else f"{name(v)}^{p}" for v, p in term]
    return "*".join(parts)


def _normalize_term(term: Iterable[tuple[int, int]] | Iterable[int]) -> Term:
    """Accept ((var, power), ...) or a plain iterable of variables."""
    pairs: dict[int, int] = {}
    for item in term:
        if isinstance(item, tuple):
            v, p = item
        else:
            v, p = int(item), 1
        if v < 1:
            raise IndexError(f"variable index {v} is not 1-based")
        if p < 1:
            raise ValueError("powers must be >= 1")
        pairs[v] = pairs.get(v, 0) + p
    return tuple(sorted(pairs.items()))


@dataclass(frozen=True)
class TermSet:
    """An ordered set of monomials over the design variables.

    The canonical builder order is intercept, main effects ascending,
    two-variable interactions lexicographic, quadratics ascending; custom
    orders are allowed as long as the intercept, if present, comes first.
    """

    terms: tuple[Term, ...]

    def __post_init__(self):
        terms = tuple(_normalize_term(t) for t in self.terms)
        if len(set(terms)) != len(terms):
            raise ValueError("duplicate monomials in term set")
        if () in terms and terms[0] != ():
            raise ValueError("intercept, when present, must be the first term")
        object.__setattr__(self, "terms", terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @property
    def has_intercept(self) -> bool:
        return bool(self.terms) and self.terms[0] == ()

    @property
    def has_mains(self) -> bool:
        return any(len(t) == 1 and t[0][1] == 1 for t in self.terms)

    @property
    def has_two_fi(self) -> bool:
        return any(len(t) == 2 and all(p == 1 for _, p in t) for t in self.terms)

    @property
    def has_quadratics(self) -> bool:
        return any(len(t) == 1 and t[0][1] == 2 for t in self.terms)

    def labels(self, names: Sequence[str] | None = None) -> tuple[str, ...]:
        return tuple(term_label(t, names) for t in self.terms)

    def max_variable(self) -> int:
        return max((v for t in self.terms for v, _ in t), default=0)

    def variables_of(self, index: int) -> tuple[int, ...]:
        """Variables appearing in term ``index`` (empty for the intercept)."""
        return tuple(v for v, _ in self.terms[index])

    @staticmethod
    def of(terms: Iterable[Iterable]) -> "TermSet":
        return TermSet(tuple(tuple(t) if not isinstance(t, tuple) else t for t in map(tuple, terms)))

    @staticmethod
    def intercept_only() -> "TermSet":
        return TermSet(((),))

    @staticmethod
    def main_effects(d: int, intercept: bool = True) -> "TermSet":
        terms: list[Term] = [()] if intercept else []
        terms += [((i, 1),) for i in range(1, d + 1)]
        return TermSet(tuple(terms))

    @staticmethod
    def with_two_fi(d: int, intercept: bool = True) -> "TermSet":
        terms = list(TermSet.main_effects(d, intercept).terms)
        terms += [((i, 1), (j, 1)) for i in range(1, d + 1) for j in range(i + 1, d + 1)]
        return TermSet(tuple(terms))

    @staticmethod
    def full_quadratic(d: int, intercept: bool = True) -> "TermSet":
        terms = list(TermSet.with_two_fi(d, intercept).terms)
        terms += [((i, 2),) for i in range(1, d + 1)]
        return TermSet(tuple(terms))

    @staticmethod
    def interactions(d: int, order: int) -> "TermSet":
        """All products of ``order`` distinct variables, lexicographic."""
        from itertools import combinations

        return TermSet(tuple(tuple((v, 1) for v in c) for c in combinations(range(1, d + 1), order)))


@dataclass(frozen=True)
class ModelMatrix:
    """Numeric expansion H of a term set evaluated row-wise on a design."""

    H: np.ndarray
    terms: TermSet
    design: Design

    def __post_init__(self):
        H = np.array(self.H, dtype=float)
        if H.shape != (self.design.n, len(self.terms)):
            raise ValueError("model matrix shape must be n x p")
        H.setflags(write=False)
        object.__setattr__(self, "H", H)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.terms.labels(self.design.names)


def build_model_matrix(design: Design, terms: TermSet) -> ModelMatrix:
    """Evaluate each monomial on every run of the design.

    Raises IndexError if a term references a variable beyond the design.
    """
    if terms.max_variable() > design.d:
        raise IndexError(
            f"term set references variable x{terms.max_variable()} but design has d={design.d}"
        )
    n = design.n
    H = np.empty((n, len(terms)))
    for u, term in enumerate(terms):
        col = np.ones(n)
        for v, p in term:
            col = col * design.runs[:, v - 1] ** p
        H[:, u] = col
    return ModelMatrix(H, terms, design)


class LeastSquaresFit(NamedTuple):
    beta: np.ndarray
    rss: float


def _as_matrix(H) -> tuple[np.ndarray, tuple[str, ...] | None]:
    if isinstance(H, ModelMatrix):
        return H.H, H.labels
    return np.asarray(H, dtype=float), None


def _check_full_rank(Hm: np.ndarray, labels: tuple[str, ...] | None) -> None:
    p = Hm.shape[1]
    svals = np.linalg.svd(Hm, compute_uv=False)
    smax = svals[0] if svals.size else 0.0
    rank = int(np.sum(svals > RANK_TOL * smax)) if smax > 0 else 0
    if rank < p:
        # column pivoting puts the dependent columns last
        _, _, piv = sla.qr(Hm, pivoting=True, mode="economic")
        dep = tuple(
            labels[j] if labels is not None else f"column {j}" for j in sorted(piv[rank:])
        )
        raise SingularMatrixError(
            f"model matrix is rank deficient (rank {rank} < {p}); "
            f"dependent columns: {', '.join(dep)}",
            dependent_columns=dep,
        )


def least_squares(H, y: np.ndarray) -> LeastSquaresFit:
    """Ordinary least squares estimates and residual sum of squares.

    H must have full column rank (checked against RANK_TOL); otherwise a
    SingularMatrixError naming the dependent columns is raised.
    """
    Hm, labels = _as_matrix(H)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != Hm.shape[0]:
        raise ValueError("response length must equal the number of runs")
    _check_full_rank(Hm, labels)
    beta, _, _, _ = np.linalg.lstsq(Hm, y, rcond=None)
    resid = y - Hm @ beta
    return LeastSquaresFit(beta=beta, rss=float(resid @ resid))


def alias_matrix(H, H_tilde) -> np.ndarray:
    """Bias pattern A = (H^T H)^(-1) H^T H_tilde of omitted terms.

    The expectation of the fitted coefficients is beta + A beta_tilde, so
    row u of A gives the contamination of estimate u by each omitted term.
    """
    Hm, labels = _as_matrix(H)
    Tm, _ = _as_matrix(H_tilde)
    if Hm.shape[0] != Tm.shape[0]:
        raise ValueError("both matrices must be evaluated on the same runs")
    if isinstance(H, ModelMatrix) and isinstance(H_tilde, ModelMatrix):
        if H.design.runs.shape != H_tilde.design.runs.shape or not np.array_equal(
            H.design.runs, H_tilde.design.runs
        ):
            raise ValueError("both model matrices must share the same design")
    _check_full_rank(Hm, labels)
    return np.linalg.solve(Hm.T @ Hm, Hm.T @ Tm)


class Metrics(NamedTuple):
    sensitivity: float  # share of truly active variables detected
    type_i: float       # share of inactive variables declared active
    fdr: float          # share of declared-active variables that are inactive


def screening_metrics(selected: Iterable[int], truth: Iterable[int], d: int) -> Metrics:
    """Quality metrics of a selection against a known active set.

    Degenerate conventions: sensitivity is 1 when the truth is empty, the
    false discovery rate is 0 when nothing is selected, and the type I
    error rate is 0 when every variable is truly active.
    """
    sel = frozenset(int(i) for i in selected)
    tru = frozenset(int(i) for i in truth)
    universe = frozenset(range(1, d + 1))
    if not sel <= universe or not tru <= universe:
        raise ValueError("selected and truth must be subsets of {1..d}")
    inactive = universe - tru
    sens = 1.0 if not tru else len(sel & tru) / len(tru)
    fdr = 0.0 if not sel else len(sel & inactive) / len(sel)
    type_i = 0.0 if not inactive else len(sel & inactive) / len(inactive)
    return Metrics(sensitivity=sens, type_i=type_i, fdr=fdr)


@dataclass(frozen=True)
class ScreeningOutcome:
    """Result of a screening analysis: the selected set plus statistics.

    ``selected`` and ``truth`` hold 1-based variable indices. ``statistics``
    maps a score name to one value per variable (or per term, when noted).
    """

    selected: frozenset[int]
    statistics: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    truth: frozenset[int] | None = None
    metrics: Metrics | None = None
    method: str = ""

    @staticmethod
    def build(
        selected: Iterable[int],
        statistics: Mapping[str, Sequence[float]] | None = None,
        truth: Iterable[int] | None = None,
        d: int | None = None,
        method: str = "",
    ) -> "ScreeningOutcome":
        sel = frozenset(int(i) for i in selected)
        stats = {k: tuple(float(x) for x in v) for k, v in (statistics or {}).items()}
        tru = None if truth is None else frozenset(int(i) for i in truth)
        metrics = None
        if tru is not None:
            if d is None:
                raise ValueError("d is required to compute metrics against a truth set")
            metrics = screening_metrics(sel, tru, d)
        return ScreeningOutcome(sel, stats, tru, metrics, method)


def half_normal_data(estimates: Sequence[float]) -> np.ndarray:
    """Half-normal plot data: quantile vs ordered absolute estimate.

    Returns a (p, 2) array whose i-th row (1-based) pairs the quantile
    Phi^-1(0.5 + 0.5*(i - 0.5)/p) with the i-th smallest |estimate|.
    """
    a = np.abs(np.asarray(estimates, dtype=float).reshape(-1))
    if a.size < 1:
        raise ValueError("need at least one estimate")
    p = a.size
    q = norm.ppf(0.5 + 0.5 * (np.arange(1, p + 1) - 0.5) / p)
    return np.column_stack([q, np.sort(a)])
