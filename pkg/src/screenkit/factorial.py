"""Two- and three-level factorial screening designs.

Full and regular fractional factorials, Hadamard matrices (Sylvester and
Paley type I), Plackett-Burman designs, definitive screening designs,
systematic fractional replicate designs, one-factor-at-a-time plans and
foldovers.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .core import Coding, Design
from .errors import ConstructionError, InvalidGeneratorError, ResourceLimitError

FULL_FACTORIAL_MAX_D = 20  # 2^d rows beyond this is refused

# Canonical 12-run Plackett-Burman design, stored verbatim so golden tests
# are bit-exact rather than depending on a particular Hadamard normalization.
PB12_RUNS = np.array([
    [-1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1],
    [-1, -1, -1, -1, -1, +1, +1, +1, +1, +1, +1],
    [-1, -1, +1, +1, +1, -1, -1, -1, +1, +1, +1],
    [-1, +1, -1, +1, +1, -1, +1, +1, -1, -1, +1],
    [-1, +1, +1, -1, +1, +1, -1, +1, -1, +1, -1],
    [-1, +1, +1, +1, -1, +1, +1, -1, +1, -1, -1],
    [+1, -1, +1, +1, -1, -1, +1, +1, -1, +1, -1],
    [+1, -1, +1, -1, +1, +1, +1, -1, -1, -1, +1],
    [+1, -1, -1, +1, +1, +1, -1, +1, +1, -1, -1],
    [+1, +1, +1, -1, -1, -1, -1, +1, +1, -1, +1],
    [+1, +1, -1, +1, -1, +1, -1, -1, -1, +1, +1],
    [+1, +1, -1, -1, +1, -1, +1, -1, +1, +1, -1],
], dtype=float)

# Canonical definitive screening design for d=6: six mirrored pairs plus a
# centre run, with the top-half rows forming a conference matrix.
DSD6_RUNS = np.array([
    [0, +1, -1, -1, -1, -1],
    [0, -1, +1, +1, +1, +1],
    [+1, 0, -1, +1, +1, -1],
    [-1, 0, +1, -1, -1, +1],
    [-1, -1, 0, +1, -1, -1],
    [+1, +1, 0, -1, +1, +1],
    [-1, +1, +1, 0, +1, -1],
    [+1, -1, -1, 0, -1, +1],
    [+1, -1, +1, -1, 0, -1],
    [-1, +1, -1, +1, 0, +1],
    [+1, +1, +1, +1, -1, 0],
    [-1, -1, -1, -1, +1, 0],
    [0, 0, 0, 0, 0, 0],
], dtype=float)

# Documented generator set for the 16-run, 11-variable resolution III
# fraction: every main effect is aliased with at most four two-variable
# interactions (tested property).
GENERATORS_11_IN_16: tuple[tuple[int, ...], ...] = (
    (1, 2, 4),
    (1, 3, 5),
    (2, 3, 6),
    (2, 3, 7, 8),
    (1, 3, 7, 9),
    (3, 7, 10),
    (1, 2, 3, 11),
)


def full_factorial(d: int) -> Design:
    """All 2^d sign combinations, x1 slowest and xd fastest."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d > FULL_FACTORIAL_MAX_D:
        raise ResourceLimitError(f"full factorial with d={d} needs 2^{d} runs; limit is d <= {FULL_FACTORIAL_MAX_D}")
    n = 2 ** d
    runs = np.empty((n, d))
    for i in range(d):
        period = 2 ** (d - 1 - i)
        col = np.repeat(np.tile([-1.0, 1.0], n // (2 * period)), period)
        runs[:, i] = col
    return Design(runs, Coding.TWO_LEVEL, provenance=f"full-factorial:d={d}")


def _words_to_masks(words: Sequence[Iterable[int]], d: int) -> list[int]:
    masks = []
    for w in words:
        mask = 0
        for v in w:
            v = int(v)
            if not 1 <= v <= d:
                raise InvalidGeneratorError(f"word variable {v} outside 1..{d}")
            if mask >> (v - 1) & 1:
                raise InvalidGeneratorError(f"repeated variable {v} in word")
            mask |= 1 << (v - 1)
        if mask == 0:
            raise InvalidGeneratorError("empty defining word")
        masks.append(mask)
    return masks


def _gf2_rank(masks: Sequence[int]) -> int:
    basis: list[int] = []
    for m in masks:
        for b in basis:
            m = min(m, m ^ b)
        if m:
            basis.append(m)
            basis.sort(reverse=True)
    return len(basis)


def _mask_to_word(mask: int) -> tuple[int, ...]:
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


@dataclass(frozen=True)
class DefiningWordSet:
    """Independent defining words and the 2^q - 1 products they generate."""

    words: tuple[tuple[int, ...], ...]
    signs: tuple[int, ...]
    d: int

    @staticmethod
    def create(d: int, words: Sequence[Iterable[int]], signs: Sequence[int] | None = None) -> "DefiningWordSet":
        masks = _words_to_masks(words, d)
        if _gf2_rank(masks) != len(masks):
            raise InvalidGeneratorError("defining words are dependent (one is a product of others)")
        sgn = tuple(int(s) for s in (signs if signs is not None else [1] * len(masks)))
        if len(sgn) != len(masks) or any(s not in (-1, 1) for s in sgn):
            raise InvalidGeneratorError("signs must be +/-1, one per word")
        return DefiningWordSet(tuple(_mask_to_word(m) for m in masks), sgn, d)

    @property
    def q(self) -> int:
        return len(self.words)

    def relation(self) -> tuple[tuple[tuple[int, ...], int], ...]:
        """All 2^q - 1 signed products of the defining words."""
        masks = _words_to_masks(self.words, self.d)
        out = []
        for subset in range(1, 2 ** self.q):
            m, s = 0, 1
            for j in range(self.q):
                if subset >> j & 1:
                    m ^= masks[j]
                    s *= self.signs[j]
            out.append((_mask_to_word(m), s))
        return tuple(out)


@dataclass(frozen=True)
class AliasReport:
    """Defining relation, resolution and per-effect alias strings."""

    defining_relation: tuple[tuple[tuple[int, ...], int], ...]
    resolution: int | str
    aliased_pairs: tuple[tuple[str, tuple[tuple[int, str], ...]], ...]

    def to_dict(self) -> dict:
        return {
            "defining_relation": [
                {"word": list(w), "sign": s} for w, s in self.defining_relation
            ],
            "resolution": self.resolution,
            "aliased_pairs": [
                {"effect": e, "aliases": [{"sign": s, "effect": a} for s, a in al]}
                for e, al in self.aliased_pairs
            ],
        }


def _effect_label(word: tuple[int, ...]) -> str:
    return "I" if not word else "*".join(f"x{v}" for v in word)


def _alias_strings(relation, d: int, max_order: int = 2):
    """Alias string of the mean, mains and 2fi against the defining relation."""
    rel_masks = [(sum(1 << (v - 1) for v in w), s) for w, s in relation]
    effects: list[tuple[int, ...]] = [()]
    effects += [(i,) for i in range(1, d + 1)]
    if max_order >= 2:
        effects += list(combinations(range(1, d + 1), 2))
    pairs = []
    for e in effects:
        emask = sum(1 << (v - 1) for v in e)
        aliases = tuple(
            (s, _effect_label(_mask_to_word(emask ^ m))) for m, s in rel_masks
        )
        pairs.append((_effect_label(e), aliases))
    return tuple(pairs)


def regular_fraction(
    d: int,
    words: Sequence[Iterable[int]],
    signs: Sequence[int] | None = None,
) -> tuple[Design, AliasReport]:
    """Regular 2^(d-q) fraction defined by q independent words.

    Every run satisfies prod_{i in word_j} x_i = sign_j. Rows come out in
    the full-factorial order restricted to the fraction.
    """
    ws = DefiningWordSet.create(d, words, signs)
    if ws.q >= d:
        raise InvalidGeneratorError("need q < d defining words")
    full = full_factorial(d).runs
    keep = np.ones(len(full), dtype=bool)
    for w, s in zip(ws.words, ws.signs):
        prod = full[:, [v - 1 for v in w]].prod(axis=1)
        keep &= prod == s
    runs = full[keep]
    relation = ws.relation()
    resolution = min(len(w) for w, _ in relation)
    report = AliasReport(relation, resolution, _alias_strings(relation, d))
    design = Design(
        runs,
        Coding.TWO_LEVEL,
        provenance=f"regular-fraction:d={d},words={';'.join(''.join(map(str, w)) if max(w) <= 9 else ','.join(map(str, w)) for w in ws.words)}",
    )
    return design, report


@dataclass(frozen=True)
class HadamardMatrix:
    """Square +/-1 matrix C with C^T C = n I, exact in integer arithmetic."""

    order: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=int)
        if m.shape != (self.order, self.order) or not np.isin(m, (-1, 1)).all():
            raise ConstructionError("Hadamard matrix must be square with +/-1 entries")
        if not np.array_equal(m.T @ m, self.order * np.eye(self.order, dtype=int)):
            raise ConstructionError(f"matrix of order {self.order} is not Hadamard")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _jacobsthal(q: int) -> np.ndarray:
    residues = {pow(i, 2, q) for i in range(1, q)}

    def chi(a: int) -> int:
        a %= q
        if a == 0:
            return 0
        return 1 if a in residues else -1

    return np.array([[chi(j - i) for j in range(q)] for i in range(q)], dtype=int)


def _paley_hadamard(q: int) -> np.ndarray:
    # q prime, q = 3 (mod 4): border the Jacobsthal matrix plus identity
    Q = _jacobsthal(q)
    n = q + 1
    H = np.ones((n, n), dtype=int)
    H[1:, 0] = -1
    H[1:, 1:] = Q + np.eye(q, dtype=int)
    return H


def hadamard(n: int) -> HadamardMatrix:
    """Hadamard matrix via Sylvester doubling and Paley's construction.

    Supported orders: 1, 2, and multiples of 4 reachable by doubling or by
    bordering a quadratic-residue matrix for n-1 prime with n-1 = 3 (mod 4).
    """
    if n == 1:
        return HadamardMatrix(1, np.array([[1]]))
    if n == 2:
        return HadamardMatrix(2, np.array([[1, 1], [1, -1]]))
    if n % 4 != 0:
        raise ConstructionError(f"no Hadamard matrix of order {n}: order must be 1, 2 or a multiple of 4")
    if _is_prime(n - 1) and (n - 1) % 4 == 3:
        return HadamardMatrix(n, _paley_hadamard(n - 1))
    if n % 2 == 0:
        try:
            half = hadamard(n // 2).matrix
        except ConstructionError:
            raise ConstructionError(
                f"order {n} not covered: supported are 1, 2 and multiples of 4 built from "
                f"Sylvester doubling or Paley type I (e.g. 4, 8, 12, 16, 20, 24, 32, 40, 48)"
            ) from None
        return HadamardMatrix(n, np.block([[half, half], [half, -half]]))
    raise ConstructionError(f"order {n} not constructible here")


def plackett_burman(n: int) -> Design:
    """Orthogonal two-level design for d = n-1 variables in n runs.

    n=12 returns the stored canonical array; other orders normalize a
    Hadamard matrix (first column all +1) and drop that column.
    """
    if n == 12:
        return Design(PB12_RUNS, Coding.TWO_LEVEL, provenance="plackett-burman:n=12,canonical")
    H = hadamard(n).matrix
    flip = np.where(H[:, 0] < 0, -1, 1)
    normalized = H * flip[:, None]
    return Design(normalized[:, 1:].astype(float), Coding.TWO_LEVEL, provenance=f"plackett-burman:n={n}")


def _conference_paley(d: int) -> np.ndarray | None:
    q = d - 1
    if not (_is_prime(q) and q % 2 == 1):
        return None
    Q = _jacobsthal(q)
    C = np.zeros((d, d), dtype=int)
    C[0, 1:] = 1
    C[1:, 0] = 1 if q % 4 == 1 else -1
    C[1:, 1:] = Q
    return C


def _conference_search(d: int, seed: int | None, restarts: int = 20) -> np.ndarray:
    """Coordinate exchange on the top-half matrix maximizing |C^T C|."""
    rng = np.random.default_rng(seed)
    best, best_det = None, -np.inf
    off_diag = [(i, j) for i in range(d) for j in range(d) if i != j]
    for r in range(restarts):
        sub = np.random.default_rng(rng.integers(2 ** 63))
        C = np.where(sub.random((d, d)) < 0.5, 1, -1)
        np.fill_diagonal(C, 0)
        improved = True
        while improved:
            improved = False
            order = sub.permutation(len(off_diag))
            sign, logdet = np.linalg.slogdet(C.T @ C)
            current = logdet if sign > 0 else -np.inf
            for idx in order:
                i, j = off_diag[idx]
                C[i, j] = -C[i, j]
                sign, logdet = np.linalg.slogdet(C.T @ C)
                cand = logdet if sign > 0 else -np.inf
                if cand > current + 1e-12:
                    current = cand
                    improved = True
                else:
                    C[i, j] = -C[i, j]
        sign, logdet = np.linalg.slogdet(C.T @ C)
        if sign > 0 and logdet > best_det:
            best, best_det = C.copy(), logdet
    if best is None:
        raise ConstructionError(f"mirrored-pair structure search failed for d={d}")
    return best


def definitive_screening(d: int, seed: int | None = None) -> Design:
    """Three-level design of d mirrored pairs plus one centre run (n = 2d+1).

    Pair j has variable j at 0; the pair's second run negates the first.
    Main-effect columns are exactly orthogonal to the intercept, every
    quadratic column and every two-variable interaction column.
    """
    if d < 4 or d % 2 != 0:
        raise ValueError("definitive screening designs require even d >= 4")
    if d == 6:
        return Design(DSD6_RUNS, Coding.THREE_LEVEL, provenance="dsd:d=6,canonical")
    C = _conference_paley(d)
    tag = f"dsd:d={d},paley"
    if C is None:
        C = _conference_search(d, seed)
        tag = f"dsd:d={d},search,seed={seed}"
    runs = np.zeros((2 * d + 1, d))
    runs[0:2 * d:2] = C
    runs[1:2 * d:2] = -C
    _verify_dsd_invariants(runs.astype(int), d)
    return Design(runs, Coding.THREE_LEVEL, provenance=tag)


def _verify_dsd_invariants(runs: np.ndarray, d: int) -> None:
    X = runs.astype(np.int64)
    for i in range(d):
        if X[:, i].sum() != 0:
            raise ConstructionError(f"column {i + 1} does not sum to zero")
        for j in range(d):
            if i != j and (X[:, i] * X[:, j] ** 2).sum() != 0:
                raise ConstructionError(f"main x{i + 1} not orthogonal to quadratic x{j + 1}^2")
        for j, k in combinations(range(d), 2):
            if (X[:, i] * X[:, j] * X[:, k]).sum() != 0:
                raise ConstructionError(
                    f"main x{i + 1} not orthogonal to interaction x{j + 1}*x{k + 1}"
                )


def ofaat(d: int) -> Design:
    """One-factor-at-a-time plan: the all-low run, then one-high runs."""
    if d < 1:
        raise ValueError("d must be >= 1")
    runs = -np.ones((d + 1, d))
    for i in range(d):
        runs[i + 1, i] = 1.0
    return Design(runs, Coding.TWO_LEVEL, provenance=f"ofaat:d={d}")


def sfrd(d: int) -> Design:
    """Systematic fractional replicate design in the fixed 2d+2 run order.

    Row 1 all low; rows 2..d+1 one variable high; rows d+2..2d+1 one
    variable low; row 2d+2 all high.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    runs = np.empty((2 * d + 2, d))
    runs[0] = -1.0
    for i in range(d):
        runs[1 + i] = -1.0
        runs[1 + i, i] = 1.0
    for i in range(d):
        runs[1 + d + i] = 1.0
        runs[1 + d + i, i] = -1.0
    runs[2 * d + 1] = 1.0
    return Design(runs, Coding.TWO_LEVEL, provenance=f"sfrd:d={d}")


def foldover(design: Design) -> Design:
    """Augment a design with its sign-negated copy: [X; -X]."""
    if design.coding not in (Coding.TWO_LEVEL, Coding.THREE_LEVEL):
        raise ValueError("foldover requires two-level or three-level coding")
    runs = np.vstack([design.runs, -design.runs])
    return Design(runs, design.coding, design.names, provenance=f"foldover({design.provenance})")
