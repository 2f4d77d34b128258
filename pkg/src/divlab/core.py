"""Ground sets, subset bitmasks, tabulated diversities and distortion.

Every subset-indexed table is a dense float array of length ``2**n``; the
subset with bitmask ``m`` contains element ``i`` iff bit ``i`` of ``m`` is set.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

MAX_ELEMENTS = 24
EPS_DIV = 1e-9


class DiversityError(ValueError):
    """Raised for structurally malformed inputs (not axiom violations)."""


class IncompleteTableError(DiversityError):
    pass


# ---------------------------------------------------------------------------
# subset helpers
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def popcounts(n: int) -> np.ndarray:
    """Cardinality of every subset of an n-element set, indexed by mask."""
    counts = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        counts[1 << i: 1 << (i + 1)] = counts[: 1 << i] + 1
    counts.setflags(write=False)
    return counts


def subset_sum(values: np.ndarray, n: int) -> np.ndarray:
    """out[A] = sum of values[B] over B subset of A."""
    out = np.array(values, dtype=float, copy=True)
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 1, :] += view[:, 0, :]
    return out


def superset_sum(values: np.ndarray, n: int) -> np.ndarray:
    """out[A] = sum of values[B] over B superset of A."""
    out = np.array(values, dtype=float, copy=True)
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 0, :] += view[:, 1, :]
    return out


def superset_min(values: np.ndarray, n: int) -> np.ndarray:
    """out[A] = min of values[B] over B superset of A."""
    out = np.array(values, dtype=float, copy=True)
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        np.minimum(view[:, 0, :], view[:, 1, :], out=view[:, 0, :])
    return out


def iter_bits(mask: int) -> Iterable[int]:
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def cuts(a: int, u: int, full: int) -> bool:
    """True when the bipartition {u, full - u} separates the members of a."""
    return bool(a & u) and bool(a & (full ^ u))


# ---------------------------------------------------------------------------
# ground sets and tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundSet:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise DiversityError("ground set must be nonempty")
        if len(set(labels)) != len(labels):
            raise DiversityError(f"duplicate labels in ground set: {labels}")
        if any(not x for x in labels):
            raise DiversityError("labels must be nonempty strings")
        if len(labels) > MAX_ELEMENTS:
            raise DiversityError(f"at most {MAX_ELEMENTS} elements supported, got {len(labels)}")

    @classmethod
    def of_size(cls, n: int) -> "GroundSet":
        return cls(tuple(chr(ord("a") + i) if n <= 26 else f"x{i}" for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    @property
    def size(self) -> int:
        return 1 << self.n

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DiversityError(f"unknown label {label!r}") from None

    def mask(self, labels: Iterable[str]) -> int:
        m = 0
        for x in labels:
            m |= 1 << self.index(x)
        return m

    def members(self, mask: int) -> tuple[str, ...]:
        if mask >> self.n:
            raise DiversityError(f"mask {mask:#x} has bits outside the ground set")
        return tuple(self.labels[i] for i in iter_bits(mask))

    def check_mask(self, mask: int) -> int:
        if mask < 0 or mask >> self.n:
            raise DiversityError(f"mask {mask:#x} has bits outside the ground set")
        return mask


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TabulatedDiversity:
    """Full table of a diversity on a finite ground set."""

    ground: GroundSet
    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values)
        if arr.shape != (self.ground.size,):
            raise IncompleteTableError(
                f"table has shape {arr.shape}, expected ({self.ground.size},)")
        if np.isnan(arr).any():
            missing = [self.ground.members(int(m)) for m in np.flatnonzero(np.isnan(arr))[:5]]
            raise IncompleteTableError(f"table is missing entries, e.g. {missing}")
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_function(cls, ground: GroundSet, fn: Callable[[int], float]) -> "TabulatedDiversity":
        return cls(ground, [fn(m) for m in range(ground.size)])

    def __call__(self, subset) -> float:
        if isinstance(subset, (int, np.integer)):
            return float(self.values[self.ground.check_mask(int(subset))])
        return float(self.values[self.ground.mask(subset)])

    def scaled(self, alpha: float) -> "TabulatedDiversity":
        return TabulatedDiversity(self.ground, alpha * self.values)

    def __add__(self, other: "TabulatedDiversity") -> "TabulatedDiversity":
        if other.ground != self.ground:
            raise DiversityError("ground sets differ")
        return TabulatedDiversity(self.ground, self.values + other.values)

    def __eq__(self, other):
        if not isinstance(other, TabulatedDiversity):
            return NotImplemented
        return self.ground == other.ground and np.array_equal(self.values, other.values)

    def allclose(self, other: "TabulatedDiversity", atol: float = 1e-12) -> bool:
        return self.ground == other.ground and bool(
            np.allclose(self.values, other.values, rtol=0.0, atol=atol))


@dataclass(frozen=True, eq=False)
class TabulatedMetric:
    ground: GroundSet
    d: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.d)
        n = self.ground.n
        if arr.shape != (n, n):
            raise DiversityError(f"metric matrix has shape {arr.shape}, expected ({n}, {n})")
        if not np.isfinite(arr).all():
            raise DiversityError("metric entries must be finite")
        object.__setattr__(self, "d", arr)

    def __call__(self, x, y) -> float:
        i = x if isinstance(x, int) else self.ground.index(x)
        j = y if isinstance(y, int) else self.ground.index(y)
        return float(self.d[i, j])

    def violations(self, eps: float = EPS_DIV) -> list[tuple]:
        d, out = self.d, []
        n = self.ground.n
        for i in range(n):
            if abs(d[i, i]) > eps:
                out.append(("diagonal", i, i, d[i, i]))
        bad = np.argwhere(np.abs(d - d.T) > eps)
        out += [("symmetry", int(i), int(j), d[i, j] - d[j, i]) for i, j in bad if i < j]
        bad = np.argwhere(d < -eps)
        out += [("negative", int(i), int(j), d[i, j]) for i, j in bad]
        # d[i,k] - d[i,j] - d[j,k] over all triples
        excess = d[:, None, :] - d[:, :, None] - d[None, :, :]
        for i, j, k in np.argwhere(excess > eps):
            out.append(("triangle", int(i), int(j), int(k), float(excess[i, j, k])))
        return out

    def is_valid(self, eps: float = EPS_DIV) -> bool:
        return not self.violations(eps)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str              # "d1", "strict", "monotone" or "d2"
    subsets: tuple[int, ...]
    amount: float

    def describe(self, ground: GroundSet) -> dict:
        return {"kind": self.kind,
                "subsets": [list(ground.members(s)) for s in self.subsets],
                "amount": self.amount}


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: list[Violation] = field(default_factory=list)


def _d1_violations(t: TabulatedDiversity, eps: float, strict: bool) -> list[Violation]:
    v, n = t.values, t.ground.n
    sizes = popcounts(n)
    out = []
    for m in np.flatnonzero((sizes <= 1) & (np.abs(v) > eps)):
        out.append(Violation("d1", (int(m),), float(v[m])))
    for m in np.flatnonzero((sizes >= 2) & (v < -eps)):
        out.append(Violation("d1", (int(m),), float(v[m])))
    if strict:
        for m in np.flatnonzero((sizes >= 2) & (v <= eps)):
            out.append(Violation("strict", (int(m),), float(v[m])))
    return out


def _monotone_violations(t: TabulatedDiversity, eps: float) -> list[Violation]:
    v, n = t.values, t.ground.n
    masks = np.arange(t.ground.size)
    out = []
    for i in range(n):
        small = masks[(masks >> i) & 1 == 0]
        big = small | (1 << i)
        drop = v[small] - v[big]
        for k in np.flatnonzero(drop > eps):
            out.append(Violation("monotone", (int(small[k]), int(big[k])), float(drop[k])))
    return out


def _d2_violations(t: TabulatedDiversity, eps: float) -> list[Violation]:
    """Full enumeration of d(A|B) + d(B|C) >= d(A|C) for nonempty B."""
    v = t.values
    masks = np.arange(t.ground.size)
    ac = v[masks[:, None] | masks[None, :]]
    out = []
    for b in range(1, t.ground.size):
        lhs = v[masks | b]
        excess = ac - lhs[:, None] - lhs[None, :]
        for a, c in np.argwhere(excess > eps):
            out.append(Violation("d2", (int(a), b, int(c)), float(excess[a, c])))
    return out


def validate_diversity(t: TabulatedDiversity, eps: float = EPS_DIV,
                       strict: bool = False) -> ValidationReport:
    """Check relaxed D1, monotonicity and the D2 triangle axiom.

    Monotonicity violations are reported on covering pairs ``(A, A + x)``;
    D2 violations carry the full witnessing triple ``(A, B, C)``.
    ``strict=True`` additionally demands positivity on sets of size >= 2.
    """
    violations = (_d1_violations(t, eps, strict) + _monotone_violations(t, eps)
                  + _d2_violations(t, eps))
    return ValidationReport(not violations, violations)


def reduced_d2_check(t: TabulatedDiversity, eps: float = EPS_DIV) -> bool:
    """Same verdict as :func:`validate_diversity`, at much lower cost.

    D2 plus monotonicity is equivalent to monotonicity on covering pairs plus
    d(Y | Z) <= d(Y) + d(Z) whenever Y and Z intersect.
    """
    if _d1_violations(t, eps, False) or _monotone_violations(t, eps):
        return False
    v, size = t.values, t.ground.size
    for y in range(1, size):
        z = np.arange(y + 1, size)
        z = z[(z & y) != 0]
        if np.any(v[y | z] - v[y] - v[z] > eps):
            return False
    return True


def induced_metric(t: TabulatedDiversity) -> TabulatedMetric:
    n = t.ground.n
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                d[i, j] = t.values[(1 << i) | (1 << j)]
    return TabulatedMetric(t.ground, d)


# ---------------------------------------------------------------------------
# distortion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistortionReport:
    expand: float
    shrink: float
    distortion: float
    expand_witness: int | None
    shrink_witness: int | None


def image_masks(n_src: int, phi: Sequence[int]) -> np.ndarray:
    """Mask of phi(A) for every subset A of the source ground set."""
    out = np.zeros(1 << n_src, dtype=np.int64)
    for i in range(n_src):
        lo = 1 << i
        out[lo: 2 * lo] = out[:lo] | (1 << int(phi[i]))
    return out


def _as_index_map(src: GroundSet, dst: GroundSet, phi) -> list[int]:
    if phi is None:
        if src != dst:
            raise DiversityError("identity map needs equal ground sets")
        return list(range(src.n))
    if isinstance(phi, dict):
        return [dst.index(phi[x]) if not isinstance(phi[x], int) else phi[x] for x in src.labels]
    phi = list(phi)
    if len(phi) != src.n:
        raise DiversityError("element map must be total on the source ground set")
    return [dst.index(x) if isinstance(x, str) else int(x) for x in phi]


def distortion_of_map(src: TabulatedDiversity, dst: TabulatedDiversity,
                      phi=None) -> DistortionReport:
    """Exact expansion, shrinkage and distortion of ``phi`` over all |A| >= 2.

    ``phi`` maps source elements to destination elements: a sequence of
    indices or labels, a dict keyed by source label, or None for identity.
    Subsets with both values zero are skipped; x/0 with x > 0 gives inf.
    """
    idx = _as_index_map(src.ground, dst.ground, phi)
    n = src.ground.n
    a_vals = src.values
    b_vals = dst.values[image_masks(n, idx)]
    keep = (popcounts(n) >= 2) & ((a_vals != 0) | (b_vals != 0))
    cand = np.flatnonzero(keep)

    def worst(num, den):
        if cand.size == 0:
            return 1.0, None
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(den[cand] == 0, np.inf, num[cand] / np.where(den[cand] == 0, 1, den[cand]))
        k = int(np.argmax(r))
        return float(r[k]), int(cand[k])

    expand, ew = worst(b_vals, a_vals)
    shrink, sw = worst(a_vals, b_vals)
    total = np.inf if np.isinf(expand) or np.isinf(shrink) else expand * shrink
    return DistortionReport(expand, shrink, total, ew, sw)


@dataclass(frozen=True, eq=False)
class SubsetVector:
    """Sparse nonnegative weights on subsets (capacities or demands).

    Entries on sets with fewer than two members are kept but ignored by
    every consumer.
    """

    ground: GroundSet
    values: dict

    def __post_init__(self):
        clean = {}
        for mask, v in dict(self.values).items():
            mask = self.ground.check_mask(int(mask))
            v = float(v)
            if not (v >= 0 and np.isfinite(v)):
                raise DiversityError(f"subset vector entries must be finite and >= 0, got {v}")
            if v:
                clean[mask] = clean.get(mask, 0.0) + v
        object.__setattr__(self, "values", clean)

    @classmethod
    def from_array(cls, ground: GroundSet, arr, tol: float = 0.0) -> "SubsetVector":
        arr = np.asarray(arr, dtype=float)
        return cls(ground, {int(m): float(arr[m]) for m in np.flatnonzero(arr > tol)})

    def __getitem__(self, mask: int) -> float:
        return self.values.get(mask, 0.0)

    def support(self, min_size: int = 2) -> list[int]:
        sizes = popcounts(self.ground.n)
        return sorted(m for m, v in self.values.items() if v > 0 and sizes[m] >= min_size)

    def to_array(self) -> np.ndarray:
        out = np.zeros(self.ground.size)
        for m in self.support():
            out[m] = self.values[m]
        return out

    def dot(self, table) -> float:
        v = table.values if isinstance(table, TabulatedDiversity) else np.asarray(table)
        return float(sum(self.values[m] * v[m] for m in self.support()))

    def scaled(self, alpha: float) -> "SubsetVector":
        return SubsetVector(self.ground, {m: alpha * v for m, v in self.values.items()})
