"""Split systems, Moebius recovery of cut weights, and l1 embeddings."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (EPS_DIV, DiversityError, GroundSet, TabulatedDiversity,
                   iter_bits, popcounts, subset_sum, superset_sum)


class NotInCone(DiversityError):
    """The table is not a nonnegative combination of cut diversities."""

    def __init__(self, message: str, subset: int, value: float, condition: str,
                 raw: np.ndarray | None = None):
        super().__init__(message)
        self.subset = subset
        self.value = value
        self.condition = condition
        self.raw = raw


@dataclass(frozen=True, eq=False)
class SplitSystem:
    """Nonnegative weights on the sides of bipartitions, kept symmetric.

    ``lam[U] == lam[V - U]`` always; the split {U, V - U} contributes
    ``lam[U] + lam[V - U] = 2 * lam[U]`` to every subset it cuts.
    """

    ground: GroundSet
    lam: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float, copy=True)
        full = self.ground.full
        if lam.shape != (self.ground.size,):
            raise DiversityError(f"split weights have shape {lam.shape}")
        if lam[0] != 0 or lam[full] != 0:
            raise DiversityError("trivial splits carry no weight")
        if (lam < 0).any():
            raise DiversityError("split weights must be >= 0")
        if not np.array_equal(lam, lam[full ^ np.arange(self.ground.size)]):
            raise DiversityError("split weights must satisfy lam[U] == lam[V - U]")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @classmethod
    def from_splits(cls, ground: GroundSet, weights: Mapping[int, float]) -> "SplitSystem":
        """Build from total weights of unordered splits, keyed by either side."""
        lam = np.zeros(ground.size)
        full = ground.full
        for u, w in weights.items():
            u = ground.check_mask(int(u))
            if u in (0, full):
                if w:
                    raise DiversityError("trivial split given nonzero weight")
                continue
            lam[u] += w / 2
            lam[full ^ u] += w / 2
        return cls(ground, lam)

    def split_weights(self) -> dict[int, float]:
        """{side containing element 0: total split weight} for nonzero splits."""
        return {int(u): 2 * float(self.lam[u])
                for u in range(1, self.ground.size, 2) if self.lam[u] > 0}

    def scaled(self, alpha: float) -> "SplitSystem":
        return SplitSystem(self.ground, alpha * self.lam)


@dataclass(frozen=True)
class ConditionFailure:
    condition: str        # "eq7" (alternating-sum identity) or "eq8" (nonnegative weight)
    subset: int
    lhs: float
    rhs: float


@dataclass(frozen=True)
class L1Certificate:
    embeddable: bool
    witness: SplitSystem | None = None
    violation: ConditionFailure | None = None

    def __post_init__(self):
        if (self.witness is None) == (self.violation is None):
            raise ValueError("exactly one of witness / violation must be present")


@dataclass(frozen=True, eq=False)
class L1Embedding:
    ground: GroundSet
    coords: np.ndarray      # (n, m)

    @property
    def m(self) -> int:
        return self.coords.shape[1]


def evaluate_split_system(s: SplitSystem) -> TabulatedDiversity:
    """sum_U lam[U] * cut_U(A) over both sides of every split.

    A nonempty A escapes cut_U exactly when U contains A or misses A, and by
    symmetry both counts equal the superset sum of lam at A.
    """
    n = s.ground.n
    above = superset_sum(s.lam, n)
    values = s.lam.sum() - 2 * above
    values[popcounts(n) <= 1] = 0.0
    return TabulatedDiversity(s.ground, values)


def alternating_sums(t: TabulatedDiversity) -> np.ndarray:
    """r[A] = sum over B subset of A of (-1)^|B| t(B)."""
    sign = np.where(popcounts(t.ground.n) % 2, -1.0, 1.0)
    return subset_sum(sign * t.values, t.ground.n)


def raw_mobius_weights(t: TabulatedDiversity) -> np.ndarray:
    """lam[A] = 1/2 sum over B superset of A of (-1)^(|A| - |B| + 1) t(B)."""
    n = t.ground.n
    sizes = popcounts(n)
    sign = np.where(sizes % 2, -1.0, 1.0)
    lam = 0.5 * (-sign) * superset_sum(sign * t.values, n)
    lam[0] = lam[t.ground.full] = 0.0
    return lam


def _first(masks: np.ndarray, n: int) -> int:
    """Smallest subset by (cardinality, mask)."""
    return int(min(masks, key=lambda m: (popcounts(n)[m], m)))


def check_alternating_identity(t: TabulatedDiversity, eps: float = EPS_DIV) -> ConditionFailure | None:
    r = alternating_sums(t)
    bad = np.flatnonzero(np.abs(r - t.values) > eps)
    if bad.size == 0:
        return None
    a = _first(bad, t.ground.n)
    return ConditionFailure("eq7", a, float(t.values[a]), float(r[a]))


def mobius_cut_weights(t: TabulatedDiversity, eps: float = EPS_DIV) -> SplitSystem:
    """Recover the split weights of an l1-embeddable table.

    Raises NotInCone when the alternating-sum identity fails (the table is
    outside the span of cut diversities) or when some recovered weight is
    below ``-eps``. Weights within ``eps`` of zero from below are clamped.
    """
    fail = check_alternating_identity(t, eps)
    if fail is not None:
        raise NotInCone(
            f"alternating-sum identity fails at {t.ground.members(fail.subset)}: "
            f"{fail.lhs} != {fail.rhs}", fail.subset, fail.rhs, "eq7",
            raw_mobius_weights(t))
    raw = raw_mobius_weights(t)
    bad = np.flatnonzero(raw < -eps)
    if bad.size:
        a = _first(bad, t.ground.n)
        raise NotInCone(f"negative cut weight {raw[a]} at {t.ground.members(a)}",
                        a, float(raw[a]), "eq8", raw)
    lam = np.clip(raw, 0.0, None)
    lam = 0.5 * (lam + lam[t.ground.full ^ np.arange(t.ground.size)])
    return SplitSystem(t.ground, lam)


def is_l1_embeddable(t: TabulatedDiversity, eps: float = EPS_DIV) -> L1Certificate:
    fail = check_alternating_identity(t, eps)
    if fail is not None:
        return L1Certificate(False, violation=fail)
    raw = raw_mobius_weights(t)
    bad = np.flatnonzero(raw < -eps)
    if bad.size:
        a = _first(bad, t.ground.n)
        return L1Certificate(False, violation=ConditionFailure("eq8", a, float(raw[a]), 0.0))
    witness = mobius_cut_weights(t, eps)
    back = evaluate_split_system(witness).values
    worst = np.abs(back - t.values)
    if worst.max() > eps:
        a = int(np.argmax(worst))
        return L1Certificate(False, violation=ConditionFailure("eq7", a, float(t.values[a]), float(back[a])))
    return L1Certificate(True, witness=witness)


# ---------------------------------------------------------------------------
# symmetric chains and the chain embedding
# ---------------------------------------------------------------------------

def symmetric_chain_decomposition(m: int) -> list[list[int]]:
    """Partition the subsets of {0..m-1} into symmetric saturated chains.

    Bracket construction: a member is ')' and a non-member '('. Chains start
    at subsets with no unmatched ')', and climb by turning the unmatched '('
    positions into ')' from left to right.
    """
    chains = []
    for s in range(1 << m):
        stack, unmatched_open, has_unmatched_close = [], [], False
        for i in range(m):
            if (s >> i) & 1:
                if stack:
                    stack.pop()
                else:
                    has_unmatched_close = True
                    break
            else:
                stack.append(i)
        if has_unmatched_close:
            continue
        unmatched_open = stack
        chain, cur = [s], s
        for i in unmatched_open:
            cur |= 1 << i
            chain.append(cur)
        chains.append(chain)
    return chains


def chain_embedding(s: SplitSystem, anchor: int | str = 0) -> L1Embedding:
    """Isometric embedding of a split-system diversity into l1^m.

    Splits are named by their side U containing the anchor. Those sides form
    a Boolean lattice over the other elements, which splits into
    C(n-1, floor((n-1)/2)) symmetric chains. Along a chain, element x gets the
    total weight of the chain's sides that exclude it.
    """
    ground = s.ground
    n = ground.n
    a = anchor if isinstance(anchor, int) else ground.index(anchor)
    others = [i for i in range(n) if i != a]

    def side(chain_mask: int) -> int:
        u = 1 << a
        for k in iter_bits(chain_mask):
            u |= 1 << others[k]
        return u

    chains = symmetric_chain_decomposition(n - 1)
    coords = np.zeros((n, len(chains)))
    for c, chain in enumerate(chains):
        for x in others:
            coords[x, c] = sum(2 * s.lam[side(w)] for w in chain if not (side(w) >> x) & 1)
    return L1Embedding(ground, coords)


# ---------------------------------------------------------------------------
# inequalities satisfied by l1-embeddable tables
# ---------------------------------------------------------------------------

def cyclic_inequality_check(t: TabulatedDiversity, parts: Sequence[int]) -> tuple[bool, float]:
    """d(A) <= 1/2 sum_i d(A_i | A_{i+1}) cyclically; returns (holds, slack).

    A single part is read as the cycle (A_1, A_1).
    """
    parts = [int(p) for p in parts]
    if not parts:
        raise DiversityError("cyclic inequality needs at least one part")
    if len(parts) == 1:
        parts = parts * 2
    union = 0
    for p in parts:
        union |= t.ground.check_mask(p)
    v = t.values
    rhs = 0.5 * sum(v[parts[i] | parts[(i + 1) % len(parts)]] for i in range(len(parts)))
    slack = float(rhs - v[union])
    return slack >= -EPS_DIV, slack


def ep_condition_check(t: TabulatedDiversity) -> tuple[float, int | None]:
    """min over |A| >= 2 of sum of pairwise d within A minus (|A|-1) d(A).

    Returns the worst slack and its subset.
    """
    n = t.ground.n
    pair_sum = np.zeros(t.ground.size)
    for i in range(n):
        lo = 1 << i
        # adding i contributes d(i, j) for every earlier member j
        extra = np.zeros(lo)
        for j in range(i):
            extra[1 << j: 2 << j] = extra[: 1 << j] + t.values[(1 << i) | (1 << j)]
        pair_sum[lo: 2 * lo] = pair_sum[:lo] + extra
    sizes = popcounts(n)
    slack = pair_sum - (sizes - 1) * t.values
    cand = np.flatnonzero(sizes >= 2)
    if cand.size == 0:
        return 0.0, None
    k = int(cand[np.argmin(slack[cand])])
    return float(slack[k]), k

