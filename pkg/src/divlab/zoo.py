"""Tabulating constructors for the standard diversity families."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (DiversityError, GroundSet, TabulatedDiversity, TabulatedMetric,
                   cuts, iter_bits, popcounts, superset_min)

MAX_STEINER_EDGES = 20
MAX_TSP_ELEMENTS = 10
_MW_BUDGET = 1 << 22  # subset x direction cells per chunk


class DisconnectedError(DiversityError):
    """Some subset cannot be spanned by a connected edge family."""

    def __init__(self, message: str, subset: int):
        super().__init__(message)
        self.subset = subset


# ---------------------------------------------------------------------------
# input types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightedHypergraph:
    """Hyperedges as (mask, weight); duplicate member sets are merged by adding."""

    ground: GroundSet
    edges: tuple[tuple[int, float], ...]

    def __post_init__(self):
        merged: dict[int, float] = {}
        for mask, w in self.edges:
            mask = self.ground.check_mask(int(mask))
            w = float(w)
            if popcounts(self.ground.n)[mask] < 2:
                raise DiversityError(f"hyperedge {self.ground.members(mask)} has fewer than 2 members")
            if not (w >= 0 and math.isfinite(w)):
                raise DiversityError(f"hyperedge weight must be finite and >= 0, got {w}")
            merged[mask] = merged.get(mask, 0.0) + w
        object.__setattr__(self, "edges", tuple(merged.items()))

    @classmethod
    def from_labels(cls, ground: GroundSet, edges: Iterable[tuple[Iterable[str], float]]):
        return cls(ground, tuple((ground.mask(m), w) for m, w in edges))

    @property
    def masks(self) -> tuple[int, ...]:
        return tuple(m for m, _ in self.edges)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.edges)

    def with_weights(self, weights: Sequence[float]) -> "WeightedHypergraph":
        return WeightedHypergraph(self.ground, tuple(zip(self.masks, weights)))


@dataclass(frozen=True)
class WeightedGraph(WeightedHypergraph):
    def __post_init__(self):
        super().__post_init__()
        sizes = popcounts(self.ground.n)
        for mask, _ in self.edges:
            if sizes[mask] != 2:
                raise DiversityError(f"graph edge {self.ground.members(mask)} must have 2 endpoints")


@dataclass(frozen=True)
class FiniteMeasureSpace:
    points: tuple[str, ...]
    mass: tuple[float, ...]

    def __post_init__(self):
        if len(self.points) != len(self.mass):
            raise DiversityError("one mass per atom required")
        if len(set(self.points)) != len(self.points):
            raise DiversityError("duplicate atoms")
        if any(not (m >= 0) for m in self.mass):
            raise DiversityError("atom masses must be >= 0")


@dataclass(frozen=True)
class DiscreteRandomFamily:
    """Joint law of one discrete random variable per ground element."""

    ground: GroundSet
    outcomes: tuple[tuple[float, tuple], ...]
    eps: float = 1e-9

    def __post_init__(self):
        total = 0.0
        for p, states in self.outcomes:
            if p < 0:
                raise DiversityError("outcome probabilities must be >= 0")
            if len(states) != self.ground.n:
                raise DiversityError("each outcome assigns one state per ground element")
            total += p
        if abs(total - 1.0) > self.eps:
            raise DiversityError(f"outcome probabilities sum to {total}, not 1")

    @classmethod
    def independent(cls, ground: GroundSet, marginals: Sequence[Mapping]) -> "DiscreteRandomFamily":
        """Product law from one {state: probability} map per element."""
        outcomes = []
        for combo in itertools.product(*(list(m.items()) for m in marginals)):
            p = math.prod(q for _, q in combo)
            outcomes.append((p, tuple(s for s, _ in combo)))
        return cls(ground, tuple(outcomes))


@dataclass(frozen=True)
class PointCloud:
    ground: GroundSet
    coords: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coords, dtype=float, copy=True)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] != self.ground.n or arr.shape[1] < 1:
            raise DiversityError(f"need one vector of dimension >= 1 per element, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def dim(self) -> int:
        return self.coords.shape[1]


@dataclass(frozen=True)
class PhyloTree:
    """Tree on named nodes; ``labels`` places each ground element on a node."""

    ground: GroundSet
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...]      # (parent, child, weight)
    labels: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        nodes = set(self.nodes)
        if len(nodes) != len(self.nodes):
            raise DiversityError("duplicate tree nodes")
        for x in self.ground.labels:
            if x not in self.labels:
                raise DiversityError(f"ground element {x!r} is not placed on the tree")
            if self.labels[x] not in nodes:
                raise DiversityError(f"element {x!r} placed on unknown node {self.labels[x]!r}")
        if len(self.edges) != len(self.nodes) - 1:
            raise DiversityError("a tree on k nodes has k - 1 edges")
        adj: dict[str, list] = {v: [] for v in self.nodes}
        for u, v, w in self.edges:
            if u not in nodes or v not in nodes:
                raise DiversityError(f"edge ({u}, {v}) uses unknown nodes")
            if not w >= 0:
                raise DiversityError("tree edge weights must be >= 0")
            adj[u].append(v)
            adj[v].append(u)
        seen, stack = {self.nodes[0]}, [self.nodes[0]]
        while stack:
            for v in adj[stack.pop()]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if seen != nodes:
            raise DiversityError("tree is not connected")


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def _zero_small(values: np.ndarray, n: int) -> np.ndarray:
    values[popcounts(n) <= 1] = 0.0
    return values


def diameter_diversity(m: TabulatedMetric) -> TabulatedDiversity:
    n, d = m.ground.n, m.d
    out = np.zeros(1 << n)
    for i in range(n):
        lo = 1 << i
        # adding element i: diam = max(old diam, max distance from i to members)
        reach = np.zeros(lo)
        for j in range(i):
            reach[1 << j: 2 << j] = np.maximum(reach[: 1 << j], d[i, j])
        out[lo: 2 * lo] = np.maximum(out[:lo], reach)
    return TabulatedDiversity(m.ground, out)


def l1_diversity(p: PointCloud) -> TabulatedDiversity:
    """Sum over coordinates of the coordinate range of each subset."""
    n = p.ground.n
    hi = np.full((1 << n, p.dim), -np.inf)
    lo = np.full((1 << n, p.dim), np.inf)
    for i in range(n):
        a = 1 << i
        hi[a: 2 * a] = np.maximum(hi[:a], p.coords[i])
        lo[a: 2 * a] = np.minimum(lo[:a], p.coords[i])
    out = np.zeros(1 << n)
    out[1:] = (hi[1:] - lo[1:]).sum(axis=1)
    return TabulatedDiversity(p.ground, _zero_small(out, n))


def cut_diversity(ground: GroundSet, u: int) -> TabulatedDiversity:
    u = ground.check_mask(u)
    full = ground.full
    return TabulatedDiversity.from_function(ground, lambda a: float(cuts(a, u, full)))


def _connected_span_costs(ground: GroundSet, edges: Sequence[tuple[int, float]]) -> np.ndarray:
    """best[M] = least weight of a connected edge family whose vertex span is M.

    Any connected family can be assembled one edge at a time with each new
    edge meeting the span so far, and the future only depends on the span,
    so a forward relaxation over masks in increasing order is exact.
    """
    best = np.full(ground.size, np.inf)
    for mask, w in edges:
        best[mask] = min(best[mask], w)
    masks = np.array([m for m, _ in edges], dtype=np.int64)
    weights = np.array([w for _, w in edges])
    for m in range(ground.size):
        cost = best[m]
        if not np.isfinite(cost):
            continue
        touch = (masks & m) != 0
        grow = touch & ((masks | m) != m)
        for e, w in zip(masks[grow], weights[grow]):
            t = m | int(e)
            if cost + w < best[t]:
                best[t] = cost + w
    return best


def hypergraph_steiner_diversity(h: WeightedHypergraph) -> TabulatedDiversity:
    """Least total weight of a connected sub-hypergraph covering each subset."""
    if len(h.edges) > MAX_STEINER_EDGES:
        raise DiversityError(f"at most {MAX_STEINER_EDGES} edges supported")
    n = h.ground.n
    values = superset_min(_connected_span_costs(h.ground, h.edges), n)
    values = _zero_small(values, n)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        a = int(min(bad, key=lambda m: (popcounts(n)[m], m)))
        raise DisconnectedError(
            f"no connected edge family covers {h.ground.members(a)}", a)
    return TabulatedDiversity(h.ground, values)


def steiner_diversity(g: WeightedHypergraph) -> TabulatedDiversity:
    """Minimum Steiner tree weight in a weighted graph, per subset."""
    if not isinstance(g, WeightedGraph):
        g = WeightedGraph(g.ground, g.edges)
    return hypergraph_steiner_diversity(g)


def metric_steiner_diversity(m: TabulatedMetric) -> TabulatedDiversity:
    """Steiner diversity of a finite metric space (complete graph with weights d)."""
    n = m.ground.n
    edges = tuple(((1 << i) | (1 << j), m.d[i, j]) for i in range(n) for j in range(i + 1, n))
    return steiner_diversity(WeightedGraph(m.ground, edges))


def _tree_splits(t: PhyloTree) -> list[tuple[int, float]]:
    """(mask of ground elements below edge, weight) for each rooted tree edge."""
    adj: dict[str, list] = {v: [] for v in t.nodes}
    for u, v, w in t.edges:
        adj[u].append((v, w))
        adj[v].append((u, w))
    at_node: dict[str, int] = {v: 0 for v in t.nodes}
    for i, x in enumerate(t.ground.labels):
        at_node[t.labels[x]] |= 1 << i
    root = t.nodes[0]
    order, parent = [root], {root: (None, 0.0)}
    for v in order:
        for u, w in adj[v]:
            if u not in parent:
                parent[u] = (v, w)
                order.append(u)
    below = dict(at_node)
    splits = []
    for v in reversed(order[1:]):
        p, w = parent[v]
        below[p] |= below[v]
        splits.append((below[v], w))
    return splits


def phylogenetic_diversity(t: PhyloTree) -> TabulatedDiversity:
    """Length of the smallest subtree connecting the nodes carrying A.

    An edge lies in that subtree exactly when A has members on both sides.
    """
    full = t.ground.full
    splits = _tree_splits(t)
    return TabulatedDiversity.from_function(
        t.ground, lambda a: float(sum(w for u, w in splits if cuts(a, u, full))))


def tsp_diversity(m: TabulatedMetric) -> TabulatedDiversity:
    """Half the shortest closed tour through each subset, by enumeration."""
    n = m.ground.n
    if n > MAX_TSP_ELEMENTS:
        raise DiversityError(f"tsp diversity enumerates tours; at most {MAX_TSP_ELEMENTS} elements")
    d = m.d
    out = np.zeros(1 << n)
    for a in range(1 << n):
        members = list(iter_bits(a))
        if len(members) < 2:
            continue
        first, rest = members[0], members[1:]
        best = np.inf
        for perm in itertools.permutations(rest):
            if len(perm) > 1 and perm[0] > perm[-1]:
                continue  # reversed copy of a tour already seen
            tour = (first,) + perm
            length = sum(d[tour[k], tour[k + 1]] for k in range(len(tour) - 1)) + d[tour[-1], first]
            best = min(best, length)
        out[a] = best / 2
    return TabulatedDiversity(m.ground, out)


def measure_diversity(s: FiniteMeasureSpace, ground: GroundSet,
                      sets: Sequence[Iterable[str]]) -> TabulatedDiversity:
    """mu(union) - mu(intersection) of the atom sets assigned to the members."""
    if len(sets) != ground.n:
        raise DiversityError("one atom set per ground element required")
    index = {x: k for k, x in enumerate(s.points)}
    mass = np.array(s.mass, dtype=float)
    member = np.zeros((ground.n, len(s.points)), dtype=bool)
    for i, atoms in enumerate(sets):
        for x in atoms:
            if x not in index:
                raise DiversityError(f"unknown atom {x!r}")
            member[i, index[x]] = True
    n, k = ground.n, len(s.points)
    union = np.zeros((1 << n, k), dtype=bool)
    inter = np.ones((1 << n, k), dtype=bool)
    for i in range(n):
        lo = 1 << i
        union[lo: 2 * lo] = union[:lo] | member[i]
        inter[lo: 2 * lo] = inter[:lo] & member[i]
    out = (union & ~inter) @ mass
    return TabulatedDiversity(ground, _zero_small(out, n))


def s_diversity(f: DiscreteRandomFamily) -> TabulatedDiversity:
    """Probability that the members' variables are not all in the same state."""
    n = f.ground.n
    out = np.zeros(1 << n)
    for p, states in f.outcomes:
        codes = {s: k for k, s in enumerate(dict.fromkeys(states))}
        # mask of elements in each state; A is constant iff A fits inside one class
        classes = {}
        for i, s in enumerate(states):
            classes[codes[s]] = classes.get(codes[s], 0) | (1 << i)
        constant = np.zeros(1 << n, dtype=bool)
        for cls in classes.values():
            sub = cls
            while True:
                constant[sub] = True
                if sub == 0:
                    break
                sub = (sub - 1) & cls
        out += p * ~constant
    return TabulatedDiversity(f.ground, out)


def mean_width_constant(k: int) -> float:
    """pi / B(k/2, 1/2), scaling mean width so segments get their length."""
    log_beta = math.lgamma(k / 2) + math.lgamma(0.5) - math.lgamma(k / 2 + 0.5)
    return math.pi / math.exp(log_beta)


def mean_width_diversity(p: PointCloud, samples: int = 100_000, seed: int = 0) -> TabulatedDiversity:
    """Monte Carlo mean-width diversity with a fixed-seed sphere sampler.

    All subsets share the same directions, so the estimate is itself an exact
    l1-type diversity (an average of line diameters).
    """
    if samples < 1:
        raise DiversityError("samples must be >= 1")
    n, k = p.ground.n, p.dim
    rng = np.random.default_rng(seed)
    total = np.zeros(1 << n)
    done = 0
    while done < samples:
        size = min(max(256, _MW_BUDGET >> n), samples - done)
        u = rng.standard_normal((size, k))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        proj = u @ p.coords.T                     # (size, n)
        hi = np.full((1 << n, size), -np.inf)
        lo = np.full((1 << n, size), np.inf)
        for i in range(n):
            a = 1 << i
            np.maximum(hi[:a], proj[:, i], out=hi[a: 2 * a])
            np.minimum(lo[:a], proj[:, i], out=lo[a: 2 * a])
        total[1:] += (hi[1:] - lo[1:]).sum(axis=1)
        done += size
    out = mean_width_constant(k) * total / samples
    return TabulatedDiversity(p.ground, _zero_small(out, n))
