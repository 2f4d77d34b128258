"""Multicommodity hypergraph Steiner packing, hypergraph cuts and their gap."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (EPS_DIV, DiversityError, GroundSet, SubsetVector, TabulatedDiversity,
                   popcounts)
from .embed import K1Result, min_distortion_l1, split_sides, cut_matrix
from .linprog import EPS_LP, LpProblem, require_optimal, solve_lp
from .zoo import WeightedHypergraph

MAX_COVER_EDGES = 16


class FlowCutError(DiversityError):
    pass


@dataclass(frozen=True)
class CoverFamily:
    demand: int
    covers: tuple[tuple[int, ...], ...]    # each cover: sorted hyperedge masks


@dataclass(frozen=True)
class PackingSolution:
    f: float
    z: dict                 # (cover, demand mask) -> weight
    edge_load: dict         # hyperedge mask -> total weight through it


@dataclass(frozen=True)
class CutReport:
    best_u: int
    value: float
    per_cut: tuple[tuple[int, float, float], ...]   # (U, capacity crossing, demand crossing)


@dataclass(frozen=True)
class DualSolution:
    value: float
    diversity: TabulatedDiversity


@dataclass(frozen=True)
class GammaReport:
    gamma: float
    packing: PackingSolution
    cut: CutReport
    dual: DualSolution


@dataclass(frozen=True)
class SandwichReport:
    maxhsp: float
    mincut: float
    k1: float
    lower_slack: float      # mincut - maxhsp
    upper_slack: float      # k1 * maxhsp - mincut
    ok: bool


@dataclass(frozen=True)
class TightInstance:
    capacities: SubsetVector
    demands: SubsetVector
    k1: float


def as_capacities(c) -> SubsetVector:
    if isinstance(c, SubsetVector):
        return c
    if isinstance(c, WeightedHypergraph):
        return SubsetVector(c.ground, dict(c.edges))
    raise TypeError(f"expected SubsetVector or WeightedHypergraph, got {type(c).__name__}")


# ---------------------------------------------------------------------------
# covers
# ---------------------------------------------------------------------------

def _connected(edges: Sequence[int]) -> bool:
    if not edges:
        return False
    span, rest = edges[0], list(edges[1:])
    grew = True
    while rest and grew:
        grew = False
        for e in list(rest):
            if e & span:
                span |= e
                rest.remove(e)
                grew = True
    return not rest


def enumerate_minimal_covers(edges, s: int) -> CoverFamily:
    """All inclusion-minimal connected families of hyperedges whose span contains s.

    ``edges`` is a hypergraph, a capacity vector (its positive entries) or a
    sequence of hyperedge masks.
    """
    if isinstance(edges, WeightedHypergraph):
        edges = [e for e, w in edges.edges if w > 0]
    elif isinstance(edges, SubsetVector):
        edges = edges.support()
    edges = sorted(set(int(e) for e in edges))
    if len(edges) > MAX_COVER_EDGES:
        raise FlowCutError(f"cover enumeration supports at most {MAX_COVER_EDGES} edges")
    if bin(s).count("1") < 2:
        raise FlowCutError("demand sets need at least two members")
    minimal: list[int] = []        # bitsets over edge indices
    m = len(edges)
    spans = [0] * (1 << m)
    for fam in range(1, 1 << m):
        low = fam & -fam
        spans[fam] = spans[fam ^ low] | edges[low.bit_length() - 1]
    order = sorted(range(1, 1 << m), key=lambda f: (bin(f).count("1"), f))
    for fam in order:
        if spans[fam] & s != s:
            continue
        if any(f & fam == f for f in minimal):
            continue
        members = [edges[i] for i in range(m) if fam >> i & 1]
        if _connected(members):
            minimal.append(fam)
    if not minimal:
        raise FlowCutError(f"demand set {s:#x} cannot be covered by a connected family")
    covers = tuple(tuple(edges[i] for i in range(m) if fam >> i & 1) for fam in minimal)
    return CoverFamily(s, covers)


# ---------------------------------------------------------------------------
# packing LP and its diversity dual
# ---------------------------------------------------------------------------

def _demand_sets(d: SubsetVector) -> list[int]:
    sets = d.support()
    if not sets:
        raise FlowCutError("all demands are zero")
    return sets


def max_hsp_primal(c, d: SubsetVector, eps: float = EPS_LP,
                   backend: str = "simplex") -> PackingSolution:
    """Largest f such that each demand set S receives f * D_S of minimal covers."""
    cap = as_capacities(c)
    edges = cap.support()
    demands = _demand_sets(d)
    columns = []           # (cover, S)
    for s in demands:
        for cover in enumerate_minimal_covers(edges, s).covers:
            columns.append((cover, s))
    e_index = {e: i for i, e in enumerate(edges)}
    s_index = {s: i for i, s in enumerate(demands)}
    nz = len(columns)
    A = np.zeros((len(edges) + len(demands), nz + 1))
    for j, (cover, s) in enumerate(columns):
        for e in cover:
            A[e_index[e], j] = 1.0
        A[len(edges) + s_index[s], j] = 1.0
    for s in demands:
        A[len(edges) + s_index[s], nz] = -d[s]
    b = np.concatenate([[cap[e] for e in edges], np.zeros(len(demands))])
    senses = ("<=",) * len(edges) + (">=",) * len(demands)
    obj = np.zeros(nz + 1)
    obj[-1] = 1.0
    sol = require_optimal(solve_lp(LpProblem.from_dense(obj, A, senses, b, maximize=True), eps, backend),
                          "packing LP")
    z = {col: float(v) for col, v in zip(columns, sol.x[:nz]) if v > 0}
    load = {e: float(A[e_index[e], :nz] @ sol.x[:nz]) for e in edges}
    return PackingSolution(float(sol.x[-1]), z, load)


def reduced_diversity_rows(n: int):
    """Rows (coefficients over |A| >= 2 variables) for monotone + overlap-subadditive.

    Returns (variable masks, dense matrix G) with every row reading G @ delta <= 0.
    """
    sizes = popcounts(n)
    var = np.flatnonzero(sizes >= 2)
    col = {int(m): i for i, m in enumerate(var)}
    rows = []
    for a in var:
        a = int(a)
        for i in range(n):
            if not a >> i & 1:
                r = np.zeros(var.size)
                r[col[a]] += 1.0
                r[col[a | 1 << i]] -= 1.0
                rows.append(r)
    # subadditivity on pairs meeting in one element; larger overlaps follow
    # from these plus monotonicity (shrink Z to (Z - Y) + {x})
    for yi, y in enumerate(var):
        for z in var[yi + 1:]:
            y, z = int(y), int(z)
            common = y & z
            if not common or common & (common - 1) or common in (y, z):
                continue
            r = np.zeros(var.size)
            r[col[y | z]] += 1.0
            r[col[y]] -= 1.0
            r[col[z]] -= 1.0
            rows.append(r)
    return var, np.array(rows)


def max_hsp_dual(c, d: SubsetVector, eps: float = EPS_LP,
                 backend: str = "simplex") -> DualSolution:
    """min C.delta over diversities delta with D.delta >= 1."""
    cap = as_capacities(c)
    ground = cap.ground
    _demand_sets(d)
    n = ground.n
    var, G = reduced_diversity_rows(n)
    cvec = np.array([cap[int(m)] for m in var])
    dvec = np.array([d[int(m)] for m in var])
    A = np.vstack([dvec[None, :], G]) if G.size else dvec[None, :]
    senses = (">=",) + ("<=",) * (A.shape[0] - 1)
    b = np.concatenate([[1.0], np.zeros(A.shape[0] - 1)])
    sol = require_optimal(solve_lp(LpProblem.from_dense(cvec, A, senses, b), eps, backend),
                          "diversity LP")
    values = np.zeros(ground.size)
    values[var] = np.clip(sol.x, 0.0, None)
    return DualSolution(float(sol.objective), TabulatedDiversity(ground, values))


# ---------------------------------------------------------------------------
# cuts
# ---------------------------------------------------------------------------

def min_hyp_cut(c, d: SubsetVector) -> CutReport:
    """Exact minimum of capacity crossing / demand crossing over all bipartitions."""
    cap = as_capacities(c)
    ground = cap.ground
    n, full = ground.n, ground.full
    cs = cap.support()
    ds = d.support()
    cm, cv = np.array(cs, dtype=np.int64), np.array([cap[m] for m in cs])
    dm, dv = np.array(ds, dtype=np.int64), np.array([d[m] for m in ds])
    sides = split_sides(n)
    per_cut = []
    best_u, best = None, np.inf
    for u in sides:
        u = int(u)
        ccross = float(cv[((cm & u) != 0) & ((cm & (full ^ u)) != 0)].sum()) if cs else 0.0
        dcross = float(dv[((dm & u) != 0) & ((dm & (full ^ u)) != 0)].sum()) if ds else 0.0
        per_cut.append((u, ccross, dcross))
        if dcross > 0 and ccross / dcross < best:
            best, best_u = ccross / dcross, u
    if best_u is None:
        raise FlowCutError("no bipartition separates any demand set")
    return CutReport(best_u, best, tuple(per_cut))


def min_cut_over_split_systems(c, d: SubsetVector, eps: float = EPS_LP,
                               backend: str = "simplex") -> float:
    """min C.mu subject to D.mu = 1 over split-system diversities mu (LP form)."""
    cap = as_capacities(c)
    n = cap.ground.n
    sides = split_sides(n)
    sets = np.flatnonzero(popcounts(n) >= 2)
    M = cut_matrix(n, sets, sides)
    cvec = np.array([cap[int(m)] for m in sets]) @ M
    dvec = np.array([d[int(m)] for m in sets]) @ M
    sol = require_optimal(solve_lp(LpProblem.from_dense(cvec, dvec[None, :], ("=",), [1.0]),
                                   eps, backend), "split-system cut LP")
    return float(sol.objective)


# ---------------------------------------------------------------------------
# gap, sandwich and tight instances
# ---------------------------------------------------------------------------

def gamma(c, d: SubsetVector, eps: float = EPS_LP, backend: str = "simplex") -> GammaReport:
    """MinHypCut / MaxHSP, cross-checking the packing LP against its diversity dual."""
    packing = max_hsp_primal(c, d, eps, backend)
    dual = max_hsp_dual(c, d, eps, backend)
    if abs(packing.f - dual.value) > 10 * eps * (1.0 + abs(packing.f)):
        raise FlowCutError(f"packing LP {packing.f} and diversity LP {dual.value} disagree")
    cut = min_hyp_cut(c, d)
    if packing.f <= 0:
        raise FlowCutError("maximum packing is zero; the gap is undefined")
    return GammaReport(cut.value / packing.f, packing, cut, dual)


def verify_sandwich(c, d: SubsetVector, eps: float = EPS_LP,
                    backend: str = "simplex") -> SandwichReport:
    """MaxHSP <= MinHypCut <= k1(delta*) MaxHSP, with delta* the optimal dual diversity."""
    rep = gamma(c, d, eps, backend)
    k1 = min_distortion_l1(rep.dual.diversity, eps, backend).k1
    f, cut = rep.packing.f, rep.cut.value
    lower, upper = cut - f, k1 * f - cut
    tol = 10 * eps * (1.0 + abs(cut))
    return SandwichReport(f, cut, k1, lower, upper, lower >= -tol and upper >= -tol)


def _cheapest_cover(t: TabulatedDiversity, edges: Sequence[int], r: int) -> tuple[int, ...]:
    """A minimal connected cover of r whose edge values under t sum to t(r)."""
    fam = enumerate_minimal_covers(edges, r)
    costs = [sum(t.values[e] for e in cover) for cover in fam.covers]
    k = int(np.argmin(costs))
    if costs[k] > t.values[r] + 1e-7 * (1.0 + t.values[r]):
        raise FlowCutError(
            f"diversity is not supported on the hypergraph: no cover of {t.ground.members(r)} "
            f"matches its value {t.values[r]} (best {costs[k]})")
    return fam.covers[k]


def redistribute_capacities(t: TabulatedDiversity, edges: Sequence[int],
                            cap: SubsetVector) -> SubsetVector:
    """Move capacity off non-edges onto a tight cover, largest sets first.

    Each step keeps C.t unchanged and never lowers C.mu for any diversity mu.
    """
    edge_set = set(edges)
    values = dict(cap.values)
    sizes = popcounts(t.ground.n)
    for r in sorted([m for m in values if m not in edge_set], key=lambda m: (-sizes[m], m)):
        w = values.pop(r)
        if sizes[r] < 2:
            continue
        for h in _cheapest_cover(t, edges, r):
            values[h] = values.get(h, 0.0) + w
    return SubsetVector(t.ground, values)


def extract_tight_instance(t: TabulatedDiversity, h: WeightedHypergraph, eps: float = EPS_LP,
                           backend: str = "simplex", k1: K1Result | None = None) -> TightInstance:
    """Capacities on h and demands whose flow-cut gap is at least k1(t).

    The dual certificate of the k1 LP gives (C, D) with D.t / C.t = k1 and
    D.mu <= C.mu on the cut cone; capacity on non-edges is then pushed onto
    covers that realize t, which keeps both properties. The gap equals k1(t)
    exactly when t is also optimal for the packing dual, which holds when t
    maximizes k1 among diversities supported on h, but not in general.
    """
    res = k1 if k1 is not None else min_distortion_l1(t, eps, backend)
    if res.capacities.dot(t) <= 0:
        raise FlowCutError("degenerate dual certificate: C . t == 0")
    cap = redistribute_capacities(t, list(h.masks), res.capacities)
    return TightInstance(cap, res.demands, res.k1)


def random_instance(rng: np.random.Generator, n: int, max_edges: int = 8,
                    low: float = 0.1, high: float = 2.0, max_demands: int = 4):
    """Connected random hypergraph capacities and random demands on n elements."""
    ground = GroundSet.of_size(n)
    full = ground.full
    while True:
        m = int(rng.integers(max(2, n - 1), max_edges + 1))
        edges = {}
        while len(edges) < m:
            size = int(rng.integers(2, min(n, 3) + 1)) if n > 2 else 2
            members = rng.choice(n, size=size, replace=False)
            mask = int(sum(1 << int(i) for i in members))
            edges.setdefault(mask, float(rng.uniform(low, high)))
            if len(edges) >= (1 << n) - n - 1:
                break
        if _connected(list(edges)) and _span(edges) == full:
            break
    cap = SubsetVector(ground, edges)
    k = min(int(rng.integers(1, max_demands + 1)), (1 << n) - n - 1)
    dem = {}
    while len(dem) < k:
        size = int(rng.integers(2, n + 1))
        members = rng.choice(n, size=size, replace=False)
        dem[int(sum(1 << int(i) for i in members))] = float(rng.uniform(low, high))
    return cap, SubsetVector(ground, dem)


def _span(edges) -> int:
    span = 0
    for e in edges:
        span |= e
    return span


def check_packing(sol: PackingSolution, c, d: SubsetVector, eps: float = EPS_LP) -> bool:
    cap = as_capacities(c)
    ok = all(load <= cap[e] + eps for e, load in sol.edge_load.items())
    got = {}
    for (cover, s), z in sol.z.items():
        got[s] = got.get(s, 0.0) + z
    return ok and all(got.get(s, 0.0) >= sol.f * d[s] - eps for s in d.support())


__all__ = [
    "CoverFamily", "PackingSolution", "CutReport", "DualSolution", "GammaReport",
    "SandwichReport", "TightInstance", "FlowCutError", "enumerate_minimal_covers",
    "max_hsp_primal", "max_hsp_dual", "min_hyp_cut", "min_cut_over_split_systems", "gamma",
    "verify_sandwich", "extract_tight_instance", "redistribute_capacities", "random_instance",
    "check_packing", "EPS_DIV",
]
