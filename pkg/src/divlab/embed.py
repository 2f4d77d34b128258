"""Least-distortion approximation of a diversity by an l1-embeddable one."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DiversityError, SubsetVector, TabulatedDiversity, popcounts
from .l1cone import SplitSystem
from .linprog import EPS_LP, LpProblem, require_optimal, solve_lp
from .zoo import WeightedHypergraph, hypergraph_steiner_diversity

MAX_K1_ELEMENTS = 8
ZERO_REL = 1e-12


@dataclass(frozen=True)
class K1Result:
    """k1 with its witness split system and the LP's dual certificate.

    ``capacities`` and ``demands`` are normalized so that
    ``capacities . delta == 1`` and ``demands . delta == k1``, while
    ``demands . mu <= capacities . mu`` for every l1-embeddable ``mu``.
    """

    k1: float
    witness: SplitSystem
    capacities: SubsetVector
    demands: SubsetVector


def split_sides(n: int) -> np.ndarray:
    """Sides containing element 0 of the 2^(n-1) - 1 nontrivial splits."""
    full = (1 << n) - 1
    return np.array([u for u in range(1, 1 << n, 2) if u != full], dtype=np.int64)


def cut_matrix(n: int, sets: np.ndarray, sides: np.ndarray) -> np.ndarray:
    """M[i, j] = 1 when split ``sides[j]`` cuts ``sets[i]``."""
    full = (1 << n) - 1
    a = sets[:, None]
    u = sides[None, :]
    return (((a & u) != 0) & ((a & (full ^ u)) != 0)).astype(float)


def min_distortion_l1(t: TabulatedDiversity, eps: float = EPS_LP,
                      backend: str = "simplex") -> K1Result:
    """Solve for the least c with t <= mu <= c t over split-system diversities mu.

    Sets where t vanishes are pinned to mu = 0; sets where it is positive
    carry a lower row (dual: demand) and an upper row (dual: capacity).
    """
    ground = t.ground
    n = ground.n
    if n > MAX_K1_ELEMENTS:
        raise DiversityError(f"k1 LP supports at most {MAX_K1_ELEMENTS} elements")
    sizes = popcounts(n)
    vals = np.array(t.values)
    top = vals[sizes >= 2].max(initial=0.0)
    sets = np.flatnonzero(sizes >= 2)
    zero_cut = ZERO_REL * top
    pos = sets[vals[sets] > zero_cut]
    zero = sets[vals[sets] <= zero_cut]
    empty = SubsetVector(ground, {})
    if pos.size == 0:
        return K1Result(1.0, SplitSystem(ground, np.zeros(ground.size)), empty, empty)

    sides = split_sides(n)
    k = sides.size
    Mp = cut_matrix(n, pos, sides)
    Mz = cut_matrix(n, zero, sides)
    dp = vals[pos]
    lower = np.hstack([Mp, np.zeros((pos.size, 1))])
    upper = np.hstack([Mp, -dp[:, None]])
    pinned = np.hstack([Mz, np.zeros((zero.size, 1))])
    A = np.vstack([lower, upper, pinned])
    senses = (">=",) * pos.size + ("<=",) * pos.size + ("=",) * zero.size
    b = np.concatenate([dp, np.zeros(pos.size), np.zeros(zero.size)])
    c = np.zeros(k + 1)
    c[-1] = 1.0
    sol = require_optimal(solve_lp(LpProblem.from_dense(c, A, senses, b), eps, backend), "k1 LP")

    weights = np.clip(sol.x[:k], 0.0, None)
    witness = SplitSystem.from_splits(ground, {int(u): float(w) for u, w in zip(sides, weights) if w > 0})
    y = sol.duals
    dem = np.zeros(ground.size)
    cap = np.zeros(ground.size)
    dem[pos] = np.clip(y[: pos.size], 0.0, None)
    cap[pos] = np.clip(-y[pos.size: 2 * pos.size], 0.0, None)
    yz = y[2 * pos.size:]
    # free duals on pinned sets: D.mu + y.mu <= C.mu, so split y by sign
    dem[zero] += np.clip(yz, 0.0, None)
    cap[zero] += np.clip(-yz, 0.0, None)
    norm = float(cap @ vals)
    if norm > 0:
        cap /= norm
        dem /= norm
    tiny = ZERO_REL * max(cap.max(), dem.max(), 1.0)
    return K1Result(float(sol.objective), witness,
                    SubsetVector.from_array(ground, cap, tiny),
                    SubsetVector.from_array(ground, dem, tiny))


@dataclass(frozen=True)
class HypergraphSearchResult:
    k1: float
    hypergraph: WeightedHypergraph
    diversity: TabulatedDiversity
    tried: int


def k1_of_hypergraph_search(h: WeightedHypergraph, restarts: int = 20, seed: int = 0,
                            low: float = 0.1, high: float = 10.0) -> HypergraphSearchResult:
    """Heuristic lower bound on the largest k1 over Steiner diversities of ``h``.

    Only the topology of ``h`` is used. The first try uses unit weights, the
    rest draw each hyperedge weight log-uniformly from [low, high].
    """
    rng = np.random.default_rng(seed)
    m = len(h.edges)
    best = None
    for r in range(max(restarts, 1)):
        w = np.ones(m) if r == 0 else np.exp(rng.uniform(np.log(low), np.log(high), m))
        cand = h.with_weights(w)
        div = hypergraph_steiner_diversity(cand)
        k1 = min_distortion_l1(div).k1
        if best is None or k1 > best.k1:
            best = HypergraphSearchResult(k1, cand, div, r + 1)
    return HypergraphSearchResult(best.k1, best.hypergraph, best.diversity, max(restarts, 1))
