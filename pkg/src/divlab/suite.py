"""Seeded random instances and cross-module property checks."""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (EPS_DIV, GroundSet, TabulatedDiversity, induced_metric, popcounts,
                   reduced_d2_check, validate_diversity)
from .embed import min_distortion_l1
from .flowcut import (check_packing, max_hsp_dual, max_hsp_primal, min_cut_over_split_systems,
                      min_hyp_cut, random_instance)
from .l1cone import (SplitSystem, alternating_sums, chain_embedding, evaluate_split_system,
                     is_l1_embeddable, mobius_cut_weights)
from .linprog import EPS_LP
from .zoo import (PointCloud, WeightedHypergraph, diameter_diversity,
                  hypergraph_steiner_diversity, l1_diversity, metric_steiner_diversity)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def case_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per (seed, case index)."""
    return np.random.default_rng([seed, index])


def random_split_system(rng: np.random.Generator, n: int, density: float = 0.5,
                        integer: bool = False) -> SplitSystem:
    ground = GroundSet.of_size(n)
    sides = [u for u in range(1, 1 << n, 2) if u != ground.full]
    weights = {}
    for u in sides:
        if rng.random() < density:
            weights[u] = float(rng.integers(1, 5)) if integer else float(rng.uniform(0.1, 2.0))
    return SplitSystem.from_splits(ground, weights)


def random_hypergraph(rng: np.random.Generator, n: int, max_edges: int = 8,
                      graph: bool = False, low: float = 0.1, high: float = 2.0) -> WeightedHypergraph:
    """Connected hypergraph spanning all n elements."""
    ground = GroundSet.of_size(n)
    if graph:
        pool = [(1 << a) | (1 << b) for a, b in itertools.combinations(range(n), 2)]
    else:
        pool = [m for m in range(1 << n) if 2 <= popcounts(n)[m] <= min(n, 3)]
    while True:
        k = int(rng.integers(max(1, n - 1), min(max_edges, len(pool)) + 1))
        picks = rng.choice(len(pool), size=k, replace=False)
        masks = [pool[int(i)] for i in picks]
        if _spans(ground.full, masks):
            break
    return WeightedHypergraph(ground, tuple((m, float(rng.uniform(low, high))) for m in masks))


def _spans(full: int, masks) -> bool:
    span, rest, grew = masks[0], list(masks[1:]), True
    while rest and grew:
        grew = False
        for e in list(rest):
            if e & span:
                span |= e
                rest.remove(e)
                grew = True
    return not rest and span == full


def random_diversity(rng: np.random.Generator, n: int) -> TabulatedDiversity:
    """A valid diversity drawn from a mix of families."""
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return evaluate_split_system(random_split_system(rng, n))
    if kind == 1 and n >= 2:
        return hypergraph_steiner_diversity(random_hypergraph(rng, n))
    if kind == 2:
        cloud = PointCloud(GroundSet.of_size(n), rng.normal(size=(n, int(rng.integers(1, 4)))))
        return diameter_diversity(induced_metric(l1_diversity(cloud)))
    a = evaluate_split_system(random_split_system(rng, n))
    b = hypergraph_steiner_diversity(random_hypergraph(rng, n)) if n >= 2 else a
    return a + b


def perturb(rng: np.random.Generator, t: TabulatedDiversity, scale: float = 0.5) -> TabulatedDiversity:
    """Nudge one set of size >= 2, which may or may not break the axioms."""
    values = np.array(t.values)
    cand = np.flatnonzero(popcounts(t.ground.n) >= 2)
    if cand.size:
        a = int(rng.choice(cand))
        values[a] = max(0.0, values[a] + rng.normal(scale=scale))
    return TabulatedDiversity(t.ground, values)


# ---------------------------------------------------------------------------
# property checks
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class CaseResult:
    index: int
    n: int
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


def check_reduced_d2(t: TabulatedDiversity) -> CheckResult:
    full = validate_diversity(t).ok
    red = reduced_d2_check(t)
    return CheckResult("reduced_d2", full == red, f"full={full} reduced={red}")


def check_cut_cone(s: SplitSystem, tol: float = 1e-9) -> CheckResult:
    t = evaluate_split_system(s)
    scale = 1.0 + float(np.abs(t.values).max())
    eq7 = float(np.abs(alternating_sums(t) - t.values).max())
    lam = mobius_cut_weights(t, tol * scale)
    eq8 = float(np.abs(lam.lam - s.lam).max())
    emb = chain_embedding(s)
    back = l1_diversity(PointCloud(s.ground, emb.coords)) if emb.m else None
    iso = float(np.abs(back.values - t.values).max()) if back is not None else float(np.abs(t.values).max())
    ok = max(eq7, eq8, iso) <= tol * scale and is_l1_embeddable(t, tol * scale).embeddable
    return CheckResult("cut_cone", ok, f"eq7={eq7:.3g} eq8={eq8:.3g} iso={iso:.3g} m={emb.m}")


def check_metric_sandwich(t: TabulatedDiversity, tol: float = EPS_DIV) -> CheckResult:
    """diam <= t <= steiner(d) <= (|A| - 1) diam."""
    d = induced_metric(t)
    diam = diameter_diversity(d).values
    st = metric_steiner_diversity(d).values
    k = np.maximum(popcounts(t.ground.n) - 1, 0)
    slack = min((t.values - diam).min(), (st - t.values).min(), (k * diam - st).min())
    return CheckResult("metric_sandwich", slack >= -tol * (1 + t.values.max()), f"slack={slack:.3g}")


def check_flow_cut(c, d, eps: float = EPS_LP, tol: float = 1e-6) -> list[CheckResult]:
    packing = max_hsp_primal(c, d, eps)
    dual = max_hsp_dual(c, d, eps)
    cut = min_hyp_cut(c, d)
    lp_cut = min_cut_over_split_systems(c, d, eps)
    k1 = min_distortion_l1(dual.diversity, eps).k1
    f = packing.f
    return [
        CheckResult("strong_duality", abs(f - dual.value) <= tol * (1 + abs(f)),
                    f"primal={f:.12g} dual={dual.value:.12g}"),
        CheckResult("packing_feasible", check_packing(packing, c, d, eps), ""),
        CheckResult("cut_cone_min", abs(cut.value - lp_cut) <= tol * (1 + abs(cut.value)),
                    f"enum={cut.value:.12g} lp={lp_cut:.12g}"),
        CheckResult("sandwich", cut.value - f >= -tol and k1 * f - cut.value >= -tol,
                    f"maxhsp={f:.12g} mincut={cut.value:.12g} k1={k1:.12g}"),
    ]


def check_k1(t: TabulatedDiversity, eps: float = EPS_LP, tol: float = 1e-6) -> CheckResult:
    res = min_distortion_l1(t, eps)
    hat = evaluate_split_system(res.witness).values
    embeddable = is_l1_embeddable(t, 1e-9 * (1 + t.values.max())).embeddable
    ok = (res.k1 >= 1 - tol and (hat >= t.values - tol).all()
          and (hat <= res.k1 * t.values + tol).all()
          and embeddable == (res.k1 <= 1 + tol))
    return CheckResult("k1", ok, f"k1={res.k1:.12g} embeddable={embeddable}")


def run_case(seed: int, index: int, n: int) -> CaseResult:
    rng = case_rng(seed, index)
    out = CaseResult(index, n)
    t = random_diversity(rng, n)
    out.checks.append(check_reduced_d2(t))
    out.checks.append(check_reduced_d2(perturb(rng, t)))
    out.checks.append(check_metric_sandwich(t))
    out.checks.append(check_cut_cone(random_split_system(rng, n)))
    if n >= 2:
        out.checks.append(check_k1(t))
        c, d = random_instance(rng, n)
        out.checks.extend(check_flow_cut(c, d))
    return out


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("DIVLAB_THREADS", "1")))
    except ValueError:
        return 1


def run_suite(seed: int, n: int, count: int, threads: int | None = None) -> list[CaseResult]:
    """Run ``count`` cases; results are ordered by case index regardless of threads."""
    threads = threads or thread_count()
    if threads == 1:
        return [run_case(seed, i, n) for i in range(count)]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(lambda i: run_case(seed, i, n), range(count)))
