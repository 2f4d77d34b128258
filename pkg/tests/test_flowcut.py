import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from divlab.core import GroundSet, SubsetVector, TabulatedDiversity, validate_diversity
from divlab.embed import min_distortion_l1
from divlab.flowcut import (FlowCutError, check_packing, enumerate_minimal_covers,
                            extract_tight_instance, gamma, max_hsp_dual, max_hsp_primal,
                            min_cut_over_split_systems, min_hyp_cut, random_instance,
                            reduced_diversity_rows, redistribute_capacities, verify_sandwich)
from divlab.l1cone import evaluate_split_system
from divlab.suite import random_diversity, random_hypergraph, random_split_system
from divlab.zoo import WeightedHypergraph, hypergraph_steiner_diversity

from oracles import (d2_brute, min_cut_brute, minimal_covers_brute, split_table_direct,
                     tight_multipliers_exist)

G3 = GroundSet.of_size(3)
TRI = SubsetVector(G3, {3: 1.0, 5: 1.0, 6: 1.0})
PATH = SubsetVector(G3, {3: 1.0, 6: 1.0})
ALL3 = SubsetVector(G3, {7: 1.0})
G4 = GroundSet.of_size(4)
CYCLE = SubsetVector(G4, {0b0011: 1.0, 0b0110: 1.0, 0b1100: 1.0, 0b1001: 1.0})
DIAGONALS = SubsetVector(G4, {0b0101: 1.0, 0b1010: 1.0})


def test_cover_examples():
    assert enumerate_minimal_covers(PATH, 5).covers == ((3, 6),)
    assert set(enumerate_minimal_covers(TRI, 7).covers) == {(3, 5), (3, 6), (5, 6)}
    h = WeightedHypergraph(G4, ((0b0111, 1.0), (0b1100, 1.0)))
    assert enumerate_minimal_covers(h, 0b0011).covers == ((0b0111,),)
    with pytest.raises(FlowCutError):
        enumerate_minimal_covers([3], 0b101)
    with pytest.raises(FlowCutError):
        enumerate_minimal_covers([3], 1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 5))
def test_covers_match_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    h = random_hypergraph(rng, n, max_edges=7)
    s = int(rng.integers(1, 1 << n))
    if bin(s).count("1") < 2:
        s = (1 << n) - 1
    got = {frozenset(c) for c in enumerate_minimal_covers(h, s).covers}
    assert got == minimal_covers_brute(list(h.masks), s)


def test_packing_examples():
    assert max_hsp_primal(PATH, SubsetVector(G3, {5: 1.0})).f == pytest.approx(1)
    sol = max_hsp_primal(TRI, ALL3)
    assert sol.f == pytest.approx(1.5)
    assert all(load == pytest.approx(1.0) for load in sol.edge_load.values())
    assert max_hsp_primal(CYCLE, DIAGONALS).f == pytest.approx(1)


def test_packing_errors():
    with pytest.raises(FlowCutError):
        max_hsp_primal(TRI, SubsetVector(G3, {}))
    with pytest.raises(FlowCutError):
        max_hsp_primal(SubsetVector(G3, {3: 1.0}), SubsetVector(G3, {5: 1.0}))


def test_dual_examples():
    d = max_hsp_dual(TRI, ALL3)
    assert d.value == pytest.approx(1.5)
    assert validate_diversity(d.diversity, 1e-7).ok
    assert max_hsp_dual(PATH, SubsetVector(G3, {5: 1.0})).value == pytest.approx(1)
    assert max_hsp_dual(ALL3, ALL3).value == pytest.approx(1)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_reduced_rows_cut_out_the_diversity_cone(n):
    var, G = reduced_diversity_rows(n)
    rng = np.random.default_rng(n)
    for k in range(150):
        t = random_diversity(rng, n)
        values = np.array(t.values)
        if k % 2:
            values[var] = np.maximum(values[var] + rng.normal(scale=0.5, size=var.size), 0)
        inside = not G.size or (G @ values[var] <= 1e-9).all()
        assert inside == d2_brute(values, n)


def test_cut_examples():
    rep = min_hyp_cut(TRI, ALL3)
    assert rep.value == 2 and bin(rep.best_u).count("1") in (1, 2)
    assert min_hyp_cut(PATH, SubsetVector(G3, {5: 1.0})).value == 1
    rep = min_hyp_cut(CYCLE, DIAGONALS)
    assert rep.value == 1
    assert G4.members(rep.best_u) in (("a", "b"), ("a", "d"))
    with pytest.raises(FlowCutError):
        min_hyp_cut(TRI, SubsetVector(G3, {1: 1.0}))


def test_gamma_examples():
    assert gamma(TRI, ALL3).gamma == pytest.approx(4 / 3)
    assert gamma(PATH, SubsetVector(G3, {5: 1.0})).gamma == pytest.approx(1)
    assert gamma(ALL3, ALL3).gamma == pytest.approx(1)


def test_sandwich_examples():
    rep = verify_sandwich(TRI, ALL3)
    assert rep.ok and rep.upper_slack == pytest.approx(0, abs=1e-9)
    assert (rep.maxhsp, rep.mincut, rep.k1) == (pytest.approx(1.5), pytest.approx(2), pytest.approx(4 / 3))
    rep = verify_sandwich(PATH, SubsetVector(G3, {5: 1.0}))
    assert rep.ok and rep.maxhsp == pytest.approx(1) == rep.mincut and rep.k1 == pytest.approx(1)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 5))
def test_random_instances(seed, n):
    c, d = random_instance(np.random.default_rng(seed), n)
    sol = max_hsp_primal(c, d)
    assert check_packing(sol, c, d)
    dual = max_hsp_dual(c, d)
    assert sol.f == pytest.approx(dual.value, abs=1e-6 * (1 + sol.f))
    cut = min_hyp_cut(c, d)
    assert cut.value == pytest.approx(min_cut_brute(n, c.values, d.values), abs=1e-12)
    assert cut.value == pytest.approx(min_cut_over_split_systems(c, d), abs=1e-6)
    for u, cc, dd in cut.per_cut:
        assert cc == pytest.approx(split_table_direct(G3 if n == 3 else c.ground, {u: 1.0}) @ c.to_array())
        assert dd == pytest.approx(split_table_direct(c.ground, {u: 1.0}) @ d.to_array())
    assert verify_sandwich(c, d).ok


def steiner(h):
    return hypergraph_steiner_diversity(h)


def test_tight_triangle():
    h = WeightedHypergraph(G3, ((3, 1.0), (5, 1.0), (6, 1.0)))
    inst = extract_tight_instance(steiner(h), h)
    assert inst.k1 == pytest.approx(4 / 3)
    assert set(inst.capacities.support()) <= set(h.masks)
    assert gamma(inst.capacities, inst.demands).gamma == pytest.approx(4 / 3, abs=1e-9)


def test_tight_split_system_and_two_points():
    h = WeightedHypergraph(G4, ((0b0011, 1.0), (0b0110, 2.0), (0b1100, 0.5)))
    t = steiner(h)     # a path: its Steiner diversity is a split system
    inst = extract_tight_instance(t, h)
    assert inst.k1 == pytest.approx(1)
    assert gamma(inst.capacities, inst.demands).gamma == pytest.approx(1, abs=1e-9)
    g2 = GroundSet.of_size(2)
    h2 = WeightedHypergraph(g2, ((3, 2.0),))
    inst = extract_tight_instance(steiner(h2), h2)
    assert gamma(inst.capacities, inst.demands).gamma == pytest.approx(1)


def test_redistribution_keeps_value_and_cut_bounds():
    rng = np.random.default_rng(9)
    for _ in range(10):
        h = random_hypergraph(rng, 5, max_edges=6)
        t = steiner(h)
        r = min_distortion_l1(t)
        cap = redistribute_capacities(t, list(h.masks), r.capacities)
        assert set(cap.support()) <= set(h.masks)
        assert cap.dot(t) == pytest.approx(r.capacities.dot(t))
        for u in range(1, 31, 2):
            mu = split_table_direct(t.ground, {u: 1.0})
            assert cap.dot(mu) >= r.capacities.dot(mu) - 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 5), graph=st.booleans())
def test_tight_extraction_never_undershoots(seed, n, graph):
    # the mechanism guarantees gamma >= k1(t); equality needs t to solve the packing dual
    h = random_hypergraph(np.random.default_rng(seed), n, max_edges=6, graph=graph)
    inst = extract_tight_instance(steiner(h), h)
    assert gamma(inst.capacities, inst.demands).gamma >= inst.k1 - 1e-7


def test_tight_extraction_can_overshoot_for_any_multipliers():
    # triangle plus the full hyperedge, weights chosen so t(V) = t(ac) = t(bc)
    h = WeightedHypergraph(G3, ((3, 1.0563392511741732), (6, 1.3727426636528932),
                                (7, 1.1187953511284088), (5, 1.193214517442095)))
    t = steiner(h)
    inst = extract_tight_instance(t, h)
    g = gamma(inst.capacities, inst.demands).gamma
    assert g == pytest.approx(1.5) and inst.k1 == pytest.approx(1.4720877907, abs=1e-9)
    # no choice of optimal multipliers puts t at the packing optimum
    assert not tight_multipliers_exist(t, h.masks, inst.k1)


def test_tight_extraction_requires_support():
    h = WeightedHypergraph(G3, ((3, 1.0), (6, 1.0)))
    t = evaluate_split_system(random_split_system(np.random.default_rng(1), 3, density=1.0))
    with pytest.raises(FlowCutError):
        extract_tight_instance(t, h)


def test_tight_extraction_degenerate():
    with pytest.raises(FlowCutError):
        extract_tight_instance(TabulatedDiversity(G3, np.zeros(8)),
                               WeightedHypergraph(G3, ((7, 1.0),)))
