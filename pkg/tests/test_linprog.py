import numpy as np
import pytest

from divlab.linprog import (INFEASIBLE, OPTIMAL, UNBOUNDED, LpError, LpProblem, require_optimal,
                            solve_lp)

BACKENDS = ["simplex", "highs"]


@pytest.mark.parametrize("backend", BACKENDS)
def test_trivial_max(backend):
    s = solve_lp(LpProblem.from_dense([1.0], [[1.0]], ["<="], [3.0], maximize=True), backend=backend)
    assert s.status == OPTIMAL and s.x[0] == pytest.approx(3) and s.duals[0] == pytest.approx(1)


@pytest.mark.parametrize("backend", BACKENDS)
def test_trivial_min(backend):
    s = solve_lp(LpProblem.from_dense([1.0], [[1.0]], [">="], [1.0]), backend=backend)
    assert s.status == OPTIMAL and s.objective == pytest.approx(1) and s.duals[0] == pytest.approx(1)


@pytest.mark.parametrize("backend", BACKENDS)
def test_infeasible(backend):
    s = solve_lp(LpProblem.from_dense([1.0], [[1.0]], ["<="], [-1.0]), backend=backend)
    assert s.status == INFEASIBLE
    with pytest.raises(LpError):
        require_optimal(s, "x")


@pytest.mark.parametrize("backend", BACKENDS)
def test_unbounded(backend):
    s = solve_lp(LpProblem.from_dense([1.0], [[1.0]], [">="], [0.0], maximize=True), backend=backend)
    assert s.status == UNBOUNDED


def test_validation():
    with pytest.raises(ValueError):
        LpProblem.from_dense([1.0, 2.0], [[1.0]], ["<="], [1.0])
    with pytest.raises(ValueError):
        LpProblem.from_dense([1.0], [[1.0]], ["<"], [1.0])
    with pytest.raises(ValueError):
        LpProblem.from_dense([np.inf], [[1.0]], ["<="], [1.0])
    with pytest.raises(ValueError):
        solve_lp(LpProblem.from_dense([1.0], [[1.0]], ["<="], [1.0]), backend="nope")


def test_bounds_and_free_variables():
    # min x - y with -2 <= x <= 4, y free but y <= 3 through a row
    p = LpProblem.from_dense([1.0, -1.0], [[0.0, 1.0]], ["<="], [3.0],
                             lb=[-2.0, -np.inf], ub=[4.0, np.inf])
    s = solve_lp(p)
    assert s.objective == pytest.approx(-5) and np.allclose(s.x, [-2, 3])


def test_redundant_equalities():
    A = [[1.0, 1.0], [2.0, 2.0], [1.0, -1.0]]
    s = solve_lp(LpProblem.from_dense([1.0, 2.0], A, ["=", "=", ">="], [2.0, 4.0, 0.0]))
    assert s.status == OPTIMAL and s.objective == pytest.approx(2)
    bad = solve_lp(LpProblem.from_dense([1.0, 2.0], A, ["=", "=", ">="], [2.0, 5.0, 0.0]))
    assert bad.status == INFEASIBLE


def random_problem(rng):
    m, n = rng.integers(1, 9), rng.integers(1, 9)
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    b = rng.integers(-5, 8, size=m).astype(float)
    senses = list(rng.choice(["<=", ">=", "="], size=m))
    c = rng.integers(-3, 4, size=n).astype(float)
    lb = np.where(rng.random(n) < 0.2, -np.inf, 0.0)
    ub = np.where(rng.random(n) < 0.3, 5.0, np.inf)
    return LpProblem.from_dense(c, A, senses, b, lb=lb, ub=ub, maximize=bool(rng.random() < 0.5))


def test_simplex_agrees_with_highs():
    rng = np.random.default_rng(0)
    seen = set()
    for _ in range(300):
        p = random_problem(rng)
        a, b = solve_lp(p), solve_lp(p, backend="highs")
        assert a.status == b.status
        seen.add(a.status)
        if a.optimal:
            assert a.objective == pytest.approx(b.objective, abs=1e-7)
            assert p.residuals(a.x).max(initial=0) <= 1e-7
    assert seen == {OPTIMAL, INFEASIBLE, UNBOUNDED}


def test_duality_gap_and_weak_duality():
    rng = np.random.default_rng(1)
    for _ in range(200):
        p = random_problem(rng)
        s = solve_lp(p)
        if not s.optimal:
            continue
        assert abs(s.objective - s.dual_objective) <= 1e-7 * (1 + abs(s.objective))
        # marginals reproduce the objective change for a small rhs move on a basic direction
        sign = 1 if p.maximize else -1
        assert sign * (s.dual_objective - s.objective) >= -1e-7


def test_objective_scaling():
    rng = np.random.default_rng(2)
    checked = 0
    for _ in range(200):
        p = random_problem(rng)
        s = solve_lp(p)
        if not s.optimal:
            continue
        q = LpProblem(3.5 * p.c, p.rows, p.cols, p.vals, p.senses, p.b, p.lb, p.ub, p.maximize)
        t = solve_lp(q)
        assert t.objective == pytest.approx(3.5 * s.objective, abs=1e-7)
        # the original optimizer stays optimal for the scaled problem
        assert q.objective(s.x) == pytest.approx(t.objective, abs=1e-7)
        checked += 1
    assert checked > 20
