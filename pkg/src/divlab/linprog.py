"""Small linear programs with primal values and row duals.

Duals are reported as marginals: the derivative of the optimal objective
(in the problem's own sense) with respect to each row's right-hand side.
For a minimization a ``>=`` row has a nonnegative dual and a ``<=`` row a
nonpositive one; for a maximization the signs flip.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

EPS_LP = 1e-7
OPTIMAL, INFEASIBLE, UNBOUNDED, NUMERICAL = "optimal", "infeasible", "unbounded", "numerical_failure"
_SENSES = ("<=", ">=", "=")

_PIVOT_TOL = 1e-9
_COST_TOL = 1e-10
_REFACTOR_EVERY = 100
_DEGENERATE_SWITCH = 30


class LpError(RuntimeError):
    """An LP that should have been solvable came back non-optimal."""

    def __init__(self, message: str, status: str):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True, eq=False)
class LpProblem:
    c: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    senses: tuple[str, ...]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    maximize: bool = False

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        b = np.asarray(self.b, dtype=float)
        n, m = c.size, b.size
        lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float)
        ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float)
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        vals = np.asarray(self.vals, dtype=float)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("triplet arrays must have equal length")
        if len(self.senses) != m or any(s not in _SENSES for s in self.senses):
            raise ValueError(f"need one sense from {_SENSES} per row")
        if rows.size and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
            raise ValueError("triplet index out of range")
        if lb.shape != (n,) or ub.shape != (n,):
            raise ValueError("bounds must match the number of variables")
        for name, arr in (("c", c), ("b", b), ("vals", vals)):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} must be finite")
        if (lb > ub).any() or np.isposinf(lb).any() or np.isneginf(ub).any():
            raise ValueError("inconsistent variable bounds")
        for name, arr in (("c", c), ("rows", rows), ("cols", cols), ("vals", vals),
                          ("b", b), ("lb", lb), ("ub", ub)):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "senses", tuple(self.senses))

    @classmethod
    def from_dense(cls, c, A, senses, b, lb=None, ub=None, maximize=False) -> "LpProblem":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.size == 0:
            A = np.zeros((len(b), len(c)))
        if A.shape != (len(b), len(c)):
            raise ValueError(f"A has shape {A.shape}, expected ({len(b)}, {len(c)})")
        r, k = np.nonzero(A)
        return cls(c, r, k, A[r, k], tuple(senses), b, lb, ub, maximize)

    @property
    def shape(self) -> tuple[int, int]:
        return self.b.size, self.c.size

    def dense(self) -> np.ndarray:
        A = np.zeros(self.shape)
        np.add.at(A, (self.rows, self.cols), self.vals)
        return A

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """Amount by which each row is violated (0 when satisfied)."""
        ax = self.dense() @ x
        out = np.zeros(self.b.size)
        for i, s in enumerate(self.senses):
            if s == "<=":
                out[i] = max(0.0, ax[i] - self.b[i])
            elif s == ">=":
                out[i] = max(0.0, self.b[i] - ax[i])
            else:
                out[i] = abs(ax[i] - self.b[i])
        return out


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float | None = None
    dual_objective: float | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# ---------------------------------------------------------------------------
# standard form
# ---------------------------------------------------------------------------

@dataclass
class _Standard:
    A: np.ndarray          # (m, N) after slacks and row flips
    b: np.ndarray          # >= 0
    cost: np.ndarray       # (N,) minimization costs
    const: float           # objective constant from bound shifts
    n_struct: int          # structural columns before slacks
    Q: np.ndarray          # x = shift + Q @ x_struct
    shift: np.ndarray
    flip: np.ndarray       # +-1 per standard row
    n_user_rows: int
    unit_col: np.ndarray   # per row, a slack column usable as initial basis, or -1
    has_slack: np.ndarray  # rows with their own slack column are never redundant


def _standardize(p: LpProblem) -> _Standard:
    m, n = p.shape
    A = p.dense()
    sign = -1.0 if p.maximize else 1.0
    q_cols, shift = [], np.zeros(n)
    bound_rows = []
    for j in range(n):
        lo, hi = p.lb[j], p.ub[j]
        e = np.zeros(n)
        if np.isfinite(lo):
            shift[j] = lo
            e[j] = 1.0
            q_cols.append(e)
            if np.isfinite(hi):
                bound_rows.append((len(q_cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            e[j] = -1.0
            q_cols.append(e)
        else:
            e[j] = 1.0
            q_cols.append(e)
            q_cols.append(-e)
    Q = np.array(q_cols).T if q_cols else np.zeros((n, 0))
    k = Q.shape[1]
    A_s = A @ Q
    b_s = p.b - A @ shift
    senses = list(p.senses)
    if bound_rows:
        extra = np.zeros((len(bound_rows), k))
        for r, (col, cap) in enumerate(bound_rows):
            extra[r, col] = 1.0
        A_s = np.vstack([A_s, extra])
        b_s = np.concatenate([b_s, [cap for _, cap in bound_rows]])
        senses += ["<="] * len(bound_rows)
    rows = len(senses)
    n_slack = sum(s != "=" for s in senses)
    full = np.zeros((rows, k + n_slack))
    full[:, :k] = A_s
    slack_of = np.full(rows, -1)
    col = k
    for i, s in enumerate(senses):
        if s != "=":
            full[i, col] = 1.0 if s == "<=" else -1.0
            slack_of[i] = col
            col += 1
    flip = np.where(b_s < 0, -1.0, 1.0)
    full *= flip[:, None]
    b_s = b_s * flip
    unit_col = np.array([c if c >= 0 and full[i, c] == 1.0 else -1 for i, c in enumerate(slack_of)],
                        dtype=np.int64)
    cost = np.zeros(full.shape[1])
    cost[:k] = sign * (Q.T @ p.c)
    has_slack = np.array([s != "=" for s in senses], dtype=bool)
    return _Standard(full, b_s, cost, sign * float(p.c @ shift), k, Q, shift, flip, m, unit_col,
                     has_slack)


def _independent_rows(st: _Standard) -> np.ndarray | None:
    """Rows to keep after dropping linearly dependent equality rows.

    Returns None when a dependent row contradicts the ones it depends on.
    """
    from scipy.linalg import qr

    rows = np.arange(st.A.shape[0])
    eq = np.flatnonzero(~st.has_slack)
    if eq.size < 2:
        return rows
    M = st.A[eq]
    _, R, piv = qr(M.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0:
        rank = 0
    else:
        rank = int((diag > 1e-10 * diag[0] * max(M.shape)).sum())
    if rank == eq.size:
        return rows
    indep, dep = eq[np.sort(piv[:rank])], eq[np.sort(piv[rank:])]
    if rank:
        z, *_ = np.linalg.lstsq(st.A[indep].T, st.A[dep].T, rcond=None)
        implied = z.T @ st.b[indep]
    else:
        implied = np.zeros(dep.size)
    if (np.abs(implied - st.b[dep]) > 1e-9 * (1.0 + np.abs(st.b).max())).any():
        return None
    keep = np.ones(rows.size, dtype=bool)
    keep[dep] = False
    return rows[keep]


# ---------------------------------------------------------------------------
# tableau simplex
# ---------------------------------------------------------------------------

class _Tableau:
    def __init__(self, A: np.ndarray, b: np.ndarray, basis: np.ndarray):
        self.A0, self.b0 = A, b
        self.basis = basis.copy()
        self.refactor_needed = True
        self.iterations = 0

    def refactor(self, cost: np.ndarray) -> None:
        B = self.A0[:, self.basis]
        self.T = np.linalg.solve(B, self.A0) if self.basis.size else self.A0.copy()
        self.rhs = np.linalg.solve(B, self.b0) if self.basis.size else self.b0.copy()
        self.rhs[np.abs(self.rhs) < 1e-13] = 0.0
        self.d = cost - cost[self.basis] @ self.T
        self.since_refactor = 0

    def pivot(self, r: int, j: int) -> None:
        piv = self.T[r, j]
        self.T[r] /= piv
        self.rhs[r] /= piv
        col = self.T[:, j].copy()
        col[r] = 0.0
        self.T -= np.outer(col, self.T[r])
        self.rhs -= col * self.rhs[r]
        self.d -= self.d[j] * self.T[r]
        self.basis[r] = j
        self.iterations += 1
        self.since_refactor += 1

    def run(self, cost: np.ndarray, allowed: np.ndarray, max_iter: int) -> str:
        self.refactor(cost)
        bland, degenerate = False, 0
        while True:
            if self.iterations > max_iter:
                return NUMERICAL
            if self.since_refactor >= _REFACTOR_EVERY:
                self.refactor(cost)
            cand = np.flatnonzero((self.d < -_COST_TOL) & allowed)
            if cand.size == 0:
                self.refactor(cost)
                cand = np.flatnonzero((self.d < -_COST_TOL) & allowed)
                if cand.size == 0:
                    return OPTIMAL
            j = int(cand[0]) if bland else int(cand[np.argmin(self.d[cand])])
            col = self.T[:, j]
            pos = np.flatnonzero(col > _PIVOT_TOL)
            if pos.size == 0:
                return UNBOUNDED
            ratios = np.maximum(self.rhs[pos], 0.0) / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * (1.0 + best)]
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(col[ties])])
            if best <= 1e-12:
                degenerate += 1
                if degenerate > _DEGENERATE_SWITCH:
                    bland = True
            else:
                degenerate, bland = 0, False
            self.pivot(r, j)


def _simplex(p: LpProblem) -> LpSolution:
    st = _standardize(p)
    rows0 = _independent_rows(st)
    if rows0 is None:
        return LpSolution(INFEASIBLE)
    A, b = st.A[rows0], st.b[rows0]
    m, N = A.shape
    max_iter = 50 * (m + N) + 1000

    # phase 1: artificials on rows lacking a usable slack
    need = np.flatnonzero(st.unit_col[rows0] < 0)
    n_art = need.size
    art = np.zeros((m, n_art))
    art[need, np.arange(n_art)] = 1.0
    A1 = np.hstack([A, art])
    basis = st.unit_col[rows0].copy()
    basis[need] = N + np.arange(n_art)
    tab = _Tableau(A1, b, basis)
    allowed = np.ones(N + n_art, dtype=bool)
    if n_art:
        cost1 = np.zeros(N + n_art)
        cost1[N:] = 1.0
        status = tab.run(cost1, allowed, max_iter)
        if status != OPTIMAL:
            return LpSolution(NUMERICAL, iterations=tab.iterations)
        infeas = float(cost1[tab.basis] @ tab.rhs)
        if infeas > 1e-9 * (1.0 + np.abs(b).max(initial=0.0)):
            return LpSolution(INFEASIBLE, iterations=tab.iterations)
        # drive zero-level artificials out of the basis; rows where that fails are redundant
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if tab.basis[r] >= N:
                row = tab.T[r, :N]
                cand = np.flatnonzero(np.abs(row) > 1e-7)
                if cand.size:
                    tab.pivot(r, int(cand[np.argmax(np.abs(row[cand]))]))
                else:
                    keep[r] = False
        A, b = A[keep], b[keep]
        basis = tab.basis[keep]
    else:
        keep = np.ones(m, dtype=bool)
        basis = tab.basis
    tab = _Tableau(A, b, basis)
    tab.iterations = 0
    status = tab.run(st.cost, np.ones(N, dtype=bool), max_iter)
    if status != OPTIMAL:
        return LpSolution(status, iterations=tab.iterations)

    xs = np.zeros(N)
    xs[tab.basis] = tab.rhs
    xs[np.abs(xs) < 1e-12] = 0.0
    B = A[:, tab.basis]
    y_kept = np.linalg.solve(B.T, st.cost[tab.basis]) if tab.basis.size else np.zeros(0)
    y = np.zeros(st.A.shape[0])
    y[rows0[keep]] = y_kept
    primal_min = float(st.cost @ xs) + st.const
    dual_min = float(y @ st.b) + st.const
    reduced = st.cost - st.A.T @ y

    x = st.shift + st.Q @ xs[: st.n_struct]
    sign = -1.0 if p.maximize else 1.0
    duals = sign * y[: st.n_user_rows] * st.flip[: st.n_user_rows]
    scale = 1.0 + abs(primal_min)
    bscale = 1.0 + np.abs(p.b).max(initial=0.0)
    checks = (
        (xs < -1e-9 * bscale).any(),
        p.residuals(x).max(initial=0.0) > EPS_LP * bscale,
        (reduced < -EPS_LP * (1.0 + np.abs(st.cost).max(initial=0.0))).any(),
        abs(primal_min - dual_min) > EPS_LP * scale,
    )
    if any(checks):
        log.warning("simplex post-checks failed: %s", checks)
        return LpSolution(NUMERICAL, x, duals, sign * primal_min, sign * dual_min, tab.iterations)
    return LpSolution(OPTIMAL, x, duals, sign * primal_min, sign * dual_min, tab.iterations)


def _highs(p: LpProblem) -> LpSolution:
    from scipy.optimize import linprog as sp_linprog

    A = p.dense()
    sign = -1.0 if p.maximize else 1.0
    le = [i for i, s in enumerate(p.senses) if s == "<="]
    ge = [i for i, s in enumerate(p.senses) if s == ">="]
    eq = [i for i, s in enumerate(p.senses) if s == "="]
    ub_rows = le + ge
    flip = np.array([1.0] * len(le) + [-1.0] * len(ge))
    A_ub = A[ub_rows] * flip[:, None] if ub_rows else None
    b_ub = p.b[ub_rows] * flip if ub_rows else None
    bounds = [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi) for lo, hi in zip(p.lb, p.ub)]
    res = sp_linprog(sign * p.c, A_ub=A_ub, b_ub=b_ub,
                     A_eq=A[eq] if eq else None, b_eq=p.b[eq] if eq else None,
                     bounds=bounds, method="highs")
    if res.status == 2:
        return LpSolution(INFEASIBLE)
    if res.status == 3:
        return LpSolution(UNBOUNDED)
    if res.status != 0:
        return LpSolution(NUMERICAL)
    duals = np.zeros(p.b.size)
    if ub_rows:
        duals[ub_rows] = sign * res.ineqlin.marginals * flip
    if eq:
        duals[eq] = sign * res.eqlin.marginals
    obj = sign * res.fun
    return LpSolution(OPTIMAL, res.x, duals, obj, obj, int(getattr(res, "nit", 0)))


BACKENDS = {"simplex": _simplex, "highs": _highs}


def solve_lp(p: LpProblem, eps: float = EPS_LP, backend: str = "simplex") -> LpSolution:
    """Solve ``p``; when optimal, primal/dual objectives agree within eps*(1+|obj|)."""
    try:
        solver = BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown LP backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    try:
        sol = solver(p)
    except np.linalg.LinAlgError as exc:
        log.warning("LP solve failed: %s", exc)
        return LpSolution(NUMERICAL)
    if sol.optimal and abs(sol.objective - sol.dual_objective) > eps * (1.0 + abs(sol.objective)):
        return LpSolution(NUMERICAL, sol.x, sol.duals, sol.objective, sol.dual_objective, sol.iterations)
    return sol


def require_optimal(sol: LpSolution, what: str) -> LpSolution:
    if not sol.optimal:
        raise LpError(f"{what}: LP status {sol.status}", sol.status)
    return sol
