"""Exact quenched computations on finite environments by linear algebra:
hitting probabilities, expected occupation before exit, invariant measures,
time reversal, and the escape-probability bracket on half-line truncations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .environment import Environment
from .errors import (
    NoExit,
    NotStronglyConnected,
    SingularSystem,
    UnreachableBoundary,
)
from .graphs import WeightedDigraph
from .model import DirichletParams, derive_params

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class HittingProblem:
    """Reach the target set A before the absorbing taboo set B."""

    env: Environment
    target: frozenset
    taboo: frozenset

    def __post_init__(self):
        if not self.target:
            raise ValueError("target set must be nonempty")
        if self.target & self.taboo:
            raise ValueError("target and taboo sets must be disjoint")


@dataclass(frozen=True)
class EscapeBracket:
    """Bounds on the never-return probability from the origin of a half-line
    truncation; lower <= true value's truncation estimate <= upper."""

    lower: float
    upper: float
    window: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def hitting_probability(problem: HittingProblem) -> dict:
    """z -> P^z(hit target before taboo), the bounded harmonic solution with
    boundary values 1 on the target and 0 on the taboo."""
    env = problem.env
    verts = env.vertices
    A = problem.target
    B = problem.taboo
    boundary = A | B
    unknown = [v for v in verts if v not in boundary]
    out = {}
    for v in A:
        out[v] = 1.0
    for v in B:
        out[v] = 0.0
    if not unknown:
        return out

    _check_coreachable(env, boundary, unknown)
    idx = {v: i for i, v in enumerate(unknown)}
    n = len(unknown)
    b = np.zeros(n)
    rows_cols = []
    rows_vals = []
    for i, v in enumerate(unknown):
        heads, probs = env.row(v)
        cols = [i]
        vals = [1.0]
        for h, q in zip(heads, probs):
            if h in A:
                b[i] += q
            elif h in B:
                pass
            elif h == v:
                vals[0] -= q
            else:
                cols.append(idx[h])
                vals.append(-q)
        rows_cols.append(cols)
        rows_vals.append(vals)

    x = _solve_structured(unknown, rows_cols, rows_vals, b)
    for i, v in enumerate(unknown):
        val = float(x[i])
        out[v] = min(1.0, max(0.0, val)) if -1e-9 <= val <= 1.0 + 1e-9 else val
    return out


def expected_visits(env: Environment, x, S) -> float:
    """Expected number of visits to x, started at x, before first leaving S.

    Signals NoExit when no exit from S is reachable from x (the expectation
    is infinite).
    """
    S = sorted(set(S))
    if x not in S:
        raise ValueError(f"start {x!r} not in S")
    members = set(S)
    reach = {x}
    stack = [x]
    exit_found = False
    while stack:
        z = stack.pop()
        heads, probs = env.row(z)
        for h in heads:
            if h not in members:
                exit_found = True
            elif h not in reach:
                reach.add(h)
                stack.append(h)
    if not exit_found:
        raise NoExit(f"the walk cannot leave {S!r} from {x!r}")

    idx = {v: i for i, v in enumerate(S)}
    n = len(S)
    M = np.eye(n)
    for v in S:
        heads, probs = env.row(v)
        for h, q in zip(heads, probs):
            if h in idx:
                M[idx[v], idx[h]] -= q
    e = np.zeros(n)
    e[idx[x]] = 1.0
    y = _dense_solve(M, e)
    return float(y[idx[x]])


def escape_probability_bracket(p: DirichletParams, env: Environment) -> EscapeBracket:
    """Bracket the origin's never-return probability on a half-line
    truncation [0, W].

    Upper bound: absorption anywhere in the right reentry band
    [W-L+1, W] counts as certain escape.  Lower bound: only reaching the far
    vertex W counts as escape, and absorption elsewhere in the band counts as
    certain return to 0.  For nearest-neighbor jumps the band is the single
    vertex W and the two bounds coincide.
    """
    dp = derive_params(p)
    if dp.kappa1_is_zero or dp.kappa1 < 0.0:
        raise ValueError(f"escape bracket needs kappa1 > 0, got {dp.kappa1}")
    W = max(env.vertices)
    if env.vertices != tuple(range(W + 1)):
        raise ValueError("environment must live on a half-line truncation [0, W]")
    band = frozenset(range(W - p.L + 1, W + 1))
    h_up = hitting_probability(HittingProblem(env, target=band, taboo=frozenset([0])))
    h_lo = hitting_probability(
        HittingProblem(env, target=frozenset([W]), taboo=frozenset([0]) | (band - {W}))
    )
    heads, probs = env.row(0)
    upper = sum(q * h_up[h] for h, q in zip(heads, probs))
    lower = sum(q * h_lo[h] for h, q in zip(heads, probs))
    return EscapeBracket(lower=float(lower), upper=float(upper), window=W)


def invariant_measure(env: Environment) -> dict:
    """Stationary probability pi of the row-stochastic environment on a
    strongly connected finite graph: pi P = pi, sum(pi) = 1."""
    verts = env.vertices
    if not _support_strongly_connected(env):
        raise NotStronglyConnected("support graph is not strongly connected")
    idx = {v: i for i, v in enumerate(verts)}
    n = len(verts)
    P = np.zeros((n, n))
    for v in verts:
        heads, probs = env.row(v)
        for h, q in zip(heads, probs):
            P[idx[v], idx[h]] = q
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = _dense_solve(A, b)
    pi = pi / pi.sum()
    residual = np.max(np.abs(pi @ P - pi))
    if residual > RESIDUAL_TOL:
        raise SingularSystem(f"stationarity residual {residual:.3e}")
    return {v: float(pi[idx[v]]) for v in verts}


def time_reverse(env: Environment) -> Environment:
    """Reversed-chain environment: new row prob x -> y is
    pi(y) * prob(y, x) / pi(x); cycles keep their probability with the
    orientation flipped."""
    pi = invariant_measure(env)
    rgraph = env.graph.reversed()
    rows = {}
    for x in rgraph.vertices:
        heads = tuple(sorted(rgraph.out_edges(x)))
        probs = np.array([pi[y] * env.prob(y, x) / pi[x] for y in heads])
        probs = probs / probs.sum()  # remove the solver's residual drift
        rows[x] = (heads, probs)
    return Environment(rgraph, rows)


def redirect_to(env: Environment, x, y) -> Environment:
    """Surgery: replace the row at x with a sure jump to y (used by the
    harmonic monotonicity checks)."""
    edges = [(t, h, w) for t, h, w in env.graph.edges() if t != x]
    edges.append((x, y, 1.0))
    g2 = WeightedDigraph(edges, vertices=env.graph.vertices)
    rows = {}
    for v in g2.vertices:
        if v == x:
            rows[v] = ((y,), np.array([1.0]))
        else:
            rows[v] = env.row(v)
    return Environment(g2, rows)


# --- linear algebra ----------------------------------------------------------


def _check_coreachable(env: Environment, boundary, unknown):
    """Every transient vertex must reach the boundary."""
    rev = {}
    for v in env.vertices:
        heads, _ = env.row(v)
        for h in heads:
            rev.setdefault(h, []).append(v)
    seen = set(boundary)
    stack = list(boundary)
    while stack:
        z = stack.pop()
        for t in rev.get(z, ()):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    missing = [v for v in unknown if v not in seen]
    if missing:
        raise UnreachableBoundary(f"no path to target/taboo from {missing[:5]!r}")


def _solve_structured(unknown, rows_cols, rows_vals, b):
    """Solve the unit-diagonal system given by scattered rows; banded when
    the unknowns are consecutive integers with small bandwidth."""
    n = len(unknown)
    contiguous = (
        all(isinstance(v, int) for v in unknown)
        and unknown == list(range(unknown[0], unknown[0] + n))
    )
    bw = 0
    for i, cols in enumerate(rows_cols):
        for j in cols:
            bw = max(bw, abs(j - i))
    if contiguous and n > 50 and bw < n // 4:
        ab = np.zeros((2 * bw + 1, n))
        for i, (cols, vals) in enumerate(zip(rows_cols, rows_vals)):
            for j, val in zip(cols, vals):
                ab[bw + i - j, j] = val
        try:
            x = scipy.linalg.solve_banded((bw, bw), ab, b)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SingularSystem(str(exc)) from exc
        resid = _residual(rows_cols, rows_vals, x, b)
        if resid > RESIDUAL_TOL:
            r = b - _matvec(rows_cols, rows_vals, x)
            x = x + scipy.linalg.solve_banded((bw, bw), ab, r)
            resid = _residual(rows_cols, rows_vals, x, b)
        if resid > RESIDUAL_TOL:
            raise SingularSystem(f"banded solve residual {resid:.3e}")
        return x
    M = np.zeros((n, n))
    for i, (cols, vals) in enumerate(zip(rows_cols, rows_vals)):
        M[i, cols] = vals
    return _dense_solve(M, b)


def _matvec(rows_cols, rows_vals, x):
    out = np.zeros(len(rows_cols))
    for i, (cols, vals) in enumerate(zip(rows_cols, rows_vals)):
        out[i] = sum(v * x[j] for j, v in zip(cols, vals))
    return out


def _residual(rows_cols, rows_vals, x, b):
    return float(np.max(np.abs(b - _matvec(rows_cols, rows_vals, x))))


def _dense_solve(M: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense LU with one step of iterative refinement to RESIDUAL_TOL."""
    try:
        lu, piv = scipy.linalg.lu_factor(M)
        x = scipy.linalg.lu_solve((lu, piv), b)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystem(str(exc)) from exc
    resid = float(np.max(np.abs(M @ x - b)))
    if resid > RESIDUAL_TOL:
        x = x + scipy.linalg.lu_solve((lu, piv), b - M @ x)
        resid = float(np.max(np.abs(M @ x - b)))
    if resid > RESIDUAL_TOL:
        raise SingularSystem(f"residual {resid:.3e} after refinement")
    return x


def _support_strongly_connected(env: Environment) -> bool:
    verts = env.vertices
    if len(verts) == 1:
        return True
    anchor = verts[0]
    fwd = {}
    rev = {}
    for v in verts:
        heads, _ = env.row(v)
        fwd[v] = list(heads)
        for h in heads:
            rev.setdefault(h, []).append(v)
    for neigh in (fwd, rev):
        seen = {anchor}
        stack = [anchor]
        while stack:
            z = stack.pop()
            for w in neigh.get(z, ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) < len(verts):
            return False
    return True
