"""Trap exit weights, the certified kappa0 search, and regime classification.

kappa0 is the minimum total weight leaving a finite strongly connected vertex
set.  It is found by searching subsets of [0, max_diameter] whose leftmost
point is 0: exhaustively for small diameters, and by depth-first
branch-and-bound otherwise.  Two facts make the pruning sharp:

* every support offset must exit at least once from a strongly connected set
  (the extreme points always exit), giving a per-offset floor on any
  completion, and
* in left-to-right decision order every undecided vertex lies strictly right
  of the decided ones, and appending vertices strictly outside the current
  span never lowers the exit weight, so the running exit weight of the
  partial set is itself a valid lower bound.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .errors import DiameterTooSmall, EmptySet, UncertifiedKappa0
from .graphs import WeightedDigraph, strongly_connected
from .model import DirichletParams, DerivedParams, derive_params

DEFAULT_NODE_BUDGET = 50_000_000


@dataclass(frozen=True)
class TrapSet:
    """A candidate trap: vertex offsets (leftmost 0), per-offset exit counts
    x_i = #{z in S : z + i not in S}, and the exit weight beta = sum x_i * alpha_i."""

    offsets: tuple
    exit_counts: dict
    beta: float


@dataclass(frozen=True)
class Kappa0Result:
    value: float
    witness: TrapSet
    certified: bool
    diameter_searched: int
    certified_bound: int
    nodes_explored: int
    budget_exhausted: bool = False


@dataclass(frozen=True)
class Regime:
    tag: str  # Recurrent | TransientRight | TransientLeft
    ballistic: bool
    kappa0: float
    kappa1: float
    warning: str | None = None


def exit_weights(p: DirichletParams, S) -> TrapSet:
    """Exit counts and exit weight of the vertex set S (leftmost point 0).

    Pure weight computation; strong connectivity is not required here.  The
    count for offset 0 is always 0 since self-loops never exit.
    """
    offs = tuple(sorted(set(S)))
    if not offs:
        raise EmptySet("exit weights need a nonempty set")
    if offs[0] != 0:
        raise ValueError(f"leftmost point must be 0, got {offs[0]} (translate first)")
    members = set(offs)
    counts = {}
    beta = 0.0
    for i in p.support:
        x_i = sum(1 for z in offs if z + i not in members)
        counts[i] = x_i
        beta += x_i * p.alphas[i]
    return TrapSet(offsets=offs, exit_counts=counts, beta=beta)


def diameter_bound(p: DirichletParams, dp: DerivedParams | None = None) -> int:
    """Search diameter that certifies the minimum: with eps the smallest
    positive weight and N the smallest integer with N*eps >= d+ + d-, any set
    of diameter beyond (N-1)*m0 already exits at least d+ + d-."""
    dp = dp or derive_params(p)
    eps = min(p.alphas[i] for i in p.support)
    total = dp.d_plus + dp.d_minus
    N = max(1, math.ceil(total / eps - 1e-12))
    return (N - 1) * dp.m0


def kappa0_search(
    p: DirichletParams,
    max_diameter: int,
    strategy: str = "branch_and_bound",
    node_budget: int = DEFAULT_NODE_BUDGET,
    threads: int = 1,
) -> Kappa0Result:
    """Minimum exit weight over strongly connected S in [0, max_diameter]
    containing 0 with min(S) = 0.

    Ties are broken toward the smallest cardinality, then lexicographically
    smallest offset tuple, so the witness is reproducible.  ``exhaustive``
    enumerates every subset (feasible up to diameter ~22) and serves as the
    oracle for ``branch_and_bound``.
    """
    dp = derive_params(p)
    if max_diameter < dp.m0:
        raise DiameterTooSmall(f"max_diameter {max_diameter} < m0 = {dp.m0}")
    if strategy not in ("exhaustive", "branch_and_bound"):
        raise ValueError(f"unknown strategy {strategy!r}")

    seed = _seed_candidate(p, dp, max_diameter)
    if strategy == "exhaustive":
        key, nodes = _exhaustive(p, max_diameter, seed)
        exhausted = False
    else:
        key, nodes, exhausted = _branch_and_bound(p, max_diameter, seed, node_budget, threads)

    value, _, offsets = key
    witness = exit_weights(p, offsets)
    bound = diameter_bound(p, dp)
    return Kappa0Result(
        value=value,
        witness=witness,
        certified=(max_diameter >= bound) and not exhausted,
        diameter_searched=max_diameter,
        certified_bound=bound,
        nodes_explored=nodes,
        budget_exhausted=exhausted,
    )


def classify_regime(p: DirichletParams, k0: Kappa0Result) -> Regime:
    """Regime of the walk: transience direction from the sign of kappa1, and
    (when transient) ballistic iff min(kappa0, |kappa1|) > 1 strictly.

    kappa0 is invariant under reflection, so one search covers either sign.
    """
    dp = derive_params(p)
    warning = None
    if not k0.certified:
        warning = (
            f"kappa0 search not certified (searched diameter {k0.diameter_searched}, "
            f"certified bound {k0.certified_bound})"
        )
        warnings.warn(warning, UncertifiedKappa0)
    if dp.kappa1_is_zero:
        return Regime("Recurrent", False, k0.value, dp.kappa1, warning)
    tag = "TransientRight" if dp.kappa1 > 0 else "TransientLeft"
    ballistic = min(k0.value, abs(dp.kappa1)) > 1.0
    return Regime(tag, ballistic, k0.value, dp.kappa1, warning)


def min_exit_weight(g: WeightedDigraph, x) -> tuple:
    """(min exit weight, witness) over strongly connected subsets of an
    arbitrary finite graph containing vertex x.  Brute force; intended for
    small verification graphs."""
    verts = [v for v in g.vertices if v != x]
    if len(verts) > 20:
        raise ValueError("brute-force enumeration limited to 21 vertices")
    best = None
    for mask in range(1 << len(verts)):
        S = {x}
        for b, v in enumerate(verts):
            if (mask >> b) & 1:
                S.add(v)
        if not strongly_connected(g, S):
            continue
        beta = sum(
            w for t in S for h, w in g.out_edges(t).items() if h not in S
        )
        key = (beta, len(S), tuple(sorted(S)))
        if best is None or key < best:
            best = key
    if best is None:
        raise ValueError(f"no strongly connected subset contains {x!r}")
    return best[0], best[2]


# --- internals --------------------------------------------------------------


def _seed_candidate(p, dp, max_diameter):
    """Cheap valid candidates to start the incumbent from."""
    cands = []
    if p.alphas.get(0, 0.0) > 0.0:
        cands.append((0,))
    if dp.m0 >= 2:
        cands.append(tuple(range(dp.m0)))
    elif p.alphas.get(1, 0.0) > 0.0 and p.alphas.get(-1, 0.0) > 0.0 and max_diameter >= 1:
        cands.append((0, 1))
    best = None
    support = [i for i in p.support if i != 0]
    for S in cands:
        if max(S) > max_diameter:
            continue
        if len(S) > 1 and not _sc_offsets(set(S), support):
            continue
        ts = exit_weights(p, S)
        key = (ts.beta, len(S), S)
        if best is None or key < best:
            best = key
    return best  # may be None in pathological cases; search still covers all


def _sc_offsets(S: set, support) -> bool:
    for offs in (support, [-i for i in support]):
        seen = {0}
        stack = [0]
        while stack:
            z = stack.pop()
            for i in offs:
                w = z + i
                if w in S and w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) < len(S):
            return False
    return True


def _exhaustive(p, D, seed):
    """Bit-parallel enumeration of all subsets of [0, D] containing 0."""
    support = [i for i in p.support if i != 0]
    out_off = support
    in_off = [-i for i in support]
    has_loop = p.alphas.get(0, 0.0) > 0.0
    weights = {i: p.alphas[i] for i in support}
    best = seed
    nodes = 0
    for m in range(1 << D):
        mask = (m << 1) | 1
        nodes += 1
        if mask == 1:
            if not has_loop:
                continue
        elif not _sc_bits(mask, out_off, in_off):
            continue
        beta = 0.0
        for i in out_off:
            shifted = (mask >> i) if i > 0 else (mask << -i)
            beta += weights[i] * (mask & ~shifted).bit_count()
        if best is not None and beta > best[0]:
            continue
        S = tuple(z for z in range(D + 1) if (mask >> z) & 1)
        key = (beta, len(S), S)
        if best is None or key < best:
            best = key
    return best, nodes


def _sc_bits(mask, out_off, in_off):
    for offs in (out_off, in_off):
        reach = 1
        frontier = 1
        while frontier:
            nxt = 0
            for i in offs:
                nxt |= (frontier << i) if i > 0 else (frontier >> -i)
            frontier = nxt & mask & ~reach
            reach |= frontier
        if reach != mask:
            return False
    return True


class _BnB:
    """Depth-first membership search over vertices 1..D with 0 included.

    The per-offset exit counts of the decided set are maintained as integers
    and every exit weight is evaluated as the same offset-ordered weighted
    sum that exit_weights uses, so values are bit-identical to the exhaustive
    strategy and exact ties survive to the deterministic tie-break.

    Lower bound at a partial assignment = max(current exit weight of the
    decided set, weighted sum of max(finalized exit count, 1)); appending
    undecided vertices (all strictly right of the decided span) can only grow
    the former, and every support offset must exit a strongly connected set
    at least once for the latter.
    """

    def __init__(self, p: DirichletParams, D: int):
        self.D = D
        self.support = tuple(i for i in p.support if i != 0)
        self.alphas = tuple(p.alphas[i] for i in self.support)
        self.has_loop = p.alphas.get(0, 0.0) > 0.0
        self.nodes = 0
        self.exhausted = False

    def run(self, seed, budget, forced=()):
        """Search; `forced` pre-decides vertices 1..len(forced) (True=include)."""
        self.budget = budget
        self.best = seed  # (beta, card, offsets) or None
        D = self.D
        in_set = [False] * (D + 1)
        in_set[0] = True
        self.in_set = in_set
        m = len(self.support)
        self.counts = [1] * m   # exits of the decided set ({0}: every offset exits)
        self.floors = [0] * m   # finalized exits only
        k = 1
        for decision in forced:
            self._apply(k, decision)
            k += 1
        self._dfs(k)
        return self.best, self.nodes, self.exhausted

    def _weighted(self, counts) -> float:
        total = 0.0
        for w, c in zip(self.alphas, counts):
            total += c * w
        return total

    def _apply(self, k, include):
        in_set = self.in_set
        if include:
            for j, i in enumerate(self.support):
                t = k - i
                if 0 <= t < k and in_set[t]:
                    self.counts[j] -= 1  # edge (t, k) no longer exits
                h = k + i
                if h < 0 or h > self.D or (h < k and not in_set[h]):
                    self.floors[j] += 1  # finalized exit from k
                    self.counts[j] += 1
                elif not (0 <= h < k and in_set[h]):
                    self.counts[j] += 1  # head undecided: exits for now
            in_set[k] = True
        else:
            for j, i in enumerate(self.support):
                t = k - i
                if 0 <= t < k and in_set[t]:
                    self.floors[j] += 1  # edge (t, k) finalized as an exit

    def _undo(self, k, include):
        in_set = self.in_set
        if include:
            in_set[k] = False
            for j, i in enumerate(self.support):
                t = k - i
                if 0 <= t < k and in_set[t]:
                    self.counts[j] += 1
                h = k + i
                if h < 0 or h > self.D or (h < k and not in_set[h]):
                    self.floors[j] -= 1
                    self.counts[j] -= 1
                elif not (0 <= h < k and in_set[h]):
                    self.counts[j] -= 1
        else:
            for j, i in enumerate(self.support):
                t = k - i
                if 0 <= t < k and in_set[t]:
                    self.floors[j] -= 1

    def _dfs(self, k):
        self.nodes += 1
        if self.nodes > self.budget:
            self.exhausted = True
            return
        best = self.best
        if best is not None:
            lb = self._weighted(self.counts)
            floor_lb = self._weighted([c if c >= 1 else 1 for c in self.floors])
            if floor_lb > lb:
                lb = floor_lb
            if lb > best[0]:
                return
        if k > self.D:
            S = tuple(z for z in range(self.D + 1) if self.in_set[z])
            if len(S) == 1:
                if not self.has_loop:
                    return
            elif not _sc_offsets(set(S), self.support):
                return
            key = (self._weighted(self.counts), len(S), S)
            if best is None or key < best:
                self.best = key
            return
        for include in (True, False):
            self._apply(k, include)
            self._dfs(k + 1)
            self._undo(k, include)
            if self.exhausted:
                return


def _branch_and_bound(p, D, seed, budget, threads):
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads <= 1 or D < 6:
        bnb = _BnB(p, D)
        best, nodes, exhausted = bnb.run(seed, budget)
        return best, nodes, exhausted

    # Fan out the first `depth` decisions as independent tasks.  Workers share
    # no state; each starts from the same seed incumbent, so the reduced
    # result is identical to the sequential one for any interleaving.
    depth = max(1, min(D - 1, (threads * 4).bit_length()))
    prefixes = [tuple((m >> b) & 1 == 1 for b in range(depth)) for m in range(1 << depth)]
    per_budget = max(1, budget // len(prefixes))
    args = [(p, D, seed, per_budget, forced) for forced in prefixes]
    best = seed
    nodes = 0
    exhausted = False
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for key, n, ex in pool.map(_bnb_task, args, chunksize=max(1, len(args) // threads)):
            nodes += n
            exhausted = exhausted or ex
            if key is not None and (best is None or key < best):
                best = key
    return best, nodes, exhausted


def _bnb_task(arg):
    p, D, seed, budget, forced = arg
    bnb = _BnB(p, D)
    return bnb.run(seed, budget, forced=forced)
