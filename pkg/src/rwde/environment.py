"""Sampling of Dirichlet environments on finite graphs, reproducible
counter-based random streams, and the simplex utilities (amalgamation,
restriction checks) used throughout the verification suites.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .errors import BadPartition, IsolatedVertex, NonpositiveConcentration
from .graphs import WeightedDigraph

_U64 = (1 << 64) - 1

# Rows whose gamma draws underflow to exact zero are redrawn; tiny
# concentrations (the trapping regime) make this non-negligible.
_resample_count = 0


def resample_count() -> int:
    return _resample_count


def reset_resample_count() -> None:
    global _resample_count
    _resample_count = 0


@dataclass(frozen=True)
class RngStream:
    """Counter-based splittable random stream keyed by (seed, index).

    Distinct (seed, index) pairs give statistically independent Philox
    streams; identical pairs reproduce byte-identical draws.
    """

    seed: int
    index: tuple = ()

    def substream(self, *parts) -> "RngStream":
        return RngStream(self.seed, self.index + tuple(int(p) & _U64 for p in parts))

    def generator(self) -> Generator:
        seq = SeedSequence(entropy=self.seed & _U64, spawn_key=self.index)
        return Generator(Philox(seq))

    def python_random(self):
        """Fast stdlib RNG seeded from this stream (used in step loops)."""
        import random

        state = SeedSequence(entropy=self.seed & _U64, spawn_key=self.index).generate_state(2)
        return random.Random((int(state[0]) << 32) ^ int(state[1]))


def _as_generator(rng) -> Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


def sample_dirichlet(concentrations, rng) -> np.ndarray:
    """One draw from the Dirichlet law via normalized Gamma(a_i, 1) variates.

    Rows containing an exact floating-point zero (gamma underflow at small
    shapes) are redrawn; see resample_count().
    """
    gen = _as_generator(rng)
    a = np.asarray(concentrations, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise NonpositiveConcentration("need a nonempty 1-d concentration vector")
    if not np.all(a > 0.0):
        raise NonpositiveConcentration(f"concentrations must be > 0, got {a}")
    if a.size == 1:
        return np.array([1.0])
    return _gamma_rows(gen, a, 1)[0]


_MIN_POSITIVE = 5e-324  # smallest subnormal double


def _gamma_rows(gen: Generator, a: np.ndarray, n: int) -> np.ndarray:
    """n independent normalized gamma rows with shape vector a, all entries
    guaranteed strictly positive.

    Rows whose draws all underflow to zero are redrawn (see resample_count).
    Individual underflowed entries are clamped to the smallest positive
    double after normalization: their true conditional values sit below
    1e-300, so the clamp is invisible to any moment or tail statistic while
    preserving the (0, 1] row invariant.
    """
    global _resample_count
    g = gen.gamma(a, size=(n, a.size))
    bad = np.where(~(g > 0.0).any(axis=1))[0]
    while bad.size:
        _resample_count += int(bad.size)
        g[bad] = gen.gamma(a, size=(bad.size, a.size))
        bad = bad[~(g[bad] > 0.0).any(axis=1)]
    rows = g / g.sum(axis=1, keepdims=True)
    rows[rows == 0.0] = _MIN_POSITIVE
    return rows


class Environment:
    """Transition rows on a finite graph: row(x) is a probability vector over
    the out-neighbors of x."""

    __slots__ = ("graph", "_rows")

    ROW_SUM_TOL = 1e-12

    def __init__(self, graph: WeightedDigraph, rows: dict, _validated: bool = False):
        if _validated:
            # rows built by the batch sampler: support, sums and positivity
            # are guaranteed by construction
            self.graph = graph
            self._rows = rows
            return
        checked = {}
        for x in graph.vertices:
            heads, probs = rows[x]
            if tuple(sorted(graph.out_edges(x))) != tuple(sorted(heads)):
                raise ValueError(f"row support at {x} does not match out-edges")
            probs = np.asarray(probs, dtype=float)
            if abs(probs.sum() - 1.0) > self.ROW_SUM_TOL:
                raise ValueError(f"row at {x} sums to {probs.sum()!r}")
            if np.any(probs <= 0.0) or np.any(probs > 1.0):
                raise ValueError(f"row at {x} has entries outside (0, 1]")
            checked[x] = (tuple(heads), probs)
        self.graph = graph
        self._rows = checked

    @property
    def vertices(self) -> tuple:
        return self.graph.vertices

    def row(self, x):
        return self._rows[x]

    def prob(self, x, y) -> float:
        heads, probs = self._rows[x]
        for h, q in zip(heads, probs):
            if h == y:
                return float(q)
        return 0.0

    def dump(self) -> str:
        """Golden-test format: ``x head prob`` lines, sorted."""
        lines = []
        for x in self.vertices:
            heads, probs = self._rows[x]
            for h, q in sorted(zip(heads, probs)):
                lines.append(f"{x} {h} {q!r}")
        return "\n".join(lines)


def sample_environment(g: WeightedDigraph, rng) -> Environment:
    """One environment on g: independent rows, row at x Dirichlet with the
    out-edge weights at x as concentrations."""
    return sample_environments(g, rng, 1)[0]


def sample_environments(g: WeightedDigraph, rng, n: int) -> list:
    """n independent environments, sampled per vertex in one batch.

    Vertices are processed in sorted order from a single generator, so the
    output is a pure function of (stream, n).
    """
    gen = _as_generator(rng)
    per_vertex = {}
    for x in g.vertices:
        out = g.out_edges(x)
        if not out:
            raise IsolatedVertex(f"vertex {x!r} has no outgoing edges")
        heads = tuple(sorted(out))
        weights = np.array([out[h] for h in heads])
        if heads == (x,):
            per_vertex[x] = (heads, np.ones((n, 1)))
        else:
            per_vertex[x] = (heads, _gamma_rows(gen, weights, n))
    envs = []
    for k in range(n):
        rows = {x: (heads, mat[k]) for x, (heads, mat) in per_vertex.items()}
        envs.append(Environment(g, rows, _validated=True))
    return envs


def amalgamate(v, partition) -> np.ndarray:
    """Block sums of a probability vector over a disjoint cover of indices."""
    v = np.asarray(v, dtype=float)
    seen = []
    for block in partition:
        seen.extend(block)
    if sorted(seen) != list(range(v.size)):
        raise BadPartition(f"blocks {partition!r} do not cover 0..{v.size - 1} exactly")
    return np.array([v[list(block)].sum() for block in partition])
