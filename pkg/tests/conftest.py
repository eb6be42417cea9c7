"""Shared helpers: random parameter generation, independent oracles, and the
acceptance-summary hook."""
from __future__ import annotations

import numpy as np

from rwde.model import DirichletParams, validate_params

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_params(rnd, max_side: int = 3, lo: float = 0.1, hi: float = 3.0) -> DirichletParams:
    """Random valid weights with L, R <= max_side (resamples until the
    support passes validation)."""
    while True:
        L = rnd.randrange(1, max_side + 1)
        R = rnd.randrange(1, max_side + 1)
        alphas = {}
        for i in range(-L, R + 1):
            if i in (-L, R) or rnd.random() < 0.55:
                alphas[i] = lo + (hi - lo) * rnd.random()
        try:
            return validate_params(L, R, alphas)
        except Exception:
            continue
    raise AssertionError


def reach_closure_oracle(n: int, edges) -> np.ndarray:
    """Transitive closure by boolean matrix repeated squaring (the strong
    connectivity oracle for graphs of at most 64 vertices)."""
    A = np.zeros((n, n), dtype=bool)
    for t, h in edges:
        A[t, h] = True
    reach = A.copy()
    for _ in range(max(1, n.bit_length())):
        reach = reach | (reach @ reach)
    return reach


def gambler_ruin_up_probability(p_right: np.ndarray) -> np.ndarray:
    """Closed form for a birth-death chain on [0, N]: probability, from each
    z, of hitting N before 0.  p_right[z] is the up-probability at site z,
    z = 1..N-1."""
    rho = (1.0 - p_right) / p_right
    prods = np.concatenate([[1.0], np.cumprod(rho)])  # prod_{j<=k} rho_j, k=0..N-1
    csum = np.cumsum(prods)
    total = csum[-1]
    return np.concatenate([[0.0], csum / total])[: len(p_right) + 2]
