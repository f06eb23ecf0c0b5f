"""Random test systems shared by the test modules."""

from __future__ import annotations

import itertools

import numpy as np

from dgflow.core import PolynomialMatrix, SkewGradientSystem, constant_skew
from dgflow.energy import Energy, Polynomial


def monomials(dim: int, max_degree: int, min_degree: int = 1):
    return [p for p in itertools.product(range(max_degree + 1), repeat=dim) if min_degree <= sum(p) <= max_degree]


def random_polynomial(rng, dim: int, max_degree: int = 4, n_terms: int | None = None, scale: float = 1.0) -> Polynomial:
    """Random polynomial with terms up to ``max_degree`` (always including one of top degree)."""
    pool = monomials(dim, max_degree)
    top = [p for p in pool if sum(p) == max_degree]
    n_terms = n_terms or min(len(pool), 6)
    picks = {top[rng.integers(len(top))]}
    while len(picks) < n_terms:
        picks.add(pool[rng.integers(len(pool))])
    return Polynomial.from_terms([(scale * rng.normal(), p) for p in sorted(picks)], dim)


def random_skew(rng, dim: int) -> np.ndarray:
    A = rng.normal(size=(dim, dim))
    return A - A.T


def random_system(rng, dim: int, max_degree: int = 4, constant_S: bool = True, s_degree: int = 2) -> SkewGradientSystem:
    """Polynomial H with either a random constant or a random polynomial S."""
    energy = Energy(dim, random_polynomial(rng, dim, max_degree))
    if constant_S:
        return SkewGradientSystem.from_energy(energy, constant_skew(random_skew(rng, dim)), is_constant_S=True,
                                              name="random")
    pool = monomials(dim, s_degree, 0)
    upper = {(i, j): [(rng.normal(), pool[k]) for k in rng.choice(len(pool), size=3, replace=False)]
             for i in range(dim) for j in range(i + 1, dim)}
    S = PolynomialMatrix(dim, upper)
    return SkewGradientSystem.from_energy(energy, S, skew_derivative=S.derivative, name="random-S")


def quadratic_system(A, S) -> SkewGradientSystem:
    """``H = x^T A x / 2`` with constant ``S``."""
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    terms = []
    for i in range(d):
        for j in range(i, d):
            p = [0] * d
            p[i] += 1
            p[j] += 1
            c = A[i, i] / 2 if i == j else A[i, j]
            if c:
                terms.append((c, p))
    energy = Energy(d, Polynomial.from_terms(terms, d))
    return SkewGradientSystem.from_energy(energy, constant_skew(S), is_constant_S=True, name="quadratic")


def fd_grad(fn, x, eps):
    g = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (fn(x + e) - fn(x - e)) / (2 * eps)
    return g


def ep_check(kind, order, rng, points=20, max_degree=4):
    """Worst ``|F(omega) . grad H| / (scale (1 + |grad H|))`` over every combination of ``kind`` and ``order``.

    Mono uses a random constant S, bi-coloured a random polynomial S, shaped a
    constant S with the Itoh-Abe gradient so that Q is not identically zero.
    Orders above four need ``max_degree`` above four, otherwise some members
    vanish identically and only finite-difference noise is left.
    """
    from dgflow.dg import discrete_gradient
    from dgflow.trees.combinations import ep_combinations
    from dgflow.trees.elementary import combination_differential
    from dgflow.trees.tree import tree_kind

    kind = tree_kind(kind)
    dg = discrete_gradient("itoh-abe") if kind.value == "shaped" else None
    worst = 0.0
    for combo in ep_combinations(order, kind):
        for _ in range(points):
            d = int(rng.integers(2, 5))
            sysm = random_system(rng, d, max_degree=max_degree, constant_S=kind.value != "bicolored")
            x = rng.uniform(-1, 1, size=d)
            F, scale = combination_differential(combo, kind, sysm, x, dg)
            g = sysm.grad(x)
            worst = max(worst, abs(F @ g) / max(scale * (1 + np.linalg.norm(g)), 1e-300))
    return worst
