"""Numerical elementary differentials by finite differences.

Multilinear derivatives ``D^m g(x)(v_1, ..., v_m)`` are taken with a tensor
product of five-point central stencils, which is exact (up to round-off) for
polynomials of degree at most four in each direction.  This is an oracle for
tests, not a production kernel: the cost grows like ``4**m``.
"""

from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np

from ..core import SkewGradientSystem
from ..dg import DiscreteGradient, dg_q
from .combinations import EPCombination, StemNode, stem_tree
from .tree import CIRCLE, TRIANGLE, Tree, TreeKind

_OFFSETS = (-2.0, -1.0, 1.0, 2.0)
_WEIGHTS = (1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0)
DEFAULT_STEP = 0.05


def multilinear_derivative(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                           directions: Sequence[np.ndarray], step: float = DEFAULT_STEP) -> np.ndarray:
    """``D^m fn(x)(v_1, ..., v_m)``; zero directions give zero."""
    x = np.asarray(x, dtype=float)
    if not directions:
        return np.asarray(fn(x), dtype=float)
    norms = [float(np.linalg.norm(v)) for v in directions]
    if any(n == 0.0 for n in norms):
        return np.zeros_like(np.asarray(fn(x), dtype=float))
    units = [np.asarray(v, dtype=float) / n for v, n in zip(directions, norms)]
    total = None
    for combo in itertools.product(range(len(_OFFSETS)), repeat=len(units)):
        w = 1.0
        y = x.copy()
        for k, idx in enumerate(combo):
            w *= _WEIGHTS[idx]
            y = y + (_OFFSETS[idx] * step) * units[k]
        val = w * np.asarray(fn(y), dtype=float)
        total = val if total is None else total + val
    return total * (float(np.prod(norms)) / step ** len(units))


def elementary_differential(t: Tree, system: SkewGradientSystem, x: np.ndarray,
                            dg: DiscreteGradient | None = None, step: float = DEFAULT_STEP) -> np.ndarray:
    """``F(t)(x)``.

    Circle nodes give ``(D^l S)(F(white children)) (D^m grad H)(F(black children))``.
    Triangle nodes give ``S D_2^{m-1} Q(x, x)`` applied to the children,
    averaged over which child enters as the vector argument.
    """
    x = np.asarray(x, dtype=float)
    cache: dict[Tree, np.ndarray] = {}

    def F(node: Tree) -> np.ndarray:
        key = node.recolored("b")
        if key in cache:
            return cache[key]
        if node.shape == TRIANGLE:
            val = _triangle(node, system, x, dg, F, step)
        else:
            whites = [F(c) for c in node.white_children()]
            blacks = [F(c) for c in node.black_children()]
            if whites and system.is_constant_S:
                val = np.zeros(system.dim)
            else:
                S = multilinear_derivative(system.skew, x, whites, step)
                g = multilinear_derivative(system.grad, x, blacks, step)
                val = S @ g
        cache[key] = val
        return val

    return F(t)


def _triangle(node, system, x, dg, F, step):
    if dg is None:
        raise ValueError("triangle nodes need a discrete gradient")
    kids = [F(c) for c in node.children]
    S = system.skew(x)
    acc = np.zeros(system.dim)
    for i in range(len(kids)):
        others = kids[:i] + kids[i + 1:]
        Qd = multilinear_derivative(lambda y: dg_q(dg, system, x, y), x, others, step)
        acc += Qd @ kids[i]
    return S @ (acc / len(kids))


def chain_matrix(node: StemNode, system: SkewGradientSystem, x: np.ndarray,
                 dg: DiscreteGradient | None = None, step: float = DEFAULT_STEP) -> np.ndarray:
    """``R`` of one stem node: ``D^{|mu|} Hess H (F(mu))`` or ``D_2^{|mu|} Q(x, x)(F(mu))``."""
    mus = [elementary_differential(t, system, x, dg, step) for t in node.mu]
    if node.shape == CIRCLE:
        hess = system.hess if system.hess is not None else None
        if hess is None:
            raise ValueError("system needs an analytic Hessian")
        return multilinear_derivative(hess, x, mus, step)
    return multilinear_derivative(lambda y: dg_q(dg, system, x, y), x, mus, step)


def chain_differential(stem: Sequence[StemNode], system: SkewGradientSystem, x: np.ndarray,
                       dg: DiscreteGradient | None = None, step: float = DEFAULT_STEP) -> np.ndarray:
    """``S R_1 S R_2 ... S R_n S grad H`` for a constant-S stem."""
    S = system.skew(x)
    v = S @ system.grad(x)
    for node in reversed(stem):
        v = S @ (chain_matrix(node, system, x, dg, step) @ v)
    return v


def combination_differential(combo: EPCombination, kind: TreeKind, system: SkewGradientSystem,
                             x: np.ndarray, dg: DiscreteGradient | None = None,
                             step: float = DEFAULT_STEP) -> tuple[np.ndarray, float]:
    """``F(omega)(x)`` and a magnitude scale (sum of member norms).

    Mono and bi-coloured members are evaluated tree by tree.  Shaped members
    are evaluated along their stems, where the stem child is the vector
    argument of each ``Q`` derivative.
    """
    x = np.asarray(x, dtype=float)
    if kind is TreeKind.SHAPED:
        rstem, _ = combo.reversed_stem()
        parts = {stem_tree(combo.stem): chain_differential(combo.stem, system, x, dg, step),
                 stem_tree(rstem): chain_differential(rstem, system, x, dg, step)}
        vals = [(c, parts[t]) for c, t in combo.members]
    else:
        vals = [(c, elementary_differential(t, system, x, dg, step)) for c, t in combo.members]
    total = sum(c * v for c, v in vals)
    scale = sum(abs(c) * float(np.linalg.norm(v)) for c, v in vals)
    return total, scale
