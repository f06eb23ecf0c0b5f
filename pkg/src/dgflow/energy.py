"""Energy functions with exploitable structure.

An :class:`Energy` is a polynomial part plus a sum of single-variable terms
``coef * u(x_i)``.  That structure gives exact average-vector-field
gradients (Gauss-Legendre for the polynomial part, divided differences for
the univariate part) and the product form needed by the Furihata gradient.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, InputError

GL8 = np.polynomial.legendre.leggauss(8)


def gauss_legendre01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1] (read-only, cached)."""
    if n < 1:
        raise InputError(f"quadrature needs at least one node, got {n}")
    return _gauss_legendre01(int(n))


@functools.lru_cache(maxsize=64)
def _gauss_legendre01(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(n)
    xi, wt = np.ascontiguousarray(0.5 * (t + 1.0)), np.ascontiguousarray(0.5 * w)
    xi.setflags(write=False)
    wt.setflags(write=False)
    return xi, wt


class MonomialTable:
    """Monomials accumulated into output slots (see the kernel docs)."""

    def __init__(self, coefs, powers, slots, n_out: int):
        self.coefs = np.ascontiguousarray(coefs, dtype=np.float64)
        self.powers = np.ascontiguousarray(powers, dtype=np.int64)
        if self.powers.ndim != 2 or self.powers.shape[0] != len(self.coefs):
            raise InputError("monomial table powers must have shape (terms, dim)")
        self.slots = np.ascontiguousarray(slots, dtype=np.int64)
        self.n_out = int(n_out)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if len(self.coefs) == 0:
            return np.zeros(self.n_out)
        return _kernels.poly_eval(self.coefs, self.powers, self.slots, self.n_out, x)

    def segment(self, x, y, nodes, weights, xi_power: int = 0) -> np.ndarray:
        if len(self.coefs) == 0:
            return np.zeros(self.n_out)
        return _kernels.poly_eval_segment(
            self.coefs, self.powers, self.slots, self.n_out, x, y, nodes, weights, xi_power
        )


def _derivative_table(coefs, powers, slots, width):
    """Differentiate every monomial in every variable.

    Output slot ``s`` becomes ``s * width + i`` for the derivative in x_i.
    """
    out_c, out_p, out_s = [], [], []
    for c, p, s in zip(coefs, powers, slots):
        for i, e in enumerate(p):
            if e == 0:
                continue
            q = p.copy()
            q[i] -= 1
            out_c.append(c * e)
            out_p.append(q)
            out_s.append(s * width + i)
    d = powers.shape[1]
    return (
        np.array(out_c, dtype=np.float64),
        np.array(out_p, dtype=np.int64).reshape(-1, d),
        np.array(out_s, dtype=np.int64),
    )


class Polynomial:
    """Sparse multivariate polynomial ``sum_l c_l prod_k x_k**p_lk``.

    Args:
        coefs: coefficients, shape (L,).
        powers: non-negative integer exponents, shape (L, d).
    """

    def __init__(self, coefs: Sequence[float], powers):
        powers = np.asarray(powers, dtype=np.int64)
        coefs = np.asarray(coefs, dtype=np.float64).ravel()
        if powers.ndim != 2 or powers.shape[0] != coefs.shape[0]:
            raise InputError("powers must have shape (number of terms, dim)")
        if np.any(powers < 0):
            raise InputError("monomial powers must be non-negative")
        merged: dict[tuple[int, ...], float] = {}
        for c, p in zip(coefs, powers):
            key = tuple(int(e) for e in p)
            merged[key] = merged.get(key, 0.0) + float(c)
        keys = sorted(k for k, c in merged.items() if c != 0.0)
        self.dim = powers.shape[1]
        self.coefs = np.array([merged[k] for k in keys], dtype=np.float64)
        self.powers = np.array(keys, dtype=np.int64).reshape(-1, self.dim)
        self.degree = int(self.powers.sum(axis=1).max()) if len(keys) else 0
        d = self.dim
        zero_slots = np.zeros(len(self.coefs), dtype=np.int64)
        self._value = MonomialTable(self.coefs, self.powers, zero_slots, 1)
        gc, gp, gs = _derivative_table(self.coefs, self.powers, zero_slots, d)
        self._grad = MonomialTable(gc, gp, gs, d)
        # Hessian entries (i, j) and (j, i) come from the same monomials, so
        # the assembled matrix is exactly symmetric.
        hc, hp, hs = _derivative_table(gc, gp, gs, d)
        self._hess = MonomialTable(hc, hp, hs, d * d)

    @classmethod
    def from_terms(cls, terms: Sequence[tuple[float, Sequence[int]]], dim: int) -> "Polynomial":
        if not terms:
            return cls(np.zeros(0), np.zeros((0, dim), dtype=np.int64))
        coefs = [float(c) for c, _ in terms]
        powers = [list(p) for _, p in terms]
        if any(len(p) != dim for p in powers):
            raise InputError(f"every monomial needs {dim} powers")
        return cls(coefs, powers)

    def __len__(self) -> int:
        return len(self.coefs)

    def value(self, x: np.ndarray) -> float:
        return float(self._value(x)[0])

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self._grad(x)

    def hess(self, x: np.ndarray) -> np.ndarray:
        return self._hess(x).reshape(self.dim, self.dim)

    def quadrature_nodes(self) -> int:
        """Nodes that integrate the gradient exactly along a segment."""
        return max(1, math.ceil(self.degree / 2))

    def avf(self, x, y, nodes: int | None = None) -> np.ndarray:
        xi, w = gauss_legendre01(nodes or self.quadrature_nodes())
        return self._grad.segment(x, y, xi, w, 0)

    def avf_jacobian(self, x, y, nodes: int | None = None) -> np.ndarray:
        xi, w = gauss_legendre01(nodes or self.quadrature_nodes())
        return self._hess.segment(x, y, xi, w, 1).reshape(self.dim, self.dim)

    def furihata(self, x, y) -> np.ndarray:
        """Furihata discrete gradient of the monomial product form."""
        D, _, px, py, _, tail = self._furihata_parts(x, y)
        half = 0.5 * self.coefs[:, None]
        return np.sum(half * D * (px + py) * tail, axis=0)

    def furihata_jacobian(self, x, y) -> np.ndarray:
        """Derivative of :meth:`furihata` with respect to ``y``."""
        d = self.dim
        D, dD, px, py, A, tail = self._furihata_parts(x, y)
        P = self.powers
        fy = y[None, :] ** P
        dfy = np.where(P > 0, P * y[None, :] ** np.maximum(P - 1, 0), 0.0)
        half = 0.5 * self.coefs
        J = np.zeros((d, d))
        for j in range(d):
            J[j, j] = np.sum(half * dD[:, j] * (px[:, j] + py[:, j]) * tail[:, j])
            for k in range(j):
                others = np.prod(fy[:, [i for i in range(j) if i != k]], axis=1)
                J[j, k] = np.sum(half * D[:, j] * dfy[:, k] * others * tail[:, j])
            for k in range(j + 1, d):
                others = np.prod(A[:, [i for i in range(j + 1, d) if i != k]], axis=1)
                J[j, k] = np.sum(half * D[:, j] * (px[:, j] + py[:, j]) * others * 0.5 * dfy[:, k])
        return J

    def _furihata_parts(self, x, y):
        P = self.powers
        L, d = P.shape
        pmax = int(P.max()) if L else 0
        # Divided difference of t**p written as a polynomial sum, so no
        # coincidence branch is needed, and its derivative in y.
        D = np.zeros((L, d))
        dD = np.zeros((L, d))
        for a in range(pmax):
            live = P > a
            rest = np.maximum(P - 1 - a, 0)
            xa = x[None, :] ** a
            D += np.where(live, xa * y[None, :] ** rest, 0.0)
            live2 = P - 1 - a > 0
            dD += np.where(live2, xa * rest * y[None, :] ** np.maximum(rest - 1, 0), 0.0)
        fx = x[None, :] ** P
        fy = y[None, :] ** P
        A = 0.5 * (fx + fy)
        ones = np.ones((L, 1))
        px = np.concatenate([ones, np.cumprod(fx, axis=1)[:, :-1]], axis=1)
        py = np.concatenate([ones, np.cumprod(fy, axis=1)[:, :-1]], axis=1)
        tail = np.concatenate([np.cumprod(A[:, ::-1], axis=1)[:, ::-1][:, 1:], ones], axis=1)
        return D, dD, px, py, A, tail


@dataclass(frozen=True)
class Univariate:
    """Smooth scalar function with two derivatives.

    Args:
        name: label used in messages.
        f, df, d2f: the function and its derivatives.
        domain: optional predicate; points failing it raise ``DomainError``.
    """

    name: str
    f: Callable[[float], float]
    df: Callable[[float], float]
    d2f: Callable[[float], float]
    domain: Callable[[float], bool] | None = None

    def check(self, t: float) -> None:
        if self.domain is not None and not self.domain(t):
            raise DomainError(f"{self.name} undefined at {float(t):.17g}")

    def divided_difference(self, a: float, b: float, tol: float = 1e-8) -> float:
        if abs(b - a) <= tol * (1.0 + abs(a)):
            return float(self.df(0.5 * (a + b)))
        return float((self.f(b) - self.f(a)) / (b - a))

    def divided_difference_dy(self, a: float, b: float) -> float:
        """d/db of the divided difference, as the integral of xi f''."""
        t, w = GL8
        xi = 0.5 * (t + 1.0)
        return float(np.sum(0.5 * w * xi * self.d2f(a + xi * (b - a))))


def log_function() -> Univariate:
    return Univariate("log", np.log, lambda t: 1.0 / t, lambda t: -1.0 / t**2, domain=lambda t: t > 0)


def cos_function() -> Univariate:
    return Univariate("cos", np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t))


@dataclass(frozen=True)
class Energy:
    """``H(x) = poly(x) + sum_k coef_k * u_k(x[index_k])``."""

    dim: int
    poly: Polynomial
    terms: tuple[tuple[int, float, Univariate], ...] = field(default=())

    def __post_init__(self):
        if self.poly.dim != self.dim:
            raise InputError("polynomial dimension does not match")
        for i, _, _ in self.terms:
            if not 0 <= i < self.dim:
                raise InputError(f"univariate term index {i} out of range")

    @property
    def degree(self) -> int | None:
        """Total degree, or None when there are non-polynomial terms."""
        return None if self.terms else self.poly.degree

    def check_domain(self, x) -> None:
        for i, _, u in self.terms:
            u.check(x[i])

    def value(self, x) -> float:
        self.check_domain(x)
        return self.poly.value(x) + math.fsum(c * float(u.f(x[i])) for i, c, u in self.terms)

    def grad(self, x) -> np.ndarray:
        self.check_domain(x)
        g = self.poly.grad(x)
        for i, c, u in self.terms:
            g[i] += c * u.df(x[i])
        return g

    def hess(self, x) -> np.ndarray:
        self.check_domain(x)
        H = self.poly.hess(x)
        for i, c, u in self.terms:
            H[i, i] += c * u.d2f(x[i])
        return H

    def avf(self, x, y, tol: float = 1e-8) -> np.ndarray:
        self.check_domain(x)
        self.check_domain(y)
        g = self.poly.avf(x, y)
        for i, c, u in self.terms:
            g[i] += c * u.divided_difference(x[i], y[i], tol)
        return g

    def avf_jacobian(self, x, y) -> np.ndarray:
        J = self.poly.avf_jacobian(x, y)
        for i, c, u in self.terms:
            J[i, i] += c * u.divided_difference_dy(x[i], y[i])
        return J

    def furihata(self, x, y, tol: float = 1e-8) -> np.ndarray:
        # A single-variable term c*u(x_i) is a product with one nontrivial
        # factor, so its Furihata component is c times the divided difference.
        self.check_domain(x)
        self.check_domain(y)
        g = self.poly.furihata(x, y)
        for i, c, u in self.terms:
            g[i] += c * u.divided_difference(x[i], y[i], tol)
        return g

    def furihata_jacobian(self, x, y) -> np.ndarray:
        J = self.poly.furihata_jacobian(x, y)
        for i, c, u in self.terms:
            J[i, i] += c * u.divided_difference_dy(x[i], y[i])
        return J
