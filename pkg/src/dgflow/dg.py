"""Discrete gradients, their Jacobians in the second argument, and Q.

A discrete gradient ``g(x, y)`` satisfies ``g(x, y).(y - x) = H(y) - H(x)`` and
``g(x, x) = grad H(x)``.  ``Q(x, y)`` is the antisymmetric part
``((D2 g)^T - D2 g) / 2`` of its second-argument Jacobian.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import SkewGradientSystem
from .energy import Energy, gauss_legendre01
from .errors import CatalogError, UnsupportedError


class QuadratureWarning(UserWarning):
    """AVF quadrature is not exact, so energy is conserved only to quadrature error."""


class DGKind(str, enum.Enum):
    AVF = "avf"
    ITOH_ABE = "itoh-abe"
    SYM_ITOH_ABE = "sia"
    FURIHATA = "furihata"
    GONZALEZ_MIDPOINT = "midpoint"


_ALIASES = {
    "avf": DGKind.AVF,
    "itoh-abe": DGKind.ITOH_ABE,
    "itohabe": DGKind.ITOH_ABE,
    "ia": DGKind.ITOH_ABE,
    "sia": DGKind.SYM_ITOH_ABE,
    "symitohabe": DGKind.SYM_ITOH_ABE,
    "furihata": DGKind.FURIHATA,
    "midpoint": DGKind.GONZALEZ_MIDPOINT,
    "gonzalez": DGKind.GONZALEZ_MIDPOINT,
}

DG_NAMES = ("avf", "itoh-abe", "sia", "furihata", "midpoint")

_NONPOLY_NODES = 8


@dataclass(frozen=True)
class DiscreteGradient:
    """A discrete gradient of a given kind.

    Args:
        kind: which construction.
        quadrature_nodes: AVF only; forces generic Gauss-Legendre quadrature of
            ``grad H`` with this many nodes instead of the closed form.
        furihata_terms: product form of H for the Furihata gradient; defaults
            to the system's own product form.
        coincidence_tolerance: relative threshold below which a coordinate
            difference ``y_j - x_j`` is treated as zero.
    """

    kind: DGKind = DGKind.AVF
    quadrature_nodes: int | None = None
    furihata_terms: Energy | None = None
    coincidence_tolerance: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "kind", DGKind(self.kind))
        if self.quadrature_nodes is not None and self.quadrature_nodes < 1:
            raise UnsupportedError("quadrature_nodes must be a positive integer")

    @property
    def symmetric(self) -> bool:
        """``g(x, y) == g(y, x)``."""
        return self.kind is not DGKind.ITOH_ABE

    @property
    def differentiable(self) -> bool:
        return self.kind is not DGKind.GONZALEZ_MIDPOINT

    @property
    def q_vanishes(self) -> bool:
        """Q is identically zero (AVF)."""
        return self.kind is DGKind.AVF

    def __call__(self, system, x, y):
        return dg_eval(self, system, x, y)

    def jacobian2(self, system, x, y):
        return dg_jacobian2(self, system, x, y)

    def q(self, system, x, y):
        return dg_q(self, system, x, y)


def discrete_gradient(name: str | DGKind | DiscreteGradient) -> DiscreteGradient:
    """Look up a discrete gradient by name (``avf``, ``itoh-abe``, ``sia``, ``furihata``, ``midpoint``)."""
    if isinstance(name, DiscreteGradient):
        return name
    if isinstance(name, DGKind):
        return DiscreteGradient(name)
    key = str(name).lower().replace("_", "-")
    kind = _ALIASES.get(key) or _ALIASES.get(key.replace("-", ""))
    if kind is None:
        raise CatalogError(f"unknown discrete gradient {name!r}; choose from {', '.join(DG_NAMES)}")
    return DiscreteGradient(kind)


def dg_eval(dg: DiscreteGradient, system: SkewGradientSystem, x, y) -> np.ndarray:
    """Evaluate the discrete gradient at ``(x, y)``."""
    x = system.check_state(x)
    y = system.check_state(y)
    kind = dg.kind
    if kind is DGKind.AVF:
        return _avf(dg, system, x, y)
    if kind is DGKind.ITOH_ABE:
        return _itoh_abe(system, x, y, dg.coincidence_tolerance)
    if kind is DGKind.SYM_ITOH_ABE:
        a = _itoh_abe(system, x, y, dg.coincidence_tolerance)
        b = _itoh_abe(system, y, x, dg.coincidence_tolerance)
        return 0.5 * (a + b)
    if kind is DGKind.FURIHATA:
        return _product_form(dg, system).furihata(x, y, dg.coincidence_tolerance)
    return _gonzalez(system, x, y, dg.coincidence_tolerance)


def dg_jacobian2(dg: DiscreteGradient, system: SkewGradientSystem, x, y) -> np.ndarray:
    """Jacobian of the discrete gradient with respect to its second argument."""
    x = system.check_state(x)
    y = system.check_state(y)
    kind = dg.kind
    if kind is DGKind.GONZALEZ_MIDPOINT:
        raise UnsupportedError("the midpoint discrete gradient has no usable second-argument Jacobian")
    if kind is DGKind.AVF:
        if dg.quadrature_nodes is None and system.closed_form_avf_jacobian is not None:
            return system.closed_form_avf_jacobian(x, y)
        xi, w = gauss_legendre01(_avf_nodes(dg, system))
        return sum(wi * ti * system.hessian((1.0 - ti) * x + ti * y) for ti, wi in zip(xi, w))
    if system.hess is None:
        return fd_jacobian2(dg, system, x, y)
    if kind is DGKind.ITOH_ABE:
        return _itoh_abe_jacobian(system, x, y, wrt=2)
    if kind is DGKind.SYM_ITOH_ABE:
        return 0.5 * (_itoh_abe_jacobian(system, x, y, wrt=2) + _itoh_abe_jacobian(system, y, x, wrt=1))
    return _product_form(dg, system).furihata_jacobian(x, y)


def dg_q(dg: DiscreteGradient, system: SkewGradientSystem, x, y) -> np.ndarray:
    """``Q(x, y) = ((D2 g)^T - D2 g) / 2``."""
    J = dg_jacobian2(dg, system, x, y)
    return 0.5 * (J.T - J)


def fd_jacobian2(dg: DiscreteGradient, system: SkewGradientSystem, x, y) -> np.ndarray:
    """Central differences in ``y`` with step 1e-6*(1+|y_j|)."""
    x = system.check_state(x)
    y = system.check_state(y)
    d = system.dim
    J = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1e-6 * (1.0 + abs(y[j]))
        J[:, j] = (dg_eval(dg, system, x, y + e) - dg_eval(dg, system, x, y - e)) / (2.0 * e[j])
    return J


def _avf_nodes(dg: DiscreteGradient, system: SkewGradientSystem) -> int:
    if dg.quadrature_nodes is not None:
        return dg.quadrature_nodes
    if system.polynomial_degree is not None:
        return max(1, math.ceil(system.polynomial_degree / 2))
    warnings.warn(
        f"AVF gradient of non-polynomial {system.name!r} uses {_NONPOLY_NODES}-node quadrature; "
        "energy is conserved only up to quadrature error",
        QuadratureWarning,
        stacklevel=3,
    )
    return _NONPOLY_NODES


def _avf(dg, system, x, y):
    if dg.quadrature_nodes is None and system.closed_form_avf is not None:
        return system.closed_form_avf(x, y)
    xi, w = gauss_legendre01(_avf_nodes(dg, system))
    return sum(wi * system.grad((1.0 - ti) * x + ti * y) for ti, wi in zip(xi, w))


def _itoh_abe(system, x, y, tol):
    # Move from x to y one coordinate at a time; component j is the divided
    # difference of H along coordinate j, or the partial derivative when the
    # coordinates coincide.
    w = x.copy()
    h_prev = system.energy(w)
    alpha = np.empty(system.dim)
    for j in range(system.dim):
        dj = y[j] - x[j]
        if abs(dj) <= tol * (1.0 + abs(x[j])):
            alpha[j] = system.grad(w)[j]
            w[j] = y[j]
            h_prev = system.energy(w)
        else:
            w[j] = y[j]
            h_next = system.energy(w)
            alpha[j] = (h_next - h_prev) / dj
            h_prev = h_next
    return alpha


def _line_nodes(system) -> int:
    if system.polynomial_degree is not None:
        return max(1, math.ceil(system.polynomial_degree / 2))
    return _NONPOLY_NODES


def _itoh_abe_jacobian(system, u, v, wrt):
    """Derivative of the Itoh-Abe gradient ``g(u, v)`` in ``v`` (wrt=2) or ``u`` (wrt=1).

    Each component is a mean of ``d_j H`` along a coordinate segment, so its
    derivatives are segment integrals of Hessian entries.  Gauss-Legendre
    with enough nodes makes this exact for polynomial H and avoids the
    cancellation of differentiating a divided difference.
    """
    d = system.dim
    xi, w = gauss_legendre01(_line_nodes(system))
    J = np.zeros((d, d))
    base = u.copy()
    for j in range(d):
        if u[j] == v[j]:
            H = system.hessian(base)
            row_full = H[j]
            row_j = 0.5 * H[j, j]
        else:
            row_full = np.zeros(d)
            row_j = 0.0
            for ti, wi in zip(xi, w):
                point = base.copy()
                point[j] = u[j] + ti * (v[j] - u[j])
                H = system.hessian(point)
                row_full += wi * H[j]
                row_j += wi * (ti if wrt == 2 else 1.0 - ti) * H[j, j]
        if wrt == 2:
            J[j, :j] = row_full[:j]
        else:
            J[j, j + 1:] = row_full[j + 1:]
        J[j, j] = row_j
        base[j] = v[j]
    return J


def _product_form(dg, system) -> Energy:
    terms = dg.furihata_terms if dg.furihata_terms is not None else system.product_form
    if terms is None:
        raise UnsupportedError(f"Furihata gradient needs H in product form; {system.name!r} has none")
    return terms


def _gonzalez(system, x, y, tol):
    m = 0.5 * (x + y)
    g = system.grad(m)
    dx = y - x
    nn = float(dx @ dx)
    if nn <= (tol * (1.0 + float(np.max(np.abs(x))))) ** 2:
        return g
    return g + ((system.energy(y) - system.energy(x) - float(g @ dx)) / nn) * dx
