"""Pure numpy versions of the monomial-table kernels."""

from __future__ import annotations

import numpy as np


def poly_eval(coefs, powers, slots, n_out, x):
    """Evaluate a monomial table at ``x``."""
    values = coefs * np.prod(np.asarray(x)[None, :] ** powers, axis=1)
    return np.bincount(slots, weights=values, minlength=n_out)[:n_out]


def poly_eval_segment(coefs, powers, slots, n_out, x, y, nodes, weights, xi_power):
    """Quadrature of ``xi**xi_power * table((1-xi) x + xi y)`` over [0, 1]."""
    x = np.asarray(x)
    y = np.asarray(y)
    out = np.zeros(n_out)
    for xi, w in zip(nodes, weights):
        point = (1.0 - xi) * x + xi * y
        out += (w * xi**xi_power) * poly_eval(coefs, powers, slots, n_out, point)
    return out
