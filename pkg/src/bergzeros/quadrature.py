"""Composite Gauss-Legendre quadrature with panel doubling.

Integrands may be vector valued: ``fun(x)`` receives a 1-D array of nodes and
returns an array whose first axis runs over those nodes.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import QuadratureError


@lru_cache(maxsize=32)
def _rule(order: int):
    return np.polynomial.legendre.leggauss(order)


def panel_nodes(a: float, b: float, panels: int, order: int = 32):
    """Nodes and weights of the composite rule on ``[a, b]``."""
    x, w = _rule(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate(fun, a: float, b: float, panels: int = 8, order: int = 32):
    nodes, weights = panel_nodes(a, b, panels, order)
    vals = np.asarray(fun(nodes))
    return np.tensordot(weights, vals, axes=(0, 0))


def integrate_adaptive(
    fun,
    a: float,
    b: float,
    rtol: float = 1e-10,
    atol: float = 0.0,
    panels: int = 8,
    order: int = 32,
    max_panels: int = 1 << 14,
):
    """Integrate, doubling the panel count until two estimates agree.

    Agreement means ``max|I_2P - I_P| <= atol + rtol * max|I_2P|``.  Returns
    ``(estimate, error_estimate, panels_used)``.
    """
    prev = integrate(fun, a, b, panels, order)
    while True:
        panels *= 2
        cur = integrate(fun, a, b, panels, order)
        err = float(np.max(np.abs(cur - prev))) if np.size(cur) else 0.0
        scale = float(np.max(np.abs(cur))) if np.size(cur) else 0.0
        if err <= atol + rtol * scale:
            return cur, err, panels
        if panels >= max_panels:
            raise QuadratureError(
                f"no convergence with {panels} panels (error estimate {err:.3g})",
                estimate=cur,
                error=err,
            )
        prev = cur
