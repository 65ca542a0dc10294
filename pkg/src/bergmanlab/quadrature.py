"""Composite Gauss-Legendre rules on ``[0, R]`` graded toward both endpoints.

Integrals of the form ``int_0^R r**p g(r) dr`` with ``p > -1`` are the only
kind the Bergman engines need. Panels are dyadic toward ``0`` (where negative
powers live) and toward ``R`` (where high-degree monomials concentrate). The
piece ``[0, eps]`` below the last dyadic panel is integrated analytically as
``g(eps) eps**(p+1) / (p+1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import QuadratureError

DEFAULT_TOL = 1e-10
MAX_NODES = 2 ** 14


@lru_cache(maxsize=None)
def gauss_legendre(q: int):
    x, w = np.polynomial.legendre.leggauss(q)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_edges(R: float, n_left: int = 48, n_right: int = 24, breakpoints=()) -> np.ndarray:
    """Sorted panel edges on ``[eps, R]`` with ``eps = R 2**-n_left``."""
    left = R * 2.0 ** -np.arange(1, n_left + 1)
    right = R * (1 - 2.0 ** -np.arange(2, n_right + 1))
    extra = [b for b in breakpoints if 0 < b < R]
    edges = np.unique(np.concatenate([left, right, extra, [R]]))
    return edges


@dataclass(frozen=True)
class RadialRule:
    """Nodes/weights of a composite rule on ``[eps, R]`` plus the cut ``eps``."""

    nodes: np.ndarray
    weights: np.ndarray
    eps: float

    @classmethod
    def build(cls, edges: np.ndarray, q: int) -> "RadialRule":
        x, w = gauss_legendre(q)
        a, b = edges[:-1], edges[1:]
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return cls(nodes, weights, float(edges[0]))

    def __len__(self):
        return len(self.nodes)

    def power_moments(self, powers, g_nodes, g_eps) -> np.ndarray:
        """``int_0^R r**p g(r) dr`` for every ``p`` in ``powers``.

        ``g_nodes`` holds ``g`` at the nodes and ``g_eps`` is ``g`` near the
        origin; ``powers`` is one-dimensional.
        """
        p = np.asarray(powers, dtype=float)
        rp = np.exp(np.multiply.outer(np.log(self.nodes), p))
        body = (self.weights * g_nodes) @ rp
        tail = g_eps * np.exp((p + 1) * np.log(self.eps)) / (p + 1)
        return body + tail


def adaptive_radial(integrate, R: float, tol: float = DEFAULT_TOL, breakpoints=(),
                    q0: int = 16, max_nodes: int = MAX_NODES, scale=None):
    """Refine ``integrate(rule)`` by doubling nodes per panel until stable.

    ``integrate`` maps a :class:`RadialRule` to an array of integrals. The
    relative change between successive refinements, measured against
    ``scale(result)`` (default ``|result|``), must fall below ``tol``.
    Returns ``(result, error_estimate, rule)``.
    """
    edges = panel_edges(R, breakpoints=breakpoints)
    q = q0
    prev = None
    est = np.inf
    while True:
        rule = RadialRule.build(edges, q)
        if len(rule) > max_nodes:
            raise QuadratureError(
                f"quadrature did not reach relative tolerance {tol:g} within {max_nodes} nodes "
                f"(achieved {est:.3g})", estimate=est)
        cur = integrate(rule)
        if prev is not None:
            ref = np.abs(cur) if scale is None else scale(cur)
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = np.where(ref > 0, np.abs(cur - prev) / ref, np.abs(cur - prev))
            est = float(np.max(rel)) if rel.size else 0.0
            if est <= tol:
                return cur, est, rule
        prev = cur
        q *= 2
