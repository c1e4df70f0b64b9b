"""Gauss-Hermite quadrature against Gaussian laws.

Every integral in this package is an integral of a smooth function
against a one-dimensional Gaussian (or can be rewritten as one by
importance reweighting), so a single fixed-order Gauss-Hermite rule in
the physicists' convention (weight e^{-t^2}, sum of weights sqrt(pi))
covers all of them:

    E[f(m + s*G)] = pi^{-1/2} * sum_i w_i f(m + sqrt(2)*s*t_i).
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss

_SQRT_PI = np.sqrt(np.pi)
_SQRT_2 = np.sqrt(2.0)


@dataclass(frozen=True)
class QuadratureRule:
    """A Gauss-Hermite rule: exact for polynomials of degree < 2*order
    against e^{-t^2}."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss_hermite(cls, order):
        if order < 1:
            raise ValueError("quadrature order must be >= 1")
        nodes, weights = hermgauss(order)
        return cls(order=int(order), nodes=nodes, weights=weights)

    def half(self):
        """The companion rule at half the order, for error estimates."""
        return QuadratureRule.gauss_hermite(max(1, self.order // 2))

    def expect(self, f, mean=0.0, std=1.0):
        """E[f(mean + std*G)] for G ~ N(0,1).

        Parameters
        ----------
        f : callable
            Must accept ndarray input (vectorized).
        mean : float or ndarray
            Scalar or array of means; the quadrature axis is appended
            as a trailing axis, so an array of means yields an array of
            expectations of the same shape.
        std : float
            Non-negative scale. std == 0 degenerates to f(mean).

        Returns
        -------
        float or ndarray
        """
        mean = np.asarray(mean, dtype=float)
        pts = mean[..., None] + (_SQRT_2 * std) * self.nodes
        vals = f(pts)
        out = vals @ self.weights / _SQRT_PI
        return float(out) if mean.ndim == 0 else out

    def lebesgue(self, g, center=0.0, scale=1.0):
        """integral of g over the real line, by reweighting against
        N(center, scale^2).

        Accurate when g decays at least as fast as the reweighting
        Gaussian; exact (up to the rule's degree) when g itself is a
        Gaussian of that scale times a polynomial.
        """
        t = self.nodes
        # w_i * e^{t_i^2} computed in logs: the raw weights underflow
        # toward the edge nodes while e^{t^2} overflows, their product
        # is tame.
        logw = np.log(self.weights) + t * t
        pts = center + (_SQRT_2 * scale) * t
        vals = np.asarray(g(pts), dtype=float)
        return float(_SQRT_2 * scale * np.exp(logw) @ vals)
