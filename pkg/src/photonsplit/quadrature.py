"""Deterministic adaptive Gauss-Legendre quadrature.

Handles finite and semi-infinite 1D integrals and ordered 2D integrals over
the region tau2 >= tau1 (substituted internally as s = tau2 - tau1 >= 0).
All times are in units of the emitter lifetime, so every physical integrand
decays at least as fast as e^{-2t} and exponential truncation is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Embedded 16/8-point Gauss-Legendre pair; the difference between the two
# estimates on a panel serves as that panel's error indicator.
_GL_HI = np.polynomial.legendre.leggauss(16)
_GL_LO = np.polynomial.legendre.leggauss(8)


class QuadratureError(RuntimeError):
    """Non-convergence. Carries the best estimate and its error bound."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class IntegralEstimate(float):
    """A float that also reports the estimated absolute error."""

    error: float

    def __new__(cls, value, error):
        obj = super().__new__(cls, value)
        obj.error = float(error)
        return obj

    def __repr__(self):
        return f"IntegralEstimate({float(self)!r}, error={self.error:.3g})"


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and truncation controls.

    rel_tol / abs_tol bound the reported error as max(rel_tol*|I|, abs_tol).
    horizon is the initial truncation length for semi-infinite domains; it is
    doubled until the tail stops contributing, so a converged result is
    insensitive to the starting value.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    horizon: float = 20.0
    max_depth: int = 48

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


DEFAULT_SPEC_1D = QuadratureSpec()
DEFAULT_SPEC_2D = QuadratureSpec(rel_tol=1e-6)


@dataclass(frozen=True)
class IntegrationDomain:
    """Integration region. upper may be +inf, lower may be -inf.

    With ordered=True the domain describes the two-dimensional region
    tau1 in [lower, upper], tau2 in [tau1, +inf).
    """

    lower: float
    upper: float = math.inf
    ordered: bool = False

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("domain requires lower < upper")


def _eval(f, x):
    """Evaluate f on an array, falling back to a scalar loop if needed."""
    try:
        y = np.asarray(f(x), dtype=float)
        if y.shape == x.shape:
            return y
    except (TypeError, ValueError):
        pass
    return np.array([f(float(t)) for t in x], dtype=float)


def _panel(f, a, b):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    hi = half * (_eval(f, mid + half * _GL_HI[0]) @ _GL_HI[1])
    lo = half * (_eval(f, mid + half * _GL_LO[0]) @ _GL_LO[1])
    return hi, abs(hi - lo)


def _adaptive_finite(f, a, b, spec, history=None):
    """Globally adaptive bisection on [a, b]. Returns (value, error)."""
    value, err = _panel(f, a, b)
    # each entry: (-error, a, b, value, depth); plain list + max scan keeps
    # the refinement order deterministic under error ties
    panels = [(err, a, b, value, 0)]
    total, total_err = value, err
    while total_err > max(spec.rel_tol * abs(total), spec.abs_tol):
        if history is not None:
            history.append((total, total_err))
        worst = max(range(len(panels)), key=lambda i: panels[i][0])
        perr, pa, pb, pval, depth = panels.pop(worst)
        if depth >= spec.max_depth:
            raise QuadratureError(
                f"no convergence after depth {depth} on [{pa:g}, {pb:g}]",
                estimate=total, error=total_err)
        mid = 0.5 * (pa + pb)
        lval, lerr = _panel(f, pa, mid)
        rval, rerr = _panel(f, mid, pb)
        total += lval + rval - pval
        total_err += lerr + rerr - perr
        panels.append((lerr, pa, mid, lval, depth + 1))
        panels.append((rerr, mid, pb, rval, depth + 1))
    if history is not None:
        history.append((total, total_err))
    return total, total_err


def _semi_infinite(f, lo, spec, history=None):
    """Integrate [lo, inf) by truncating at lo+T and doubling the tail."""
    value, err = _adaptive_finite(f, lo, lo + spec.horizon, spec, history)
    a = lo + spec.horizon
    width = spec.horizon
    for _ in range(spec.max_depth):
        tail, tail_err = _adaptive_finite(f, a, a + width, spec, history)
        value += tail
        err += tail_err
        if abs(tail) <= max(spec.rel_tol * abs(value), spec.abs_tol):
            return value, err
        a += width
        width *= 2.0
    raise QuadratureError(
        f"tail still contributing at t = {a:g}", estimate=value, error=err + abs(tail))


def integrate_1d(f, domain, spec=None, _history=None):
    """Integrate f over the domain. Returns an IntegralEstimate.

    Semi-infinite limits use horizon truncation with tail doubling, so the
    reported value is insensitive to the configured horizon once converged.
    Raises QuadratureError (carrying the best estimate) on non-convergence.
    """
    spec = spec or DEFAULT_SPEC_1D
    lo, hi = domain.lower, domain.upper
    if math.isinf(lo) and math.isinf(hi):
        left = integrate_1d(lambda t: f(-t), IntegrationDomain(0.0, math.inf), spec, _history)
        right = integrate_1d(f, IntegrationDomain(0.0, math.inf), spec, _history)
        return IntegralEstimate(left + right, left.error + right.error)
    if math.isinf(lo):
        value, err = _semi_infinite(lambda t: f(-t), -hi, spec, _history)
        return IntegralEstimate(value, err)
    if math.isinf(hi):
        value, err = _semi_infinite(f, lo, spec, _history)
        return IntegralEstimate(value, err)
    value, err = _adaptive_finite(f, lo, hi, spec, _history)
    return IntegralEstimate(value, err)


def integrate_ordered_2d(f, domain, spec=None):
    """Integrate f(tau1, tau2) over tau2 >= tau1 with tau1 in the domain.

    Substitutes s = tau2 - tau1 and iterates integrate_1d: the inner
    integral runs over s in [0, inf) at a tighter tolerance, the outer over
    tau1. Integrating on the square grid and masking the triangle is not
    equivalent: panels straddling the diagonal then carry an O(h) error that
    never converges.
    """
    spec = spec or DEFAULT_SPEC_2D
    inner_spec = QuadratureSpec(rel_tol=spec.rel_tol * 0.1,
                                abs_tol=spec.abs_tol * 0.1,
                                horizon=spec.horizon,
                                max_depth=spec.max_depth)

    def outer(t1):
        return integrate_1d(lambda s: f(t1, t1 + s),
                            IntegrationDomain(0.0, math.inf), inner_spec)

    est = integrate_1d(outer, IntegrationDomain(domain.lower, domain.upper), spec)
    return IntegralEstimate(float(est), est.error)


# ---------------------------------------------------------------------------
# Vectorized panel grids. The efficiency and optimizer modules integrate
# products of amplitude fields over the ordered domain; they evaluate the
# fields once on a fixed tensor grid in (tau1, s) and contract with the
# product weights. Convergence is then checked by refining the panel edges.

def panel_nodes(edges, n=16):
    """Gauss-Legendre nodes and weights on contiguous panels given by edges."""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    edges = np.asarray(edges, dtype=float)
    a = edges[:-1]
    b = edges[1:]
    mid = 0.5 * (a + b)[:, None]
    half = 0.5 * (b - a)[:, None]
    x = (mid + half * nodes).ravel()
    w = (half * weights).ravel()
    return x, w


@dataclass(frozen=True)
class OrderedGrid:
    """Flattened tensor quadrature grid over (tau1, s), s = tau2 - tau1."""

    t1: np.ndarray
    s: np.ndarray
    w: np.ndarray

    @property
    def size(self):
        return self.t1.size


def ordered_grid(t1_edges, s_edges, n=16):
    x1, w1 = panel_nodes(t1_edges, n)
    xs, ws = panel_nodes(s_edges, n)
    t1 = np.repeat(x1, xs.size)
    s = np.tile(xs, x1.size)
    w = np.outer(w1, ws).ravel()
    return OrderedGrid(t1, s, w)


def refine_edges(edges):
    """Insert panel midpoints, doubling the panel count."""
    edges = np.asarray(edges, dtype=float)
    mids = 0.5 * (edges[:-1] + edges[1:])
    return np.sort(np.concatenate([edges, mids]))


def segmented_edges(lo, core_hi, tail_hi, core_panels, tail_panels):
    """Panel edges dense on [lo, core_hi] with a coarser tail to tail_hi."""
    core = np.linspace(lo, core_hi, core_panels + 1)
    if tail_panels <= 0 or tail_hi <= core_hi:
        return core
    tail = np.linspace(core_hi, tail_hi, tail_panels + 1)[1:]
    return np.concatenate([core, tail])
