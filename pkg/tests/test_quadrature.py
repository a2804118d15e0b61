"""Adaptive quadrature engine checks: exact integrals, error reporting,
refinement behavior, and the ordered 2D domain."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photonsplit.quadrature import (DEFAULT_SPEC_1D, DEFAULT_SPEC_2D,
                                    IntegrationDomain, QuadratureError,
                                    QuadratureSpec, integrate_1d,
                                    integrate_ordered_2d, ordered_grid,
                                    panel_nodes, refine_edges,
                                    segmented_edges)

HALF_LINE = IntegrationDomain(0.0, math.inf)
FULL_LINE = IntegrationDomain(-math.inf, math.inf)


def test_exponential_integral():
    est = integrate_1d(lambda t: np.exp(-t), HALF_LINE)
    assert abs(est - 1.0) < 1e-8
    assert est.error <= max(DEFAULT_SPEC_1D.rel_tol * abs(est),
                            DEFAULT_SPEC_1D.abs_tol)


def test_gaussian_integral_full_line():
    est = integrate_1d(lambda t: np.exp(-t * t), FULL_LINE)
    assert abs(est - math.sqrt(math.pi)) < 1e-8


def test_normalized_exponential_density():
    k = 1.44
    est = integrate_1d(lambda t: 2.0 * k * np.exp(-2.0 * k * t), HALF_LINE)
    assert abs(est - 1.0) < 1e-8


def test_ordered_nested_exponential():
    # int_0^inf dt1 int_{t1}^inf dt2 4 e^{-2(t1+t2)} = 1/2
    est = integrate_ordered_2d(lambda a, b: 4.0 * np.exp(-2.0 * (a + b)),
                               IntegrationDomain(0.0, math.inf))
    assert abs(est - 0.5) < 1e-6


def test_ordered_entangled_exponential_norm():
    # |2 sqrt(kd) e^{-k t1} e^{-d (t2-t1)}|^2 integrates to 1 at k = d = 1
    def density(t1, t2):
        return 4.0 * np.exp(-2.0 * t1) * np.exp(-2.0 * (t2 - t1))

    est = integrate_ordered_2d(density, IntegrationDomain(0.0, math.inf))
    assert abs(est - 1.0) < 1e-6


def test_ordered_gaussian_product_norm():
    # sqrt(2) xi(t1) xi(t2) on the ordered half-domain carries norm 1;
    # |xi(t)|^2 = sqrt(2/pi) e^{-2t^2} so the product density has 2/pi
    amp = 2.0 / math.pi

    def density(t1, t2):
        return 2.0 * amp * np.exp(-2.0 * t1 * t1) * np.exp(-2.0 * t2 * t2)

    est = integrate_ordered_2d(density, FULL_LINE)
    assert abs(est - 1.0) < 1e-6


def test_default_tolerances():
    assert DEFAULT_SPEC_1D.rel_tol == 1e-8
    assert DEFAULT_SPEC_2D.rel_tol == 1e-6
    assert DEFAULT_SPEC_1D.horizon == 20.0


@given(a=st.floats(-3, 3), b=st.floats(-3, 3))
@settings(max_examples=25, deadline=None)
def test_linearity(a, b):
    def f(t):
        return (1.0 + 0.5 * t) * np.exp(-t * t)

    def g(t):
        return t * t * np.exp(-2.0 * t * t)

    combo = integrate_1d(lambda t: a * f(t) + b * g(t), FULL_LINE)
    parts = a * integrate_1d(f, FULL_LINE) + b * integrate_1d(g, FULL_LINE)
    scale = max(1.0, abs(float(combo)))
    assert abs(float(combo) - parts) < 10.0 * DEFAULT_SPEC_1D.rel_tol * scale


@given(c=st.floats(-5, 5))
@settings(max_examples=25, deadline=None)
def test_translation(c):
    def f(t):
        return np.exp(-(t - 1.0) ** 2)

    base = integrate_1d(f, IntegrationDomain(0.0, 6.0))
    moved = integrate_1d(lambda t: f(t - c), IntegrationDomain(c, 6.0 + c))
    assert abs(float(base) - float(moved)) < 1e-10


def test_error_history_nonincreasing():
    hist = []
    integrate_1d(lambda t: np.exp(-t * t) * np.sin(3.0 * t) ** 2,
                 IntegrationDomain(0.0, 4.0),
                 QuadratureSpec(rel_tol=1e-12), _history=hist)
    errs = [e for _, e in hist]
    assert len(errs) > 2
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_determinism():
    def f(t):
        return np.exp(-t) * np.cos(5.0 * t) ** 2

    r1 = integrate_1d(f, HALF_LINE)
    r2 = integrate_1d(f, HALF_LINE)
    assert float(r1) == float(r2)
    assert r1.error == r2.error


def test_horizon_insensitivity():
    f = lambda t: np.exp(-0.7 * t) * (1.0 + np.sin(t) ** 2)
    base = integrate_1d(f, HALF_LINE, QuadratureSpec(horizon=10.0))
    doubled = integrate_1d(f, HALF_LINE, QuadratureSpec(horizon=20.0))
    assert abs(float(base) - float(doubled)) <= 1e-8 * abs(float(base))


def test_nonconvergence_carries_estimate():
    spiky = lambda t: 1.0 / np.sqrt(np.abs(t - 0.5) + 1e-15)
    with pytest.raises(QuadratureError) as info:
        integrate_1d(spiky, IntegrationDomain(0.0, 1.0),
                     QuadratureSpec(rel_tol=1e-14, max_depth=3))
    assert info.value.estimate is not None
    assert info.value.error > 0


def test_domain_validation():
    with pytest.raises(ValueError):
        IntegrationDomain(2.0, 1.0)
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=-1.0)
    with pytest.raises(ValueError):
        QuadratureSpec(horizon=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(max_depth=0)


# ---------------------------------------------------------------------------
# Fixed panel grids used by the moment integrals.

def test_panel_nodes_integrate_polynomial():
    # 16-point Gauss-Legendre is exact for polynomials up to degree 31
    x, w = panel_nodes([0.0, 1.0, 3.0], n=16)
    assert abs(w @ x ** 7 - 3.0 ** 8 / 8.0) < 1e-10


def test_ordered_grid_matches_nested_exponential():
    grid = ordered_grid(np.linspace(0.0, 22.0, 23), np.linspace(0.0, 22.0, 23))
    val = float(np.sum(grid.w * 4.0 * np.exp(-2.0 * (2.0 * grid.t1 + grid.s))))
    assert abs(val - 0.5) < 1e-12


def test_refine_edges_doubles_panels():
    edges = np.array([0.0, 1.0, 4.0])
    fine = refine_edges(edges)
    assert fine.size == 5
    assert np.allclose(fine, [0.0, 0.5, 1.0, 2.5, 4.0])


def test_segmented_edges_shape():
    edges = segmented_edges(0.0, 2.0, 6.0, 4, 2)
    assert edges[0] == 0.0 and edges[-1] == 6.0
    assert np.all(np.diff(edges) > 0)
    # degenerate tail collapses to the core
    assert segmented_edges(0.0, 2.0, 2.0, 4, 2).size == 5
