"""Input wavefunction construction: closed-form values, normalization,
basis orthogonality, and the family dispatch."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photonsplit.interferometer import MziSetting
from photonsplit.pulses import (BASIS_SCALE_BARE, BASIS_SCALE_MZI,
                                DEFAULT_WINDOW, canonical_family,
                                even_mode_profile, hermite_functions,
                                make_entangled_exponential,
                                make_entangled_gaussian_windowed, make_input,
                                make_stationary_mode,
                                make_stationary_superposition,
                                make_unentangled)
from photonsplit.quadrature import (IntegrationDomain, QuadratureSpec,
                                    integrate_1d, integrate_ordered_2d)
from photonsplit.scattering import hermite_extent

_NORM_2D = QuadratureSpec(rel_tol=1e-9)


def ordered_norm(inp):
    """Numeric norm integral of |xi|^2 over the ordered domain."""
    lo = inp.window_lo if inp.window is not None else inp.support_lower
    hi = inp.window_hi if inp.window is not None else math.inf
    if not math.isfinite(lo):
        lo = -math.inf
    return float(integrate_ordered_2d(lambda a, b: inp.xi(a, b) ** 2,
                                      IntegrationDomain(lo, hi), _NORM_2D))


# ---------------------------------------------------------------------------
# Unentangled products.

def test_unentangled_exponential_norm():
    assert abs(ordered_norm(make_unentangled("exponential", 1.0)) - 1.0) < 1e-6


def test_unentangled_gaussian_at_origin():
    inp = make_unentangled("gaussian", 1.0)
    assert abs(inp.xi(0.0, 0.0) - math.sqrt(2.0) * math.sqrt(2.0 / math.pi)) < 1e-12


def test_exponential_support_lower_bound():
    inp = make_unentangled("exponential", 1.0)
    assert inp.xi(-0.1, 0.5) == 0.0
    assert inp.xi(-3.0, -1.0) == 0.0


def test_unentangled_rejects_bad_parameters():
    with pytest.raises(ValueError):
        make_unentangled("exponential", 0.0)
    with pytest.raises(ValueError):
        make_unentangled("gaussian", -1.0)
    with pytest.raises(ValueError):
        make_unentangled("lorentzian", 1.0)


def test_unentangled_factorizes():
    rng = np.random.default_rng(3)
    for inp in (make_unentangled("exponential", 1.7),
                make_unentangled("gaussian", 0.8)):
        for _ in range(20):
            t1, s1 = rng.uniform(0.0, 4.0, size=2)
            t2 = t1 + rng.uniform(0.0, 3.0)
            s2 = s1 + rng.uniform(0.0, 3.0)
            lhs = inp.xi(t1, t2) * inp.xi(s1, s2)
            rhs = inp.xi(t1, s2) * inp.xi(s1, t2)
            assert abs(lhs - rhs) < 1e-12


# ---------------------------------------------------------------------------
# Entangled exponential.

def test_entangled_exponential_norm():
    assert abs(ordered_norm(make_entangled_exponential(1.0, 1.0)) - 1.0) < 1e-6


def test_entangled_exponential_value():
    inp = make_entangled_exponential(1.0, 2.0)
    assert abs(inp.xi(0.0, 0.5) - 2.0 * math.sqrt(2.0) * math.exp(-1.0)) < 1e-12


def test_entangled_exponential_flat_marginal_near_stationary():
    # kappa -> 0: the t1 marginal flattens; at kappa = 0.01 the variation
    # over [0, 10] is e^{0.2} ~ 1.22
    inp = make_entangled_exponential(0.01, 2.73)
    vals = []
    for t1 in np.linspace(0.0, 10.0, 5):
        vals.append(float(integrate_1d(
            lambda s, t=t1: inp.xi(t, t + s) ** 2,
            IntegrationDomain(0.0, math.inf))))
    assert max(vals) / min(vals) < 1.25


def test_entangled_exponential_window_truncates():
    inp = make_entangled_exponential(1e-3, 2.0, L=15.0)
    assert inp.xi(15.5, 16.0) == 0.0
    assert inp.xi(14.5, 16.0) != 0.0
    assert abs(ordered_norm(inp) - 1.0) < 1e-6


def test_entangled_exponential_rejects_bad_parameters():
    with pytest.raises(ValueError):
        make_entangled_exponential(0.0, 1.0)
    with pytest.raises(ValueError):
        make_entangled_exponential(1.0, -2.0)
    with pytest.raises(ValueError):
        make_entangled_exponential(1.0, 1.0, L=0.0)


# ---------------------------------------------------------------------------
# Windowed stationary Gaussian.

def test_gaussian_windowed_norm():
    assert abs(ordered_norm(make_entangled_gaussian_windowed(2.0, 10.0)) - 1.0) < 1e-6


def test_gaussian_windowed_profile_shape():
    # xi ~ e^{-(delta s)^2 / 2} in the difference coordinate
    inp = make_entangled_gaussian_windowed(2.0, 10.0)
    ratio = inp.xi(0.0, 1.0) / inp.xi(0.0, 0.0)
    assert abs(ratio - math.exp(-2.0)) < 1e-12


def test_gaussian_windowed_doubling_drift():
    # the windowed value drifts ~c/L: the raw doubling delta halves from
    # L=20 to L=40, and the doubling-corrected value is L-stable below 1e-3
    from photonsplit.efficiency import splitting_efficiency
    setting = MziSetting(0.0, 0.0)
    e20 = splitting_efficiency(make_entangled_gaussian_windowed(2.76, 20.0), setting)
    e40 = splitting_efficiency(make_entangled_gaussian_windowed(2.76, 40.0), setting)
    assert abs(e40.window_delta) < abs(e20.window_delta)
    assert abs(e20.p_limit - e40.p_limit) < 1e-3


def test_gaussian_windowed_rejects_bad_parameters():
    with pytest.raises(ValueError):
        make_entangled_gaussian_windowed(-1.0, 10.0)
    with pytest.raises(ValueError):
        make_entangled_gaussian_windowed(2.0, 0.0)


# ---------------------------------------------------------------------------
# Hermite-Gauss stationary modes.

def test_mode_zero_equals_gaussian_windowed():
    sigma = 0.5
    mode = make_stationary_mode(0, sigma, 20.0)
    gauss = make_entangled_gaussian_windowed(1.0 / sigma, 20.0)
    for t1, t2 in [(0.0, 0.3), (1.0, 1.7), (-2.0, -0.5), (19.0, 20.5)]:
        assert abs(mode.xi(t1, t2) - gauss.xi(t1, t2)) < 1e-12


def test_neighbor_modes_orthogonal_on_half_line():
    p0 = even_mode_profile(0, 1.3)
    p1 = even_mode_profile(1, 1.3)
    overlap = integrate_1d(lambda s: p0(s) * p1(s),
                           IntegrationDomain(0.0, math.inf))
    assert abs(float(overlap)) < 1e-10


def test_mode_one_has_single_zero_crossing():
    profile = even_mode_profile(1, 1.0)
    s = np.linspace(1e-4, 8.0, 4000)
    signs = np.sign(profile(s))
    crossings = int(np.sum(signs[:-1] != signs[1:]))
    assert crossings == 1


def test_half_line_basis_orthonormal_to_order_80():
    sigma = 1.0
    nodes_per_panel = 16
    hi = hermite_extent(sigma, 80)
    edges = np.linspace(0.0, hi, int(hi / 0.2) + 1)
    from photonsplit.quadrature import panel_nodes
    x, w = panel_nodes(edges, nodes_per_panel)
    h = hermite_functions(x / sigma, 80)
    modes = math.sqrt(2.0 / sigma) * h[:, ::2].T
    gram = (modes * w) @ modes.T
    assert float(np.max(np.abs(gram - np.eye(41)))) < 1e-8


def test_mode_rejects_negative_order():
    with pytest.raises(ValueError):
        make_stationary_mode(-1, 1.0, 20.0)


# ---------------------------------------------------------------------------
# Superpositions.

def test_superposition_single_mode_identities():
    sigma = 0.7
    pts = [(0.0, 0.4), (2.0, 3.1), (-1.0, 0.2)]
    sup0 = make_stationary_superposition([1.0], sigma, 15.0)
    mode0 = make_stationary_mode(0, sigma, 15.0)
    sup1 = make_stationary_superposition([0.0, 1.0], sigma, 15.0)
    mode1 = make_stationary_mode(1, sigma, 15.0)
    for t1, t2 in pts:
        assert abs(sup0.xi(t1, t2) - mode0.xi(t1, t2)) < 1e-12
        assert abs(sup1.xi(t1, t2) - mode1.xi(t1, t2)) < 1e-12


def test_superposition_norm():
    inp = make_stationary_superposition([1.0 / math.sqrt(2.0)] * 2, 1.0, 15.0)
    assert abs(ordered_norm(inp) - 1.0) < 1e-6


def test_superposition_rejects_unnormalized():
    with pytest.raises(ValueError):
        make_stationary_superposition([1.0, 1.0], 1.0, 15.0)
    with pytest.raises(ValueError):
        make_stationary_superposition([], 1.0, 15.0)


# ---------------------------------------------------------------------------
# Family dispatch and the normalization property.

def test_canonical_family_aliases():
    assert canonical_family("unentangled-exp") == "unentangled-exponential"
    assert canonical_family("entangled-gauss") == "entangled-gaussian-windowed"
    assert canonical_family("stationary-mode") == "stationary-basis-mode"
    with pytest.raises(ValueError):
        canonical_family("bogus")


def test_make_input_stationary_defaults():
    inp = make_input("entangled-exp", 2.5)
    assert inp.envelope_rate == 1e-3
    assert inp.window == DEFAULT_WINDOW
    assert inp.delta == 2.5
    mode = make_input("stationary-mode", 2.0, n=1)
    assert mode.profile.sigma == 0.5
    assert len(mode.profile.alpha) == 2


def test_basis_scale_constants():
    assert abs(BASIS_SCALE_MZI - 1.0 / 1.98) < 1e-15
    assert abs(BASIS_SCALE_BARE - 1.0 / 2.76) < 1e-15


_FAMILIES = ("unentangled-exp", "unentangled-gauss", "entangled-exp",
             "entangled-gauss", "stationary-mode")


@given(idx=st.integers(0, len(_FAMILIES) - 1),
       bandwidth=st.floats(0.2, 5.0),
       L=st.floats(5.0, 40.0),
       n=st.integers(0, 3))
@settings(max_examples=30, deadline=None)
def test_every_family_unit_norm(idx, bandwidth, L, n):
    inp = make_input(_FAMILIES[idx], bandwidth, L=L, n=n)
    assert abs(ordered_norm(inp) - 1.0) < 1e-6
