"""Two-photon input wavefunctions.

Four families are provided: unentangled products (exponential or Gaussian
single-photon profiles), entangled exponential states, windowed stationary
Gaussian states, and windowed stationary Hermite-Gauss basis modes and their
superpositions. Every constructor returns a normalized TwoPhotonInput whose
evaluator xi(t1, t2) is real, symmetric, and vectorized. Times and rates are
in emitter units (gamma = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import IntegrationDomain, QuadratureSpec, integrate_1d

DEFAULT_WINDOW = 20.0
DEFAULT_ENVELOPE_RATE = 1e-3

# Reciprocal of the optimal windowed-Gaussian bandwidth, with and without the
# interferometer. Used as the default scale of the Hermite-Gauss basis so that
# its n = 0 member is the optimal Gaussian.
BASIS_SCALE_MZI = 1.0 / 1.98
BASIS_SCALE_BARE = 1.0 / 2.76

_NORM_SPEC = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-14)


def hermite_functions(x, max_order):
    """Orthonormal Hermite functions h_0..h_max_order evaluated at x.

    Uses the stable upward recurrence
    h_{m+1} = x sqrt(2/(m+1)) h_m - sqrt(m/(m+1)) h_{m-1}.
    Returns an array with the order on the last axis.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (max_order + 1,))
    out[..., 0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if max_order >= 1:
        out[..., 1] = math.sqrt(2.0) * x * out[..., 0]
    for m in range(1, max_order):
        out[..., m + 1] = (x * math.sqrt(2.0 / (m + 1)) * out[..., m]
                           - math.sqrt(m / (m + 1)) * out[..., m - 1])
    return out


def even_mode_profile(n, sigma):
    """Half-line orthonormal even Hermite-Gauss profile of order 2n, scale sigma.

    phi_n(s) = sqrt(2/sigma) h_{2n}(s/sigma); the sqrt(2) restores unit norm
    on s in [0, inf) since even functions carry half their norm there.
    """
    scale = math.sqrt(2.0 / sigma)

    def profile(s):
        return scale * hermite_functions(np.asarray(s, dtype=float) / sigma, 2 * n)[..., 2 * n]

    return profile


@dataclass(frozen=True)
class StationaryProfile:
    """Difference-coordinate profile xi_s(s) on s >= 0, unit norm.

    label identifies the closed-form fast path available downstream:
    "exponential" and "gaussian" carry a bandwidth rate, "hermite" carries
    the basis scale sigma and coefficient vector alpha.
    """

    evaluator: object
    label: str
    rate: float | None = None
    sigma: float | None = None
    alpha: tuple | None = None

    def __call__(self, s):
        return self.evaluator(s)


@dataclass
class TwoPhotonInput:
    """Normalized two-photon amplitude xi(t1, t2) with family metadata.

    window_lo/window_hi bound the support of the earlier photon for the
    windowed stationary families; window is the L the state was built with.
    single holds the one-photon profile for product states, profile the
    difference-coordinate factor for stationary ones; exactly one is set.
    """

    family: str
    xi: object
    kappa: float | None = None
    delta: float | None = None
    window: float | None = None
    support_lower: float = -math.inf
    single: object = None
    profile: StationaryProfile | None = None
    envelope_rate: float = 0.0
    window_lo: float = 0.0
    window_hi: float = math.inf
    window_amp: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, t1, t2):
        return self.xi(t1, t2)


def _profile_norm(profile):
    """Numerical L2 norm of a difference-coordinate profile on [0, inf)."""
    est = integrate_1d(lambda s: profile(s) ** 2,
                       IntegrationDomain(0.0, math.inf), _NORM_SPEC)
    if est <= 0:
        raise ValueError("profile has vanishing norm")
    return math.sqrt(float(est))


def _stationary_evaluator(amp, envelope_rate, w1, w2, profile):
    def xi(t1, t2):
        t1 = np.asarray(t1, dtype=float)
        t2 = np.asarray(t2, dtype=float)
        m = np.minimum(t1, t2)
        d = np.abs(t2 - t1)
        inside = (m >= w1) & (m <= w2)
        env = np.exp(-envelope_rate * np.where(inside, m, 0.0))
        out = amp * env * profile(d) * inside
        return out if out.shape else float(out)
    return xi


def _stationary_input(family, profile, envelope_rate, w1, w2, *, kappa=None,
                      delta=None, window=None):
    # normalization: |xi|^2 integrates (over the ordered domain) to
    # amp^2 * int_{w1}^{w2} e^{-2 k t} dt * int_0^inf profile^2
    if envelope_rate == 0.0:
        weight = w2 - w1
    else:
        weight = -math.expm1(-2.0 * envelope_rate * (w2 - w1)) / (2.0 * envelope_rate)
        weight *= math.exp(-2.0 * envelope_rate * w1)
    pnorm = _profile_norm(profile)
    amp = 1.0 / (math.sqrt(weight) * pnorm)
    normalized = StationaryProfile(
        evaluator=(lambda s, _p=profile.evaluator, _n=pnorm: _p(s) / _n),
        label=profile.label, rate=profile.rate, sigma=profile.sigma,
        alpha=profile.alpha)
    return TwoPhotonInput(
        family=family,
        xi=_stationary_evaluator(amp, envelope_rate, w1, w2, normalized),
        kappa=kappa, delta=delta, window=window,
        support_lower=w1, profile=normalized, envelope_rate=envelope_rate,
        window_lo=w1, window_hi=w2, window_amp=amp)


def make_unentangled(profile, kappa):
    """Product state sqrt(2) xi(t1) xi(t2), profile 'exponential' or 'gaussian'."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if profile == "exponential":
        amp = math.sqrt(2.0 * kappa)

        def raw(t):
            t = np.asarray(t, dtype=float)
            return amp * np.exp(-kappa * np.clip(t, 0.0, None)) * (t >= 0)
        support_lower = 0.0
        family = "unentangled-exponential"
        domain = IntegrationDomain(0.0, math.inf)
    elif profile == "gaussian":
        amp = math.sqrt(math.sqrt(2.0 / math.pi) * kappa)

        def raw(t):
            t = np.asarray(t, dtype=float)
            return amp * np.exp(-(kappa * t) ** 2)
        support_lower = -math.inf
        family = "unentangled-gaussian"
        domain = IntegrationDomain(-math.inf, math.inf)
    else:
        raise ValueError(f"unknown single-photon profile {profile!r}")

    norm = math.sqrt(float(integrate_1d(lambda t: raw(t) ** 2, domain, _NORM_SPEC)))

    def single(t):
        return raw(t) / norm

    def xi(t1, t2):
        return math.sqrt(2.0) * single(t1) * single(t2)

    return TwoPhotonInput(family=family, xi=xi, kappa=kappa,
                          support_lower=support_lower, single=single)


def make_entangled_exponential(kappa, delta, L=None):
    """Entangled cascade state: envelope e^{-kappa t1}, profile e^{-delta (t2-t1)}.

    The earlier photon's support is t1 >= 0, truncated to [0, L] when L is
    given (the windowed construction used for stationary-limit numerics with
    a small envelope rate).
    """
    if kappa <= 0 or delta <= 0:
        raise ValueError("rates must be positive")
    if L is not None and L <= 0:
        raise ValueError("window must be positive")
    prof = StationaryProfile(
        evaluator=lambda s: math.sqrt(2.0 * delta) * np.exp(-delta * np.asarray(s, dtype=float)),
        label="exponential", rate=delta)
    w2 = math.inf if L is None else float(L)
    return _stationary_input("entangled-exponential", prof, kappa, 0.0, w2,
                             kappa=kappa, delta=delta, window=L)


def make_entangled_gaussian_windowed(delta, L=DEFAULT_WINDOW):
    """Stationary Gaussian state e^{-(delta s)^2 / 2} on the window t1 in [-L, L]."""
    if delta <= 0 or L <= 0:
        raise ValueError("delta and L must be positive")
    amp = math.sqrt(2.0) * (delta ** 2 / math.pi) ** 0.25

    prof = StationaryProfile(
        evaluator=lambda s: amp * np.exp(-0.5 * (delta * np.asarray(s, dtype=float)) ** 2),
        label="gaussian", rate=delta)
    return _stationary_input("entangled-gaussian-windowed", prof, 0.0,
                             -float(L), float(L), delta=delta, window=L)


def make_stationary_mode(n, sigma, L=DEFAULT_WINDOW):
    """Windowed stationary state with an even Hermite-Gauss profile of order 2n."""
    if n < 0:
        raise ValueError("mode order must be non-negative")
    if sigma <= 0 or L <= 0:
        raise ValueError("sigma and L must be positive")
    prof = StationaryProfile(evaluator=even_mode_profile(n, sigma),
                             label="hermite", sigma=sigma,
                             alpha=(0.0,) * n + (1.0,))
    return _stationary_input("stationary-basis-mode", prof, 0.0,
                             -float(L), float(L), window=L)


def make_stationary_superposition(alpha, sigma, L=DEFAULT_WINDOW):
    """Windowed stationary state with profile sum_n alpha_n phi_n at scale sigma.

    The coefficient vector must already be normalized (within 1e-9); it is
    then renormalized exactly.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size == 0:
        raise ValueError("alpha must be a non-empty vector")
    if sigma <= 0 or L <= 0:
        raise ValueError("sigma and L must be positive")
    ssq = float(alpha @ alpha)
    if abs(ssq - 1.0) > 1e-9:
        raise ValueError(f"coefficient vector norm^2 = {ssq!r}, expected 1")
    alpha = alpha / math.sqrt(ssq)
    nmodes = alpha.size
    scale = math.sqrt(2.0 / sigma)

    def profile(s):
        h = hermite_functions(np.asarray(s, dtype=float) / sigma, 2 * (nmodes - 1))
        return scale * (h[..., ::2] @ alpha)

    prof = StationaryProfile(evaluator=profile, label="hermite", sigma=sigma,
                             alpha=tuple(alpha))
    return _stationary_input("stationary-superposition", prof, 0.0,
                             -float(L), float(L), window=L)


_FAMILY_ALIASES = {
    "unentangled-exp": "unentangled-exponential",
    "unentangled-exponential": "unentangled-exponential",
    "unentangled-gauss": "unentangled-gaussian",
    "unentangled-gaussian": "unentangled-gaussian",
    "entangled-exp": "entangled-exponential",
    "entangled-exponential": "entangled-exponential",
    "entangled-gauss": "entangled-gaussian-windowed",
    "entangled-gaussian": "entangled-gaussian-windowed",
    "entangled-gaussian-windowed": "entangled-gaussian-windowed",
    "stationary-mode": "stationary-basis-mode",
    "stationary-basis-mode": "stationary-basis-mode",
}


def canonical_family(name):
    try:
        return _FAMILY_ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown input family {name!r}") from None


def make_input(family, bandwidth, L=None, envelope_rate=None, sigma=None, n=0):
    """Construct a family member by its swept bandwidth parameter.

    The bandwidth is kappa for the unentangled families and delta for the
    entangled ones. Stationary basis modes take sigma = 1/bandwidth unless
    sigma is given explicitly.
    """
    family = canonical_family(family)
    if family == "unentangled-exponential":
        return make_unentangled("exponential", bandwidth)
    if family == "unentangled-gaussian":
        return make_unentangled("gaussian", bandwidth)
    if family == "entangled-exponential":
        return make_entangled_exponential(
            DEFAULT_ENVELOPE_RATE if envelope_rate is None else envelope_rate,
            bandwidth, L=DEFAULT_WINDOW if L is None else L)
    if family == "entangled-gaussian-windowed":
        return make_entangled_gaussian_windowed(
            bandwidth, L=DEFAULT_WINDOW if L is None else L)
    if family == "stationary-basis-mode":
        return make_stationary_mode(
            n, sigma if sigma is not None else 1.0 / bandwidth,
            L=DEFAULT_WINDOW if L is None else L)
    raise ValueError(f"family {family!r} is not sweepable by bandwidth")
