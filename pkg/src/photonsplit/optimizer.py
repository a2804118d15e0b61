"""Bandwidth sweeps, peak finding, and optimal entangled shapes.

Everything here works through the moment representation: for a fixed input
the efficiency is a cheap 4x4 contraction, so interferometer angles are
optimized at negligible cost and the expensive amplitude integrations are
reserved for bandwidth changes.

For shape optimization over the even Hermite-Gauss basis the efficiency is
the quadratic form alpha^T R(theta, phi) alpha. R is contracted from the
setting-independent tensor

    T[mu, nu, m, n] = int int_{tau2 >= tau1} psi^m_mu psi^n_nu,

built once per basis (amplitudes are evaluated per mode, O(N), and every
(m, n) pair reuses them); retuning the interferometer reuses T as well.
The optimal shape is the dominant eigenvector of R, and the leading
principal submatrices give the basis-size convergence curve (monotone by
Cauchy interlacing).
"""

from __future__ import annotations

import csv
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh
from scipy.optimize import minimize

from .efficiency import (efficiency_from_moments, input_moments,
                         splitting_efficiency)
from .interferometer import MziSetting, split_weights
from .pulses import BASIS_SCALE_MZI, DEFAULT_WINDOW, hermite_functions, make_input
from .quadrature import ordered_grid
from .scattering import hermite_extent, stationary_fields_from_cumulatives

TWO_PI = 2.0 * math.pi
PHI_CANDIDATES = tuple(k * math.pi / 4.0 for k in range(8))
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo, hi, tol=1e-6):
    """Golden-section maximum of a unimodal f on [lo, hi]."""
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    if fc >= fd:
        return c, fc
    return d, fd


def _snap(angle, tol=1e-6):
    """Zero out angles that differ from 0 only by optimizer jitter."""
    folded = angle % TWO_PI
    return 0.0 if min(folded, TWO_PI - folded) < tol else float(angle)


def _best_phi(value, theta, phis=PHI_CANDIDATES):
    """Maximize value(theta, phi): coarse candidates plus golden refinement.

    P_S depends on phi only through cos(phi) and cos(2 phi), which puts
    the optimum at 0 or pi for every in-scope family; whichever of the
    two matches the refined value is returned so reported angles are
    canonical (flat landscapes, e.g. theta = 0, settle on 0).
    """
    phis = list(phis)
    step = TWO_PI / len(phis)
    vals = [value(theta, p) for p in phis]
    k = int(np.argmax(vals))
    phi, best = _golden_max(lambda p: value(theta, p),
                            phis[k] - step, phis[k] + step)
    v0 = value(theta, 0.0)
    vpi = value(theta, math.pi)
    cphi, cv = (0.0, v0) if v0 >= vpi else (math.pi, vpi)
    if cv >= best - 1e-9:
        return cphi, cv
    return _snap(phi) % TWO_PI, best


def optimize_setting(moments, theta_steps=25, phis=PHI_CANDIDATES):
    """Best (P_S, setting) for one input's moment matrix.

    theta is scanned on [0, pi) and refined by golden section, with phi
    re-optimized at every theta; the efficiency is pi-periodic in theta so
    the scan range covers everything. Every optimum at theta > pi/2 has an
    exactly equivalent mirror at (pi - theta, phi + pi); the mirror
    representative is returned so reported angles are canonical.
    """
    def value(theta, phi):
        return float(np.sum(split_weights(MziSetting(theta, phi))
                            * moments.matrix))

    thetas = np.linspace(0.0, math.pi, theta_steps, endpoint=False)
    scan = [_best_phi(value, t, phis)[1] for t in thetas]
    k = int(np.argmax(scan))
    step = math.pi / theta_steps
    theta, _ = _golden_max(lambda t: _best_phi(value, t, phis)[1],
                           thetas[k] - step, thetas[k] + step)
    theta = _snap(theta)
    phi, best = _best_phi(value, theta, phis)
    if theta > 0.5 * math.pi:
        m_theta = _snap(math.pi - theta)
        m_phi, m_best = _best_phi(value, m_theta, phis)
        if m_best >= best - 1e-8:
            theta, phi, best = m_theta, m_phi, m_best
    return best, MziSetting(theta, phi)


# ---------------------------------------------------------------------------
# Bandwidth sweeps.

@dataclass
class EfficiencySurface:
    """P_S over a (bandwidth, theta) grid with phi optimized pointwise.

    Rows are bandwidth-major, theta-minor. err propagates the moment
    refinement deltas; failed bandwidths appear as NaN rows so a sweep
    survives isolated non-convergence.
    """

    family: str
    window: float | None
    bandwidth: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    p_s: np.ndarray
    err: np.ndarray

    COLUMNS = ("bandwidth", "theta", "phi_opt", "P_S", "err")

    def grids(self):
        """(bandwidths, thetas, P_S as a (len(bandwidths), len(thetas)) array)."""
        bands = np.unique(self.bandwidth)
        thetas = np.unique(self.theta)
        return bands, thetas, self.p_s.reshape(bands.size, thetas.size)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.COLUMNS)
            for row in zip(self.bandwidth, self.theta, self.phi,
                           self.p_s, self.err):
                writer.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path, family="", window=None):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != cls.COLUMNS:
                raise ValueError(f"unexpected sweep columns {header!r}")
            rows = [[float(x) for x in row] for row in reader]
        if not rows:
            raise ValueError(f"sweep file {path!r} has no data rows")
        cols = np.array(rows).T
        return cls(family, window, cols[0], cols[1], cols[2], cols[3], cols[4])


def _check_grid(name, values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError(f"{name} grid is empty")
    if values.size > 1 and not np.all(np.diff(values) > 0):
        raise ValueError(f"{name} grid must be strictly increasing")
    return values


def sweep_surface(family, bandwidths, thetas=None, phis=PHI_CANDIDATES,
                  L=None, workers=None):
    """Sweep bandwidth x theta, optimizing phi at every grid point.

    One moment integration per bandwidth serves the whole theta column.
    Bandwidths run in a small thread pool; results land in preallocated
    slots so the output ordering is deterministic. A failed bandwidth
    leaves NaN rows instead of aborting the sweep.
    """
    bands = _check_grid("bandwidth", bandwidths)
    if thetas is None:
        thetas = np.linspace(0.0, math.pi, 32, endpoint=False)
    thetas = _check_grid("theta", thetas)
    nb, nt = bands.size, thetas.size
    phi = np.full(nb * nt, np.nan)
    p_s = np.full(nb * nt, np.nan)
    err = np.full(nb * nt, np.nan)

    def run_band(i):
        inp = make_input(family, float(bands[i]), L=L)
        moments = input_moments(inp)

        def value(theta, ph):
            return float(np.sum(split_weights(MziSetting(theta, ph))
                                * moments.matrix))

        for j, theta in enumerate(thetas):
            ph, best = _best_phi(value, float(theta), phis)
            row = i * nt + j
            phi[row] = ph
            p_s[row] = best
            err[row] = float(np.sum(np.abs(split_weights(MziSetting(theta, ph)))
                                    * moments.err))

    max_workers = workers or min(4, os.cpu_count() or 1)
    failures = []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = {pool.submit(run_band, i): i for i in range(nb)}
        for fut, i in futures.items():
            exc = fut.exception()
            if exc is not None:
                failures.append((float(bands[i]), exc))
    for band, exc in failures:
        # NaN rows already mark the gap; surface the reason once
        warnings.warn(f"bandwidth {band} failed: {exc}")

    return EfficiencySurface(
        family=family, window=L,
        bandwidth=np.repeat(bands, nt), theta=np.tile(thetas, nb),
        phi=phi, p_s=p_s, err=err)


class PeakResult(NamedTuple):
    bandwidth: float
    theta: float
    phi: float
    p_s: float


def find_peak(family, band_lo, band_hi, L=None, setting=None,
              band_tol=1e-3, p_tol=1e-5, scan_points=9):
    """Locate the bandwidth maximizing P_S, retuning the interferometer.

    With setting given the interferometer is held there fixed (setting
    MziSetting(0, 0) gives the bare emitter). The bandwidth is bracketed
    by a coarse scan and refined by golden section until the bracket is
    below band_tol and the value change below p_tol.
    """
    cache = {}

    def best_at(band):
        band = float(band)
        hit = cache.get(band)
        if hit is None:
            inp = make_input(family, band, L=L)
            moments = input_moments(inp, refine=False)
            if setting is not None:
                hit = (efficiency_from_moments(moments, setting)[0], setting)
            else:
                hit = optimize_setting(moments)
            cache[band] = hit
        return hit

    bands = np.linspace(float(band_lo), float(band_hi), scan_points)
    scan = [best_at(b)[0] for b in bands]
    k = int(np.argmax(scan))
    lo = bands[max(k - 1, 0)]
    hi = bands[min(k + 1, len(bands) - 1)]
    band, best = _golden_max(lambda b: best_at(b)[0], lo, hi, tol=band_tol)
    prev = max(scan)
    while best - prev > p_tol:
        prev = best
        band, best = _golden_max(lambda b: best_at(b)[0],
                                 band - 5 * band_tol, band + 5 * band_tol,
                                 tol=band_tol)
    best, opt = best_at(band)
    # the scan above runs on coarse moments for speed; the reported peak
    # value comes from refined quadrature at the optimum
    final = splitting_efficiency(make_input(family, float(band), L=L), opt,
                                 include_doubling=False)
    return PeakResult(float(band), opt.theta, opt.phi, float(final.p_s))


# ---------------------------------------------------------------------------
# Shape optimization over the even Hermite-Gauss basis.

def _vector_cumulatives(profiles, nmodes, x_hi, v_hi, m_hi, nu=2.0):
    """Cumulatives of all basis modes at once (vector-valued ODE states).

    k solves k' = nu k - profile backward from x_hi, the stable direction;
    V' = k - 2V and M' = profile - 2M run forward. Beyond the solved
    ranges the cumulatives decay freely at rate 2.
    """
    opts = dict(method="DOP853", rtol=1e-11, atol=1e-14, dense_output=True)
    ks = solve_ivp(lambda x, v: nu * v - profiles(x), (x_hi, 0.0),
                   np.zeros(nmodes), **opts)
    if not ks.success:
        raise RuntimeError(f"cumulative integration failed: {ks.message}")

    def k(x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, None)
        inside = x <= x_hi
        return np.where(inside, ks.sol(np.where(inside, x, x_hi)), 0.0)

    vs = solve_ivp(lambda y, v: k(y) - 2.0 * v, (0.0, v_hi),
                   np.zeros(nmodes), **opts)
    ms = solve_ivp(lambda t, v: profiles(t) - 2.0 * v, (0.0, m_hi),
                   np.zeros(nmodes), **opts)
    if not (vs.success and ms.success):
        raise RuntimeError("cumulative integration failed")

    def _tail(sol, hi, y):
        y = np.clip(np.asarray(y, dtype=float), 0.0, None)
        inside = y <= hi
        yc = np.where(inside, y, hi)
        return np.where(inside, sol.sol(yc),
                        sol.y[:, -1:] * np.exp(-2.0 * (y - yc)))

    return k, (lambda y: _tail(vs, v_hi, y)), (lambda s: _tail(ms, m_hi, s))


def _basis_profiles(sigma, nmodes):
    scale = math.sqrt(2.0 / sigma)

    def profiles(s):
        h = hermite_functions(np.asarray(s, dtype=float) / sigma,
                              2 * (nmodes - 1))
        return scale * np.moveaxis(h[..., ::2], -1, 0)

    return profiles


@dataclass(frozen=True)
class ShapeProblem:
    """Quadratic form of the splitting efficiency over basis coefficients.

    r[m, n] gives P_S = alpha^T r alpha for the windowed stationary input
    with difference profile sum_m alpha_m phi_m (normalized alpha); the
    diagonal holds single-mode efficiencies. eigenvalue/alpha hold the
    dominant eigenpair once optimal_shape has filled them. _tensor is the
    setting-independent moment tensor, kept so a new setting is a 4x4
    contraction instead of a rebuild.
    """

    sigma: float
    window: float
    setting: MziSetting
    r: np.ndarray
    eigenvalue: float | None = None
    alpha: np.ndarray | None = None
    _tensor: np.ndarray | None = field(default=None, repr=False)

    @property
    def nmodes(self):
        return self.r.shape[0]

    def with_setting(self, setting):
        if self._tensor is None:
            raise ValueError("moment tensor not available for retuning")
        return replace(self, setting=setting,
                       r=_contract_tensor(self._tensor, setting),
                       eigenvalue=None, alpha=None)

    def quadratic_form(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        return float(alpha @ self.r @ alpha)

    def to_json_dict(self):
        problem = self if self.eigenvalue is not None else optimal_shape(self)
        return {"sigma": problem.sigma, "L": problem.window,
                "theta": problem.setting.theta, "phi": problem.setting.phi,
                "n_modes": problem.nmodes,
                "eigenvalue": problem.eigenvalue,
                "alpha": [float(a) for a in problem.alpha],
                "r": [[float(x) for x in row] for row in problem.r]}


def _contract_tensor(tensor, setting):
    r = np.tensordot(split_weights(setting), tensor, axes=2)
    # mirror the upper triangle so symmetry is structural
    return np.triu(r) + np.triu(r, 1).T


def build_r_matrix(max_order=78, sigma=None, setting=None, L=DEFAULT_WINDOW,
                   block=40_000):
    """Build the efficiency quadratic form over even Hermite-Gauss modes.

    max_order is the highest (even) Hermite order retained, so the basis
    holds max_order // 2 + 1 modes. sigma defaults to the reciprocal of
    the optimal windowed-Gaussian bandwidth (the n = 0 mode is then that
    Gaussian); setting defaults to the bare emitter (theta = 0).

    The moment tensor is evaluated at windows L and 2L and combined as
    2 T(2L) - T(L), cancelling the 1/L edge-transient term, so the
    quadratic form estimates the wide-window limit (the same combination
    stationary_limit_moments applies to a single input).
    """
    if max_order % 2 or max_order < 0:
        raise ValueError("max_order must be even and non-negative")
    sigma = BASIS_SCALE_MZI if sigma is None else float(sigma)
    setting = MziSetting(0.0, 0.0) if setting is None else setting
    L = float(L)
    nmodes = max_order // 2 + 1

    profiles = _basis_profiles(sigma, nmodes)
    s_hi = sigma * math.sqrt(2.0 * max_order + 1.0) + 6.0
    x_hi = hermite_extent(sigma, max_order)
    v_hi = 4.0 * L + 24.0 + s_hi
    k, V, M = _vector_cumulatives(profiles, nmodes, x_hi, v_hi, s_hi + 2.0)
    s_edges = np.linspace(0.0, s_hi, int(math.ceil(s_hi / 0.12)) + 1)

    def window_tensor(half):
        fields = stationary_fields_from_cumulatives(
            1.0 / math.sqrt(2.0 * half), 0.0, -half, half,
            profiles, k, V, M)
        t1_edges = np.concatenate([
            np.linspace(-half, half, int(math.ceil(2.0 * half / 0.5)) + 1),
            np.linspace(half, half + 20.0, 25)[1:]])
        grid = ordered_grid(t1_edges, s_edges, 8)
        flat = np.zeros((4 * nmodes, 4 * nmodes))
        for i in range(0, grid.size, block):
            f = np.asarray(fields(grid.t1[i:i + block], grid.s[i:i + block]))
            fw = (f * grid.w[i:i + block]).reshape(4 * nmodes, -1)
            flat += fw @ f.reshape(4 * nmodes, -1).T
        return flat.reshape(4, nmodes, 4, nmodes).transpose(0, 2, 1, 3)

    tensor = 2.0 * window_tensor(2.0 * L) - window_tensor(L)
    return ShapeProblem(sigma, L, setting,
                        _contract_tensor(tensor, setting), _tensor=tensor)


def optimal_shape(problem):
    """Fill the dominant eigenpair of the quadratic form.

    Deterministic symmetric eigensolver; the coefficient vector is
    normalized with alpha_0 >= 0 (the overall sign is unobservable).
    """
    lam, vec = eigh(problem.r)
    alpha = vec[:, -1]
    if alpha[0] < 0:
        alpha = -alpha
    return replace(problem, eigenvalue=float(lam[-1]), alpha=alpha)


def convergence_from_problem(problem, orders=None):
    """[(max_order, lambda_max of the leading submatrix), ...] for one R."""
    if orders is None:
        orders = range(0, 2 * problem.nmodes - 1, 2)
    return [(int(n), float(eigh(problem.r[: n // 2 + 1, : n // 2 + 1],
                                eigvals_only=True)[-1]))
            for n in orders]


def shape_convergence_curve(orders, sigma=None, setting=None,
                            L=DEFAULT_WINDOW):
    """Best efficiency versus basis size: [(max_order, lambda_max), ...].

    One R matrix is built at the largest order; smaller bases are its
    leading principal submatrices, so the sequence is non-decreasing by
    Cauchy interlacing (exactly, not just to quadrature accuracy).
    """
    orders = [int(n) for n in orders]
    if any(n % 2 for n in orders):
        raise ValueError("orders must be even")
    if sorted(orders) != orders:
        raise ValueError("orders must be increasing")
    return convergence_from_problem(build_r_matrix(orders[-1], sigma,
                                                   setting, L), orders)


class AlternationResult(NamedTuple):
    problem: ShapeProblem
    setting: MziSetting
    p_s: float
    rounds: int
    history: list


def alternate_shape_and_setting(max_order=78, sigma=None, setting=None,
                                L=DEFAULT_WINDOW, tol=1e-5, max_rounds=50):
    """Alternate optimal-shape and optimal-setting steps until stationary.

    Each half-step maximizes the same quadratic form, so P_S is
    non-decreasing and the loop stops once a full round gains less than
    tol. The setting step runs Nelder-Mead on the 4x4 contraction
    alpha^T R(theta, phi) alpha, seeded at the current angles; the moment
    tensor is built once and reused throughout.
    """
    current = optimal_shape(build_r_matrix(max_order, sigma, setting, L))
    tensor = current._tensor
    best = current.eigenvalue
    history = [best]
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        alpha = current.alpha
        g = np.einsum("abmn,m,n->ab", tensor, alpha, alpha)

        def neg(x):
            return -float(np.sum(split_weights(MziSetting(x[0], x[1])) * g))

        start = np.array([current.setting.theta, current.setting.phi])
        res = minimize(neg, start, method="Nelder-Mead",
                       options=dict(xatol=1e-7, fatol=1e-12,
                                    initial_simplex=np.array([
                                        start, start + [0.05, 0.0],
                                        start + [0.0, 0.05]])))
        new_setting = MziSetting(_snap(float(res.x[0])), _snap(float(res.x[1])))
        current = optimal_shape(current.with_setting(new_setting))
        history.append(current.eigenvalue)
        if current.eigenvalue - best < tol:
            best = max(best, current.eigenvalue)
            break
        best = current.eigenvalue
    else:
        warnings.warn(f"alternation did not settle in {max_rounds} rounds; "
                      f"returning the best iterate {best}")
    return AlternationResult(current, current.setting, float(best), rounds,
                             history)
