"""Tunable Mach-Zehnder stage after the emitter.

The single-photon transformation from waveguide modes (a, b) to the output
ports (c, d) is

    U(theta, phi) = [[e^{i phi} sin(theta/2), cos(theta/2)],
                     [e^{i phi} cos(theta/2), -sin(theta/2)]]

(columns ordered (a, b)). Two-photon amplitudes transform under the tensor
square of U. Split and bunch densities at the ports follow from the four
bilinear combinations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class ConsistencyError(RuntimeError):
    """Two supposedly equivalent computations disagreed."""


@dataclass(frozen=True)
class MziSetting:
    """Interferometer angles, stored reduced.

    theta is reduced modulo 2 pi and folded by pi from (pi, 2 pi) into
    (0, pi); split efficiencies are pi-periodic in theta so the fold is
    observation-preserving. theta = pi itself is kept (not folded to 0)
    because at the amplitude level it is the port-swapped branch, distinct
    from theta = 0. phi is reduced modulo 2 pi.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        theta = float(self.theta) % TWO_PI
        if theta > math.pi:
            theta -= math.pi
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)


@dataclass(frozen=True)
class PortAmplitudes:
    """Complex two-photon amplitudes at the interferometer outputs."""

    psi_cc: complex
    psi_cd: complex
    psi_dc: complex
    psi_dd: complex

    def as_vector(self):
        return np.array([self.psi_cc, self.psi_cd, self.psi_dc, self.psi_dd])


def mzi_matrix(setting):
    s = math.sin(0.5 * setting.theta)
    c = math.cos(0.5 * setting.theta)
    e = np.exp(1j * setting.phi)
    return np.array([[e * s, c],
                     [e * c, -s]])


def port_vectors(setting):
    """Coefficient matrix of the two-photon port map.

    Rows are the output pairs (cc, cd, dc, dd); columns multiply the atom
    amplitudes in the order (bb, ba, ab, aa). Built from the tensor square
    of the single-photon matrix, whose natural column order (aa, ab, ba, bb)
    is permuted to match.
    """
    u = mzi_matrix(setting)
    return np.kron(u, u)[:, [3, 2, 1, 0]]


def port_amplitudes(atom, setting):
    out = port_vectors(setting) @ atom.as_vector()
    return PortAmplitudes(out[0], out[1], out[2], out[3])


def pair_weights(setting, rows):
    """Real quadratic-form weights W with sum_r |psi_r|^2 = psi^T W psi.

    Valid for real atom amplitudes; rows index the port pairs in the order
    (cc, cd, dc, dd). The splitting density uses rows (1, 2), the bunching
    density rows (0, 3).
    """
    k = port_vectors(setting)
    w = np.zeros((4, 4))
    for r in rows:
        w += np.real(np.outer(k[r], np.conj(k[r])))
    return w


def split_weights(setting):
    return pair_weights(setting, (1, 2))


def split_density_expanded(atom, setting):
    """Splitting density as an explicit polynomial in the atom amplitudes.

    Assumes real atom amplitudes (the case for real input wavepackets).
    Independent of the port-vector route; used as a cross-check. The
    coefficient of psi_aa^2 is 2 sin^2(theta), not 2 sin^2(theta/2): the
    latter breaks the identity with |psi_cd|^2 + |psi_dc|^2 at O(1) (and
    fails the balanced-splitter value 1/2 for a pure psi_aa input).
    """
    th, ph = setting.theta, setting.phi
    bb, ba, ab, aa = atom.psi_bb, atom.psi_ba, atom.psi_ab, atom.psi_aa
    s2 = math.sin(2.0 * th)
    c2 = math.cos(2.0 * th)
    half = math.sin(0.5 * th) ** 2 * math.cos(0.5 * th) ** 2
    return 0.25 * (
        2.0 * bb * (-s2 * math.cos(ph) * (ba + ab)
                    - 8.0 * half * math.cos(2.0 * ph) * aa)
        + 2.0 * math.sin(th) ** 2 * bb ** 2
        + 2.0 * ba * ((c2 - 1.0) * ab + s2 * math.cos(ph) * aa)
        + (c2 + 3.0) * ba ** 2
        + 2.0 * s2 * math.cos(ph) * ab * aa
        + (c2 + 3.0) * ab ** 2
        + 2.0 * math.sin(th) ** 2 * aa ** 2)


def split_density(atom, setting, check=False):
    """rho_s = |psi_cd|^2 + |psi_dc|^2 at one detection-time pair.

    With check=True the expanded polynomial form is evaluated as well and
    disagreement beyond 1e-9 raises ConsistencyError.
    """
    ports = port_amplitudes(atom, setting)
    rho = float(abs(ports.psi_cd) ** 2 + abs(ports.psi_dc) ** 2)
    if check:
        expanded = split_density_expanded(atom, setting)
        if abs(rho - expanded) > 1e-9 * max(1.0, abs(rho)):
            raise ConsistencyError(
                f"port form {rho!r} vs expanded form {expanded!r}")
    return rho
