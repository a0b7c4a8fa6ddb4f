"""Analytic Gaussian wave-packet algebra (natural units hbar = m = 1).

A packet is specified at its birth time by

    g(x, t_b) = (2 pi s^2)^(-d/4) exp(-|x - x0|^2 / (4 s^2) + i p.(x - x0) + i phi)

with isotropic spatial std-dev s, center x0 and momentum p.  Free evolution
has the closed form (per Cartesian component, tau = t - t_b)

    c(tau)   = 1 + i tau / (2 s^2)
    g(x, t)  = (2 pi s^2)^(-d/4) c^(-d/2)
               exp(-|x - x0 - p tau|^2 / (4 s^2 c) + i p.(x - x0) - i |p|^2 tau / 2 + i phi)

so the center moves ballistically and the spatial std-dev grows as
s_t = s |c| = sqrt(s^2 + tau^2 / (4 s^2)).  Everything downstream (guidance
velocities, overlaps, norms, sampling densities) is built from this closed
form; no grid PDE solver is involved outside the test oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "GaussianPacket",
    "EvolvedPacket",
    "Superposition",
    "evolve_packet",
    "evaluate",
    "gradient",
    "overlap",
    "norm",
]


def _as_vector(v, dim: int) -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(dim)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite vector component in {v!r}")
    return arr


@dataclass(frozen=True)
class GaussianPacket:
    """Isotropic 2-D Gaussian packet, immutable after construction.

    center / momentum are the packet parameters at `birth_time`; `width` is
    the initial position std-dev; `global_phase` multiplies the whole packet
    by exp(i phase).
    """

    center: np.ndarray
    momentum: np.ndarray
    width: float
    global_phase: float = 0.0
    birth_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center, 2))
        object.__setattr__(self, "momentum", _as_vector(self.momentum, 2))
        if not (self.width > 0 and math.isfinite(self.width)):
            raise ValueError(f"width must be positive, got {self.width}")
        if not math.isfinite(self.global_phase) or not math.isfinite(self.birth_time):
            raise ValueError("global_phase and birth_time must be finite")

    @property
    def dim(self) -> int:
        return 2

    def mirrored(self) -> "GaussianPacket":
        """Reflection through the y = 0 symmetry plane (exact float negation)."""
        return GaussianPacket(
            center=np.array([self.center[0], -self.center[1]]),
            momentum=np.array([self.momentum[0], -self.momentum[1]]),
            width=self.width,
            global_phase=self.global_phase,
            birth_time=self.birth_time,
        )


def _complex_width(width: float, tau) -> np.ndarray | complex:
    return 1.0 + 0.5j * tau / (width * width)


def packet_value(p: GaussianPacket, x, t):
    """Evaluate g(x, t).  x has shape (..., d); t is scalar or broadcastable
    to the leading shape of x.  Returns a complex array of shape (...)."""
    x = np.asarray(x, dtype=float)
    tau = np.asarray(t, dtype=float) - p.birth_time
    s2 = p.width * p.width
    c = _complex_width(p.width, tau)
    d = x.shape[-1]
    xc = p.center + np.multiply.outer(tau, p.momentum)
    dx = x - xc
    quad = -np.sum(dx * dx, axis=-1) / (4.0 * s2 * c)
    lin = 1j * np.sum(p.momentum * (x - p.center), axis=-1)
    kin = -0.5j * float(p.momentum @ p.momentum) * tau
    pref = (2.0 * math.pi * s2) ** (-0.25 * d) * _inv_c_pow(c, d)
    return pref * np.exp(quad + lin + kin + 1j * p.global_phase)


def packet_gradient(p: GaussianPacket, x, t):
    """Analytic gradient of g with respect to x, shape (..., d)."""
    x = np.asarray(x, dtype=float)
    tau = np.asarray(t, dtype=float) - p.birth_time
    s2 = p.width * p.width
    c = _complex_width(p.width, tau)
    xc = p.center + np.multiply.outer(tau, p.momentum)
    val = packet_value(p, x, t)
    coeff = -(x - xc) / np.expand_dims(2.0 * s2 * c, -1) + 1j * p.momentum
    return coeff * val[..., None]


def _inv_c_pow(c, d: int):
    # c^(-d/2); Re c = 1 > 0 so the principal branch is smooth for odd d.
    if d == 2:
        return 1.0 / c
    if d == 1:
        return 1.0 / np.sqrt(c)
    return np.exp(-0.5 * d * np.log(c))


@dataclass(frozen=True)
class EvolvedPacket:
    """Snapshot of a freely evolved packet at a fixed time.

    Carries the spread std-dev and the per-dimension quadratic-exponent
    coefficients so overlaps and sampling densities come straight off the
    closed form: g(x) = exp(q2 |x|^2-ish ...) with

        g(x) = exp( q2 * x_d^2 + q1_d * x_d  summed over d, + q0 ).
    """

    packet: GaussianPacket
    t: float
    center: np.ndarray
    sigma_t: float
    c: complex
    q2: complex
    q1: np.ndarray
    q0: complex

    def value(self, x):
        return packet_value(self.packet, x, self.t)

    def gradient(self, x):
        return packet_gradient(self.packet, x, self.t)


def evolve_packet(p: GaussianPacket, t: float) -> EvolvedPacket:
    """Exact free-Schroedinger evolution of `p` to time t >= birth_time."""
    tau = float(t) - p.birth_time
    if tau < 0:
        raise ValueError(f"cannot evolve packet backwards: t={t} < birth_time={p.birth_time}")
    s2 = p.width * p.width
    c = complex(_complex_width(p.width, tau))
    d = p.dim
    center = p.center + p.momentum * tau
    sigma_t = p.width * abs(c)
    q2 = -1.0 / (4.0 * s2 * c)
    q1 = center / (2.0 * s2 * c) + 1j * p.momentum
    q0 = (
        -np.sum(center * center) / (4.0 * s2 * c)
        - 1j * float(p.momentum @ p.center)
        - 0.5j * float(p.momentum @ p.momentum) * tau
        + 1j * p.global_phase
        - 0.25 * d * math.log(2.0 * math.pi * s2)
        - 0.5 * d * np.log(c)
    )
    return EvolvedPacket(packet=p, t=float(t), center=center, sigma_t=sigma_t, c=c, q2=q2, q1=q1, q0=complex(q0))


@dataclass(frozen=True)
class Superposition:
    """Amplitude-weighted sum of Gaussian packets, psi = sum_i a_i g_i."""

    terms: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "terms", tuple((complex(a), p) for a, p in self.terms)
        )
        if not self.terms:
            raise ValueError("superposition needs at least one term")

    @property
    def packets(self) -> Sequence[GaussianPacket]:
        return [p for _, p in self.terms]

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([a for a, _ in self.terms], dtype=complex)

    def max_birth_time(self) -> float:
        return max(p.birth_time for _, p in self.terms)


def evaluate(psi: Superposition, x, t):
    """psi(x, t) = sum_i a_i g_i(x, t); pure, vectorized over x and t."""
    out = None
    for a, p in psi.terms:
        v = a * packet_value(p, x, t)
        out = v if out is None else out + v
    return out


def gradient(psi: Superposition, x, t):
    """Analytic grad psi, shape (..., d)."""
    out = None
    for a, p in psi.terms:
        g = a * packet_gradient(p, x, t)
        out = g if out is None else out + g
    return out


def packet_value_and_gradient(p: GaussianPacket, x, t):
    """(g, grad g) for one packet with a single exponential evaluation."""
    x = np.asarray(x, dtype=float)
    tau = np.asarray(t, dtype=float) - p.birth_time
    s2 = p.width * p.width
    c = _complex_width(p.width, tau)
    xc = p.center + np.multiply.outer(tau, p.momentum)
    v = packet_value(p, x, t)
    g = (-(x - xc) / np.expand_dims(2.0 * s2 * c, -1) + 1j * p.momentum) * v[..., None]
    return v, g


def evaluate_with_gradient(psi: Superposition, x, t):
    """(psi, grad psi) sharing one packet evaluation per term; the guidance
    integrators call this at every stage."""
    val = None
    grad = None
    for a, p in psi.terms:
        v, g = packet_value_and_gradient(p, x, t)
        v = a * v
        g = a * g
        val = v if val is None else val + v
        grad = g if grad is None else grad + g
    return val, grad


def _overlap_evolved(ea: EvolvedPacket, eb: EvolvedPacket) -> complex:
    """<a|b> from the quadratic-exponent coefficients of two snapshots at a
    common time: per dimension  integral exp(-P x^2 + Q x) dx = sqrt(pi/P) exp(Q^2/4P)."""
    P = -(np.conj(ea.q2) + eb.q2)
    Q = np.conj(ea.q1) + eb.q1
    const = np.conj(ea.q0) + eb.q0
    d = len(ea.q1)
    per_dim = 0.5 * d * (np.log(np.pi) - np.log(P)) + np.sum(Q * Q) / (4.0 * P)
    return complex(np.exp(per_dim + const))


def overlap(a: GaussianPacket, b: GaussianPacket, t: float) -> complex:
    """Closed-form <a(t)|b(t)>.  Time-independent for equal-mass free packets
    once both are evolvable (unitarity), which the tests verify."""
    return _overlap_evolved(evolve_packet(a, t), evolve_packet(b, t))


def norm(psi: Superposition, t: float) -> float:
    """sqrt of <psi|psi> = sum_ij conj(a_i) a_j <g_i|g_j> at time t."""
    evolved = [evolve_packet(p, t) for _, p in psi.terms]
    amps = psi.amplitudes
    total = 0.0 + 0.0j
    for i, ei in enumerate(evolved):
        for j, ej in enumerate(evolved):
            total += np.conj(amps[i]) * amps[j] * _overlap_evolved(ei, ej)
    return float(np.sqrt(total.real))
