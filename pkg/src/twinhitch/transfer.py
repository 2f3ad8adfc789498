"""Plane-wave transfer for the coupled signal/idler envelope equations.

For a transverse wavenumber ``kx`` the pair ``[E1(kx), conj(E2(-kx))]``
obeys a constant-coefficient linear system

    d/dz v = i [[a1 - dk, b], [-b, dk - conj(a2)]] v,   dk = kx^2 / (2k),

whose exact propagator is

    M(z) = exp(i delta_a z) [[C + i a S, i b S], [-i b S, C - i a S]]

with ``C = cosh(xi z)``, ``S = sinh(xi z) / xi``, ``delta_a = (a1 - conj(a2))/2``,
``a = (a1 + conj(a2))/2 - dk`` and ``xi^2 = b^2 - a^2``. Both C and S are even
in ``xi`` so the branch of the square root never matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from .core import MediumParams
from .errors import ParameterError


@dataclass(frozen=True)
class MismatchTerms:
    delta_a: complex
    a: complex
    xi: complex
    delta_k: float


def mismatch_terms(kx, medium: MediumParams) -> MismatchTerms:
    """Phase-mismatch quantities at ``kx`` (scalar or array).

    ``xi`` is the principal square root of ``b**2 - a**2``; nothing downstream
    depends on that choice.
    """
    kx = np.asarray(kx, dtype=np.float64)
    delta_k = kx * kx / (2.0 * medium.k)
    a2c = medium.a2.conjugate()
    delta_a = 0.5 * (medium.a1 - a2c)
    a = 0.5 * (medium.a1 + a2c) - delta_k
    xi = np.sqrt(medium.b**2 - a * a + 0j)
    if kx.ndim == 0:
        return MismatchTerms(complex(delta_a), complex(a), complex(xi), float(delta_k))
    return MismatchTerms(
        np.full(kx.shape, delta_a, dtype=np.complex128), a, xi, delta_k
    )


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """2x2 transfer matrix (entries may be arrays over kx)."""

    m11: complex
    m12: complex
    m21: complex
    m22: complex
    kx: float
    z: float

    def det(self):
        return self.m11 * self.m22 - self.m12 * self.m21

    def apply(self, v1, v2):
        return self.m11 * v1 + self.m12 * v2, self.m21 * v1 + self.m22 * v2

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
            self.kx,
            self.z + other.z,
        )

    def as_array(self):
        """Entries stacked into shape (..., 2, 2)."""
        m = np.stack(
            [np.stack([self.m11, self.m12], -1), np.stack([self.m21, self.m22], -1)], -2
        )
        return m


def _check_z(z):
    if not (z >= 0 and math.isfinite(z)):
        raise ParameterError(f"propagation distance must be finite and >= 0, got {z}")


def transfer_matrix(kx, z, medium: MediumParams) -> TransferMatrix:
    """Closed-form propagator from 0 to ``z`` at transverse wavenumber ``kx``."""
    z = float(z)
    _check_z(z)
    kx_arr = np.asarray(kx, dtype=np.float64)
    m11, m12, m21, m22 = _backend.kernels.transfer_entries(
        kx_arr.ravel(), z, medium.a1, medium.a2, medium.b, medium.k
    )
    if kx_arr.ndim == 0:
        return TransferMatrix(complex(m11[0]), complex(m12[0]), complex(m21[0]), complex(m22[0]), float(kx_arr), z)
    shape = kx_arr.shape
    return TransferMatrix(
        m11.reshape(shape), m12.reshape(shape), m21.reshape(shape), m22.reshape(shape), kx_arr, z
    )


def plane_wave_gain(kx, medium: MediumParams):
    """Power ratios (g1, g2) after the full medium for a plane-wave seed at ``kx``.

    ``g1`` is the seeded-mode gain; ``g2`` is the idler power (emitted at
    ``-kx``) relative to the seed power at ``+kx``.
    """
    m = transfer_matrix(kx, medium.length, medium)
    return np.abs(m.m11) ** 2, np.abs(m.m21) ** 2


def phase_matched_angle(medium: MediumParams) -> float:
    """Seed tilt for which ``a`` vanishes at the seed's central wavenumber."""
    radicand = (medium.a1.real + medium.a2.real) / medium.k
    if radicand < 0:
        raise ParameterError(
            "Re(a1) + Re(a2) < 0: no real phase-matched angle exists"
        )
    return math.sqrt(radicand)


def direct_coupling_for_angle(angle, k=2.0 * math.pi, a2=0.0):
    """Re(a1) that phase-matches a seed tilted by ``angle`` given ``Re(a2)``."""
    if not math.isfinite(angle):
        raise ParameterError("angle must be finite")
    return k * angle * angle - complex(a2).real


def oracle_propagate(kx, z, medium: MediumParams, v, steps=4096):
    """Integrate the coupled system with fixed-step RK4 (independent check).

    ``v`` is the input pair ``(E1(kx), conj(E2(-kx)))``; returns the pair at z.
    ``kx`` and ``z`` may be arrays, in which case the sets run side by side.
    """
    if int(steps) < 1:
        raise ParameterError("steps must be >= 1")
    z_arr = np.asarray(z, dtype=np.float64)
    if np.any(~(z_arr >= 0)):
        raise ParameterError("propagation distance must be >= 0")
    y1, y2 = _backend.kernels.rk4_propagate(
        kx, z_arr, medium.a1, medium.a2, medium.b, medium.k, v[0], v[1], int(steps)
    )
    if np.ndim(y1) == 0:
        return complex(y1), complex(y2)
    return y1, y2


@lru_cache(maxsize=1)
def check_absorption_sign():
    """Single-mode decay test for the absorption sign convention.

    With ``b = 0`` and ``Im(a1) > 0`` mode 1 must lose power as
    ``exp(-2 Im(a1) z)``; raises ``AssertionError`` if the kernels disagree.
    Cached, so calling it before each lossy run is free after the first time.
    """
    alpha = 1e-4
    medium = MediumParams(a1=1j * alpha, a2=0.0, b=0.0, length=1e4)
    for kx in (0.0, 0.01):
        m = transfer_matrix(kx, medium.length, medium)
        expected = math.exp(-2 * alpha * medium.length)
        got = abs(m.m11) ** 2
        if not math.isclose(got, expected, rel_tol=1e-12):
            raise AssertionError(
                f"absorption sign self-test failed: |m11|^2={got}, expected {expected}"
            )
        y1, _ = oracle_propagate(kx, medium.length, medium, (1.0, 0.0), steps=256)
        if not math.isclose(abs(y1) ** 2, expected, rel_tol=1e-8):
            raise AssertionError("absorption sign self-test failed against the oracle")
    return True
