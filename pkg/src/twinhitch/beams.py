"""Finite beams: seed synthesis, twin-beam propagation and beam diagnostics.

Pairing convention: the transfer matrix at ``kx`` acts on
``[S1(kx), conj(S2(-kx))]``. Mode 2's spectrum is recovered from the second
component ``c`` as ``S2(kx) = conj(c(-kx))``, which puts the idler at the
mirrored transverse momentum (zero net transverse momentum from the pump).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import (
    TWO_PI,
    Field1D,
    Grid1D,
    MediumParams,
    SeedSpec,
    Spectrum1D,
    TwinBeamState,
    forward_transform,
    inverse_transform,
)
from .errors import DiagnosticsError, GuardError, IdlerAbsentError, ParameterError
from .transfer import check_absorption_sign

#: fraction of the window (per side) inspected by the edge-leakage guard
EDGE_FRACTION = 0.01
#: largest edge intensity tolerated, relative to the beam's peak intensity
EDGE_LEVEL = 1e-6


@dataclass(frozen=True)
class BeamDiagnostics:
    power: float
    com: float
    peak: float
    width: float
    mean_kx: float
    mean_angle: float


def synthesize_seed(spec: SeedSpec, grid: Grid1D, k: float = TWO_PI) -> Field1D:
    """Gaussian field of amplitude std ``sigma`` with a linear tilt phase."""
    spec.check_on(grid, k)
    u = grid.x - spec.x0
    values = spec.amplitude * np.exp(-(u * u) / (2.0 * spec.sigma**2)) * np.exp(1j * (k * spec.tilt) * u)
    return Field1D(grid, values, 0.0)


def _mirror_conj(values, grid):
    return np.conj(values[grid.mirror_index])


def propagate_to(seed: Field1D, z: float, medium: MediumParams) -> TwinBeamState:
    """Exact propagation of a mode-1 seed from the input face to ``z``."""
    z = float(z)
    if not 0.0 <= z <= medium.length:
        raise ParameterError(f"z={z} outside the medium [0, {medium.length}]")
    if not medium.lossless:
        check_absorption_sign()
    grid = seed.grid
    s0 = forward_transform(seed).values
    m11, _, m21, _ = _backend.kernels.transfer_entries(
        grid.kx, z, medium.a1, medium.a2, medium.b, medium.k
    )
    spec1 = Spectrum1D(grid, m11 * s0, z)
    spec2 = Spectrum1D(grid, _mirror_conj(m21 * s0, grid), z)
    return TwinBeamState(z, spec1, spec2)


def free_propagate(seed: Field1D, z: float, k: float = TWO_PI) -> Field1D:
    """Paraxial free-space diffraction over ``z`` (no medium)."""
    if not (z >= 0 and math.isfinite(z)):
        raise ParameterError(f"z must be finite and >= 0, got {z}")
    grid = seed.grid
    spec = forward_transform(seed).values
    phase = np.exp(-1j * (grid.kx * grid.kx / (2.0 * k)) * z)
    return inverse_transform(Spectrum1D(grid, spec * phase, seed.z + z))


def check_edges(intensity, label="beam"):
    n = intensity.shape[0]
    m = max(1, math.ceil(EDGE_FRACTION * n))
    peak = intensity.max()
    edge = max(intensity[:m].max(), intensity[-m:].max())
    if edge > EDGE_LEVEL * peak:
        raise GuardError(
            f"{label}: edge intensity {edge / peak:.3g} of peak exceeds {EDGE_LEVEL:g}; "
            "enlarge the grid window"
        )


def _parabolic_peak(x, y, dx):
    j = int(np.argmax(y))
    if j == 0 or j == len(y) - 1:
        return float(x[j])
    y0, y1, y2 = y[j - 1], y[j], y[j + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0:
        return float(x[j])
    return float(x[j] + 0.5 * (y0 - y2) / denom * dx)


def diagnostics(obj, k: float = TWO_PI, guard: bool = True, label="beam") -> BeamDiagnostics:
    """Power, intensity centre of mass, refined peak, width and mean kx.

    Accepts a :class:`Field1D` or a :class:`Spectrum1D`; the other domain is
    obtained by the unitary transform.
    """
    if isinstance(obj, Field1D):
        field, spectrum = obj, forward_transform(obj)
    elif isinstance(obj, Spectrum1D):
        field, spectrum = inverse_transform(obj), obj
    else:
        raise TypeError(f"expected Field1D or Spectrum1D, got {type(obj).__name__}")
    grid = field.grid
    intensity = field.intensity
    total = np.sum(intensity)
    if not (total > 0 and math.isfinite(total)):
        raise DiagnosticsError(f"{label}: field has no finite nonzero power")
    if guard:
        check_edges(intensity, label)
    x = grid.x
    com = float(np.sum(x * intensity) / total)
    width = math.sqrt(float(np.sum((x - com) ** 2 * intensity) / total))
    spec_int = spectrum.intensity
    mean_kx = float(np.sum(grid.kx * spec_int) / np.sum(spec_int))
    return BeamDiagnostics(
        power=float(total * grid.dx),
        com=com,
        peak=_parabolic_peak(x, intensity, grid.dx),
        width=width,
        mean_kx=mean_kx,
        mean_angle=mean_kx / k,
    )


def idler_present(state: TwinBeamState) -> bool:
    return bool(np.any(state.spec2.values))


def net_gain(state: TwinBeamState, seed: Field1D) -> float:
    """Mode-1 beam power at ``state.z`` over the seed power."""
    # spectral power of the seed, so that the ratio is exactly 1 at z = 0
    p0 = forward_transform(seed).power()
    if not p0 > 0:
        raise DiagnosticsError("seed has zero power")
    return state.spec1.power() / p0


def hitching_distance(state: TwinBeamState, k: float = TWO_PI) -> float:
    """|com(mode 1) - com(mode 2)| at ``state.z``."""
    if not idler_present(state):
        raise IdlerAbsentError("idler not yet generated (mode 2 is identically zero)")
    d1 = diagnostics(state.spec1, k, label="mode 1")
    d2 = diagnostics(state.spec2, k, label="mode 2")
    return abs(d1.com - d2.com)


class SeedSpectrum:
    """A seed's angular spectrum restricted to its numerical support.

    Bins whose seed power is below ``cutoff`` times the strongest bin are
    dropped; their share of the beam power is far below double precision even
    after amplification. Used for the many repeated evaluations of inverse
    problems; :func:`propagate_to` remains the full-grid reference.
    """

    def __init__(self, seed: Field1D, cutoff: float = 1e-30):
        spec = forward_transform(seed)
        weight = spec.intensity
        total = np.sum(weight)
        if not total > 0:
            raise DiagnosticsError("seed has zero power")
        self.seed = seed
        self.grid = seed.grid
        self.index = np.flatnonzero(weight >= cutoff * weight.max())
        self.values = spec.values[self.index]
        self.kx = np.ascontiguousarray(self.grid.kx[self.index])
        self.weight = np.ascontiguousarray(weight[self.index] / np.sum(weight[self.index]))

    def gain(self, medium: MediumParams, z: float | None = None) -> float:
        """Net gain of mode 1 at ``z`` (default: the exit face)."""
        z = medium.length if z is None else z
        return _backend.kernels.weighted_gain(
            self.kx, self.weight, z, medium.a1, medium.a2, medium.b, medium.k
        )

    def propagate(self, medium: MediumParams, z: float | None = None) -> TwinBeamState:
        """Same as :func:`propagate_to`, evaluated on the support only."""
        z = medium.length if z is None else float(z)
        if not 0.0 <= z <= medium.length:
            raise ParameterError(f"z={z} outside the medium [0, {medium.length}]")
        if not medium.lossless:
            check_absorption_sign()
        m11, _, m21, _ = _backend.kernels.transfer_entries(
            self.kx, z, medium.a1, medium.a2, medium.b, medium.k
        )
        s1 = np.zeros(self.grid.n, dtype=np.complex128)
        c = np.zeros(self.grid.n, dtype=np.complex128)
        s1[self.index] = m11 * self.values
        c[self.index] = m21 * self.values
        return TwinBeamState(
            z, Spectrum1D(self.grid, s1, z), Spectrum1D(self.grid, _mirror_conj(c, self.grid), z)
        )
