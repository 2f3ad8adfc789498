"""Experiment drivers built on exact 0 -> z propagation.

Every sample is computed with its own transfer from the input face, so no
error accumulates along z and a record at ``z = L`` is identical to a single
:func:`~twinhitch.beams.propagate_to` call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .beams import diagnostics, idler_present, propagate_to, synthesize_seed
from .core import Grid1D, MediumParams, SeedSpec, forward_transform, make_grid
from .errors import HitchError, OnsetNotFoundError, ParameterError

NAN = float("nan")


@dataclass(frozen=True)
class TrajectoryRecord:
    z: float
    com1: float
    com2: float
    peak1: float
    peak2: float
    power1: float
    power2: float
    gain_so_far: float
    free_line: float
    separation: float
    mean_kx1: float
    mean_kx2: float


@dataclass(frozen=True)
class ExitCurvePoint:
    control: float
    net_gain: float
    exit_com1: float
    exit_com2: float
    hitch_distance: float
    status: str = "ok"

    @property
    def ok(self):
        return self.status == "ok"


def z_samples(length, nz):
    if int(nz) < 2:
        raise ParameterError(f"nz must be >= 2, got {nz}")
    nz = int(nz)
    # L*j is exact for the sizes used, so refining nz reproduces shared samples bit for bit
    return [length * j / (nz - 1) for j in range(nz)]


def _at_z(exc, z):
    msg = f"at z={z!r}: {exc}"
    try:
        new = type(exc)(msg)
    except TypeError:
        new = HitchError(msg)
    new.z = z
    return new


def trajectory(seed: SeedSpec, medium: MediumParams, nz: int, grid: Grid1D | None = None):
    """Centre-of-mass and peak trajectories of both modes through the medium.

    At ``z = 0`` mode 2 does not exist yet; its position fields hold the
    ``z -> 0+`` limit (the seed position, and the mirrored mean kx) when
    ``b > 0``, and NaN when the modes are uncoupled.
    """
    grid = grid or make_grid()
    k = medium.k
    field = synthesize_seed(seed, grid, k)
    p_seed = forward_transform(field).power()
    records = []
    for z in z_samples(medium.length, nz):
        try:
            state = propagate_to(field, z, medium)
            d1 = diagnostics(state.spec1, k, label="mode 1")
            power1 = state.spec1.power()
            if idler_present(state):
                d2 = diagnostics(state.spec2, k, label="mode 2")
                com2, peak2, mk2, power2 = d2.com, d2.peak, d2.mean_kx, state.spec2.power()
            elif z == 0.0 and medium.b > 0:
                com2, peak2, mk2, power2 = d1.com, d1.peak, -d1.mean_kx, 0.0
            else:
                com2 = peak2 = mk2 = NAN
                power2 = 0.0
        except HitchError as exc:
            raise _at_z(exc, z) from exc
        records.append(
            TrajectoryRecord(
                z=z,
                com1=d1.com,
                com2=com2,
                peak1=d1.peak,
                peak2=peak2,
                power1=power1,
                power2=power2,
                gain_so_far=power1 / p_seed,
                free_line=seed.x0 + seed.tilt * z,
                separation=abs(d1.com - com2),
                mean_kx1=d1.mean_kx,
                mean_kx2=mk2,
            )
        )
    return records


def intensity_map(seed: SeedSpec, medium: MediumParams, nz: int, normalize_per_z: bool = False,
                  grid: Grid1D | None = None):
    """Intensity of each mode on an (nz, n) grid of (z, x).

    With ``normalize_per_z`` every nonzero row is scaled to a maximum of 1.
    """
    grid = grid or make_grid()
    field = synthesize_seed(seed, grid, medium.k)
    zs = z_samples(medium.length, nz)
    map1 = np.zeros((len(zs), grid.n))
    map2 = np.zeros((len(zs), grid.n))
    for j, z in enumerate(zs):
        try:
            state = propagate_to(field, z, medium)
        except HitchError as exc:
            raise _at_z(exc, z) from exc
        map1[j] = state.field1().intensity
        map2[j] = state.field2().intensity
    if normalize_per_z:
        for m in (map1, map2):
            peak = m.max(axis=1, keepdims=True)
            np.divide(m, peak, out=m, where=peak > 0)
    return map1, map2


def exit_curve(seed: SeedSpec, medium_template: MediumParams, b_values, grid: Grid1D | None = None):
    """Exit positions of both modes for each cross coupling in ``b_values``.

    A failing point is reported through its ``status`` and never stops the scan.
    """
    b_values = list(b_values)
    if not b_values:
        raise ParameterError("b_values is empty")
    grid = grid or make_grid()
    k = medium_template.k
    field = synthesize_seed(seed, grid, k)
    p_seed = forward_transform(field).power()
    points = []
    for b in b_values:
        try:
            b = float(b)
            if not b >= 0:
                raise ParameterError(f"b must be >= 0, got {b}")
            medium = replace(medium_template, b=b)
            state = propagate_to(field, medium.length, medium)
            gain = state.spec1.power() / p_seed
            d1 = diagnostics(state.spec1, k, label="mode 1")
            if idler_present(state):
                d2 = diagnostics(state.spec2, k, label="mode 2")
                point = ExitCurvePoint(b, gain, d1.com, d2.com, abs(d1.com - d2.com))
            else:
                point = ExitCurvePoint(b, gain, d1.com, NAN, NAN, "idler-absent")
        except HitchError as exc:
            point = ExitCurvePoint(b, NAN, NAN, NAN, NAN, f"error: {exc}")
        points.append(point)
    return points


def exit_curve_from_gains(seed: SeedSpec, medium_template: MediumParams, gains,
                          grid: Grid1D | None = None):
    """Like :func:`exit_curve`, with each point's b found from a target net gain."""
    from .fit import b_from_gain

    grid = grid or make_grid()
    b_values = []
    failures = {}
    for i, g in enumerate(gains):
        try:
            b_values.append(b_from_gain(g, medium_template, seed, grid))
        except HitchError as exc:
            b_values.append(0.0)
            failures[i] = f"error: {exc}"
    points = exit_curve(seed, medium_template, b_values, grid)
    for i, status in failures.items():
        points[i] = ExitCurvePoint(NAN, NAN, NAN, NAN, NAN, status)
    return points


def hitching_onset(records, fraction: float = 0.9, plateau_window: float = 0.2,
                   plateau_tol: float = 0.05):
    """Where hitching sets in: ``(z_star, gain_star)``.

    ``z_star`` is the first crossing of ``fraction * separation(L)``, linearly
    interpolated between samples, and ``gain_star`` the interpolated
    ``gain_so_far`` there. The separation must have levelled off: over the last
    ``plateau_window`` of the medium it may grow by less than
    ``plateau_tol * separation(L)``.
    """
    if len(records) < 2:
        raise ParameterError("trajectory needs at least two records")
    z = np.array([r.z for r in records])
    sep = np.array([r.separation for r in records])
    gain = np.array([r.gain_so_far for r in records])
    sep_end = sep[-1]
    if not math.isfinite(sep_end):
        raise OnsetNotFoundError("separation undefined at the exit (no idler)")
    if sep_end <= 1e-9:
        return float(z[0]), float(gain[0])
    start = int(np.searchsorted(z, z[0] + (1.0 - plateau_window) * (z[-1] - z[0])))
    tail = sep[start:]
    if np.any(~np.isfinite(tail)) or sep_end - np.min(tail) >= plateau_tol * sep_end:
        raise OnsetNotFoundError(
            "separation still growing at the exit; no plateau to define an onset"
        )
    threshold = fraction * sep_end
    above = np.flatnonzero(np.nan_to_num(sep, nan=-np.inf) >= threshold)
    j = int(above[0])
    if j == 0:
        return float(z[0]), float(gain[0])
    t = (threshold - sep[j - 1]) / (sep[j] - sep[j - 1]) if np.isfinite(sep[j - 1]) else 1.0
    return (
        float(z[j - 1] + t * (z[j] - z[j - 1])),
        float(gain[j - 1] + t * (gain[j] - gain[j - 1])),
    )
