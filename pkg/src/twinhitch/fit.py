"""Inverse problems: cross coupling from net gain, and exit-position fits.

The exit-position model takes the measured net probe gain as its independent
variable. For a given probe absorption ``im_a1`` the direct coupling is set to
phase-match the seed angle (``Re a1 = k angle^2``, ``a2 = 0``), ``b`` is found
by bisection so that the finite-beam net gain matches, and the exit centres of
mass of both beams are read off after the full medium. Only the per-beam
vertical offsets (and optionally ``im_a1``) are fitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import _backend
from .beams import SeedSpectrum, diagnostics, idler_present, synthesize_seed
from .core import TWO_PI, Grid1D, MediumParams, SeedSpec, make_grid
from .errors import (
    DatasetError,
    GainNotAttainableError,
    IdlerAbsentError,
    NonMonotoneGainError,
    ParameterError,
)

#: bracket expansion stops once b * L exceeds this
BL_CAP = 20.0
IM_A1_BOUNDS = (0.0, 1e-3)


@dataclass(frozen=True)
class Geometry:
    """Fixed experimental geometry shared by every row of a dataset."""

    angle: float = 5e-3
    length: float = 25157.0
    k: float = TWO_PI
    seed_sigma: float = 100.0
    x0: float = 0.0

    def seed(self):
        return SeedSpec(sigma=self.seed_sigma, x0=self.x0, tilt=self.angle)

    def medium(self, im_a1=0.0, b=0.0):
        return MediumParams(
            a1=complex(self.k * self.angle**2, im_a1), a2=0.0, b=b, length=self.length, k=self.k
        )


@lru_cache(maxsize=32)
def _seed_spectrum(seed: SeedSpec, grid: Grid1D, k: float) -> SeedSpectrum:
    return SeedSpectrum(synthesize_seed(seed, grid, k))


def b_from_gain(target_gain, medium_template: MediumParams, seed: SeedSpec,
                grid: Grid1D | None = None, rtol: float = 1e-6) -> float:
    """Cross coupling ``b`` giving net gain ``target_gain`` for this seed.

    Bisection on ``[0, b_max]`` with ``b_max`` doubled from ``1/L`` until the
    target is bracketed (at most ``b L = 20``). Every evaluated gain must be
    strictly increasing in ``b``; otherwise :class:`NonMonotoneGainError`
    carries the evaluated sweep.
    """
    grid = grid or make_grid()
    target = float(target_gain)
    if not (target > 0 and math.isfinite(target)):
        raise ParameterError(f"target gain must be positive and finite, got {target_gain}")
    spectrum = _seed_spectrum(seed, grid, medium_template.k)
    length = medium_template.length
    a1, a2, k = medium_template.a1, medium_template.a2, medium_template.k
    kernels = _backend.kernels

    def gain(b):
        return kernels.weighted_gain(spectrum.kx, spectrum.weight, length, a1, a2, b, k)

    bs, gs = [0.0], [gain(0.0)]
    g0 = gs[0]
    if target <= g0:
        if target >= g0 * (1 - 1e-12):
            return 0.0
        raise GainNotAttainableError(
            f"gain {target} below the attainable minimum {g0} (b = 0)"
        )

    def not_monotone(b):
        order = np.argsort(bs)
        return NonMonotoneGainError(
            f"net gain not increasing in b near b={b!r}",
            [(bs[i], gs[i]) for i in order],
        )

    lo, hi = 0.0, 1.0 / length
    g_lo = g0
    while True:
        g_hi = gain(hi)
        bs.append(hi)
        gs.append(g_hi)
        if not g_hi > g_lo:
            raise not_monotone(hi)
        if g_hi >= target:
            break
        if hi * length >= BL_CAP:
            raise GainNotAttainableError(
                f"gain {target} not attainable with b*L <= {BL_CAP}"
            )
        lo, g_lo = hi, g_hi
        hi = min(2.0 * hi, BL_CAP / length)

    b, failed, b_eval, g_eval = kernels.bisect_gain(
        spectrum.kx, spectrum.weight, length, a1, a2, k, target, lo, hi, g_lo, g_hi, rtol
    )
    if not math.isnan(failed):
        bs.extend(b_eval.tolist())
        gs.extend(g_eval.tolist())
        raise not_monotone(failed)
    return b


def model_exit_positions(net_gain, im_a1, geometry: Geometry, grid: Grid1D | None = None,
                         rtol: float = 1e-6):
    """Exit centres of mass ``(pos1, pos2)`` predicted at a given net gain.

    No offsets are applied. Raises :class:`IdlerAbsentError` when the gain
    requires ``b = 0`` (no idler is produced).
    """
    grid = grid or make_grid()
    seed = geometry.seed()
    template = geometry.medium(im_a1)
    b = b_from_gain(net_gain, template, seed, grid, rtol)
    medium = replace(template, b=b)
    state = _seed_spectrum(seed, grid, geometry.k).propagate(medium)
    if not idler_present(state):
        raise IdlerAbsentError(f"net gain {net_gain} needs b = 0; no idler")
    d1 = diagnostics(state.spec1, geometry.k, label="mode 1")
    d2 = diagnostics(state.spec2, geometry.k, label="mode 2")
    return d1.com, d2.com


@dataclass(frozen=True, eq=False)
class HitchDataset:
    """Measured exit positions versus net probe gain (positions in lambda)."""

    net_gain: np.ndarray
    pos1: np.ndarray
    pos2: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    geometry: Geometry = field(default_factory=Geometry)

    def __post_init__(self):
        cols = {}
        for name in ("net_gain", "pos1", "pos2", "sigma1", "sigma2"):
            arr = np.array(getattr(self, name), dtype=np.float64).ravel()
            arr.setflags(write=False)
            cols[name] = arr
            object.__setattr__(self, name, arr)
        sizes = {len(a) for a in cols.values()}
        if len(sizes) != 1:
            raise DatasetError("dataset columns differ in length")
        for name, arr in cols.items():
            if not np.all(np.isfinite(arr)):
                raise DatasetError(f"non-finite value in column {name}")
        if np.any(cols["net_gain"] <= 0):
            raise DatasetError("net_gain must be > 0")
        if np.any(cols["sigma1"] <= 0) or np.any(cols["sigma2"] <= 0):
            raise DatasetError("position uncertainties must be > 0")

    def __len__(self):
        return len(self.net_gain)


@dataclass(frozen=True, eq=False)
class FitResult:
    im_a1: float
    offset1: float
    offset2: float
    chi2: float
    dof: int
    residuals1: np.ndarray
    residuals2: np.ndarray
    converged: bool
    evaluations: int
    im_a1_fitted: bool = True
    at_bound: bool = False
    weighted: bool = True
    shared_offset: bool = False

    @property
    def reduced_chi2(self):
        return self.chi2 / self.dof if self.dof > 0 else float("nan")


class _Profile:
    """chi^2 as a function of im_a1 with the offsets eliminated in closed form."""

    def __init__(self, data, grid, weighted, shared_offset, b_rtol):
        self.data = data
        self.grid = grid
        self.shared = shared_offset
        self.b_rtol = b_rtol
        if weighted:
            self.w1 = 1.0 / data.sigma1**2
            self.w2 = 1.0 / data.sigma2**2
        else:
            self.w1 = np.ones(len(data))
            self.w2 = np.ones(len(data))
        self.evaluations = 0
        self._cache = {}

    def solve(self, im_a1):
        key = float(im_a1)
        if key in self._cache:
            return self._cache[key]
        self.evaluations += 1
        model = [
            model_exit_positions(g, key, self.data.geometry, self.grid, self.b_rtol)
            for g in self.data.net_gain
        ]
        m1 = np.array([p[0] for p in model])
        m2 = np.array([p[1] for p in model])
        r1 = self.data.pos1 - m1
        r2 = self.data.pos2 - m2
        w1, w2 = self.w1, self.w2
        if self.shared:
            o1 = o2 = (np.sum(w1 * r1) + np.sum(w2 * r2)) / (np.sum(w1) + np.sum(w2))
        else:
            o1 = np.sum(w1 * r1) / np.sum(w1)
            o2 = np.sum(w2 * r2) / np.sum(w2)
        res1 = r1 - o1
        res2 = r2 - o2
        chi2 = float(np.sum(w1 * res1**2) + np.sum(w2 * res2**2))
        out = (chi2, float(o1), float(o2), res1, res2)
        self._cache[key] = out
        return out

    def __call__(self, im_a1):
        return self.solve(im_a1)[0]


def _simplex_1d(f, x0, step, lo, hi, xatol, frtol, max_evals, counter):
    """Nelder-Mead on a bounded interval (trial points are clipped)."""

    def clip(x):
        return min(max(x, lo), hi)

    a = clip(x0)
    b = clip(x0 + step)
    if b == a:
        b = clip(x0 - step)
    pts = [(f(a), a), (f(b), b)]
    while True:
        pts.sort()
        (fb, xb), (fw, xw) = pts
        if abs(xw - xb) < xatol and abs(fw - fb) <= frtol * max(abs(fb), 1.0):
            return xb, fb, True
        if abs(xw - xb) == 0.0:
            return xb, fb, True
        if counter() >= max_evals:
            return xb, fb, False
        xr = clip(xb + (xb - xw))
        fr = f(xr)
        if fr < fb:
            xe = clip(xb + 2.0 * (xb - xw))
            fe = f(xe)
            pts[1] = (fe, xe) if fe < fr else (fr, xr)
            continue
        if fr < fw:
            xc = clip(xb + 0.5 * (xr - xb))
            fc = f(xc)
            if fc <= fr:
                pts[1] = (fc, xc)
                continue
        else:
            xc = clip(xb + 0.5 * (xw - xb))
            fc = f(xc)
            if fc < fw:
                pts[1] = (fc, xc)
                continue
        xs = xb + 0.5 * (xw - xb)
        pts[1] = (f(xs), xs)


def fit_hitching(data: HitchDataset, fit_im_a1: bool = True, *, weighted: bool = True,
                 shared_offset: bool = False, im_a1_fixed: float = 0.0,
                 im_a1_start: float = 1e-5, bounds=IM_A1_BOUNDS, xatol: float = 1e-8,
                 frtol: float = 1e-10, max_evals: int = 500, b_rtol: float = 1e-10,
                 grid: Grid1D | None = None) -> FitResult:
    """Fit offsets (and optionally Im a1) of the exit-position model to data.

    The offsets enter linearly and are eliminated by weighted means, so the
    search is one-dimensional in ``im_a1`` (derivative-free simplex), or a
    single closed-form evaluation when ``fit_im_a1`` is false.
    """
    n = len(data)
    n_offsets = 1 if shared_offset else 2
    n_params = n_offsets + (1 if fit_im_a1 else 0)
    min_rows = 4 if fit_im_a1 else 2
    if n < min_rows:
        raise DatasetError(f"insufficient rows: {n} < {min_rows} for this fit")
    lo, hi = bounds
    if not 0 <= lo < hi:
        raise ParameterError(f"invalid im_a1 bounds {bounds}")
    grid = grid or make_grid()
    profile = _Profile(data, grid, weighted, shared_offset, b_rtol)

    if fit_im_a1:
        step = max(0.5 * abs(im_a1_start), 1e-6)
        im_a1, _, converged = _simplex_1d(
            profile, im_a1_start, step, lo, hi, xatol, frtol, max_evals,
            lambda: profile.evaluations,
        )
        at_bound = min(im_a1 - lo, hi - im_a1) < xatol
    else:
        im_a1, converged, at_bound = float(im_a1_fixed), True, False
    chi2, o1, o2, res1, res2 = profile.solve(im_a1)
    return FitResult(
        im_a1=float(im_a1),
        offset1=o1,
        offset2=o2,
        chi2=chi2,
        dof=2 * n - n_params,
        residuals1=res1,
        residuals2=res2,
        converged=converged,
        evaluations=profile.evaluations,
        im_a1_fitted=fit_im_a1,
        at_bound=bool(at_bound),
        weighted=weighted,
        shared_offset=shared_offset,
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for a synthetic dataset drawn from the exit-position model."""

    geometry: Geometry = field(default_factory=Geometry)
    gains: tuple = tuple(np.geomspace(1.5, 30.0, 16).tolist())
    im_a1: float = 0.0
    offset1: float = 0.0
    offset2: float = 0.0
    noise_std: float = 0.0
    sigma: float = 1.0


def model_curve(spec: SyntheticSpec, grid: Grid1D | None = None, b_rtol: float = 1e-10):
    """Noise-free model positions (without offsets) at ``spec.gains``."""
    grid = grid or make_grid()
    pos = [model_exit_positions(g, spec.im_a1, spec.geometry, grid, b_rtol) for g in spec.gains]
    return np.array([p[0] for p in pos]), np.array([p[1] for p in pos])


def synthesize_dataset(spec: SyntheticSpec, noise_seed=None, grid: Grid1D | None = None) -> HitchDataset:
    """Dataset on the model curve plus Gaussian position noise.

    Noise comes from numpy's PCG64 generator seeded with ``noise_seed``
    (``np.random.default_rng``), drawn as all probe values then all conjugate
    values, so a given seed yields the same dataset on every platform.
    """
    m1, m2 = model_curve(spec, grid)
    n = len(m1)
    pos1 = m1 + spec.offset1
    pos2 = m2 + spec.offset2
    if spec.noise_std > 0:
        rng = np.random.default_rng(noise_seed)
        pos1 = pos1 + spec.noise_std * rng.standard_normal(n)
        pos2 = pos2 + spec.noise_std * rng.standard_normal(n)
    sig = np.full(n, float(spec.sigma))
    return HitchDataset(np.array(spec.gains, dtype=float), pos1, pos2, sig, sig.copy(), spec.geometry)
