"""Domain types, the transverse grid and the unitary spectral transform pair.

Units: every length is measured in wavelengths (lambda) and every coupling or
wavenumber in rad/lambda, so the carrier wavenumber defaults to ``2*pi``.

Transform convention (unitary, forward kernel ``exp(-i kx x)``)::

    S(kx_j) = dx / sqrt(2 pi) * sum_m E(x_m) exp(-i kx_j x_m)
    E(x_m)  = dk / sqrt(2 pi) * sum_j S(kx_j) exp(+i kx_j x_m)

so that ``sum |E|^2 dx == sum |S|^2 dk``. Absolute amplitudes are therefore
not those of any particular textbook normalisation; all diagnostics in the
package are ratios or positions and do not depend on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridMismatchError, ParameterError

TWO_PI = 2.0 * math.pi


def _readonly(values, n=None, dtype=np.complex128):
    arr = np.array(values, dtype=dtype, copy=True)
    if n is not None and arr.shape != (n,):
        raise GridMismatchError(f"expected {n} samples, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MediumParams:
    """Coefficients of the coupled propagation equations.

    ``a1`` and ``a2`` are the direct (single-beam) couplings of modes 1 and 2,
    ``b`` the real cross coupling, ``length`` the medium length and ``k`` the
    shared carrier wavenumber. A positive imaginary part of ``a1``/``a2`` is
    absorption on that mode.
    """

    a1: complex = 0j
    a2: complex = 0j
    b: float = 0.0
    length: float = 5.0e4
    k: float = TWO_PI

    def __post_init__(self):
        a1 = complex(self.a1)
        a2 = complex(self.a2)
        b = complex(self.b)
        if b.imag != 0.0:
            raise ParameterError("cross coupling b must be real")
        b = b.real
        if not all(math.isfinite(v) for v in (a1.real, a1.imag, a2.real, a2.imag, b)):
            raise ParameterError("couplings must be finite")
        if b < 0:
            raise ParameterError(f"cross coupling b must be >= 0, got {b}")
        if a1.imag < 0 or a2.imag < 0:
            raise ParameterError("Im(a1) and Im(a2) must be >= 0 (absorption, not gain)")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ParameterError(f"length must be > 0, got {self.length}")
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ParameterError(f"k must be > 0, got {self.k}")
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)
        object.__setattr__(self, "b", float(b))
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "k", float(self.k))

    @property
    def lossless(self):
        return self.a1.imag == 0.0 and self.a2.imag == 0.0


@dataclass(frozen=True)
class Grid1D:
    """Uniform transverse grid of ``n`` samples spanning ``width``.

    Sample ``m`` sits at ``x = (m - n/2) * dx``, so x is ascending and contains
    0 at index ``n // 2``. ``kx`` is in transform-natural (FFT) order with the
    Nyquist bin taken as ``+pi/dx``; use :attr:`kx_sorted` / :attr:`sort_order`
    for a monotone view.
    """

    n: int = 4096
    width: float = 4096.0

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or int(n) != n:
            raise ParameterError(f"n must be an integer, got {n!r}")
        n = int(n)
        if n < 16 or n & (n - 1):
            raise ParameterError(f"n must be a power of two >= 16, got {n}")
        if not (self.width > 0 and math.isfinite(self.width)):
            raise ParameterError(f"width must be > 0, got {self.width}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "width", float(self.width))

    @property
    def dx(self):
        return self.width / self.n

    @property
    def dk(self):
        return TWO_PI / self.width

    @cached_property
    def x(self):
        return _readonly((np.arange(self.n) - self.n // 2) * self.dx, dtype=np.float64)

    @cached_property
    def kx(self):
        kx = np.fft.fftfreq(self.n) * self.n * self.dk
        kx[self.n // 2] = math.pi / self.dx
        return _readonly(kx, dtype=np.float64)

    @cached_property
    def sort_order(self):
        return np.argsort(self.kx, kind="stable")

    @property
    def kx_sorted(self):
        return self.kx[self.sort_order]

    @cached_property
    def mirror_index(self):
        """Index map j -> index of -kx_j (the Nyquist bin maps onto itself)."""
        return (-np.arange(self.n)) % self.n

    @cached_property
    def _origin_phase(self):
        # exp(-i kx x_0) with x_0 = -width/2 is exactly (-1)^j
        phase = np.ones(self.n)
        phase[1::2] = -1.0
        return phase


def make_grid(n=4096, width=4096.0):
    return Grid1D(n, width)


@dataclass(frozen=True, eq=False)
class Field1D:
    """Complex envelope samples E(x) on a grid at longitudinal position z."""

    grid: Grid1D
    values: np.ndarray
    z: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values, self.grid.n))

    @property
    def intensity(self):
        return np.abs(self.values) ** 2

    def power(self):
        return float(np.sum(self.intensity) * self.grid.dx)


@dataclass(frozen=True, eq=False)
class Spectrum1D:
    """Angular spectrum S(kx) in FFT order on a grid at longitudinal position z."""

    grid: Grid1D
    values: np.ndarray
    z: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values, self.grid.n))

    @property
    def intensity(self):
        return np.abs(self.values) ** 2

    def power(self):
        return float(np.sum(self.intensity) * self.grid.dk)


@dataclass(frozen=True)
class SeedSpec:
    """Tilted Gaussian seed; ``sigma`` is the std of the field amplitude."""

    sigma: float = 100.0
    x0: float = 0.0
    tilt: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ParameterError(f"seed sigma must be > 0, got {self.sigma}")
        for name in ("x0", "tilt", "amplitude"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"seed {name} must be finite")

    def check_on(self, grid, k=TWO_PI):
        if abs(self.tilt) * k >= math.pi / grid.dx:
            raise ParameterError(
                f"tilt {self.tilt} rad aliases on grid with dx={grid.dx} "
                f"(|tilt*k| must be < {math.pi / grid.dx})"
            )
        half = grid.width / 2
        if not -half < self.x0 < half:
            raise ParameterError(f"seed center {self.x0} outside the grid window")


@dataclass(frozen=True, eq=False)
class TwinBeamState:
    """Spectra of both modes at ``z``.

    ``spec2`` holds the plain transform of mode 2's envelope; the conjugate
    pairing used during propagation is not visible here.
    """

    z: float
    spec1: Spectrum1D
    spec2: Spectrum1D

    def __post_init__(self):
        if self.spec1.grid != self.spec2.grid:
            raise GridMismatchError("mode spectra live on different grids")
        if not (self.spec1.z == self.spec2.z == self.z):
            raise ParameterError("mode spectra and state disagree on z")

    @property
    def grid(self):
        return self.spec1.grid

    def field1(self):
        return inverse_transform(self.spec1)

    def field2(self):
        return inverse_transform(self.spec2)


def _check_grid(obj, grid):
    if grid is not None and obj.grid != grid:
        raise GridMismatchError(f"object lives on {obj.grid}, expected {grid}")


def forward_transform(field: Field1D, grid: Grid1D | None = None) -> Spectrum1D:
    _check_grid(field, grid)
    g = field.grid
    values = np.fft.fft(field.values) * g._origin_phase * (g.dx / math.sqrt(TWO_PI))
    return Spectrum1D(g, values, field.z)


def inverse_transform(spectrum: Spectrum1D, grid: Grid1D | None = None) -> Field1D:
    _check_grid(spectrum, grid)
    g = spectrum.grid
    values = np.fft.ifft(spectrum.values * g._origin_phase) * (math.sqrt(TWO_PI) / g.dx)
    return Field1D(g, values, spectrum.z)
