import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twinhitch.core import (
    TWO_PI,
    Field1D,
    Grid1D,
    MediumParams,
    SeedSpec,
    Spectrum1D,
    TwinBeamState,
    forward_transform,
    inverse_transform,
    make_grid,
)
from twinhitch.errors import GridMismatchError, ParameterError


def direct_dft(values, grid):
    """O(n^2) reference for the forward transform."""
    phase = np.exp(-1j * np.outer(grid.kx, grid.x))
    return phase @ values * grid.dx / math.sqrt(TWO_PI)


class TestGrid:
    def test_defaults(self):
        g = make_grid()
        assert g.n == 4096 and g.dx == 1.0
        assert g.dk == pytest.approx(2 * math.pi / 4096, rel=1e-15)

    def test_x_layout(self):
        g = Grid1D(16, 8.0)
        assert g.x[0] == -4.0 and g.x[8] == 0.0 and g.x[-1] == 3.5
        assert np.all(np.diff(g.x) > 0)

    def test_kx_nyquist_positive(self):
        g = Grid1D(16, 8.0)
        assert g.kx[8] == pytest.approx(math.pi / g.dx)
        assert np.all(np.diff(g.kx_sorted) > 0)
        assert g.kx_sorted[-1] == g.kx[8]

    def test_mirror_index(self):
        g = Grid1D(32, 10.0)
        m = g.mirror_index
        assert m[0] == 0 and m[16] == 16
        j = np.arange(1, 32)
        j = j[j != 16]
        np.testing.assert_allclose(g.kx[m[j]], -g.kx[j], rtol=0, atol=1e-15)

    @pytest.mark.parametrize("n", [0, 8, 100, 15, 4096.5, True])
    def test_bad_n(self, n):
        with pytest.raises(ParameterError):
            Grid1D(n, 10.0)

    @pytest.mark.parametrize("width", [0.0, -1.0, math.inf, math.nan])
    def test_bad_width(self, width):
        with pytest.raises(ParameterError):
            Grid1D(64, width)

    def test_arrays_read_only(self):
        g = Grid1D(64, 10.0)
        with pytest.raises(ValueError):
            g.kx[0] = 1.0


class TestMedium:
    def test_normalises_types(self):
        m = MediumParams(a1=1e-5, a2=2e-5j, b=1e-4, length=10, k=1)
        assert isinstance(m.a1, complex) and m.b == 1e-4
        assert not m.lossless
        assert MediumParams().lossless

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(b=-1e-4),
            dict(b=1e-4j),
            dict(a1=-1e-5j),
            dict(a2=-1e-6j),
            dict(length=0.0),
            dict(k=-1.0),
            dict(a1=complex(math.nan, 0)),
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ParameterError):
            MediumParams(**kwargs)


class TestSeedSpec:
    def test_rejects_sigma(self):
        with pytest.raises(ParameterError):
            SeedSpec(sigma=0.0)

    def test_aliasing_tilt(self):
        g = Grid1D(64, 64.0)
        # pi/dx = pi, so any tilt >= 0.5 rad aliases at k = 2 pi
        with pytest.raises(ParameterError):
            SeedSpec(sigma=5, tilt=0.5).check_on(g)
        SeedSpec(sigma=5, tilt=0.49).check_on(g)

    def test_center_outside(self):
        with pytest.raises(ParameterError):
            SeedSpec(x0=40.0).check_on(Grid1D(64, 64.0))


class TestTransform:
    def test_matches_direct_sum(self):
        g = Grid1D(64, 20.0)
        rng = np.random.default_rng(1)
        e = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        s = forward_transform(Field1D(g, e)).values
        np.testing.assert_allclose(s, direct_dft(e, g), rtol=0, atol=1e-12)

    def test_gaussian_analytic(self):
        # exp(-x^2 / 2 s^2) transforms to s exp(-s^2 k^2 / 2) under this convention
        g = Grid1D(1024, 400.0)
        s0 = 10.0
        spec = forward_transform(Field1D(g, np.exp(-g.x**2 / (2 * s0**2))))
        np.testing.assert_allclose(spec.values, s0 * np.exp(-(s0**2) * g.kx**2 / 2), atol=1e-12)

    def test_round_trip(self):
        g = Grid1D(128, 50.0)
        rng = np.random.default_rng(2)
        e = rng.standard_normal(128) + 1j * rng.standard_normal(128)
        back = inverse_transform(forward_transform(Field1D(g, e, z=3.0)))
        assert back.z == 3.0
        np.testing.assert_allclose(back.values, e, atol=1e-13)

    def test_grid_mismatch(self):
        f = Field1D(Grid1D(64, 10.0), np.zeros(64))
        with pytest.raises(GridMismatchError):
            forward_transform(f, Grid1D(64, 11.0))
        with pytest.raises(GridMismatchError):
            Field1D(Grid1D(64, 10.0), np.zeros(32))

    @settings(max_examples=60, deadline=None)
    @given(
        n_exp=st.integers(4, 10),
        width=st.floats(1.0, 1e4),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_parseval(self, n_exp, width, seed):
        g = Grid1D(2**n_exp, width)
        rng = np.random.default_rng(seed)
        e = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
        f = Field1D(g, e)
        assert forward_transform(f).power() == pytest.approx(f.power(), rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), alpha=st.complex_numbers(max_magnitude=10))
    def test_linearity(self, seed, alpha):
        g = Grid1D(64, 30.0)
        rng = np.random.default_rng(seed)
        e1, e2 = rng.standard_normal((2, 64)) + 1j * rng.standard_normal((2, 64))
        lhs = forward_transform(Field1D(g, alpha * e1 + e2)).values
        rhs = alpha * forward_transform(Field1D(g, e1)).values + forward_transform(Field1D(g, e2)).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-10 * (1 + abs(alpha)))

    @settings(max_examples=30, deadline=None)
    @given(shift=st.integers(-30, 30))
    def test_shift_theorem(self, shift):
        # a cyclic shift by s samples multiplies the spectrum by exp(-i kx s dx)
        g = Grid1D(64, 32.0)
        rng = np.random.default_rng(3)
        e = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        s0 = forward_transform(Field1D(g, e)).values
        s1 = forward_transform(Field1D(g, np.roll(e, shift))).values
        kx = np.fft.fftfreq(64) * 64 * g.dk  # exact shift phase needs the signed Nyquist alias
        np.testing.assert_allclose(s1, s0 * np.exp(-1j * kx * shift * g.dx), atol=1e-12)


class TestTwinBeamState:
    def test_checks(self):
        g = Grid1D(16, 4.0)
        s = Spectrum1D(g, np.zeros(16), 1.0)
        TwinBeamState(1.0, s, s)
        with pytest.raises(ParameterError):
            TwinBeamState(2.0, s, s)
        with pytest.raises(GridMismatchError):
            TwinBeamState(1.0, s, Spectrum1D(Grid1D(16, 5.0), np.zeros(16), 1.0))

    def test_values_read_only(self):
        g = Grid1D(16, 4.0)
        s = Spectrum1D(g, np.ones(16))
        with pytest.raises(ValueError):
            s.values[0] = 0
