import math

import mpmath
import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from twinhitch import _backend
from twinhitch.core import TWO_PI, MediumParams
from twinhitch.errors import ParameterError
from twinhitch.transfer import (
    check_absorption_sign,
    direct_coupling_for_angle,
    mismatch_terms,
    oracle_propagate,
    phase_matched_angle,
    plane_wave_gain,
    transfer_matrix,
)

FIG1 = MediumParams(a1=2.8e-5, a2=2.8e-5, b=1e-4, length=5e4)

mpmath.mp.dps = 40


def expm_oracle(kx, z, medium):
    """Transfer matrix from a 40-digit matrix exponential of the generator."""
    dk = mpmath.mpf(kx) ** 2 / (2 * mpmath.mpf(medium.k))
    a1 = mpmath.mpc(medium.a1.real, medium.a1.imag)
    a2c = mpmath.mpc(medium.a2.real, -medium.a2.imag)
    b = mpmath.mpf(medium.b)
    gen = mpmath.matrix([[1j * (a1 - dk), 1j * b], [-1j * b, 1j * (dk - a2c)]])
    m = mpmath.expm(gen * mpmath.mpf(z))
    return np.array([[complex(m[0, 0]), complex(m[0, 1])], [complex(m[1, 0]), complex(m[1, 1])]])


couplings = st.floats(-3e-4, 3e-4)
losses = st.one_of(st.just(0.0), st.floats(0.0, 5e-5))


@st.composite
def media(draw, lossless=False, max_bl=6.0):
    length = draw(st.floats(1e3, 1e5))
    b = draw(st.floats(0.0, max_bl)) / length
    a1 = complex(draw(couplings), 0.0 if lossless else draw(losses))
    a2 = complex(draw(couplings), 0.0 if lossless else draw(losses))
    return MediumParams(a1=a1, a2=a2, b=b, length=length)


kxs = st.floats(-0.05, 0.05)


class TestClosedForm:
    @settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(medium=media(), kx=kxs, frac=st.floats(0.0, 1.0))
    def test_matches_matrix_exponential(self, backend, medium, kx, frac):
        z = frac * medium.length
        got = transfer_matrix(kx, z, medium).as_array()
        ref = expm_oracle(kx, z, medium)
        scale = np.abs(ref).max()
        np.testing.assert_allclose(got, ref, rtol=0, atol=1e-13 * scale)

    def test_phase_matched_frozen(self):
        # a = 0 at kx = k * theta_pm for the fig1 preset medium; |m11|^2 = cosh^2(b z)
        medium = FIG1
        kx = medium.k * phase_matched_angle(medium)
        m = transfer_matrix(kx, 1e4, medium)
        assert abs(m.m11) ** 2 == pytest.approx(2.3810978455418157, rel=1e-12)  # cosh(1)^2
        assert abs(m.m21) ** 2 == pytest.approx(1.3810978455418157, rel=1e-12)  # sinh(1)^2

    def test_gain_cosh2_at_bl_2(self):
        medium = MediumParams(b=2e-4, length=1e4)
        g1, g2 = plane_wave_gain(0.0, medium)
        assert g1 == pytest.approx(14.154116418008243, rel=1e-12)  # cosh(2)^2
        assert g2 == pytest.approx(13.154116418008245, rel=1e-12)

    def test_fig1_peak_plane_wave_gain(self):
        g1, _ = plane_wave_gain(TWO_PI * phase_matched_angle(FIG1), FIG1)
        assert g1 == pytest.approx(5507.116460051662, rel=1e-10)  # cosh(5)^2

    def test_degenerate_xi_zero(self, backend):
        # b = |a| exactly: cosh -> 1 and sinh(xi z)/xi -> z
        a = 3e-5
        medium = MediumParams(a1=a, a2=a, b=a, length=2e4)
        m = transfer_matrix(0.0, medium.length, medium)
        z = medium.length
        assert m.m11 == pytest.approx(1 + 1j * a * z, rel=1e-12)
        assert m.m12 == pytest.approx(1j * a * z, rel=1e-12)

    @pytest.mark.parametrize("bz", [349.0, 351.0, 500.0])
    def test_asymptotic_branch(self, backend, bz):
        medium = MediumParams(b=1e-3, length=bz / 1e-3)
        m = transfer_matrix(0.0, medium.length, medium)
        assert m.m11.real == pytest.approx(float(mpmath.cosh(bz)), rel=1e-12)
        assert m.m12.imag == pytest.approx(float(mpmath.sinh(bz)), rel=1e-12)

    def test_oscillatory_regime_bounded(self):
        # a^2 > b^2: transfer is periodic and |m11| stays O(1)
        medium = MediumParams(a1=1e-3, a2=1e-3, b=1e-4, length=1e6)
        m = transfer_matrix(0.0, np.linspace(0, 1e6, 7)[-1], medium)
        ref = expm_oracle(0.0, 1e6, medium)
        assert abs(m.m11 - ref[0, 0]) < 1e-9
        assert abs(m.m11) < 1.1

    def test_z_zero_identity(self):
        m = transfer_matrix(np.array([0.0, 0.1]), 0.0, FIG1)
        np.testing.assert_array_equal(m.m11, 1.0)
        np.testing.assert_array_equal(m.m12, 0.0)

    def test_rejects_negative_z(self):
        with pytest.raises(ParameterError):
            transfer_matrix(0.0, -1.0, FIG1)


class TestInvariants:
    @settings(max_examples=100, deadline=None)
    @given(medium=media(), kx=kxs, frac=st.floats(0.0, 1.0))
    def test_determinant(self, medium, kx, frac):
        z = frac * medium.length
        m = transfer_matrix(kx, z, medium)
        delta_a = 0.5 * (medium.a1 - medium.a2.conjugate())
        ref = np.exp(2j * delta_a * z)
        scale = abs(m.m11 * m.m22) + abs(m.m12 * m.m21)
        assert abs(m.det() - ref) <= 1e-12 * scale

    @settings(max_examples=100, deadline=None)
    @given(medium=media(lossless=True), kx=kxs)
    def test_manley_rowe(self, medium, kx):
        g1, g2 = plane_wave_gain(kx, medium)
        assert g1 - g2 == pytest.approx(1.0, abs=1e-9 * max(1.0, g1))

    @settings(max_examples=60, deadline=None)
    @given(medium=media(max_bl=3.0), kx=kxs, f1=st.floats(0, 1), f2=st.floats(0, 1))
    def test_semigroup(self, medium, kx, f1, f2):
        z1, z2 = f1 * medium.length, f2 * medium.length
        joint = transfer_matrix(kx, z1 + z2, medium).as_array()
        composed = (transfer_matrix(kx, z2, medium) @ transfer_matrix(kx, z1, medium)).as_array()
        np.testing.assert_allclose(composed, joint, rtol=0, atol=1e-12 * np.abs(joint).max())

    @settings(max_examples=60, deadline=None)
    @given(medium=media(), kx=kxs)
    def test_reflection_symmetry(self, medium, kx):
        m_plus = transfer_matrix(kx, medium.length, medium).as_array()
        m_minus = transfer_matrix(-kx, medium.length, medium).as_array()
        np.testing.assert_array_equal(m_plus, m_minus)

    @settings(max_examples=60, deadline=None)
    @given(medium=media(), kx=kxs, s=st.floats(0.1, 10.0))
    def test_scale_invariance(self, medium, kx, s):
        # couplings and the paraxial phase scaled by s, length by 1/s: same matrix
        scaled = MediumParams(
            a1=s * medium.a1, a2=s * medium.a2, b=s * medium.b, length=medium.length / s, k=medium.k
        )
        ref = transfer_matrix(kx, medium.length, medium).as_array()
        got = transfer_matrix(kx * math.sqrt(s), scaled.length, scaled).as_array()
        np.testing.assert_allclose(got, ref, rtol=0, atol=1e-10 * np.abs(ref).max())


class TestMismatch:
    def test_fig1_terms(self):
        kx = TWO_PI * 3e-3
        t = mismatch_terms(kx, FIG1)
        assert t.delta_k == pytest.approx(2.827433388230814e-05, rel=1e-12)
        assert t.a == pytest.approx(-2.7433388230814e-07, rel=1e-9)
        assert t.xi.real == pytest.approx(9.999962371e-05, rel=1e-9)
        assert t.delta_a == 0

    def test_phase_matched_angle_fig1(self):
        # sqrt((2.8e-5 + 2.8e-5) / 2 pi)
        assert phase_matched_angle(FIG1) == pytest.approx(2.985410660720923e-3, rel=1e-12)

    def test_phase_matched_angle_zero_couplings(self):
        assert phase_matched_angle(MediumParams()) == 0.0

    def test_phase_matched_angle_negative(self):
        with pytest.raises(ParameterError):
            phase_matched_angle(MediumParams(a1=-1e-5))

    def test_direct_coupling_for_angle(self):
        assert direct_coupling_for_angle(5e-3) == pytest.approx(1.5707963267948966e-4, rel=1e-12)
        assert direct_coupling_for_angle(5e-3, a2=1e-5) == pytest.approx(1.4707963267948966e-4)

    @settings(max_examples=50, deadline=None)
    @given(theta=st.floats(1e-4, 2e-2), a2=st.floats(-1e-5, 1e-5))
    def test_angle_round_trip(self, theta, a2):
        a1 = direct_coupling_for_angle(theta, TWO_PI, a2)
        assume(a1 + a2 > 0)
        medium = MediumParams(a1=a1, a2=a2)
        assert phase_matched_angle(medium) == pytest.approx(theta, rel=1e-10)


class TestOracle:
    def test_rk4_fourth_order(self, backend):
        medium = MediumParams(a1=2e-5, a2=1e-5, b=8e-5, length=5e4)
        exact = transfer_matrix(0.01, medium.length, medium).apply(1.0, 0.0)
        errs = []
        for steps in (64, 128):
            y = oracle_propagate(0.01, medium.length, medium, (1.0, 0.0), steps)
            errs.append(abs(y[0] - exact[0]))
        assert 8 <= errs[0] / errs[1] <= 32

    def test_vectorised(self, backend):
        kx = np.array([0.0, 0.01, -0.02])
        y1, y2 = oracle_propagate(kx, FIG1.length, FIG1, (np.ones(3), np.zeros(3)), 2048)
        m = transfer_matrix(kx, FIG1.length, FIG1)
        np.testing.assert_allclose(y1, m.m11, rtol=1e-8)
        np.testing.assert_allclose(y2, m.m21, rtol=1e-8)

    def test_rejects(self):
        with pytest.raises(ParameterError):
            oracle_propagate(0.0, 1.0, FIG1, (1, 0), steps=0)
        with pytest.raises(ParameterError):
            oracle_propagate(0.0, -1.0, FIG1, (1, 0))

    def test_absorption_sign(self):
        assert check_absorption_sign() is True


class TestBackends:
    """The compiled and numpy kernels implement the same arithmetic."""

    pytestmark = pytest.mark.skipif(
        "compiled" not in _backend.available(), reason="compiled kernels not built"
    )

    @pytest.fixture
    def both(self):
        return _backend.load("compiled"), _backend.load("python")

    @settings(max_examples=40, deadline=None)
    @given(medium=media(max_bl=20.0), frac=st.floats(0, 1))
    def test_transfer_entries(self, medium, frac):
        c, p = _backend.load("compiled"), _backend.load("python")
        kx = np.linspace(-0.2, 0.2, 257)
        z = frac * medium.length
        args = (kx, z, medium.a1, medium.a2, medium.b, medium.k)
        for u, v in zip(c.transfer_entries(*args), p.transfer_entries(*args)):
            np.testing.assert_allclose(u, v, rtol=1e-11, atol=1e-300)

    def test_weighted_gain(self, both):
        c, p = both
        kx = np.linspace(-0.05, 0.05, 101)
        w = np.exp(-(kx / 0.02) ** 2)
        w /= w.sum()
        args = (kx, w, 5e4, 2.8e-5 + 1e-5j, 2.8e-5, 1e-4, TWO_PI)
        assert c.weighted_gain(*args) == pytest.approx(p.weighted_gain(*args), rel=1e-13)

    def test_rk4(self, both):
        c, p = both
        kx = np.array([0.0, 0.015])
        args = (kx, 5e4, 2.8e-5 + 2e-6j, 2.8e-5, 1e-4, TWO_PI, np.ones(2), np.zeros(2), 300)
        for u, v in zip(c.rk4_propagate(*args), p.rk4_propagate(*args)):
            np.testing.assert_allclose(u, v, rtol=1e-12)

    def test_bisect(self, both):
        c, p = both
        kx = np.linspace(-0.05, 0.05, 101)
        w = np.full(101, 1 / 101)
        out = [
            m.bisect_gain(kx, w, 5e4, 2.8e-5, 2.8e-5, TWO_PI, 50.0, 0.0, 2e-4, 0.5, 1e9, 1e-12)
            for m in both
        ]
        assert out[0][0] == pytest.approx(out[1][0], rel=1e-11)
        assert math.isnan(out[0][1]) and math.isnan(out[1][1])
        np.testing.assert_allclose(out[0][3], out[1][3], rtol=1e-11)
