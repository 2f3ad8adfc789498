"""Pure numpy kernels; same signatures as the compiled ``_kernels`` module."""

import math

import numpy as np

# |xi z| below this uses the series for cosh and sinh(x)/x
SERIES_CUTOFF = 1e-4
# Re(xi z) above this folds exp(xi z) into the common prefactor
ASYMPTOTIC_CUTOFF = 350.0
_LN2 = math.log(2.0)


def transfer_entries(kx, z, a1, a2, b, k):
    """Entries (m11, m12, m21, m22) of the closed-form transfer matrix per kx."""
    kx = np.ascontiguousarray(kx, dtype=np.float64)
    a1 = complex(a1)
    a2c = complex(a2).conjugate()
    z = float(z)
    b = float(b)
    delta_a = 0.5 * (a1 - a2c)
    a = 0.5 * (a1 + a2c) - kx * kx / (2.0 * k)
    xi2 = b * b - a * a
    # principal branch; everything below is even in s, so the branch is irrelevant
    s = np.sqrt(xi2)
    w = s * z

    big = w.real > ASYMPTOTIC_CUTOFF
    small = np.abs(w) < SERIES_CUTOFF
    mid = ~(big | small)

    ch = np.empty_like(w)
    sh = np.empty_like(w)  # sinh(w)/s
    pref = np.full(w.shape, np.exp(1j * delta_a * z), dtype=np.complex128)

    ch[mid] = np.cosh(w[mid])
    sh[mid] = np.sinh(w[mid]) / s[mid]

    w2 = xi2[small] * (z * z)
    ch[small] = 1.0 + 0.5 * w2 * (1.0 + w2 / 12.0)
    sh[small] = z * (1.0 + w2 / 6.0 * (1.0 + w2 / 20.0))

    if big.any():
        pref[big] = np.exp(1j * delta_a * z + w[big] - _LN2)
        ch[big] = 1.0
        sh[big] = 1.0 / s[big]

    ias = 1j * a * sh
    m11 = pref * (ch + ias)
    m22 = pref * (ch - ias)
    m12 = pref * (1j * b * sh)
    m21 = -m12
    return m11, m12, m21, m22


def weighted_gain(kx, weight, z, a1, a2, b, k):
    """sum_j weight_j * |m11(kx_j)|^2."""
    m11 = transfer_entries(kx, z, a1, a2, b, k)[0]
    return float(np.sum(np.asarray(weight, dtype=np.float64) * (m11.real**2 + m11.imag**2)))


def rk4_propagate(kx, z, a1, a2, b, k, v1, v2, steps):
    """Fixed-step classic RK4 for the coupled linear system, vectorised over sets."""
    kx, z, a1, a2, b, v1, v2 = np.broadcast_arrays(
        np.asarray(kx, dtype=np.float64),
        np.asarray(z, dtype=np.float64),
        np.asarray(a1, dtype=np.complex128),
        np.asarray(a2, dtype=np.complex128),
        np.asarray(b, dtype=np.float64),
        np.asarray(v1, dtype=np.complex128),
        np.asarray(v2, dtype=np.complex128),
    )
    steps = int(steps)
    dk = kx * kx / (2.0 * k)
    c11 = 1j * (a1 - dk)
    c12 = 1j * b
    c21 = -1j * b
    c22 = 1j * (dk - np.conj(a2))
    h = z / steps
    x1 = v1.astype(np.complex128, copy=True)
    x2 = v2.astype(np.complex128, copy=True)
    for _ in range(steps):
        k1a = c11 * x1 + c12 * x2
        k1b = c21 * x1 + c22 * x2
        y1 = x1 + 0.5 * h * k1a
        y2 = x2 + 0.5 * h * k1b
        k2a = c11 * y1 + c12 * y2
        k2b = c21 * y1 + c22 * y2
        y1 = x1 + 0.5 * h * k2a
        y2 = x2 + 0.5 * h * k2b
        k3a = c11 * y1 + c12 * y2
        k3b = c21 * y1 + c22 * y2
        y1 = x1 + h * k3a
        y2 = x2 + h * k3b
        k4a = c11 * y1 + c12 * y2
        k4b = c21 * y1 + c22 * y2
        x1 = x1 + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        x2 = x2 + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    return x1, x2


def bisect_gain(kx, weight, z, a1, a2, k, target, lo, hi, g_lo, g_hi, rtol, max_iter=200):
    """Bisect b in [lo, hi] for weighted_gain == target.

    Returns ``(b, failed_at, bs, gs)``; ``failed_at`` is NaN unless an evaluated
    gain fell outside ``(g_lo, g_hi)`` of the current bracket.
    """
    bs, gs = [], []
    failed = math.nan
    while hi - lo > rtol * hi and len(bs) < max_iter:
        mid = 0.5 * (lo + hi)
        g = weighted_gain(kx, weight, z, a1, a2, mid, k)
        bs.append(mid)
        gs.append(g)
        if not g_lo < g < g_hi:
            failed = mid
            break
        if g < target:
            lo, g_lo = mid, g
        else:
            hi, g_hi = mid, g
    return 0.5 * (lo + hi), failed, np.array(bs), np.array(gs)
