"""Reference computations that share no code with the package.

Everything here works from plain numpy arrays of Fourier coefficients in
numpy's FFT layout (mode ``m`` at index ``m mod n``), normalized so that the
field is ``sum_m c_m exp(i m . x)``.
"""
import itertools

import numpy as np

TWO_PI = 2.0 * np.pi


def modes(c, band):
    """Dict ``mode tuple -> coefficient`` for all nonzero modes within ``band``."""
    n = c.shape
    out = {}
    for m in itertools.product(*[range(-band, band + 1)] * c.ndim):
        v = c[tuple(mi % ni for mi, ni in zip(m, n))]
        if v != 0:
            out[m] = v
    return out


def trilinear_integral(cf, cg, ch, band):
    """``int f g h dx`` over the torus by the triple convolution sum."""
    F, G, H = modes(cf, band), modes(cg, band), modes(ch, band)
    total = 0.0 + 0.0j
    for a, fa in F.items():
        for b, gb in G.items():
            c = tuple(-(ai + bi) for ai, bi in zip(a, b))
            hc = H.get(c)
            if hc is not None:
                total += fa * gb * hc
    return (TWO_PI ** cf.ndim) * total.real


def product_coeffs(cf, cg, band, out_shape):
    """Fourier coefficients of ``f g``, kept on ``out_shape`` (modes outside are dropped)."""
    F, G = modes(cf, band), modes(cg, band)
    out = np.zeros(out_shape, dtype=complex)
    half = [s // 2 for s in out_shape]
    for a, fa in F.items():
        for b, gb in G.items():
            m = tuple(ai + bi for ai, bi in zip(a, b))
            if all(abs(mi) < h for mi, h in zip(m, half)):
                out[tuple(mi % s for mi, s in zip(m, out_shape))] += fa * gb
    return out


def synthesize(c, npts):
    """Physical samples of ``sum c_m e^{i m x}`` on an ``npts``-per-axis grid, by direct summation."""
    dim = c.ndim
    n = c.shape
    x = [np.arange(npts) * TWO_PI / npts] * dim
    grids = np.meshgrid(*x, indexing="ij")
    out = np.zeros((npts,) * dim, dtype=complex)
    nz = np.argwhere(c != 0)
    for idx in nz:
        m = [int(i) if i <= s // 2 else int(i) - s for i, s in zip(idx, n)]
        phase = sum(mi * g for mi, g in zip(m, grids))
        out += c[tuple(idx)] * np.exp(1j * phase)
    return out.real


FD8 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])


def fd8(x, axis, h):
    """Eighth-order centered first derivative on a periodic grid."""
    out = np.zeros_like(x)
    for s, w in zip(range(-4, 5), FD8):
        if w:
            out += w * np.roll(x, -s, axis=axis)
    return out / h


def philox4x64(counter, key, rounds=10):
    """Pure-Python Philox4x64 block function (Salmon et al. constants)."""
    mask = (1 << 64) - 1
    x = list(counter)
    k0, k1 = key
    for _ in range(rounds):
        p0 = 0xD2E7470EE14C6C93 * x[0]
        p1 = 0xCA5A826395121157 * x[2]
        x = [(p1 >> 64) ^ x[1] ^ k0, p1 & mask, (p0 >> 64) ^ x[3] ^ k1, p0 & mask]
        k0 = (k0 + 0x9E3779B97F4A7C15) & mask
        k1 = (k1 + 0xBB67AE8584CAA73B) & mask
    return x


def philox_normals(seed, count):
    """Box-Muller normals from counter-mode Philox words, counter 0, 1, 2, ..."""
    words = []
    ctr = 0
    while len(words) < 2 * ((count + 1) // 2):
        words += philox4x64((ctr, 0, 0, 0), (seed, 0))
        ctr += 1
    out = []
    for w1, w2 in zip(words[0::2], words[1::2]):
        u1 = (w1 >> 11) * 2.0 ** -53
        u2 = (w2 >> 11) * 2.0 ** -53
        r = np.sqrt(-2.0 * np.log(1.0 - u1))
        out += [r * np.cos(TWO_PI * u2), r * np.sin(TWO_PI * u2)]
    return np.array(out[:count])


def _wavenumbers(n, dim):
    k = np.fft.fftfreq(n, 1.0 / n)
    return list(np.meshgrid(*[k] * dim, indexing="ij")) + [np.zeros((n,) * dim)] * (3 - dim)


def _curl(c, K):
    return np.stack([1j * K[1] * c[2] - 1j * K[2] * c[1],
                     1j * K[2] * c[0] - 1j * K[0] * c[2],
                     1j * K[0] * c[1] - 1j * K[1] * c[0]])


def _up(c, m):
    """Physical samples of a 3-component coefficient stack on an ``m``-point grid."""
    n, dim = c.shape[1], c.ndim - 1
    big = np.zeros((3,) + (m,) * dim, dtype=complex)
    idx = np.ix_(*[np.r_[0:n // 2, m - n // 2:m]] * dim)
    for i in range(3):
        big[i][idx] = c[i]
    return np.fft.ifftn(big, axes=range(1, dim + 1)).real * m ** dim


def _cross(a, b):
    return np.stack([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def hall(c):
    """Coefficients of ``curl(curl b x b)`` via plain numpy FFTs on a 4x grid."""
    n, dim = c.shape[1], c.ndim - 1
    m = 4 * n
    K = _wavenumbers(n, dim)
    j = _curl(c, K)
    jxb = _cross(_up(j, m), _up(c, m))
    h = np.fft.fftn(jxb, axes=range(1, dim + 1)) / m ** dim
    idx = np.ix_(*[np.r_[0:n // 2, m - n // 2:m]] * dim)
    return _curl(np.stack([h[i][idx] for i in range(3)]), K)


def pairing_h2(c):
    """``int Lap curl(j x b) . Lap b dx`` with the product and pairing both in physical space.

    ``j x b`` and its triple derivative are assembled on a 4x grid directly from
    physical samples, never truncated to the input grid.
    """
    n, dim = c.shape[1], c.ndim - 1
    m = 4 * n
    K = _wavenumbers(n, dim)
    k2 = sum(k * k for k in K)
    jxb = _cross(_up(_curl(c, K), m), _up(c, m))
    # differentiate j x b on the big grid so nothing is dropped
    kb = [np.fft.fftfreq(m, 1.0 / m)] * dim
    Kb = list(np.meshgrid(*kb, indexing="ij")) + [np.zeros((m,) * dim)] * (3 - dim)
    hb = np.fft.fftn(jxb, axes=range(1, dim + 1))
    lap_curl = np.fft.ifftn(-sum(k * k for k in Kb) * _curl(hb, Kb), axes=range(1, dim + 1)).real
    lap_b = _up(-k2 * c, m)
    return (TWO_PI ** dim) * float(np.mean(np.sum(lap_curl * lap_b, axis=0)))
