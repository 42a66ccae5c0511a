"""Periodic Fourier discretization.

Scalars live on the torus as Fourier coefficients ``c[m]`` with

    f(x) = sum_m c[m] exp(i k(m) . x),    k(m) = 2 pi m / L

stored in numpy's FFT index order (``m`` and ``m - n`` share a slot).  The
Nyquist slot of every axis is kept at zero, so each stored coefficient has an
unambiguous signed wavenumber.

Products are evaluated by zero-padding to a larger physical grid.  A product
of fields with summed band ``B`` whose coefficients are wanted up to band
``Q`` is exact when the padded grid has ``M >= B + Q + 1`` points per axis;
``Q = 0`` covers domain integrals.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.fft as sfft

__all__ = [
    "AliasingError",
    "Grid",
    "SpectralScalar",
    "partial_derivative",
    "fractional_laplacian",
    "integral",
    "inner",
    "product",
    "integrate_product",
    "sobolev_seminorm",
    "lp_norm",
    "padded_size",
    "resize_coeffs",
    "to_physical",
    "from_physical",
]

TWO_PI = 2.0 * math.pi


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("HMHD_THREADS", "1")))
    except ValueError:
        return 1


def fftn(x: np.ndarray, axes: Sequence[int] | None = None) -> np.ndarray:
    return sfft.fftn(x, axes=axes, norm="forward", workers=_workers())


def ifftn(c: np.ndarray, axes: Sequence[int] | None = None) -> np.ndarray:
    return sfft.ifftn(c, axes=axes, norm="forward", workers=_workers())


class AliasingError(ValueError):
    """Raised when a product cannot be evaluated exactly on the given grid."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``prod [0, L_i)``.

    Parameters
    ----------
    dim:
        2 or 3.  Fields on a 2-D grid are read as independent of ``x3``.
    n:
        Points per axis; even and at least 4.
    length:
        Period per axis (default ``2 pi``).
    band_limit:
        Largest retained ``|m|`` per axis; at most ``n/2 - 1``.
    """

    dim: int
    n: tuple[int, ...]
    length: tuple[float, ...] = field(default=())
    band_limit: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        n = tuple(int(v) for v in np.broadcast_to(self.n, (self.dim,)))
        for v in n:
            if v < 4 or v % 2:
                raise ValueError(f"points per axis must be even and >= 4, got {v}")
        length = self.length or (TWO_PI,) * self.dim
        length = tuple(float(v) for v in np.broadcast_to(length, (self.dim,)))
        band = self.band_limit or tuple(v // 2 - 1 for v in n)
        band = tuple(int(v) for v in np.broadcast_to(band, (self.dim,)))
        for b, v in zip(band, n):
            if b < 0 or b > v // 2 - 1:
                raise ValueError(f"band_limit {b} outside [0, {v // 2 - 1}] for n={v}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", length)
        object.__setattr__(self, "band_limit", band)

    @classmethod
    def square(cls, dim: int, n: int, band: int | None = None,
               length: float = TWO_PI) -> "Grid":
        return cls(dim, (n,) * dim, (length,) * dim,
                   (n // 2 - 1,) * dim if band is None else (band,) * dim)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def volume(self) -> float:
        return float(np.prod(self.length))

    def with_band(self, band: int | Sequence[int]) -> "Grid":
        return Grid(self.dim, self.n, self.length,
                    tuple(np.broadcast_to(band, (self.dim,))))

    @cached_property
    def indices(self) -> tuple[np.ndarray, ...]:
        """Signed integer mode numbers per axis, shaped for broadcasting."""
        out = []
        for axis, n in enumerate(self.n):
            m = np.arange(n)
            m[m > n // 2] -= n
            shape = [1] * self.dim
            shape[axis] = n
            out.append(m.reshape(shape))
        return tuple(out)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        return tuple(m * (TWO_PI / L) for m, L in zip(self.indices, self.length))

    @cached_property
    def k2(self) -> np.ndarray:
        out = np.zeros(self.n)
        for k in self.wavenumbers:
            out = out + k * k
        return out

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def mask(self) -> np.ndarray:
        out = np.ones(self.n, dtype=bool)
        for m, b in zip(self.indices, self.band_limit):
            out = out & (np.abs(m) <= b)
        return out

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Physical sample points, broadcastable."""
        out = []
        for axis, (n, L) in enumerate(zip(self.n, self.length)):
            shape = [1] * self.dim
            shape[axis] = n
            out.append((np.arange(n) * (L / n)).reshape(shape))
        return tuple(out)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.n, dtype=complex)


@dataclass(frozen=True, eq=False)
class SpectralScalar:
    """A real scalar field stored by its Fourier coefficients."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} != grid shape {self.grid.shape}")
        if c.flags.writeable:
            c = c.copy()
            c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, grid: Grid) -> "SpectralScalar":
        return cls(grid, grid.zeros())

    @classmethod
    def from_function(cls, grid: Grid, func) -> "SpectralScalar":
        """Sample ``func(*coords)`` and keep the band-limited part."""
        x = np.broadcast_to(func(*grid.coordinates()), grid.shape)
        return from_physical(grid, np.asarray(x, dtype=float))

    def physical(self, m: int | Sequence[int] | None = None) -> np.ndarray:
        return to_physical(self, m)

    def band(self) -> tuple[int, ...]:
        return effective_band(self.coeffs, self.grid)

    def _check(self, other: "SpectralScalar") -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "SpectralScalar") -> "SpectralScalar":
        self._check(other)
        return SpectralScalar(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralScalar") -> "SpectralScalar":
        self._check(other)
        return SpectralScalar(self.grid, self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralScalar":
        return SpectralScalar(self.grid, -self.coeffs)

    def __mul__(self, a: float) -> "SpectralScalar":
        if isinstance(a, SpectralScalar):
            return product([self, a])
        return SpectralScalar(self.grid, self.coeffs * float(a))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"SpectralScalar(grid={self.grid!r}, band={self.band()})"


def effective_band(coeffs: np.ndarray, grid: Grid, axes_offset: int = 0) -> tuple[int, ...]:
    """Largest ``|m|`` per axis carrying a nonzero coefficient."""
    nz = coeffs != 0
    if nz.ndim > grid.dim:
        nz = nz.reshape((-1,) + grid.shape).any(axis=0)
    out = []
    for axis in range(grid.dim):
        other = tuple(a for a in range(grid.dim) if a != axis)
        hit = nz.any(axis=other) if other else nz
        m = np.abs(np.fft.fftfreq(grid.n[axis], 1.0 / grid.n[axis]).astype(int))
        out.append(int(m[hit].max()) if hit.any() else 0)
    return tuple(out)


def padded_size(total_band: int, out_band: int = 0) -> int:
    """Smallest even FFT-friendly size ``M >= total_band + out_band + 1``."""
    need = total_band + out_band + 1
    m = max(4, sfft.next_fast_len(need))
    while m % 2:
        m = sfft.next_fast_len(m + 1)
    return m


def resize_coeffs(c: np.ndarray, shape: Sequence[int], axes: Sequence[int] | None = None) -> np.ndarray:
    """Zero-pad or truncate coefficients to a new grid size.

    Only signed modes ``|m| <= min(n_old, n_new)/2 - 1`` are carried over, so
    Nyquist slots are never populated.
    """
    if axes is None:
        axes = tuple(range(c.ndim - len(shape), c.ndim))
    out = c
    for a, s in zip(axes, shape):
        n_old = out.shape[a]
        s = int(s)
        if s == n_old:
            continue
        h = min(n_old, s) // 2
        m = np.arange(-(h - 1), h)
        new_shape = list(out.shape)
        new_shape[a] = s
        buf = np.zeros(new_shape, dtype=complex)
        dst = [slice(None)] * out.ndim
        dst[a] = m % s
        buf[tuple(dst)] = np.take(out, m % n_old, axis=a)
        out = buf
    return out


def _pad_shape(grid: Grid, m: int | Sequence[int] | None) -> tuple[int, ...]:
    if m is None:
        return grid.shape
    return tuple(int(v) for v in np.broadcast_to(m, (grid.dim,)))


def to_physical(f: SpectralScalar, m: int | Sequence[int] | None = None) -> np.ndarray:
    """Real samples of ``f`` on a grid with ``m`` points per axis."""
    shape = _pad_shape(f.grid, m)
    c = f.coeffs if shape == f.grid.shape else resize_coeffs(f.coeffs, shape)
    return ifftn(c).real


def from_physical(grid: Grid, x: np.ndarray) -> SpectralScalar:
    """Band-limited projection of real samples (any even per-axis size)."""
    c = fftn(np.asarray(x, dtype=float))
    if c.shape != grid.shape:
        c = resize_coeffs(c, grid.shape)
    return SpectralScalar(grid, c * grid.mask)


def _hermitian(c: np.ndarray, ndim: int | None = None) -> np.ndarray:
    """Enforce ``c(-m) = conj(c(m))`` over the trailing ``ndim`` axes."""
    ndim = c.ndim if ndim is None else ndim
    axes = tuple(range(c.ndim - ndim, c.ndim))
    flipped = np.conj(np.roll(np.flip(c, axis=axes), 1, axis=axes))
    return 0.5 * (c + flipped)


def partial_derivative(f: SpectralScalar, axis: int) -> SpectralScalar:
    """``d f / d x_axis`` with ``axis`` in 1..3; ``axis=3`` on a 2-D grid gives zero."""
    g = f.grid
    if axis < 1 or axis > 3:
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    if axis > g.dim:
        return SpectralScalar.zero(g)
    return SpectralScalar(g, f.coeffs * (1j * g.wavenumbers[axis - 1]))


def fractional_laplacian(f: SpectralScalar, alpha: float) -> SpectralScalar:
    """``Lambda^alpha f``: multiply coefficient ``c(k)`` by ``|k|^alpha``; mean dropped."""
    if alpha < 0:
        raise ValueError("negative exponents (inverse operators) are not supported")
    return SpectralScalar(f.grid, f.coeffs * symbol(f.grid, alpha))


def symbol(grid: Grid, alpha: float) -> np.ndarray:
    """``|k|^alpha`` with the zero mode set to 0."""
    out = np.zeros(grid.shape)
    nz = grid.k2 > 0
    out[nz] = grid.k2[nz] ** (0.5 * alpha)
    return out


def integral(f: SpectralScalar) -> float:
    return f.grid.volume * float(f.coeffs.flat[0].real)


def inner(f: SpectralScalar, g: SpectralScalar) -> float:
    """``int f g dx`` via Parseval (exact)."""
    return f.grid.volume * float(np.vdot(f.coeffs, g.coeffs).real)


def _product_coeffs(fs: Sequence[SpectralScalar], out_band: Sequence[int],
                    pad: bool = True) -> tuple[np.ndarray, tuple[int, ...]]:
    grid = fs[0].grid
    for f in fs[1:]:
        if f.grid != grid:
            raise ValueError("all factors must share a grid")
    bands = np.array([f.band() for f in fs]).sum(axis=0)
    shape = tuple(padded_size(int(b), int(q)) for b, q in zip(bands, out_band))
    if not pad:
        if any(s > n for s, n in zip(shape, grid.n)):
            raise AliasingError(
                f"grid {grid.n} too small for exact product (needs {shape}) and padding is disabled")
        shape = grid.shape
    x = np.ones(shape)
    for f in fs:
        x = x * to_physical(f, shape)
    return fftn(x), shape


def product(fs: Sequence[SpectralScalar], pad: bool = True) -> SpectralScalar:
    """Exact Fourier coefficients of the pointwise product, kept to the grid's band.

    Parameters
    ----------
    fs:
        Two or three fields on a common grid.
    pad:
        If False the product must fit on the native grid, else
        :class:`AliasingError` is raised.
    """
    if not 1 <= len(fs) <= 3:
        raise ValueError("product takes two or three factors")
    grid = fs[0].grid
    c, _ = _product_coeffs(fs, grid.band_limit, pad)
    c = resize_coeffs(c, grid.shape)
    # drop roundoff beyond the summed band of the factors
    reach = np.array([f.band() for f in fs]).sum(axis=0)
    keep = grid.mask.copy()
    for m, r in zip(grid.indices, reach):
        keep &= np.abs(m) <= r
    return SpectralScalar(grid, c * keep)


def integrate_product(fs: Sequence[SpectralScalar]) -> float:
    """``int prod(fs) dx`` evaluated without aliasing."""
    grid = fs[0].grid
    c, _ = _product_coeffs(fs, (0,) * grid.dim)
    return grid.volume * float(c.flat[0].real)


def sobolev_seminorm(f: SpectralScalar, s: float) -> float:
    """Homogeneous ``H^s`` seminorm; ``s = 0`` is the L2 norm."""
    if s < 0:
        raise ValueError("s must be non-negative")
    w = symbol(f.grid, 2.0 * s) if s > 0 else np.ones(f.grid.shape)
    return math.sqrt(f.grid.volume * float(np.sum(w * np.abs(f.coeffs) ** 2)))


def lp_norm(f: SpectralScalar, p: float, m: int | Sequence[int] | None = None) -> float:
    """L^p norm by grid quadrature on a padded grid (approximate unless p = 2).

    The padded size defaults to twice the native grid per axis.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    shape = _pad_shape(f.grid, m) if m is not None else tuple(2 * v for v in f.grid.n)
    x = np.abs(to_physical(f, shape))
    if math.isinf(p):
        return float(x.max())
    return float((f.grid.volume * np.mean(x ** p)) ** (1.0 / p))


class RealPadder:
    """Fast transforms between band-limited coefficients and a padded real grid.

    Index maps are built once, so repeated products on the same grid avoid
    the general resize path.  The last axis uses real FFTs, and the other
    axes are transformed only over the columns that can be nonzero.
    """

    def __init__(self, grid: Grid, shape: Sequence[int]):
        self.grid = grid
        self.shape = tuple(int(s) for s in shape)
        band = grid.band_limit
        klast = band[-1]
        mesh = np.meshgrid(*[np.arange(-k, k + 1) for k in band], indexing="ij")
        # reduced layout: padded sizes on leading axes, columns 0..klast on the last
        self.red_shape = self.shape[:-1] + (klast + 1,)
        keep = mesh[-1] >= 0
        src = tuple((m % n)[keep] for m, n in zip(mesh, grid.n))
        dst = tuple((m % s)[keep] for m, s in zip(mesh[:-1], self.shape[:-1])) + (mesh[-1][keep],)
        self._src_half = np.ravel_multi_index(src, grid.shape)
        self._dst_half = np.ravel_multi_index(dst, self.red_shape)
        # full output: negative last index comes from conjugate symmetry
        flip = mesh[-1] < 0
        read = [np.where(flip, -m, m) for m in mesh]
        read_idx = tuple((r % s).ravel() for r, s in zip(read[:-1], self.shape[:-1])) + (read[-1].ravel(),)
        self._full_read = np.ravel_multi_index(read_idx, self.red_shape)
        self._full_dst = np.ravel_multi_index(tuple((m % n).ravel() for m, n in zip(mesh, grid.n)),
                                              grid.shape)
        self._full_conj = flip.ravel()
        self.dim = grid.dim
        self.size = int(np.prod(grid.shape))
        self.half_last = self.shape[-1] // 2 + 1

    def to_physical(self, c: np.ndarray) -> np.ndarray:
        lead = c.shape[: c.ndim - self.dim]
        flat = c.reshape(lead + (self.size,))
        red = np.zeros(lead + (int(np.prod(self.red_shape)),), dtype=complex)
        red[..., self._dst_half] = flat[..., self._src_half]
        red = red.reshape(lead + self.red_shape)
        if self.dim > 1:
            red = sfft.ifftn(red, axes=tuple(range(-self.dim, -1)), norm="forward", workers=_workers())
        half = np.zeros(lead + self.shape[:-1] + (self.half_last,), dtype=complex)
        half[..., : self.red_shape[-1]] = red
        return sfft.irfft(half, n=self.shape[-1], axis=-1, norm="forward", workers=_workers())

    def from_physical(self, x: np.ndarray) -> np.ndarray:
        lead = x.shape[: x.ndim - self.dim]
        C = sfft.rfft(x, axis=-1, norm="forward", workers=_workers())[..., : self.red_shape[-1]]
        if self.dim > 1:
            C = sfft.fftn(C, axes=tuple(range(-self.dim, -1)), norm="forward", workers=_workers())
        vals = C.reshape(lead + (-1,))[..., self._full_read]
        vals = np.where(self._full_conj, np.conj(vals), vals)
        out = np.zeros(lead + (self.size,), dtype=complex)
        out[..., self._full_dst] = vals
        return out.reshape(lead + self.grid.shape)
