"""Three-component vector fields on 2-D (x3-independent) and 3-D grids."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .spectral import (
    Grid,
    SpectralScalar,
    effective_band,
    fftn,
    ifftn,
    resize_coeffs,
    _hermitian,
)

__all__ = [
    "VectorField",
    "split_hv",
    "divergence",
    "gradient",
    "curl",
    "current_density",
    "leray_project",
    "random_divfree",
    "random_field",
    "philox_normals",
]

Kind = Literal["velocity", "magnetic", "vorticity", "current", "generic"]
KINDS = ("velocity", "magnetic", "vorticity", "current", "generic")


def ik3(grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``i k_j`` multipliers for j = 1, 2, 3 (the third is zero on 2-D grids)."""
    ks = [1j * k for k in grid.wavenumbers]
    while len(ks) < 3:
        ks.append(np.zeros((1,) * grid.dim))
    return tuple(ks)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Three scalar components over a common grid, stored as a ``(3, *n)`` array.

    On a 2-D grid every component is read as independent of ``x3``.
    """

    grid: Grid
    coeffs: np.ndarray
    kind: Kind = "generic"
    divfree: bool = False

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (3,) + self.grid.shape:
            raise ValueError(f"expected shape {(3,) + self.grid.shape}, got {c.shape}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if c.flags.writeable:
            c = c.copy()
            c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_components(cls, comps: Sequence[SpectralScalar], kind: Kind = "generic") -> "VectorField":
        if len(comps) != 3:
            raise ValueError("need exactly three components")
        grid = comps[0].grid
        if any(c.grid != grid for c in comps):
            raise ValueError("components must share a grid")
        return cls(grid, np.stack([c.coeffs for c in comps]), kind)

    @classmethod
    def zero(cls, grid: Grid, kind: Kind = "generic") -> "VectorField":
        return cls(grid, np.zeros((3,) + grid.shape, dtype=complex), kind, True)

    @classmethod
    def from_functions(cls, grid: Grid, funcs, kind: Kind = "generic") -> "VectorField":
        """Sample three callables ``f(*coords)`` and keep the band-limited part."""
        x = np.stack([np.broadcast_to(f(*grid.coordinates()), grid.shape) for f in funcs])
        return cls.from_physical(grid, x, kind)

    @classmethod
    def from_physical(cls, grid: Grid, x: np.ndarray, kind: Kind = "generic") -> "VectorField":
        c = fftn(np.asarray(x, dtype=float), axes=tuple(range(1, grid.dim + 1)))
        if c.shape[1:] != grid.shape:
            c = resize_coeffs(c, grid.shape)
        return cls(grid, c * grid.mask, kind)

    @property
    def components(self) -> tuple[SpectralScalar, SpectralScalar, SpectralScalar]:
        return tuple(SpectralScalar(self.grid, self.coeffs[i]) for i in range(3))

    def __getitem__(self, i: int) -> SpectralScalar:
        return SpectralScalar(self.grid, self.coeffs[i])

    def physical(self, m: int | Sequence[int] | None = None) -> np.ndarray:
        """Real samples, shape ``(3, *m)``."""
        return vec_to_physical(self.coeffs, self.grid, m)

    def band(self) -> tuple[int, ...]:
        return effective_band(self.coeffs, self.grid)

    def with_kind(self, kind: Kind) -> "VectorField":
        return VectorField(self.grid, self.coeffs, kind, self.divfree)

    def _new(self, c: np.ndarray) -> "VectorField":
        return VectorField(self.grid, c, self.kind)

    def __add__(self, other: "VectorField") -> "VectorField":
        return self._new(self.coeffs + other.coeffs)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self._new(self.coeffs - other.coeffs)

    def __neg__(self) -> "VectorField":
        return VectorField(self.grid, -self.coeffs, self.kind, self.divfree)

    def __mul__(self, a: float) -> "VectorField":
        return VectorField(self.grid, self.coeffs * float(a), self.kind, self.divfree)

    __rmul__ = __mul__

    def l2(self) -> float:
        return math.sqrt(self.grid.volume * float(np.sum(np.abs(self.coeffs) ** 2)))

    def hs(self, s: float) -> float:
        """Homogeneous ``H^s`` seminorm, summed over components."""
        w = self.grid.k2 ** s if s > 0 else np.ones(self.grid.shape)
        return math.sqrt(self.grid.volume * float(np.sum(w * np.abs(self.coeffs) ** 2)))

    def dot(self, other: "VectorField") -> float:
        """``int f . g dx`` (Parseval)."""
        return self.grid.volume * float(np.vdot(self.coeffs, other.coeffs).real)

    def __repr__(self) -> str:
        return f"VectorField(kind={self.kind!r}, grid={self.grid.n}, band={self.band()})"


def vec_to_physical(c: np.ndarray, grid: Grid, m: int | Sequence[int] | None = None) -> np.ndarray:
    axes = tuple(range(c.ndim - grid.dim, c.ndim))
    if m is not None:
        shape = tuple(int(v) for v in np.broadcast_to(m, (grid.dim,)))
        if shape != grid.shape:
            c = resize_coeffs(c, shape, axes)
    return ifftn(c, axes=axes).real


def split_hv(f: VectorField) -> tuple[VectorField, VectorField]:
    """Horizontal ``(f1, f2, 0)`` and vertical ``(0, 0, f3)`` parts."""
    h = f.coeffs.copy()
    h[2] = 0
    v = np.zeros_like(f.coeffs)
    v[2] = f.coeffs[2]
    return VectorField(f.grid, h, f.kind), VectorField(f.grid, v, f.kind)


def divergence(f: VectorField) -> SpectralScalar:
    d1, d2, d3 = ik3(f.grid)
    c = f.coeffs
    return SpectralScalar(f.grid, d1 * c[0] + d2 * c[1] + d3 * c[2])


def gradient(f: SpectralScalar, kind: Kind = "generic") -> VectorField:
    d = ik3(f.grid)
    return VectorField(f.grid, np.stack([np.broadcast_to(dk * f.coeffs, f.grid.shape) for dk in d]), kind)


def curl_coeffs(c: np.ndarray, grid: Grid) -> np.ndarray:
    d1, d2, d3 = ik3(grid)
    out = np.empty_like(c)
    out[0] = d2 * c[2] - d3 * c[1]
    out[1] = d3 * c[0] - d1 * c[2]
    out[2] = d1 * c[1] - d2 * c[0]
    return out


def curl(f: VectorField, kind: Kind = "generic") -> VectorField:
    """``curl f``; on 2-D grids the x3-derivatives vanish."""
    return VectorField(f.grid, curl_coeffs(f.coeffs, f.grid), kind, True)


def current_density(b: VectorField) -> VectorField:
    """``j = curl b``."""
    return curl(b, "current")


def leray_coeffs(c: np.ndarray, grid: Grid) -> np.ndarray:
    ks = grid.wavenumbers
    k2 = np.zeros(grid.shape)
    for k in ks:
        k2 = k2 + k * k
    inv = np.zeros(grid.shape)
    nz = k2 > 0
    inv[nz] = 1.0 / k2[nz]
    proj = np.zeros(grid.shape, dtype=complex)
    for i, k in enumerate(ks):
        proj = proj + k * c[i]
    proj = proj * inv
    out = c.copy()
    for i, k in enumerate(ks):
        out[i] = c[i] - k * proj
    return out


def leray_project(f: VectorField) -> VectorField:
    """Remove the gradient part.  On 2-D grids only ``(f1, f2)`` are touched."""
    return VectorField(f.grid, leray_coeffs(f.coeffs, f.grid), f.kind, True)


_COUNTER_BEFORE_ZERO = [2 ** 64 - 1] * 4


def philox_normals(seed: int, count: int) -> np.ndarray:
    """Standard normal deviates from a Philox4x64-10 stream.

    Key ``(seed, 0)``, counter starting at zero.  Each 64-bit output word
    ``w`` becomes a uniform ``(w >> 11) * 2**-53``; consecutive pairs
    ``(u1, u2)`` give ``sqrt(-2 ln(1 - u1)) * (cos, sin)(2 pi u2)``.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    # numpy increments the counter before each block; start one below zero
    bitgen = np.random.Philox(key=int(seed), counter=_COUNTER_BEFORE_ZERO)
    npair = (count + 1) // 2
    raw = bitgen.random_raw(2 * npair)
    u = (raw >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log1p(-u1))
    z = np.empty(2 * npair)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:count]


def _random_coeffs(grid: Grid, seed: int, band: int, slope: float, ncomp: int) -> np.ndarray:
    """Hermitian complex Gaussian coefficients with amplitude ``|k|^-slope`` on ``1 <= |k| <= band``."""
    size = int(np.prod(grid.shape))
    z = philox_normals(seed, 2 * ncomp * size).reshape(ncomp, 2, *grid.shape)
    c = (z[:, 0] + 1j * z[:, 1]) / math.sqrt(2.0)
    kabs = grid.kabs
    shell = (kabs >= 1.0 - 1e-12) & (kabs <= band + 1e-12)
    box = np.ones(grid.shape, dtype=bool)
    for m in grid.indices:
        box = box & (np.abs(m) <= band)
    amp = np.zeros(grid.shape)
    sel = shell & box & grid.mask
    amp[sel] = kabs[sel] ** (-slope)
    return _hermitian(c * amp, grid.dim)


def random_field(grid: Grid, seed: int, band: int | None = None, spectrum_slope: float = 2.0,
                 kind: Kind = "generic") -> VectorField:
    """Random band-limited field without any divergence constraint."""
    band = min(grid.band_limit) if band is None else band
    _check_band(grid, band)
    return VectorField(grid, _random_coeffs(grid, seed, band, spectrum_slope, 3), kind)


def _check_band(grid: Grid, band: int) -> None:
    if band < 1 or band > min(grid.band_limit):
        raise ValueError(f"band {band} must lie in [1, {min(grid.band_limit)}]")


def random_divfree(grid: Grid, seed: int, band: int | None = None, spectrum_slope: float = 2.0,
                   kind: Kind = "magnetic") -> VectorField:
    """Reproducible random divergence-free field with zero mean.

    On 2-D grids ``(f1, f2) = (d2 psi, -d1 psi)`` for a random stream function
    ``psi`` and ``f3`` is independent; on 3-D grids three independent
    components are projected onto divergence-free fields.  Coefficients of the
    horizontal part scale like ``|k|^-spectrum_slope`` in both cases.
    """
    band = min(grid.band_limit) if band is None else band
    _check_band(grid, band)
    if grid.dim == 2:
        raw = _random_coeffs(grid, seed, band, spectrum_slope, 2)
        d1, d2, _ = ik3(grid)
        inv = np.zeros(grid.shape)
        nz = grid.kabs > 0
        inv[nz] = 1.0 / grid.kabs[nz]
        psi = raw[0] * inv
        c = np.stack([d2 * psi, -d1 * psi, raw[1]])
    else:
        c = leray_coeffs(_random_coeffs(grid, seed, band, spectrum_slope, 3), grid)
    c[(slice(None),) + (0,) * grid.dim] = 0.0
    return VectorField(grid, c, kind, True)
