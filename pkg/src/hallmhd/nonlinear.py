"""Nonlinear terms: Hall term, advection, stretching, vorticity-equation pieces.

Products are formed on a zero-padded grid sized from the effective bands of
the factors, so every returned coefficient inside the grid band is exact.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from .fields import (
    VectorField,
    curl_coeffs,
    divergence,
    ik3,
    leray_coeffs,
    vec_to_physical,
)
from .spectral import (
    Grid,
    SpectralScalar,
    effective_band,
    fftn,
    fractional_laplacian,
    padded_size,
    resize_coeffs,
    sobolev_seminorm,
)

__all__ = [
    "hall_term",
    "hall_term_alt",
    "advect",
    "vorticity_cancellation_residuals",
    "omega3_rhs",
    "momentum_rhs",
    "check_divfree",
]

DIV_TOL = 1e-10


def check_divfree(f: VectorField, name: str = "field", tol: float = DIV_TOL) -> float:
    """Relative divergence; warns (never raises) above ``tol``."""
    gnorm = f.hs(1.0)
    if gnorm == 0.0:
        return 0.0
    rel = sobolev_seminorm(divergence(f), 0.0) / gnorm
    if rel > tol:
        warnings.warn(f"{name} is not divergence-free (relative divergence {rel:.2e})",
                      RuntimeWarning, stacklevel=3)
    return rel


class _Padded:
    """Physical samples of several coefficient stacks on one padded grid."""

    def __init__(self, grid: Grid, stacks: list[np.ndarray]):
        self.grid = grid
        bands = np.zeros(grid.dim, dtype=int)
        for c in stacks:
            bands = bands + np.array(effective_band(c, grid))
        self.shape = tuple(padded_size(int(b), int(q)) for b, q in zip(bands, grid.band_limit))
        self.axes = tuple(range(1, grid.dim + 1))

    def phys(self, c: np.ndarray) -> np.ndarray:
        return vec_to_physical(c, self.grid, self.shape)

    def back(self, x: np.ndarray) -> np.ndarray:
        axes = tuple(range(x.ndim - self.grid.dim, x.ndim))
        c = resize_coeffs(fftn(x, axes=axes), self.grid.shape, axes)
        return c * self.grid.mask


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def _grad_stack(c: np.ndarray, grid: Grid) -> np.ndarray:
    """``out[k, j] = d_k c_j`` for k = 1..3."""
    return np.stack([np.broadcast_to(d * c, c.shape) for d in ik3(grid)])


def _advect_coeffs(u: np.ndarray, f: np.ndarray, grid: Grid) -> np.ndarray:
    df = _grad_stack(f, grid)
    pad = _Padded(grid, [u, f])
    up = pad.phys(u)
    acc = np.zeros((3,) + pad.shape)
    for k in range(grid.dim):
        acc += up[k] * pad.phys(df[k])
    return pad.back(acc)


def hall_coeffs(b: np.ndarray, grid: Grid) -> np.ndarray:
    j = curl_coeffs(b, grid)
    pad = _Padded(grid, [j, b])
    jxb = pad.back(_cross(pad.phys(j), pad.phys(b)))
    return curl_coeffs(jxb, grid)


def hall_term(b: VectorField, eps: float = 1.0) -> VectorField:
    """``eps * curl(j x b)`` with ``j = curl b``."""
    check_divfree(b, "b")
    out = hall_coeffs(b.coeffs, b.grid)
    if eps != 1.0:
        out = eps * out
    return VectorField(b.grid, out, "generic", True)


def hall_term_alt(b: VectorField, eps: float = 1.0) -> VectorField:
    """``eps * curl((b . grad) b)``; equals :func:`hall_term` for solenoidal ``b``."""
    check_divfree(b, "b")
    out = curl_coeffs(_advect_coeffs(b.coeffs, b.coeffs, b.grid), b.grid)
    return VectorField(b.grid, eps * out, "generic", True)


def advect(u: VectorField, f: VectorField) -> VectorField:
    """``(u . grad) f`` componentwise."""
    if u.grid != f.grid:
        raise ValueError("fields live on different grids")
    return VectorField(f.grid, _advect_coeffs(u.coeffs, f.coeffs, f.grid))


def momentum_rhs(u: VectorField, b: VectorField) -> VectorField:
    """Projected ``-(u . grad) u + (b . grad) b`` (pressure eliminated)."""
    c = _advect_coeffs(b.coeffs, b.coeffs, b.grid) - _advect_coeffs(u.coeffs, u.coeffs, u.grid)
    return VectorField(u.grid, leray_coeffs(c, u.grid), "velocity", True)


def _require_2d(grid: Grid, what: str) -> None:
    if grid.dim != 2:
        raise ValueError(f"{what} is defined for x3-independent fields on 2-D grids only")


def _scalar_products_l2(pairs: list[tuple[float, np.ndarray, np.ndarray]], grid: Grid) -> tuple[float, float]:
    """L2 norm of ``sum sign * f * g`` and the largest single-term norm."""
    stacks = [np.stack([f, g]) for _, f, g in pairs]
    pad = _Padded(grid, [stacks[0][:1], stacks[0][1:]])
    total = np.zeros(grid.shape, dtype=complex)
    scale = 0.0
    for sign, f, g in pairs:
        term = pad.back(pad.phys(f[None]) * pad.phys(g[None]))[0]
        scale = max(scale, math.sqrt(grid.volume * float(np.sum(np.abs(term) ** 2))))
        total = total + sign * term
    return math.sqrt(grid.volume * float(np.sum(np.abs(total) ** 2))), scale


def vorticity_cancellation_residuals(u: VectorField, b: VectorField,
                                     with_scale: bool = False):
    """L2 norms of ``omega_1 d1 u3 + omega_2 d2 u3`` and ``j_1 d1 b3 + j_2 d2 b3``.

    The horizontal vorticity (current) components are ``(d2 f3, -d1 f3)``, so
    each sum is ``d2 f3 d1 f3 - d1 f3 d2 f3``; both terms are formed as
    separate exact products before being added.  With ``with_scale`` the
    largest single-term norm of each sum is returned as well.
    """
    _require_2d(u.grid, "the vorticity cancellation")
    out = []
    for f in (u, b):
        d1, d2, _ = ik3(f.grid)
        f3 = f.coeffs[2]
        res, scale = _scalar_products_l2([(1.0, d2 * f3, d1 * f3), (-1.0, d1 * f3, d2 * f3)], f.grid)
        out.append((res, scale) if with_scale else res)
    return tuple(out)


def omega3(u: VectorField) -> SpectralScalar:
    d1, d2, _ = ik3(u.grid)
    return SpectralScalar(u.grid, d1 * u.coeffs[1] - d2 * u.coeffs[0])


def _advect_scalar(u: VectorField, f: np.ndarray) -> np.ndarray:
    stack = np.stack([f, np.zeros_like(f), np.zeros_like(f)])
    return _advect_coeffs(u.coeffs, stack, u.grid)[0]


def omega3_rhs(u: VectorField, b: VectorField, alpha: float, eps: float = 1.0) -> SpectralScalar:
    """Right side of the third-vorticity equation.

    ``-(u . grad) w3 - Lambda^{2 alpha} w3 + eps [curl(j x b)]_3`` with
    ``w3 = d1 u2 - d2 u1``.
    """
    _require_2d(u.grid, "the third-vorticity equation")
    check_divfree(u, "u")
    w = omega3(u)
    adv = _advect_scalar(u, w.coeffs)
    diff = fractional_laplacian(w, 2.0 * alpha).coeffs
    hall = hall_coeffs(b.coeffs, b.grid)[2]
    return SpectralScalar(u.grid, -adv - diff + eps * hall)
