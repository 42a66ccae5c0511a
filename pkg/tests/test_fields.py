import numpy as np
import pytest

import oracles
from conftest import divfree, generic
from hallmhd import Grid, SpectralScalar, VectorField, curl, current_density, leray_project, random_divfree
from hallmhd.fields import divergence, gradient, philox_normals, split_hv
from hallmhd.spectral import sobolev_seminorm


def vf(grid, f1, f2, f3):
    return VectorField.from_functions(grid, [f1, f2, f3])


def zero_fn(*x):
    return 0.0 * x[0]


def max_abs(c):
    return float(np.abs(c).max())


# ---------------------------------------------------------------- split and divergence

def test_split_hv(grid2):
    f = generic(2, 1)
    h, v = split_hv(f)
    assert np.all(h.coeffs[2] == 0) and np.all(v.coeffs[:2] == 0)
    np.testing.assert_array_equal((h + v).coeffs, f.coeffs)
    hh, vv = split_hv(h)
    assert np.all(vv.coeffs == 0)


def test_divergence_examples(grid2):
    f = vf(grid2, lambda x1, x2: np.sin(x2) + 0 * x1, lambda x1, x2: np.sin(x1) + 0 * x2,
           lambda x1, x2: np.cos(x1 + x2))
    assert max_abs(divergence(f).coeffs) < 1e-15
    g = vf(grid2, lambda x1, x2: np.sin(x1) + 0 * x2, zero_fn, zero_fn)
    cos = SpectralScalar.from_function(grid2, lambda x1, x2: np.cos(x1) + 0 * x2)
    np.testing.assert_allclose(divergence(g).coeffs, cos.coeffs, atol=1e-15)


# ---------------------------------------------------------------- curl

def test_curl_examples(grid2):
    b = vf(grid2, zero_fn, zero_fn, lambda x1, x2: np.sin(x1) + 0 * x2)
    j = current_density(b)
    assert j.kind == "current"
    expected = vf(grid2, zero_fn, lambda x1, x2: -np.cos(x1) + 0 * x2, zero_fn)
    np.testing.assert_allclose(j.coeffs, expected.coeffs, atol=1e-15)
    b = vf(grid2, lambda x1, x2: np.sin(x2) + 0 * x1, zero_fn, zero_fn)
    expected = vf(grid2, zero_fn, zero_fn, lambda x1, x2: -np.cos(x2) + 0 * x1)
    np.testing.assert_allclose(curl(b).coeffs, expected.coeffs, atol=1e-15)


@pytest.mark.parametrize("dim", [2, 3])
def test_div_curl_and_curl_grad_vanish(dim):
    f = generic(dim, 3)
    assert max_abs(divergence(curl(f)).coeffs) <= 1e-13 * f.hs(2)
    phi = f[0]
    assert max_abs(curl(gradient(phi)).coeffs) <= 1e-13 * sobolev_seminorm(phi, 2)


def test_curl_2d_matches_embedded_3d():
    g2 = Grid.square(2, 16)
    g3 = Grid.square(3, 16)
    f2 = generic(2, 4, n=16, band=5)
    c3 = np.zeros((3, 16, 16, 16), dtype=complex)
    c3[:, :, :, 0] = f2.coeffs
    f3 = VectorField(g3, c3)
    got = curl(f3).coeffs[:, :, :, 0]
    assert max_abs(got - curl(f2).coeffs) <= 1e-13 * max_abs(got)
    assert max_abs(curl(f3).coeffs[:, :, :, 1:]) == 0


# ---------------------------------------------------------------- Leray projection

@pytest.mark.parametrize("dim", [2, 3])
def test_leray_fixed_point_and_idempotent(dim):
    b = divfree(dim, 5)
    np.testing.assert_allclose(leray_project(b).coeffs, b.coeffs, atol=1e-13 * max_abs(b.coeffs))
    f = generic(dim, 6)
    p = leray_project(f)
    assert max_abs(leray_project(p).coeffs - p.coeffs) <= 1e-13 * max_abs(p.coeffs)
    assert sobolev_seminorm(divergence(p), 0) <= 1e-12 * p.hs(1)


def test_leray_removes_gradient(grid2):
    phi = SpectralScalar.from_function(grid2, lambda x1, x2: np.sin(x1 + x2))
    p = leray_project(gradient(phi))
    assert max_abs(p.coeffs[:2]) < 1e-15


def test_leray_2d_keeps_third_component(grid2):
    f = generic(2, 7)
    np.testing.assert_array_equal(leray_project(f).coeffs[2], f.coeffs[2])


@pytest.mark.parametrize("dim", [2, 3])
def test_leray_self_adjoint(dim):
    f, g = generic(dim, 8), generic(dim, 9)
    lhs, rhs = leray_project(f).dot(g), f.dot(leray_project(g))
    assert abs(lhs - rhs) <= 1e-12 * f.l2() * g.l2()


# ---------------------------------------------------------------- random fields

def test_philox_stream_matches_reference():
    np.testing.assert_allclose(philox_normals(7, 11), oracles.philox_normals(7, 11), rtol=1e-15)
    np.testing.assert_allclose(philox_normals(0, 4), oracles.philox_normals(0, 4), rtol=1e-15)


def test_philox_frozen_values():
    # first deviates of seed 5, fixed by the documented algorithm
    np.testing.assert_allclose(philox_normals(5, 4), [-1.36412492, 2.0472431, 0.43342403, 1.27941201],
                               rtol=1e-8)


@pytest.mark.parametrize("dim", [2, 3])
def test_random_divfree_contract(dim):
    n = 32 if dim == 2 else 16
    g = Grid.square(dim, n)
    K = n // 4
    a, b = random_divfree(g, 11, K), random_divfree(g, 11, K)
    np.testing.assert_array_equal(a.coeffs, b.coeffs)
    assert not np.array_equal(a.coeffs, random_divfree(g, 12, K).coeffs)
    assert sobolev_seminorm(divergence(a), 0) <= 1e-12 * a.hs(1)
    assert max(a.band()) <= K
    assert a.coeffs[(slice(None),) + (0,) * dim].tolist() == [0, 0, 0]
    x = a.physical()
    assert x.dtype == np.float64


def test_random_divfree_rejects_band(grid2):
    with pytest.raises(ValueError):
        random_divfree(grid2, 0, 20)


def test_random_spectrum_slope():
    g = Grid.square(2, 64)
    shells = []
    for s in range(40):
        b = random_divfree(g, s, 15, spectrum_slope=2.0)
        e = np.abs(b.coeffs[0]) ** 2 + np.abs(b.coeffs[1]) ** 2
        shells.append([e[(g.kabs > k - 0.5) & (g.kabs <= k + 0.5)].mean() for k in (2, 8)])
    ratio = np.mean([s[0] for s in shells]) / np.mean([s[1] for s in shells])
    # amplitude |k|^-2 means power |k|^-4: (8 / 2)^4 = 256
    assert 150 < ratio < 400


def test_vector_field_validation(grid2):
    with pytest.raises(ValueError):
        VectorField(grid2, np.zeros((2,) + grid2.shape))
    with pytest.raises(ValueError):
        VectorField(grid2, np.zeros((3,) + grid2.shape), kind="pressure")
