import cmath
import math

import numpy as np
import pytest

from polygevrey import (
    DomainError,
    LaplaceSpec,
    MultiIndexSeries,
    TailError,
    brg_function,
    brg_type,
    truncated_laplace,
    truncated_laplace_nd,
)
from polygevrey.transforms import adaptive_panel_quad, truncated_laplace_with_error

PI = math.pi


def laplace_poly_closed(k: int, z0: complex, z: complex) -> complex:
    """(1/z) * integral_0^z0 t^k e^{-t/z} dt via the antiderivative."""
    if k == 0:
        return 1 - cmath.exp(-z0 / z)
    if k == 1:
        return z - cmath.exp(-z0 / z) * (z0 + z)
    if k == 2:
        return 2 * z * z - cmath.exp(-z0 / z) * (z0 * z0 + 2 * z * z0 + 2 * z * z)
    raise ValueError(k)


def adaptive_simpson(f, a, b, tol, depth=40):
    """Independent oracle quadrature (different node scheme entirely)."""

    def simp(lo, hi):
        mid = 0.5 * (lo + hi)
        return (hi - lo) / 6 * (f(lo) + 4 * f(mid) + f(hi)), mid

    def rec(lo, hi, whole, d):
        s1, m = simp(lo, hi)
        left, _ = simp(lo, m)
        right, _ = simp(m, hi)
        if abs(left + right - whole) < tol * (hi - lo) or d <= 0:
            return left + right
        return rec(lo, m, left, d - 1) + rec(m, hi, right, d - 1)

    whole, _ = simp(a, b)
    return rec(a, b, whole, depth)


class TestTruncatedLaplace:
    @pytest.mark.parametrize("z0", [1.0, 0.5, 0.8 * cmath.exp(0.4j)])
    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_polynomial_closed_forms(self, k, z0):
        spec = LaplaceSpec((z0,), tol=1e-12)
        theta0 = cmath.phase(complex(z0))
        for r in (0.05, 0.2, 1.0, 3.0):
            for dth in (-1.2, 0.0, 0.9):
                z = r * cmath.exp(1j * (theta0 + dth))
                got = truncated_laplace(lambda t: t**k, spec, z)
                want = laplace_poly_closed(k, complex(z0), z)
                assert abs(got - want) <= 1e-10 * max(1.0, abs(want))

    def test_exponential_integrand(self):
        # phi = e^{-a t}: (1 - e^{-(a + 1/z) z0}) / (a z + 1)
        a, z0, z = 2.0, 1.0, 0.4
        spec = LaplaceSpec((z0,), tol=1e-12)
        got = truncated_laplace(lambda t: np.exp(-a * t), spec, z)
        want = (1 - math.exp(-(a + 1 / z) * z0)) / (a * z + 1)
        assert got == pytest.approx(want, rel=1e-11)

    def test_quoted_values(self):
        spec = LaplaceSpec((1.0,), tol=1e-12)
        assert truncated_laplace(lambda t: np.ones_like(t), spec, 0.1) == pytest.approx(
            1 - math.exp(-10), rel=1e-12
        )
        assert truncated_laplace(lambda t: t, spec, 0.5) == pytest.approx(
            0.5 - 1.5 * math.exp(-2), rel=1e-12
        )
        assert truncated_laplace(lambda t: np.zeros_like(t), spec, 0.3) == 0

    def test_batch_matches_scalar(self):
        spec = LaplaceSpec((0.7,), tol=1e-12)
        zs = np.array([0.1, 0.3 + 0.2j, 2.0 - 0.5j])
        batch, errs = truncated_laplace_with_error(lambda t: 1 / (1 + t), spec, zs)
        for z, b in zip(zs, batch):
            assert truncated_laplace(lambda t: 1 / (1 + t), spec, z) == pytest.approx(
                complex(b), rel=1e-11
            )
        assert np.all(errs >= 0)

    def test_half_plane_enforced(self):
        spec = LaplaceSpec((1.0,), tol=1e-10)
        with pytest.raises(DomainError):
            truncated_laplace(lambda t: t, spec, -0.3)
        with pytest.raises(DomainError):
            truncated_laplace(lambda t: t, spec, 0.4 * cmath.exp(1.6j))

    def test_scheme_independence(self):
        # same integral through an unrelated quadrature scheme
        z0, z = 0.5, 0.17
        spec = LaplaceSpec((z0,), tol=1e-12)
        got = truncated_laplace(lambda t: 1 / (1 + t), spec, z)
        want = adaptive_simpson(
            lambda s: z0 / z * math.exp(-s * z0 / z) / (1 + s * z0), 0.0, 1.0, 1e-13
        )
        assert got == pytest.approx(want, rel=1e-10)


class TestTruncatedLaplaceND:
    def test_separable_constant(self):
        spec = LaplaceSpec((0.5, 0.5), tol=1e-11)
        z = (0.2, 0.3)
        got = truncated_laplace_nd(lambda p: np.ones(len(p)), spec, z)
        want = (1 - math.exp(-0.5 / 0.2)) * (1 - math.exp(-0.5 / 0.3))
        assert got == pytest.approx(want, rel=1e-9)

    def test_separable_linear_factor(self):
        spec = LaplaceSpec((1.0, 0.6), tol=1e-11)
        z = (0.5, 0.4)
        got = truncated_laplace_nd(lambda p: p[:, 0], spec, z)
        want = laplace_poly_closed(1, 1.0, 0.5) * laplace_poly_closed(0, 0.6, 0.4)
        assert got == pytest.approx(want, rel=1e-9)

    def test_zero(self):
        spec = LaplaceSpec((1.0, 1.0), tol=1e-10)
        assert truncated_laplace_nd(lambda p: np.zeros(len(p)), spec, (0.3, 0.3)) == 0

    def test_dimension_check(self):
        spec = LaplaceSpec((1.0, 1.0), tol=1e-10)
        with pytest.raises(DomainError):
            truncated_laplace_nd(lambda p: np.ones(len(p)), spec, (0.3,))


class TestBrgType:
    def test_aligned(self):
        assert brg_type((0.5,), (0.0,)) == pytest.approx((0.5,))

    def test_sixty_degrees(self):
        assert brg_type((2.0,), (PI / 3,))[0] == pytest.approx(1.0)

    def test_near_edge_small(self):
        val = brg_type((1.0,), (PI / 2 - 1e-6,))[0]
        assert 0 < val < 2e-6

    def test_outside_half_plane(self):
        with pytest.raises(DomainError):
            brg_type((1.0,), (PI / 2,))

    def test_componentwise(self):
        z0 = (0.5, 1.0 * cmath.exp(0.3j))
        got = brg_type(z0, (0.2, 0.5))
        assert got[0] == pytest.approx(0.5 * math.cos(0.2))
        assert got[1] == pytest.approx(1.0 * math.cos(0.5 - 0.3))


def euler_series(n_max=40):
    return MultiIndexSeries(
        1, {(n,): (-1.0) ** n * math.factorial(n) for n in range(n_max + 1)}, (n_max,)
    )


class TestBrgFunction:
    def test_euler_vs_direct_quadrature(self):
        spec = LaplaceSpec((0.5,), tol=1e-12)
        func = brg_function(euler_series(), spec)
        z = 0.2
        got = func((z,))
        want = adaptive_simpson(
            lambda s: 0.5 / z * math.exp(-s * 0.5 / z) / (1 + s * 0.5), 0.0, 1.0, 1e-14
        )
        assert got == pytest.approx(want, rel=1e-10)

    def test_constant_series_closed_form(self):
        spec = LaplaceSpec((0.5,), tol=1e-12)
        func = brg_function(MultiIndexSeries(1, {(0,): 1.0}, (0,)), spec)
        for z in (0.1, 0.4 * cmath.exp(0.7j)):
            assert func((z,)) == pytest.approx(1 - cmath.exp(-0.5 / z), rel=1e-10)

    def test_zero_series(self):
        spec = LaplaceSpec((0.5,), tol=1e-10)
        func = brg_function(MultiIndexSeries(1, {}, (5,)), spec)
        assert func((0.2,)) == 0

    def test_two_axes_product(self):
        spec = LaplaceSpec((0.4, 0.4), tol=1e-10)
        func = brg_function(MultiIndexSeries(2, {(0, 0): 1.0}, (0, 0)), spec)
        z = (0.15, 0.25)
        want = (1 - math.exp(-0.4 / 0.15)) * (1 - math.exp(-0.4 / 0.25))
        assert func(z) == pytest.approx(want, rel=1e-8)

    def test_outside_borel_disc(self):
        with pytest.raises(DomainError):
            brg_function(euler_series(), LaplaceSpec((1.1,), tol=1e-10))

    def test_tail_guard(self):
        with pytest.raises(TailError):
            brg_function(euler_series(), LaplaceSpec((0.95,), tol=1e-10))

    def test_remainder_decay_bound(self):
        # |F - App_N| <= C_hat N! (|z|/R(theta))^N with a single fitted C_hat
        from polygevrey import family_from_series, remainder_constants

        spec = LaplaceSpec((0.5,), tol=1e-12)
        func = brg_function(euler_series(), spec)
        fam = family_from_series(euler_series(), (0.5,))
        theta = 0.3
        radius_grid = [0.4 * 0.8**k for k in range(16)]
        cons = remainder_constants(
            func, fam, (theta,), [radius_grid], [(n,) for n in range(15)], noise_floor=1e-9
        )
        r_theta = brg_type((0.5,), (theta,))[0]
        normalized = [
            math.log(c) - math.lgamma(n[0] + 1) + n[0] * math.log(r_theta)
            for n, c in cons.items()
        ]
        c_hat = max(normalized)
        # the law holds with one constant: no normalized value wildly exceeds the fit,
        # and the sequence does not drift upward past the fitted envelope
        assert c_hat < 50
        tail = [v for n, v in zip(sorted(cons), normalized) if n[0] >= 4]
        assert max(tail) - min(tail) < 4.0


class TestSpecJson:
    def test_roundtrip(self):
        spec = LaplaceSpec((0.5, 1 + 1j), tol=1e-9, max_depth=25)
        again = LaplaceSpec.from_json(spec.to_json())
        assert again == spec

    def test_validation(self):
        with pytest.raises(DomainError):
            LaplaceSpec((0.0,))
        with pytest.raises(DomainError):
            LaplaceSpec((1.0,), tol=-1)
        with pytest.raises(DomainError):
            LaplaceSpec((1.0,), scheme="midpoint")


class TestAdaptivePanels:
    def test_smooth_integral(self):
        val, err = adaptive_panel_quad(lambda s: np.exp(-3 * s), 0.0, 1.0, 1e-12, 30)
        assert complex(val) == pytest.approx((1 - math.exp(-3)) / 3, rel=1e-12)

    def test_batch_columns(self):
        rates = np.array([1.0, 10.0, 120.0])
        val, err = adaptive_panel_quad(
            lambda s: np.exp(-np.multiply.outer(s, rates)), 0.0, 1.0, 1e-12, 30
        )
        want = (1 - np.exp(-rates)) / rates
        assert np.allclose(val, want, rtol=1e-11)
