"""Dual volumes with general kernels and the two chord-integral bounds."""

import math

import numpy as np
import pytest

from covbody.errors import InputError, NumericError
from covbody.genvol import (KernelG, affine_ray_fn, beta_constant,
                            capped_ray_fn, chord_lower_check,
                            chord_upper_check, covariogram_ray_fn,
                            dual_volume, kernel_from_spec, power_density_kernel,
                            power_kernel, profile_ray_fn)
from covbody.measure import (GaussianDensity, LinearPowerDensity,
                             WeightedMeasure, power_concavity)
from covbody.oracle import sphere_quadrature
from covbody.polytope import Polytope, StarBodyFn, star_volume
from covbody.projection import ProjectionBody

TRIANGLE = Polytope.named("simplex", 2)
SQUARE = Polytope.named("cube", 2)
LEB2 = WeightedMeasure.lebesgue(2)
DISK = StarBodyFn.ball(2)


def ident(t):
    return np.asarray(t, dtype=float)


class TestDualVolume:
    def test_disk_volume_kernel(self):
        quad = sphere_quadrature(2, count=512)
        G = power_kernel(2, 1.0, scale=2.0)
        assert dual_volume(G, DISK, quad) == pytest.approx(math.pi, rel=1e-9)

    def test_disk_flat_kernel(self):
        quad = sphere_quadrature(2, count=512)
        G = power_kernel(2, 0.0)
        assert dual_volume(G, DISK, quad) == pytest.approx(math.pi, rel=1e-9)

    def test_polytope_matches_star_volume(self):
        quad = sphere_quadrature(2, count=4096)
        G = power_kernel(2, 1.0, scale=2.0)
        L = StarBodyFn.of_polytope(TRIANGLE)
        got = dual_volume(G, L, quad)
        assert got == pytest.approx(star_volume(L, quad), rel=1e-12)
        assert got == pytest.approx(TRIANGLE.volume, rel=1e-3)

    def test_singular_kernel_graded(self):
        # alpha = -1/2 integrates to 2 sqrt(rho) per ray: (1/2) * 2pi * 2
        quad = sphere_quadrature(2, count=64)
        G = power_kernel(2, -0.5)
        got = dual_volume(G, DISK, quad, inner=128)
        assert got == pytest.approx(2.0 * math.pi, rel=1e-7)

    def test_nonconvergent_kernel_raises(self):
        quad = sphere_quadrature(2, count=16)
        G = power_kernel(2, -0.999)
        with pytest.raises(NumericError):
            dual_volume(G, DISK, quad)

    def test_dimension_mismatch(self):
        quad = sphere_quadrature(3, count=16)
        with pytest.raises(InputError):
            dual_volume(power_kernel(2, 1.0), DISK, quad)


class TestKernels:
    def test_spec_power_defaults(self):
        G = kernel_from_spec({"type": "power"}, 2)
        assert G.alpha == 1.0 and G.side == "both"
        G.validate()

    def test_spec_power_density_sides(self):
        lower = kernel_from_spec(
            {"type": "power-density", "exponent": 1.0,
             "density": {"type": "gaussian", "sigma": 1.0}}, 2)
        assert lower.side == "lower"
        lower.validate()
        # b = 0 keeps the linear factor radially nondecreasing
        upper = kernel_from_spec(
            {"type": "power-density", "exponent": 1.0,
             "density": {"type": "linear-power", "a": [1.0, 0.0]}}, 2)
        assert upper.side == "upper"

    def test_spec_rejects_unknown(self):
        with pytest.raises(InputError):
            kernel_from_spec({"type": "exp"}, 2)
        with pytest.raises(InputError):
            kernel_from_spec({}, 2)
        # a stray key must error, not silently fall back to the default
        with pytest.raises(InputError, match="alpha"):
            kernel_from_spec({"type": "power", "alpha": -0.5}, 2)
        with pytest.raises(InputError):
            power_kernel(2, -1.0)
        with pytest.raises(InputError):
            KernelG(2, 1.0, "sideways", lambda r, t: r)

    def test_validate_catches_wrong_side(self):
        gauss = GaussianDensity(2, 1.0)
        bad = KernelG(2, 1.0, "upper",
                      lambda r, theta: r * gauss(r[:, None] * theta[None, :]),
                      label="misdeclared")
        with pytest.raises(InputError, match="fails G"):
            bad.validate()

    def test_validate_catches_negative_kernel(self):
        bad = KernelG(2, 1.0, "both", lambda r, theta: r - 0.5,
                      label="signed")
        with pytest.raises(InputError, match="not positive"):
            bad.validate()


class TestBetaConstant:
    def test_identity_alpha_one(self):
        assert beta_constant(ident, 1.0, 1.0) == pytest.approx(
            1.0 / 3.0, rel=1e-12)

    def test_square_alpha_two(self):
        # 3 int tau^2 (1-tau)^2 dtau = 1/10
        assert beta_constant(lambda t: np.asarray(t) ** 2, 1.0, 2.0) == \
            pytest.approx(0.1, rel=1e-12)

    def test_scales_with_f0(self):
        a = beta_constant(ident, 2.0, 1.0)
        assert a == pytest.approx(2.0 / 3.0, rel=1e-12)

    def test_singular_alpha(self):
        # (1/2) int tau (1-tau)^(-1/2) dtau = B(2, 1/2)/2 = 2/3
        got = beta_constant(ident, 1.0, -0.5)
        assert got == pytest.approx(2.0 / 3.0, rel=1e-5)


class TestChordBounds:
    def test_affine_equality_both_branches(self):
        quad = sphere_quadrature(2, count=64)
        f = affine_ray_fn(DISK)
        G = power_kernel(2, 1.0)
        lo = chord_lower_check(f, ident, G, quad)
        up = chord_upper_check(f, ident, G, quad)
        assert lo.passed and up.passed
        assert lo.lhs == pytest.approx(math.pi / 3.0, abs=1e-9)
        assert abs(lo.ratio - 1.0) < 1e-6
        assert abs(up.ratio - 1.0) < 1e-6
        assert "Omega empty" in up.notes
        for row in up.rows:
            assert row["rho_Ltilde"] == pytest.approx(row["rho_L"], rel=1e-12)

    def test_parabola_strictly_above(self):
        quad = sphere_quadrature(2, count=64)
        f = profile_ray_fn(DISK, lambda t: 1.0 - t * t, 0.0, label="parabola")
        rep = chord_lower_check(f, ident, power_kernel(2, 1.0), quad)
        assert rep.passed
        assert rep.ratio == pytest.approx(1.5, rel=1e-9)
        assert rep.margin > 0.01

    def test_capped_flat_directions(self):
        quad = sphere_quadrature(2, count=128)
        f = capped_ray_fn(DISK, 0.5)
        rep = chord_upper_check(f, ident, power_kernel(2, 1.0), quad)
        assert rep.passed
        flats = sum(r["in_omega"] for r in rep.rows)
        # the cap <theta, e1> >= 1/2 covers a third of the circle
        assert flats == 42
        assert "42 of 128" in rep.notes

    def test_everywhere_flat_collapses_to_identity(self):
        quad = sphere_quadrature(2, count=128)
        f = profile_ray_fn(DISK, lambda t: np.ones_like(t), 0.0, label="flat")
        rep = chord_upper_check(f, ident, power_kernel(2, 1.0), quad)
        assert rep.passed
        assert rep.ratio == pytest.approx(1.0, abs=1e-12)

    def test_side_requirements(self):
        quad = sphere_quadrature(2, count=16)
        f = affine_ray_fn(DISK)
        lower_only = power_density_kernel(2, 1.0, GaussianDensity(2, 1.0))
        with pytest.raises(InputError):
            chord_upper_check(f, ident, lower_only, quad)
        upper_only = KernelG(2, 1.0, "upper",
                             lambda r, theta: r * (1.0 + r * r),
                             label="increasing-factor")
        upper_only.validate()
        with pytest.raises(InputError):
            chord_lower_check(f, ident, upper_only, quad)

    def test_max_away_from_zero_rejected(self):
        quad = sphere_quadrature(2, count=16)
        f = profile_ray_fn(DISK, lambda t: t * (1.0 - t), 1.0, label="tent")
        with pytest.raises(InputError, match="maximum at r = 0"):
            chord_upper_check(f, ident, power_kernel(2, 1.0), quad)

    def test_concavity_check_flags_convex_profile(self):
        f = profile_ray_fn(DISK, lambda t: (1.0 - t) ** 4, -4.0, label="quartic")
        with pytest.raises(InputError, match="midpoint concavity"):
            f.concavity_check()


class TestCovariogramFixture:
    # f = F(g) for F = t^(1/2), h = F^{-1} = t^2, G = r^(d-1): the chord
    # machinery then reproduces the volume-ratio bound for the measure
    H = staticmethod(lambda t: np.asarray(t, dtype=float) ** 2)

    def test_simplex_equality_both_branches(self):
        quad = sphere_quadrature(2, count=64)
        f = covariogram_ray_fn(TRIANGLE, LEB2, 1, power_concavity(0.5))
        G = power_kernel(2, 1.0)
        lo = chord_lower_check(f, self.H, G, quad)
        up = chord_upper_check(f, self.H, G, quad)
        assert lo.passed and up.passed
        assert abs(lo.ratio - 1.0) < 1e-6
        assert abs(up.ratio - 1.0) < 1e-6

    def test_square_strict_both_branches(self):
        quad = sphere_quadrature(2, count=64)
        f = covariogram_ray_fn(SQUARE, LEB2, 1, power_concavity(0.5))
        G = power_kernel(2, 1.0)
        lo = chord_lower_check(f, self.H, G, quad)
        up = chord_upper_check(f, self.H, G, quad)
        assert lo.passed and up.passed
        assert lo.ratio > 1.4
        assert up.ratio < 0.8

    def test_tangent_body_is_scaled_polar_projection(self):
        quad = sphere_quadrature(2, count=32)
        F = power_concavity(0.5)
        for K in (TRIANGLE, SQUARE):
            f = covariogram_ray_fn(K, LEB2, 1, F)
            rep = chord_upper_check(f, self.H, power_kernel(2, 1.0), quad)
            body = ProjectionBody(K, LEB2, 1)
            muK = K.volume
            scale = F.F(muK) / F.F_prime(muK)
            for row, theta in zip(rep.rows, quad.nodes):
                want = scale / body.support(theta[None, :])
                assert row["rho_Ltilde"] == pytest.approx(want, rel=1e-9)

    def test_beta_matches_concavity_mean(self):
        # beta_b = (alpha+1) int h(F(muK) tau)(1-tau)^alpha dtau equals the
        # 1-D mean muK / C(1/s + d, d) of the volume-ratio bound
        for K in (TRIANGLE, SQUARE):
            muK = K.volume
            got = beta_constant(self.H, math.sqrt(muK), 1.0)
            assert got == pytest.approx(muK / 6.0, rel=1e-12)

    def test_non_concave_f_rejected(self):
        f = covariogram_ray_fn(TRIANGLE, LEB2, 1, power_concavity(2.0))
        with pytest.raises(InputError, match="midpoint concavity"):
            f.concavity_check()
