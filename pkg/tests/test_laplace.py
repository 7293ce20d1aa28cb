"""Forward-transform oracle, transform quotients, and Talbot inversion."""

import numpy as np
import pytest

from parexc.errors import DomainError, NonConvergenceError
from parexc import specialfn as sf
from parexc.convolve import layer_kernel_grid, layer_kernel_nfold
from parexc.laplace import (
    TransformSpec, assemble_transform, contraction_factor, forward_lt,
    growth_exponent, series_resolution_terms, talbot_invert, transform_numerator,
)


class TestForwardLT:
    def test_passage_pair(self):
        got = forward_lt(lambda u: sf.heat_kernel("passage", 1.0, u), 1.0)
        assert abs(got - np.exp(-1.0)) <= 1e-9

    def test_constant_to_one_over_z(self):
        z = 2.0 + 1.0j
        got = forward_lt(lambda u: np.ones_like(np.asarray(u)), z)
        assert abs(got - 1.0 / z) <= 1e-9 * abs(1.0 / z)

    def test_layer_kernel_to_its_lt(self):
        got = forward_lt(sf.layer_kernel, 3.0)
        want = sf.layer_kernel_lt(3.0)
        assert abs(got - want) <= 1e-8 * abs(want)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("z", [1.0, 2.0, 5.0, 10.0])
    def test_heat_pair_table(self, alpha, z):
        rz = np.sqrt(z)
        pairs = [
            ("passage", np.exp(-alpha * rz)),
            ("gauss", np.exp(-alpha * rz) / rz),
            ("erfc", np.exp(-alpha * rz) / z),
        ]
        for kind, want in pairs:
            got = forward_lt(lambda u: sf.heat_kernel(kind, alpha, u), z)
            assert abs(got - want) <= 1e-7 * abs(want)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_depth_kernel_pair(self, alpha):
        z = 2.0
        got = forward_lt(lambda u: sf.depth_kernel(alpha, u), z)
        _, want = sf.depth_kernel_lt(alpha, z)
        assert abs(got - want) <= 1e-6 * abs(want)

    def test_gridfn_input(self):
        g = layer_kernel_grid(45.0, 1e-3)
        got = forward_lt(g, 3.0)
        want = sf.layer_kernel_lt(3.0)
        assert abs(got - want) <= 1e-6 * abs(want)

    def test_nfold_grid_transform(self):
        g = layer_kernel_nfold(3, 25.0, 1e-3)
        g.decaying = True
        got = forward_lt(g, 2.0)
        want = sf.layer_kernel_lt(2.0) ** 3
        assert abs(got - want) <= 1e-5 * abs(want)

    def test_requires_right_half_plane(self):
        with pytest.raises(DomainError):
            forward_lt(sf.layer_kernel, -1.0 + 1.0j)


class TestTransformSpec:
    def test_case1_needs_nonpositive_level(self):
        with pytest.raises(DomainError):
            TransformSpec("case1", b=0.5, y=0.0)

    def test_case2_needs_delta(self):
        with pytest.raises(DomainError):
            TransformSpec("case2_k1", b=1.0, y=0.0)
        with pytest.raises(DomainError):
            TransformSpec("case2_k2", b=1.0, delta=1.5, D=1.0, y=0.0)

    def test_unknown_target(self):
        with pytest.raises(DomainError):
            TransformSpec("nope")


class TestAssembleTransform:
    def test_achievement_time_identity(self):
        # transform of the achievement time times the denominator is 1
        spec = TransformSpec("H0", D=1.0)
        z = 2.0
        got = assemble_transform(spec, z) * sf.tilt_moment(np.sqrt(2.0 * z))
        assert abs(got - 1.0) <= 1e-12

    def test_case1_far_state_vanishes(self):
        spec = TransformSpec("case1", b=0.0, D=1.0, y=-50.0)
        assert abs(assemble_transform(spec, 1.0)) < 1e-12

    def test_case2_k2_vanishes_with_delta(self):
        spec = TransformSpec("case2_k2", b=1.0, D=1.0, delta=1e-6, y=0.0)
        assert abs(assemble_transform(spec, 1.0)) < 1e-12

    def test_case2_k1_consistency_with_quadrature(self):
        # numerator equals sqrt(D)/sqrt(zeta) * int phi e^{-|x-y| sqrt(zeta)/sqrt(D)}
        b, D, delta, y, z = 1.0, 1.0, 0.3, 0.2, 2.0
        spec = TransformSpec("case2_k1", b=b, D=D, delta=delta, y=y)
        zeta = 2 * D * z
        rz = np.sqrt(zeta)
        from scipy.integrate import quad
        f = lambda x: sf.killed_density(b, delta, x) * np.exp(-abs(x - y) * rz / np.sqrt(D))
        val = quad(f, -6, y, epsabs=1e-13)[0] + quad(f, y, b, epsabs=1e-13)[0]
        want = np.sqrt(D) * val / (rz * sf.tilt_moment(rz))
        got = assemble_transform(spec, z)
        assert abs(got - want) <= 1e-8 * abs(want)

    def test_cut_plane_accepted(self):
        spec = TransformSpec("case1", b=-0.5, D=1.0, y=0.0)
        out = assemble_transform(spec, complex(-3.0, 2.0))
        assert np.isfinite(out.real) and np.isfinite(out.imag)


class TestTalbot:
    def test_one_over_z_squared(self):
        assert talbot_invert(lambda z: 1.0 / (z * z), 3.0) == pytest.approx(3.0, rel=1e-10)

    def test_passage_pair(self):
        got = talbot_invert(lambda z: np.exp(-np.sqrt(z)), 0.7)
        want = sf.heat_kernel("passage", 1.0, 0.7)
        assert abs(got - want) <= 1e-7 * abs(want)

    def test_round_trips(self):
        # invert the closed-form transforms of the pair corpus at 10 probes
        probes = np.linspace(0.1, 5.0, 10)
        corpus = [
            (lambda z: np.exp(-np.sqrt(z)),
             lambda t: sf.heat_kernel("passage", 1.0, t), probes),
            (lambda z: np.exp(-np.sqrt(z)) / np.sqrt(z),
             lambda t: sf.heat_kernel("gauss", 1.0, t), probes[probes >= 0.1]),
            (lambda z: sf.depth_kernel_lt(1.0, z)[1],
             lambda t: sf.depth_kernel(1.0, t), probes),
            (sf.layer_kernel_lt, sf.layer_kernel, probes[probes <= 5.0]),
        ]
        for F, f, ts in corpus:
            for t in ts:
                got = talbot_invert(F, float(t))
                want = f(float(t))
                assert abs(got - want) <= 1e-6 * max(abs(want), 1e-3)

    def test_strict_flags_nonconvergence(self):
        # a transform analytic nowhere near the contour scale: noisy callable
        rng = np.random.default_rng(0)
        F = lambda z: 1.0 / z + rng.normal() * 1e-3
        with pytest.raises(NonConvergenceError):
            talbot_invert(F, 1.0, strict=True)

    def test_domain(self):
        with pytest.raises(DomainError):
            talbot_invert(lambda z: 1.0 / z, 0.0)


class TestSeriesResolution:
    @pytest.mark.parametrize("z", [1.0, 1.0 + 4.0j, 2.5, 5.0 + 1.0j])
    @pytest.mark.parametrize("n_terms", [3, 8])
    def test_termwise_identity(self, z, n_terms):
        R = lambda w: np.exp(0.3 * -np.sqrt(w)) / (1.0 + w)  # any decaying numerator
        partial, tail = series_resolution_terms(R, z, n_terms)
        exact = R(complex(z)) / sf.tilt_moment(np.sqrt(complex(z)))
        assert abs(exact - partial) <= tail + 1e-14

    def test_contraction_on_probe_grid(self):
        # |p(z)| < 1 for Re(z) >= 1
        for z in [1.0, 1.0 + 2.0j, 1.0 + 10.0j, 3.0, 10.0, 50.0, 2.0 - 5.0j]:
            assert contraction_factor(z) < 1.0


class TestGrowthAudit:
    def test_case1_numerator_slope(self):
        spec = TransformSpec("case1", b=0.0, D=1.0, y=0.0)
        num = lambda z: transform_numerator(spec, z)
        slope = growth_exponent(num, 1e2, 1e6, 9)
        assert slope == pytest.approx(-1.5, abs=0.15)
        assert slope < -0.5

    def test_case2_k2_numerator_slope(self):
        spec = TransformSpec("case2_k2", b=1.0, D=1.0, delta=0.3, y=1.0)
        num = lambda z: transform_numerator(spec, z)
        slope = growth_exponent(num, 1e2, 1e6, 9)
        assert slope == pytest.approx(-1.5, abs=0.15)

    def test_case2_k1_numerator_slope(self):
        spec = TransformSpec("case2_k1", b=1.0, D=1.0, delta=0.3, y=0.0)
        num = lambda z: transform_numerator(spec, z)
        slope = growth_exponent(num, 1e2, 1e6, 9)
        assert slope == pytest.approx(-1.0, abs=0.15)
        assert slope < -0.5
