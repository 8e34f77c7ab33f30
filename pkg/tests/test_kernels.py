import math

import numpy as np
import pytest

from pwgl.errors import ConfigError, DataError
from pwgl.kernels import (
    KernelProfile,
    WeightProfile,
    crossover_radius,
    eta,
    eta_eps,
    flat_profile,
    gamma,
    gamma_zeta,
    kernel_moments,
    parse_variant,
    parse_zeta,
    resolve_zeta,
)

from conftest import rng


class TestEta:
    def test_indicator_values(self):
        p = KernelProfile(kind="indicator")
        assert eta(p, 0.0) == 1.0
        assert eta(p, 0.5) == 1.0
        assert eta(p, 1.0) == 1.0  # closed support boundary
        assert eta(p, 1.2) == 0.0

    def test_gaussian_values(self):
        p = KernelProfile(kind="gaussian", sigma_factor=0.5)
        assert eta(p, 1.0) == pytest.approx(math.exp(-2.0), rel=1e-15)
        assert eta(p, 2.0) == pytest.approx(math.exp(-8.0), rel=1e-15)
        assert eta(p, 2.0001) == 0.0  # hard truncation

    def test_negative_distance_rejected(self):
        p = KernelProfile(kind="indicator")
        with pytest.raises(DataError):
            eta(p, -0.1)

    def test_nonincreasing(self):
        t = np.linspace(0, 2.5, 400)
        for p in (KernelProfile("indicator"), KernelProfile("gaussian"),
                  flat_profile()):
            v = eta(p, t)
            assert np.all(np.diff(v) <= 1e-15)

    def test_normalized_profile_dominates_one_on_unit_interval(self):
        p = KernelProfile(kind="gaussian", sigma_factor=0.5, normalize=True)
        t = np.linspace(0, 1, 101)
        assert np.all(eta(p, t) >= 1.0 - 1e-12)
        # raw experiment-mode profile is left untouched
        raw = KernelProfile(kind="gaussian", sigma_factor=0.5)
        assert eta(raw, 1.0) < 1.0

    def test_custom_must_be_nonincreasing(self):
        with pytest.raises(ConfigError):
            KernelProfile(kind="custom", custom_fn=lambda t: t)


class TestEtaEps:
    def test_scaling_value(self):
        # d = 2, eps = 0.5: eps^-d = 4, rescaled distance 0.6
        p = KernelProfile(kind="gaussian", sigma_factor=0.5)
        v = eta_eps(p, np.array([0.3, 0.0]), eps=0.5)
        assert v == pytest.approx(4.0 * math.exp(-0.72), rel=1e-14)

    def test_support_cutoff(self):
        p = KernelProfile(kind="gaussian")
        assert eta_eps(p, np.array([1.01, 0.0]), eps=0.5) == 0.0

    def test_batch_shape(self):
        p = KernelProfile(kind="indicator")
        disp = rng(0).random((8, 3)) * 0.1
        out = eta_eps(p, disp, eps=0.2)
        assert out.shape == (8,)

    def test_integral_is_eps_free(self):
        # Monte-Carlo integral of eta_eps over R^d matches the eps = 1 value
        p = KernelProfile(kind="gaussian", sigma_factor=0.5)
        d = 2
        ref = None
        for eps in (1.0, 0.5, 0.1):
            g = rng(99)
            m = 400_000
            side = 2.0 * eps
            z = (g.random((m, d)) * 2.0 - 1.0) * side
            vol = (2.0 * side) ** d
            est = eta_eps(p, z, eps).mean() * vol
            if ref is None:
                ref = est
            else:
                assert est == pytest.approx(ref, rel=0.02)


class TestKernelMoments:
    def test_indicator_closed_forms(self):
        p = KernelProfile(kind="indicator")
        # integral of z_1^2 over the unit ball
        expect = {1: 2.0 / 3.0, 2: math.pi / 4.0, 3: 4.0 * math.pi / 15.0}
        for d, val in expect.items():
            m = kernel_moments(p, d)
            assert m.theta_eta == pytest.approx(val, rel=1e-12)
            assert m.sigma_eta == pytest.approx(val, rel=1e-12)

    def test_gaussian_closed_form(self):
        # d=2, sigma/eps = 0.5: theta = pi (1 - 9 e^-8) / 8
        p = KernelProfile(kind="gaussian", sigma_factor=0.5)
        m = kernel_moments(p, 2)
        expect = math.pi * (1.0 - 9.0 * math.exp(-8.0)) / 8.0
        assert m.theta_eta == pytest.approx(expect, rel=1e-10)

    def test_flat_profile_closed_form(self):
        # eta = 1 on [0, 2]: integral of z_1^2 over B(0, 2) = 4 pi in d = 2
        m = kernel_moments(flat_profile(), 2)
        assert m.theta_eta == pytest.approx(4.0 * math.pi, rel=1e-12)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_routes_agree(self, d):
        for p in (KernelProfile("indicator"),
                  KernelProfile("gaussian", sigma_factor=0.5),
                  KernelProfile("gaussian", sigma_factor=1.0),
                  flat_profile()):
            m = kernel_moments(p, d)
            assert m.sigma_eta == pytest.approx(m.theta_eta, rel=1e-10)


class TestGamma:
    def test_formula_value(self):
        p = WeightProfile(alpha=2.0, zeta=1e6, r0=0.1)
        assert gamma(p, 0.05) == pytest.approx(5.0, rel=1e-14)

    def test_infinite_at_labels(self):
        p = WeightProfile(alpha=2.0, zeta=1e6)
        assert gamma(p, 0.0) == math.inf

    def test_alpha_zero_constant_two(self):
        p = WeightProfile(alpha=0.0, zeta=1e6)
        d = np.array([0.0, 0.3, 2.0, 100.0])
        np.testing.assert_allclose(gamma(p, d), 2.0)

    def test_windowed_formula(self):
        p = WeightProfile(alpha=2.0, zeta=1e6, r0=0.1,
                          global_formula=False, label_separation=1.0)
        assert gamma(p, 0.1) == pytest.approx(2.0)   # inside R/4
        assert gamma(p, 0.5) == 1.0                  # beyond R/4

    def test_monotone_nonincreasing(self):
        p = WeightProfile(alpha=3.0, zeta=1e6, r0=0.7)
        d = np.linspace(1e-3, 5.0, 500)
        v = gamma(p, d)
        assert np.all(np.diff(v) <= 0)
        assert np.all(v >= 1.0)

    def test_negative_distance_rejected(self):
        with pytest.raises(DataError):
            gamma(WeightProfile(alpha=1.0, zeta=10.0), -1.0)


class TestGammaZeta:
    def test_truncation(self):
        p = WeightProfile(alpha=2.0, zeta=50.0, r0=1.0)
        assert gamma_zeta(p, 1e-6) == 50.0
        assert gamma_zeta(p, 10.0) == pytest.approx(1.01, rel=1e-12)

    def test_crossover_identity(self):
        p = WeightProfile(alpha=3.0, zeta=200.0, r0=0.4)
        r = crossover_radius(p)
        assert gamma(p, r) == pytest.approx(p.zeta, rel=1e-12)
        assert gamma_zeta(p, r * 0.999) == p.zeta

    def test_two_region(self):
        p = WeightProfile(alpha=2.0, zeta=100.0, variant="two_region",
                          region_radius=0.2)
        assert gamma_zeta(p, 0.1) == 100.0          # exactly zeta inside
        assert gamma_zeta(p, 0.2) == 100.0          # closed region boundary
        assert gamma_zeta(p, 0.5) == pytest.approx(gamma(p, 0.5))

    def test_zeta_must_exceed_one(self):
        with pytest.raises(ConfigError):
            WeightProfile(alpha=2.0, zeta=1.0)

    def test_infinite_zeta_only_two_region_zero(self):
        with pytest.raises(ConfigError):
            WeightProfile(alpha=2.0, zeta=math.inf)
        with pytest.raises(ConfigError):
            WeightProfile(alpha=2.0, zeta=math.inf, variant="two_region",
                          region_radius=0.1)
        p = WeightProfile(alpha=2.0, zeta=math.inf, variant="two_region",
                          region_radius=0.0)
        assert gamma_zeta(p, 0.0) == math.inf
        assert np.isfinite(gamma_zeta(p, 1e-9))

    def test_custom_gamma_hook(self):
        p = WeightProfile(alpha=2.0, zeta=1e8,
                          custom_gamma=lambda d: d ** -2.0)
        assert gamma(p, 0.5) == pytest.approx(4.0)
        assert gamma_zeta(p, 1e-6) == 1e8


class TestZetaConfig:
    def test_resolve_scaled(self):
        assert resolve_zeta({"scaled": 50.0}, n=100, eps=0.2) == pytest.approx(200.0)
        assert resolve_zeta(("scaled", 50.0), n=100, eps=0.2) == pytest.approx(200.0)
        assert resolve_zeta(123.0, n=10, eps=1.0) == 123.0

    def test_parse(self):
        assert parse_zeta("200") == 200.0
        assert parse_zeta("scaled:50") == ("scaled", 50.0)
        assert parse_zeta("inf") == math.inf
        with pytest.raises(ConfigError):
            parse_zeta("fifty")
        assert parse_variant("truncated") == ("truncated", 0.0)
        assert parse_variant("two_region:0.25") == ("two_region", 0.25)
        with pytest.raises(ConfigError):
            parse_variant("banana")
