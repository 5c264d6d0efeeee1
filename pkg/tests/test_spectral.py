"""Grid, differentiation, quadrature, resampling and snapshot round trips."""
import math
from fractions import Fraction

import numpy as np
import pytest

from wgnls import (
    AliasingWarning,
    DomainSpec,
    Field,
    ModelParams,
    field_from_function,
    gradient_x,
    gradient_y,
    load_field,
    quadrature,
    random_band_limited,
    resample,
    save_field,
    zero_field,
)
from wgnls.spectral import spectral_mass


class TestParams:
    def test_admissible_range(self):
        ModelParams(1, 1, 4.0)
        ModelParams(1, 1, 7.5)          # subcritical for d+m=2
        ModelParams(2, 1, 2.0)
        with pytest.raises(ValueError):
            ModelParams(1, 1, 3.0)      # below 4/d
        with pytest.raises(ValueError):
            ModelParams(2, 1, 4.0)      # at the upper limit 4/(d+m-2)
        with pytest.raises(ValueError):
            ModelParams(3, 1, 4.0)

    def test_mode(self):
        assert ModelParams(1, 1, 4.0).mode == "mass-critical"
        assert ModelParams(2, 0, 2.0).mode == "mass-critical"
        assert ModelParams(1, 1, 5.0).mode == "intercritical"

    def test_power_of_two(self):
        with pytest.raises(ValueError):
            DomainSpec(16.0, 500, 64)
        with pytest.raises(ValueError):
            DomainSpec(16.0, 512, 48)
        with pytest.raises(ValueError):
            DomainSpec(-1.0, 512, 64)


class TestGradients:
    def test_zero_field(self, params, domain):
        u = zero_field(params, domain)
        (gx,) = gradient_x(u)
        assert np.all(gx.values == 0)
        assert np.all(gradient_y(u).values == 0)

    def test_resolved_mode_exact(self, params_1d, domain_1d):
        L = domain_1d.half_length
        u = field_from_function(params_1d, domain_1d,
                                lambda x: np.sin(np.pi * x / L).astype(complex))
        (gx,) = gradient_x(u)
        x = -L + domain_1d.h_x * np.arange(domain_1d.n_x)
        expected = (np.pi / L) * np.cos(np.pi * x / L)
        assert np.max(np.abs(gx.values.real - expected)) < 1e-12

    def test_gaussian_gradient_norm(self, params_1d, domain_1d):
        # int 4 x^2 e^{-2x^2} dx = sqrt(pi/2)
        u = field_from_function(params_1d, domain_1d,
                                lambda x: np.exp(-(x**2)).astype(complex))
        (gx,) = gradient_x(u)
        val = quadrature(np.abs(gx.values) ** 2, params_1d, domain_1d)
        assert abs(val - math.sqrt(math.pi / 2.0)) < 1e-10

    def test_gradient_y_single_mode(self, params, domain):
        u = field_from_function(
            params, domain,
            lambda x, y: np.exp(-(x**2)) * np.exp(1j * y),
        )
        gy = gradient_y(u)
        assert np.max(np.abs(gy.values - 1j * u.values)) < 1e-12

    def test_gradient_y_cos_mode(self, params, domain):
        u = field_from_function(
            params, domain,
            lambda x, y: (np.exp(-(x**2)) * np.cos(2 * y)).astype(complex),
        )
        gy = gradient_y(u)
        expected = field_from_function(
            params, domain,
            lambda x, y: (-2.0 * np.exp(-(x**2)) * np.sin(2 * y)).astype(complex),
        )
        assert np.max(np.abs(gy.values - expected.values)) < 1e-12

    def test_gradient_y_rejects_flat_model(self, params_1d, domain_1d):
        u = zero_field(params_1d, domain_1d)
        with pytest.raises(ValueError):
            gradient_y(u)

    def test_gradients_commute(self, params, domain, rng):
        u = random_band_limited(params, domain, rng)
        gxy = gradient_y(gradient_x(u)[0])
        gyx = gradient_x(gradient_y(u))[0]
        assert np.max(np.abs(gxy.values - gyx.values)) <= 1e-12


class TestQuadrature:
    def test_volume(self):
        p = ModelParams(1, 1, 4.0)
        dom = DomainSpec(8.0, 256, 64)
        f = np.ones(dom.shape(p))
        assert quadrature(f, p, dom) == pytest.approx(16.0 * 2.0 * math.pi)

    def test_gaussian(self, params_1d, domain_1d):
        x = -16.0 + domain_1d.h_x * np.arange(512)
        val = quadrature(np.exp(-2.0 * x**2), params_1d, domain_1d)
        assert abs(val - math.sqrt(math.pi / 2.0)) < 1e-12

    def test_zero(self, params, domain):
        assert quadrature(np.zeros(domain.shape(params)), params, domain) == 0.0

    def test_linear_positive(self, params, domain, rng):
        f = rng.random(domain.shape(params))
        g = rng.random(domain.shape(params))
        lhs = quadrature(2.0 * f + 3.0 * g, params, domain)
        rhs = 2.0 * quadrature(f, params, domain) + 3.0 * quadrature(g, params, domain)
        assert lhs == pytest.approx(rhs, rel=1e-13)
        assert quadrature(f, params, domain) >= 0.0

    def test_parseval_100_random_fields(self, params, domain):
        rng = np.random.default_rng(77)
        for _ in range(100):
            u = random_band_limited(params, domain, rng)
            direct = quadrature(np.abs(u.values) ** 2, params, domain)
            spectral = spectral_mass(u)
            assert abs(direct - spectral) <= 1e-12 * direct


class TestResample:
    def test_identity(self, params, domain, rng):
        u = random_band_limited(params, domain, rng)
        v = resample(u, 1)
        assert np.array_equal(v.values, u.values)

    def test_upsample_exact_on_band_limited(self, params_1d, domain_1d, rng):
        u = random_band_limited(params_1d, domain_1d, rng, band_fraction=0.05,
                                localized=False)
        v = resample(u, 2)
        # the fine samples at even indices must reproduce the original
        assert np.max(np.abs(v.values[::2] - u.values)) < 1e-12

    def test_roundtrip(self, params, domain, rng):
        u = random_band_limited(params, domain, rng, band_fraction=0.05)
        w = resample(resample(u, 2), Fraction(1, 2))
        assert np.max(np.abs(w.values - u.values)) <= 1e-12

    def test_non_representable_factor(self, params, domain, rng):
        u = random_band_limited(params, domain, rng)
        with pytest.raises(ValueError):
            resample(u, Fraction(3, 2))   # 768 points: not a power of two

    def test_aliasing_warning(self, params_1d, domain_1d, rng):
        u = random_band_limited(params_1d, domain_1d, rng, band_fraction=0.9,
                                localized=False)
        with pytest.warns(AliasingWarning):
            resample(u, Fraction(1, 4))

    def test_mass_preserved_under_upsampling(self, params, domain, rng):
        u = random_band_limited(params, domain, rng)
        v = resample(u, 2)
        m_u = quadrature(np.abs(u.values) ** 2, u.params, u.domain)
        m_v = quadrature(np.abs(v.values) ** 2, v.params, v.domain)
        assert m_v == pytest.approx(m_u, rel=1e-12)


class TestSnapshots:
    def test_roundtrip_bitwise(self, params, domain, rng, tmp_path):
        u = random_band_limited(params, domain, rng)
        path = tmp_path / "field.wgnls"
        save_field(path, u)
        v = load_field(path)
        assert v.params == u.params
        assert v.domain == u.domain
        assert np.array_equal(v.values, u.values)

    def test_header_layout(self, params, domain, rng, tmp_path):
        u = random_band_limited(params, domain, rng)
        path = tmp_path / "field.wgnls"
        save_field(path, u)
        blob = path.read_bytes()
        assert blob[:6] == b"WGNLS1"
        assert len(blob) == 64 + 16 * u.values.size

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.wgnls"
        path.write_bytes(b"NOPE" * 32)
        with pytest.raises(ValueError):
            load_field(path)


class TestFieldValidation:
    def test_shape_mismatch(self, params, domain):
        with pytest.raises(ValueError):
            Field(params, domain, np.zeros((2, 2), dtype=complex))

    def test_nonfinite(self, params, domain):
        vals = np.zeros(domain.shape(params), dtype=complex)
        vals[0, 0] = np.nan
        with pytest.raises(ValueError):
            Field(params, domain, vals)

    def test_immutability(self, params, domain):
        u = zero_field(params, domain)
        with pytest.raises(ValueError):
            u.values[0, 0] = 1.0
