"""Functional evaluation, projections, dilations and the torus test profile."""
import math
from fractions import Fraction

import numpy as np
import pytest

from wgnls import (
    DegenerateFieldError,
    evaluate,
    dilate_v,
    field_from_function,
    gn_ratio,
    project_K,
    project_N,
    random_band_limited,
    rho_admissible_min,
    rho_norms_closed_form,
    rho_norms_piecewise,
    rho_profile,
    scale_T,
    zero_field,
)
from wgnls.reference import soliton_1d

from conftest import MASS_Q1


def _band_localized(params, domain, rng):
    return random_band_limited(params, domain, rng, band_fraction=0.02,
                               envelope_fraction=0.11)


class TestEvaluate:
    def test_zero_field(self, params, domain):
        rep = evaluate(zero_field(params, domain), 1.0)
        assert rep.mass == rep.kinetic_x == rep.kinetic_y == rep.potential == 0.0
        assert rep.energy == rep.action == rep.virial == rep.nehari == 0.0

    def test_internal_identities_random(self, params, domain):
        rng = np.random.default_rng(5)
        a = params.alpha
        for _ in range(25):
            u = random_band_limited(params, domain, rng)
            omega = float(rng.uniform(0.2, 5.0))
            r = evaluate(u, omega)
            assert r.energy == pytest.approx(
                0.5 * (r.kinetic_x + r.kinetic_y) - r.potential / (a + 2), rel=1e-12)
            assert r.action == pytest.approx(r.energy + 0.5 * omega * r.mass, rel=1e-12)
            assert r.virial == pytest.approx(
                r.kinetic_x - a / (2 * (a + 2)) * r.potential, rel=1e-12, abs=1e-13)
            assert r.nehari == pytest.approx(
                omega * r.mass + r.kinetic_x + r.kinetic_y - r.potential,
                rel=1e-12, abs=1e-13)
            assert r.i_omega == pytest.approx(r.action - 0.5 * r.virial, rel=1e-12)
            expected_i = (0.5 * omega * r.mass + 0.5 * r.kinetic_y
                          + (a - 4) / (4 * (a + 2)) * r.potential)
            assert r.i_omega == pytest.approx(expected_i, rel=1e-12)
            assert r.i_plain == pytest.approx(0.5 * r.kinetic_y, rel=1e-10)

    def test_soliton_values(self, params_1d, domain_1d):
        q = field_from_function(params_1d, domain_1d,
                                lambda x: soliton_1d(x).astype(complex))
        rep = evaluate(q, 1.0)
        assert rep.mass == pytest.approx(MASS_Q1, abs=1e-8)
        assert abs(rep.virial) < 1e-8
        assert abs(rep.nehari) < 1e-8

    def test_json_fields(self, params, domain, rng):
        u = random_band_limited(params, domain, rng)
        d = evaluate(u, 2.0).to_dict()
        assert set(d) == {
            "mass", "kinetic_x", "kinetic_y", "potential", "energy",
            "action", "virial", "nehari", "i_omega", "i_plain", "omega",
        }


class TestProjections:
    def test_fixed_point(self, params, domain, rng):
        u = random_band_limited(params, domain, rng)
        _, v = project_K(u)
        s, w = project_K(v)
        assert s == pytest.approx(1.0, abs=1e-12)
        s2, _ = project_N(project_N(u, 1.5)[1], 1.5)
        assert s2 == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_closed_form(self, params_1d, domain_1d):
        # s^4 = 3 ||u'||^2 / ||u||_6^6 = 3 sqrt(pi/2)/sqrt(pi/6) = 3 sqrt 3
        u = field_from_function(params_1d, domain_1d,
                                lambda x: np.exp(-(x**2)).astype(complex))
        s, v = project_K(u)
        assert s == pytest.approx((3.0 * math.sqrt(3.0)) ** 0.25, abs=1e-9)
        assert abs(evaluate(v, 1.0).virial) <= 1e-12 * evaluate(v, 1.0).kinetic_x

    def test_soliton_nehari_unit(self, params_1d, domain_1d):
        q = field_from_function(params_1d, domain_1d,
                                lambda x: soliton_1d(x).astype(complex))
        s, _ = project_N(q, 1.0)
        assert s == pytest.approx(1.0, abs=1e-8)

    def test_residuals_random_corpus(self, params, domain):
        rng = np.random.default_rng(31)
        for _ in range(200):
            u = random_band_limited(params, domain, rng)
            _, v = project_K(u)
            rv = evaluate(v, 1.0)
            assert abs(rv.virial) <= 1e-10 * rv.kinetic_x
            omega = float(rng.uniform(0.1, 10.0))
            _, w = project_N(u, omega)
            rw = evaluate(w, omega)
            scale = omega * rw.mass + rw.kinetic_x + rw.kinetic_y
            assert abs(rw.nehari) <= 1e-10 * scale

    def test_degenerate(self, params, domain):
        with pytest.raises(DegenerateFieldError):
            project_K(zero_field(params, domain))
        with pytest.raises(DegenerateFieldError):
            project_N(zero_field(params, domain), 1.0)


class TestDilations:
    def test_identity(self, params, domain, rng):
        u = _band_localized(params, domain, rng)
        assert np.max(np.abs(dilate_v(u, 1).values - u.values)) == 0.0
        assert np.max(np.abs(scale_T(u, 1).values - u.values)) == 0.0

    def test_mass_critical_v_laws(self, params, domain, rng):
        u = _band_localized(params, domain, rng)
        r = evaluate(u, 1.0)
        for t in (2, 4, Fraction(1, 2)):
            tf = float(Fraction(t))
            rv = evaluate(dilate_v(u, t), 1.0)
            assert abs(rv.mass - r.mass) <= 1e-10 * r.mass
            assert abs(rv.virial - tf**2 * r.virial) <= 1e-10 * abs(r.virial)
            assert abs(rv.kinetic_x - tf**2 * r.kinetic_x) <= 1e-10 * r.kinetic_x

    def test_inverse_pair(self, params, domain, rng):
        u = _band_localized(params, domain, rng)
        w = dilate_v(dilate_v(u, 2), Fraction(1, 2))
        assert np.max(np.abs(w.values - u.values)) <= 1e-10 * np.max(np.abs(u.values))

    def test_scale_T_five_laws(self, params, domain, rng):
        u = _band_localized(params, domain, rng)
        r = evaluate(u, 1.0)
        a, d = params.alpha, params.d
        for kappa in (2, 4, Fraction(1, 2)):
            kf = float(Fraction(kappa))
            rw = evaluate(scale_T(u, kappa), 1.0)
            e_hi = kf ** (2.0 + 4.0 / a - d)
            e_lo = kf ** (4.0 / a - d)
            assert abs(rw.kinetic_x - e_hi * r.kinetic_x) <= 1e-10 * r.kinetic_x
            assert abs(rw.potential - e_hi * r.potential) <= 1e-10 * r.potential
            assert abs(rw.virial - e_hi * r.virial) <= 1e-10 * abs(r.virial)
            assert abs(rw.kinetic_y - e_lo * r.kinetic_y) <= 1e-10 * r.kinetic_y
            assert abs(rw.mass - e_lo * r.mass) <= 1e-10 * r.mass

    def test_mass_critical_mass_invariance_under_T(self, params, domain, rng):
        # alpha = 4/d makes 4/alpha - d = 0: mass is T-invariant
        u = _band_localized(params, domain, rng)
        r = evaluate(u, 1.0)
        rw = evaluate(scale_T(u, 2), 1.0)
        assert rw.mass == pytest.approx(r.mass, rel=1e-12)


class TestGNRatio:
    def test_scale_invariance_m0(self, params_1d, domain_1d, rng):
        u = random_band_limited(params_1d, domain_1d, rng, band_fraction=0.02,
                                envelope_fraction=0.11)
        r1 = gn_ratio(u)
        r2 = gn_ratio(dilate_v(u, 2))
        assert r2 == pytest.approx(r1, rel=1e-8)

    def test_soliton_ratio_finite(self, params_1d, domain_1d):
        q = field_from_function(params_1d, domain_1d,
                                lambda x: soliton_1d(x).astype(complex))
        r = gn_ratio(q)
        # closed forms: potential 1.5 M, gradient norm squared M/2, and the
        # d=1, m=0 exponents give potential / (2 * kinetic_x * mass^2)
        expected = 1.5 / MASS_Q1**2
        assert r == pytest.approx(expected, rel=1e-8)

    def test_corpus_bounded(self, params, domain):
        rng = np.random.default_rng(9)
        ratios = [gn_ratio(random_band_limited(params, domain, rng))
                  for _ in range(1000)]
        assert all(np.isfinite(r) and r > 0 for r in ratios)
        assert max(ratios) < 10.0 * np.median(ratios) + 10.0

    def test_zero_field(self, params, domain):
        with pytest.raises(DegenerateFieldError):
            gn_ratio(zero_field(params, domain))


class TestRhoProfile:
    def test_plateau_and_peak(self):
        alpha = 4.0
        n = 4096
        a = 2.0 * math.pi * (n // 8) / n   # grid-aligned plateau edge
        rho = rho_profile(a, alpha, n)
        y = 2.0 * math.pi * np.arange(n) / n
        assert np.all(rho[y <= a] == 0.0)
        assert np.all(rho[y >= 2 * math.pi - a] == 0.0)
        assert rho[n // 2] == pytest.approx(((alpha + 3) / 3) ** (1 / alpha),
                                            rel=1e-14)

    def test_norm_identity_and_bound(self):
        alpha = 4.0
        for a in (0.5, 1.0, 2.0):
            closed = rho_norms_closed_form(a, alpha)
            assert closed < 2.0 * math.pi
            rho = rho_profile(a, alpha, 1 << 16)
            h = 2.0 * math.pi / rho.size
            l2 = float(np.sum(rho**2) * h)
            lp = float(np.sum(rho**6) * h)
            # trapezoid converges to the common closed-form value
            assert l2 == pytest.approx(closed, abs=2e-8)
            assert abs(l2 - lp) < 1e-6

    def test_trapezoid_error_is_second_order(self):
        alpha = 4.0
        a = 1.0
        closed = rho_norms_closed_form(a, alpha)
        errs = []
        for n in (4096, 8192):
            rho = rho_profile(a, alpha, n)
            h = 2.0 * math.pi / n
            errs.append(abs(float(np.sum(rho**2) * h) - closed))
        assert errs[0] / errs[1] > 3.5

    def test_piecewise_embedding_exact(self):
        alpha = 4.0
        n = 4096
        a = 2.0 * math.pi * 652 / n       # kinks on grid nodes
        rho = rho_profile(a, alpha, n)
        l2, lp = rho_norms_piecewise(rho, alpha)
        closed = rho_norms_closed_form(a, alpha)
        assert l2 == pytest.approx(closed, rel=1e-13)
        assert lp == pytest.approx(closed, rel=1e-13)

    def test_inadmissible_edge(self):
        # the explicit lower bound is negative for every admissible alpha
        # (any plateau edge in (0, pi) works), so only the interval binds
        assert rho_admissible_min(4.0) < 0.0
        with pytest.raises(ValueError):
            rho_profile(3.5, 4.0, 256)
        with pytest.raises(ValueError):
            rho_profile(-0.1, 4.0, 256)
