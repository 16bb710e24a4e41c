import numpy as np
import pytest

from qdnls.coeffs import Coefficients
from qdnls.inflation import (
    InflationConfig,
    build_inflation_data,
    check_modulation_conditions,
    fit_loglog_slope,
    run_inflation,
)
from qdnls.picard import third_iterate_profile

C = Coefficients(1, -1, -1)  # mu = 3 > 0, k = gamma/alpha = -1


def make_config(**kw):
    base = dict(c=C, s=-0.5, n_list=(16.0, 32.0, 64.0, 128.0), t=0.1)
    base.update(kw)
    return InflationConfig(**base)


class TestConfig:
    def test_requires_positive_mu(self):
        with pytest.raises(ValueError):
            make_config(c=Coefficients(1, 1, 1))  # mu = -1

    def test_requires_negative_s(self):
        with pytest.raises(ValueError):
            make_config(s=0.0)

    def test_requires_fine_lattice(self):
        with pytest.raises(ValueError):
            make_config(delta_xi=0.5)

    def test_requires_dyadic_n(self):
        with pytest.raises(ValueError):
            make_config(n_list=(12.0, 24.0, 48.0))

    def test_time_margin_enforced(self):
        cfg = make_config(t=0.01)
        with pytest.raises(ValueError):
            run_inflation(cfg)


class TestData:
    def test_indicator_values(self):
        cfg = make_config()
        u0, v0, w0 = build_inflation_data(cfg, 16.0)
        # N^{-s} = 16^{1/2} = 4 on the lattice points of [16, 17)
        assert np.all(w0.amp == 4.0)
        assert w0.xi.min() == pytest.approx(16.0)
        assert w0.xi.max() == pytest.approx(17.0 - cfg.delta_xi)
        assert w0.index.size == 8  # spacing 1/8, half-open interval
        assert u0.xi.min() == pytest.approx(-16.0)
        assert u0.xi.max() == pytest.approx(-15.0 - cfg.delta_xi)
        assert np.all(v0.amp == 0.0)

    def test_data_norms_near_one(self):
        cfg = make_config()
        for n_freq in cfg.n_list:
            u0, _, w0 = build_inflation_data(cfg, n_freq)
            assert 0.5 <= u0.sobolev_norm(cfg.s) <= 2.0
            assert 0.5 <= w0.sobolev_norm(cfg.s) <= 2.0

    def test_norms_converge_to_one_with_lattice_refinement(self):
        # Riemann-sum oracle: the continuum norm of the indicator tends to
        # N^{-s} <xi>^s ~ 1 on the interval; finer lattices must approach it
        for dxi in (0.125, 0.0625, 0.03125):
            cfg = make_config(delta_xi=dxi)
            _, _, w0 = build_inflation_data(cfg, 64.0)
            assert abs(w0.sobolev_norm(cfg.s) - 1.0) < 0.15


class TestModulation:
    def test_identity_band_at_n64(self):
        rep = check_modulation_conditions(C, 64.0)
        assert rep.identity_value == 6.0
        assert 5.5 <= rep.phi2_over_n2_min <= rep.phi2_over_n2_max <= 6.5

    def test_psi_uniform_bound(self):
        # factored form: |psi| <= |2 alpha eps - (alpha+gamma) eps1 + (alpha-gamma) eps2| <= 8
        for n_freq in (16.0, 1024.0):
            rep = check_modulation_conditions(C, n_freq)
            assert rep.psi_max <= 8.0

    def test_psi_independent_of_n(self):
        a = check_modulation_conditions(C, 16.0)
        b = check_modulation_conditions(C, 1024.0)
        assert abs(a.psi_max - b.psi_max) <= 1e-9 * (1.0 + a.psi_max)

    def test_phi1_bounded_away_from_zero(self):
        rng = np.random.default_rng(1)
        count = 0
        while count < 12:
            vals = rng.uniform(-2, 2, size=3)
            if np.min(np.abs(vals)) < 0.1:
                continue
            c = Coefficients(*vals)
            if c.mu <= 0:
                continue
            count += 1
            rep = check_modulation_conditions(c, 256.0)
            assert rep.phi1_over_n2_min >= 0.1 * rep.identity_value


class TestRunInflation:
    def test_reference_sweep_slope(self):
        report = run_inflation(make_config())
        assert 0.8 <= report.slope <= 1.2
        assert report.target_slope == 1.0

    def test_ratio_monotone_and_divergent(self):
        report = run_inflation(make_config())
        ratios = [row.ratio for row in report.rows]
        assert all(b > a for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] / ratios[0] >= (128.0 / 16.0) / 4.0

    @pytest.mark.parametrize("s", [-0.25, -0.3, -0.75])
    def test_ratio_monotone_for_other_exponents(self, s):
        # run_inflation asserts monotone growth internally; it must hold
        # down to s = -1/4
        report = run_inflation(make_config(s=s))
        assert 0.8 <= report.slope / report.target_slope <= 1.2

    def test_t_doubling_scales_linearly(self):
        n_list = (32.0, 64.0, 128.0)
        r1 = run_inflation(make_config(n_list=n_list, t=0.1))
        r2 = run_inflation(make_config(n_list=n_list, t=0.2))
        for a, b in zip(r1.rows, r2.rows):
            assert b.norm_u3 / a.norm_u3 == pytest.approx(2.0, rel=0.2)

    def test_oscillating_term_is_subordinate(self):
        cfg = make_config()
        secular = run_inflation(cfg, keep_fast_term=False)
        full = run_inflation(cfg)
        for a, b in zip(full.rows, secular.rows):
            n = a.n_freq
            bound = 10.0 * n ** (-2 * cfg.s - 2)
            assert abs(a.norm_u3 - b.norm_u3) <= bound
            # the oscillating part alone also obeys the N^{-2s-2} size
            u0, _, w0 = build_inflation_data(cfg, n)
            fast = third_iterate_profile(cfg.c, u0, w0, cfg.t, include_first=False)
            assert fast.sobolev_norm(cfg.s) <= bound

    def test_lattice_refinement_changes_norms_slightly(self):
        coarse = run_inflation(make_config(n_list=(16.0, 32.0, 64.0)))
        fine = run_inflation(make_config(n_list=(16.0, 32.0, 64.0), delta_xi=0.0625))
        for a, b in zip(coarse.rows, fine.rows):
            assert abs(a.norm_u3 - b.norm_u3) / a.norm_u3 < 0.05
            assert abs(a.norm_u0 - b.norm_u0) / a.norm_u0 < 0.05

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            run_inflation(make_config(n_list=(64.0, 128.0)))


class TestSlopeFit:
    def test_exact_power_law(self):
        x = np.array([2.0, 4.0, 8.0, 16.0])
        slope, half = fit_loglog_slope(x, 3.0 * x**1.7)
        assert slope == pytest.approx(1.7, abs=1e-12)
        assert half == pytest.approx(0.0, abs=1e-10)
