import numpy as np
import pytest

from qdnls.coeffs import (
    Coefficients,
    classify,
    compute_kappa,
    compute_mu,
    compute_sigma,
    phase_phi,
    phase_psi,
    phase_psi_factored,
    three_wave_phase,
)


def literal_mu(a, b, g):
    # direct evaluation of the defining expression, as an independent oracle
    return a * b * g * (1.0 / a - 1.0 / b - 1.0 / g)


class TestInvariants:
    def test_mu_examples(self):
        assert compute_mu(Coefficients(1, 1, 1)) == -1
        assert compute_mu(Coefficients(1, -1, -1)) == 3
        assert compute_mu(Coefficients(2, 1, 1)) == -3

    def test_kappa_examples(self):
        assert compute_kappa(Coefficients(1, 1, 1)) == 0
        assert compute_kappa(Coefficients(1, -1, -1)) == -8
        assert compute_kappa(Coefficients(2, 1, -1)) == 0

    def test_rejects_zero_coefficients(self):
        with pytest.raises(ValueError):
            Coefficients(0, 1, 1)
        with pytest.raises(ValueError):
            Coefficients(1, 1, 0)

    def test_mu_matches_literal_form(self):
        rng = np.random.default_rng(7)
        for _ in range(10_000):
            a, b, g = rng.uniform(-3, 3, size=3)
            if min(abs(a), abs(b), abs(g)) < 1e-3:
                continue
            mu = compute_mu(Coefficients(a, b, g))
            ref = literal_mu(a, b, g)
            assert abs(mu - ref) <= 1e-12 * max(1.0, abs(ref))

    def test_kappa_nonzero_when_mu_nonnegative(self):
        rng = np.random.default_rng(8)
        seen = 0
        for _ in range(10_000):
            a, b, g = rng.uniform(-3, 3, size=3)
            if min(abs(a), abs(b), abs(g)) < 1e-3:
                continue
            c = Coefficients(a, b, g)
            if compute_mu(c) >= 0:
                seen += 1
                assert compute_kappa(c) != 0
        assert seen > 100  # the sampled region does hit mu >= 0


class TestSigma:
    def test_examples(self):
        r = compute_sigma(Coefficients(1, 1, 2))
        assert r.sigma == 2 and r.product_nonzero and r.sigma_not_unimodular
        r = compute_sigma(Coefficients(1, 1, 1))
        assert r.sigma == 1 and not r.product_nonzero and not r.sigma_not_unimodular
        r = compute_sigma(Coefficients(1, 1, -1))
        assert r.sigma == -1 and not r.product_nonzero and not r.sigma_not_unimodular

    def test_no_equivalence_report_when_alpha_differs(self):
        r = compute_sigma(Coefficients(1, 2, 3))
        assert r.sigma == 3 and r.product_nonzero is None

    def test_equivalence_holds_on_random_equal_dispersion_triples(self):
        rng = np.random.default_rng(9)
        for _ in range(2000):
            a = rng.uniform(-2, 2)
            g = rng.uniform(-2, 2)
            if min(abs(a), abs(g)) < 1e-3:
                continue
            compute_sigma(Coefficients(a, a, g))  # raises on mismatch


class TestClassify:
    def test_case_a2(self):
        rep = classify(2, Coefficients(1, 1, 2))
        assert rep.case == "A2"
        assert rep.wp_threshold == 0.5 and rep.wp_strict is False
        assert rep.s_critical == 0.0

    def test_case_a1(self):
        rep = classify(1, Coefficients(1, -1, -1))
        assert rep.mu == 3 and rep.mu_sign == "mu_pos"
        assert rep.case == "A1"
        assert rep.wp_threshold == 0.0 and rep.wp_strict is False
        assert "not C^3" in rep.illposedness_note and "s < 0" in rep.illposedness_note

    def test_ambiguous_degenerate_branch(self):
        rep = classify(1, Coefficients(1, 1, 1))
        assert rep.mu == -1 and rep.kappa_class == "kappa_zero"
        assert rep.wp_threshold is None
        assert any("overlap" in note for note in rep.notes)

    def test_case_a3(self):
        rep = classify(3, Coefficients(1, 2, -1))  # mu = -2-(-1)-2 = -3, kappa != 0
        assert rep.mu < 0 and rep.kappa != 0
        assert rep.case == "A3"
        assert rep.wp_threshold == 0.5 and rep.wp_strict is True

    def test_d4_merged_cell(self):
        rep = classify(4, Coefficients(1, -1, -1))  # mu > 0
        assert rep.wp_threshold == rep.s_critical == 1.0
        assert any("merged" in note for note in rep.notes)

    def test_case_a4(self):
        # alpha = beta and gamma = alpha gives kappa = 0 and the degenerate product 0
        rep = classify(4, Coefficients(2, 2, 2))
        assert rep.case == "A4"
        assert rep.wp_threshold is None

    def test_bad_dimension(self):
        with pytest.raises(ValueError):
            classify(5, Coefficients(1, 1, 2))

    def test_classification_depends_only_on_discrete_features(self):
        rng = np.random.default_rng(11)
        buckets: dict[tuple, tuple] = {}
        for _ in range(4000):
            a, b, g = rng.uniform(-3, 3, size=3)
            if min(abs(a), abs(b), abs(g)) < 1e-2:
                continue
            c = Coefficients(a, b, g)
            mu, kappa = compute_mu(c), compute_kappa(c)
            for d in (1, 2, 3, 4):
                feature = (
                    d,
                    int(np.sign(mu)),
                    kappa == 0,
                    a == b,
                    (b + g) * (g - a) == 0,
                )
                rep = classify(d, c)
                outcome = (rep.wp_threshold, rep.wp_strict, rep.case)
                if feature in buckets:
                    assert buckets[feature] == outcome
                else:
                    buckets[feature] = outcome


class TestPhases:
    C = Coefficients(1, -1, -1)

    def test_phi_examples(self):
        assert phase_phi(self.C, 0.0, 0.0) == 0.0
        assert phase_phi(self.C, 1.0, 1.0) == 2.0
        assert phase_phi(self.C, -10.0, 10.0) == 600.0  # 6 N^2 at N = 10

    def test_psi_vanishes_on_equal_inputs(self):
        assert phase_psi(self.C, 12.3, 5.0, 5.0) == 0.0

    def test_psi_hand_example(self):
        # k = gamma/alpha = -1, N = 100, eps = 0, eps1 = 1, eps2 = 0
        n = 100.0
        val = phase_psi(self.C, -n, n + 1.0, n)
        assert val == 0.0  # alpha + gamma = 0 kills the only surviving term

    def test_psi_factored_matches_difference(self):
        rng = np.random.default_rng(13)
        for _ in range(10_000):
            a, b, g = rng.uniform(-2, 2, size=3)
            if min(abs(a), abs(b), abs(g)) < 1e-2:
                continue
            c = Coefficients(a, b, g)
            n = rng.uniform(4, 200)
            k = rng.uniform(-3, 3)
            eps, eps1, eps2 = rng.uniform(0, 1, size=3)
            lit = phase_psi(c, k * n + eps, n + eps1, n + eps2)
            fac = phase_psi_factored(c, n, eps, eps1, eps2, k=k)
            scale = 1.0 + abs(phase_phi(c, k * n + eps, n + eps1)) + abs(
                phase_phi(c, k * n + eps - eps1 + eps2, n + eps2)
            )
            assert abs(lit - fac) <= 1e-12 * scale

    def test_psi_equals_literal_phase_difference(self):
        rng = np.random.default_rng(19)
        for _ in range(2000):
            a, b, g = rng.uniform(-2, 2, size=3)
            if min(abs(a), abs(b), abs(g)) < 1e-2:
                continue
            c = Coefficients(a, b, g)
            xi, xi1, xi2 = rng.uniform(-50, 50, size=3)
            phi1 = phase_phi(c, xi, xi1)
            phi2 = phase_phi(c, xi - xi1 + xi2, xi2)
            scale = 1.0 + abs(phi1) + abs(phi2)
            assert abs(phase_psi(c, xi, xi1, xi2) - (phi1 - phi2)) <= 1e-12 * scale

    def test_psi_independent_of_n_at_resonant_k(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            a, b, g = rng.uniform(-2, 2, size=3)
            if min(abs(a), abs(b), abs(g)) < 1e-2:
                continue
            c = Coefficients(a, b, g)
            k = g / a
            eps, eps1, eps2 = rng.uniform(0, 1, size=3)
            vals = [phase_psi(c, k * n + eps, n + eps1, n + eps2) for n in (10.0, 1e3, 1e6)]
            for v in vals[1:]:
                assert abs(v - vals[0]) <= 1e-9 * (1.0 + abs(vals[0]))

    def test_three_wave_phase(self):
        assert three_wave_phase(2.0, (1, 0), (-1, 0), (0, 0)) == 0.0
        assert three_wave_phase(2.0, (2, 0), (0, 1), (-2, -1)) == -7.0
        assert three_wave_phase(3.0, (1, 1), (1, -1), (-2, 0)) == -12.0

    def test_three_wave_phase_rejects_nonzero_sum(self):
        with pytest.raises(ValueError):
            three_wave_phase(2.0, (1, 0), (1, 0), (1, 0))
