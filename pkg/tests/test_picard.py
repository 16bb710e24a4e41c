import numpy as np
import pytest

from qdnls.coeffs import Coefficients
from qdnls.picard import (
    FrequencyProfile,
    double_phase_integral,
    duhamel,
    exp_integral,
    picard_terms,
    third_iterate_kernel,
    third_iterate_profile,
)
from qdnls.spectral import Grid, free_propagate, l2_norm, zero_field

C = Coefficients(1, -1, -1)


def grid1d(n=128, length=2 * np.pi):
    return Grid(dim=1, n=n, length=length)


def field_with_modes(grid, mode_amps):
    f = zero_field(grid)
    coeffs = f.coeffs.copy()
    for m, a in mode_amps.items():
        coeffs[0, m % grid.n] = a
    return f.with_coeffs(coeffs)


class TestDuhamel:
    def test_zero_forcing(self):
        g = grid1d()
        out = duhamel(1.0, [zero_field(g)] * 8, 0.5)
        assert np.all(out.coeffs == 0.0)

    def test_time_constant_single_mode(self):
        g = grid1d()
        sigma, t, m = 2.0, 0.4, 5
        xi0 = g.xi_1d()[m]
        forcing = [field_with_modes(g, {m: 1.0}) for _ in range(16)]
        out = duhamel(sigma, forcing, t)
        expected = np.exp(-1j * t * sigma * xi0**2) * (
            (np.exp(1j * t * sigma * xi0**2) - 1.0) / (1j * sigma * xi0**2)
        )
        assert out.coeffs[0, m] == pytest.approx(expected, rel=1e-12)

    def test_resonant_mode_gives_t(self):
        g = grid1d()
        t = 0.7
        forcing = [field_with_modes(g, {0: 1.0}) for _ in range(16)]
        out = duhamel(3.0, forcing, t)
        assert out.coeffs[0, 0] == pytest.approx(t, rel=1e-12)

    def test_errors(self):
        g = grid1d()
        with pytest.raises(ValueError):
            duhamel(1.0, [], 0.5)
        with pytest.raises(ValueError):
            duhamel(1.0, [zero_field(g)], -0.1)

    def test_gauge_covariance(self):
        g = grid1d()
        rng = np.random.default_rng(0)
        sigma, t, s = 1.5, 0.3, 0.8
        forcing = [
            field_with_modes(g, {m: rng.standard_normal() + 1j * rng.standard_normal()
                                 for m in range(-6, 7)})
            for _ in range(12)
        ]
        a = free_propagate(duhamel(sigma, forcing, t), sigma, s)
        b = duhamel(sigma, [free_propagate(f, sigma, s) for f in forcing], t)
        assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-10 * np.max(np.abs(a.coeffs))


def composite_gl(t, panels=300, order=12):
    """Composite Gauss-Legendre rule on [0, t]: resolves strongly oscillatory phases."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, t, panels + 1)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * (x + 1.0) + a)
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


class TestExpIntegrals:
    def test_exp_integral_against_quadrature(self):
        for theta in [0.0, 1e-9, 1e-5, 0.3, -40.0, 2000.0]:
            t = 0.73
            nodes, weights = composite_gl(t)
            ref = np.sum(weights * np.exp(1j * theta * nodes))
            assert exp_integral(t, theta) == pytest.approx(ref, abs=1e-12 * (1 + abs(ref)))

    def test_double_phase_integral_against_quadrature(self):
        t = 0.11
        nodes, weights = composite_gl(t)
        for phi1, phi2 in [(3.0, 7.0), (120.0, -250.0), (0.0, 1500.0), (40.0, 1e-6),
                           (2.0, 0.0), (-17.0, 3e-5), (600.0, 599.0)]:
            inner = (1.0 - np.exp(-1j * np.asarray(phi2) * nodes)) / (1j * phi2) \
                if abs(t * phi2) > 1e-12 else nodes.copy()
            ref = np.sum(weights * np.exp(1j * phi1 * nodes) * inner)
            val = complex(double_phase_integral(t, phi1, phi2))
            assert val == pytest.approx(ref, abs=1e-10 * (1 + abs(ref)))

    def test_moment_recursion_stable_near_threshold(self):
        # frozen 30-digit quadrature values; the naive upward recursion loses
        # about 12 digits here, the series branch must not
        from qdnls.picard import _exp_moments

        e4 = complex(_exp_moments(0.1, np.array([0.11]), 4)[4][0])
        assert e4 == pytest.approx(
            0.00000199991357210639382 + 0.0000000183330560430087613j, rel=1e-13
        )
        e7 = complex(_exp_moments(0.1, np.array([0.011]), 7)[7][0])
        assert e7 == pytest.approx(
            0.00000000124999939500005139 + 1.22222202055556642e-12j, rel=1e-13
        )

    def test_double_phase_integral_resonant_corner(self):
        # both phases small: the branch-combination worst case, frozen oracle
        got = complex(double_phase_integral(0.1, 1e-3, 9e-4))
        assert got == pytest.approx(
            0.0049999999953750005567 + 0.00000018333333324075004j, rel=1e-12
        )
        got = complex(double_phase_integral(0.1, 0.05, 1e-6))
        assert got == pytest.approx(
            0.0049999687506683974030 + 0.0000166664583346205209j, rel=1e-12
        )

    def test_split_pieces_recombine(self):
        t, phi1, phi2 = 0.1, 55.0, 6000.0
        both = complex(double_phase_integral(t, phi1, phi2))
        first = complex(double_phase_integral(t, phi1, phi2, include_second=False))
        second = complex(double_phase_integral(t, phi1, phi2, include_first=False))
        assert both == pytest.approx(first + second, rel=1e-12)

    def test_split_at_resonance_rejected(self):
        with pytest.raises(ValueError):
            double_phase_integral(0.1, 5.0, 1e-9, include_second=False)


class TestPicardTerms:
    def test_all_zero_data(self):
        g = grid1d()
        terms = picard_terms(C, zero_field(g), zero_field(g), zero_field(g), 3, 0.2)
        assert all(np.all(t.field.coeffs == 0.0) for t in terms)

    def test_vanishing_chain_with_zero_v0(self):
        g = grid1d()
        rng = np.random.default_rng(2)
        u0 = field_with_modes(g, {m: complex(*rng.standard_normal(2)) for m in range(-5, 6)})
        w0 = field_with_modes(g, {m: complex(*rng.standard_normal(2)) for m in range(-5, 6)})
        terms = picard_terms(C, u0, zero_field(g), w0, 3, 0.1, nodes=8)
        by_key = {(t.role, t.order): t.field for t in terms}
        for key in (("v", 1), ("u", 2), ("w", 2), ("v", 3)):
            assert np.all(by_key[key].coeffs == 0.0)
        assert l2_norm(by_key[("v", 2)]) > 0
        assert l2_norm(by_key[("u", 3)]) > 0

    def test_order_homogeneity(self):
        g = grid1d(n=64)
        rng = np.random.default_rng(3)

        def data(scale):
            make = lambda seed_shift: field_with_modes(
                g,
                {m: scale * complex(*np.random.default_rng(100 + seed_shift + m).standard_normal(2))
                 for m in range(-4, 5)},
            )
            return make(0), make(50), make(90)

        eps = 1e-3
        t1 = picard_terms(C, *data(1.0), 4, 0.05, nodes=8)
        t2 = picard_terms(C, *data(eps), 4, 0.05, nodes=8)
        n1 = {(t.role, t.order): l2_norm(t.field) for t in t1}
        n2 = {(t.role, t.order): l2_norm(t.field) for t in t2}
        for (role, order), norm in n1.items():
            if norm > 1e-12:
                assert n2[(role, order)] == pytest.approx(eps**order * norm, rel=1e-10)

    def test_multilinearity_in_each_datum(self):
        g = grid1d(n=64)
        rng = np.random.default_rng(4)
        u0 = field_with_modes(g, {m: complex(*rng.standard_normal(2)) for m in range(-3, 4)})
        w0 = field_with_modes(g, {m: complex(*rng.standard_normal(2)) for m in range(-3, 4)})
        base = picard_terms(C, u0, zero_field(g), w0, 3, 0.05, nodes=8)
        scaled_u = picard_terms(C, u0.with_coeffs(2 * u0.coeffs), zero_field(g), w0, 3, 0.05, nodes=8)
        get = lambda terms, role, order: next(
            t.field for t in terms if t.role == role and t.order == order
        )
        # u3 = I(dx w1 * v2) is degree 1 in u0 and degree 2 in w0
        assert l2_norm(get(scaled_u, "u", 3)) == pytest.approx(
            2 * l2_norm(get(base, "u", 3)), rel=1e-10
        )
        scaled_w = picard_terms(C, u0, zero_field(g), w0.with_coeffs(3 * w0.coeffs), 3, 0.05, nodes=8)
        assert l2_norm(get(scaled_w, "u", 3)) == pytest.approx(
            9 * l2_norm(get(base, "u", 3)), rel=1e-10
        )

    def test_multilinearity_in_v_datum(self):
        g = grid1d(n=64)
        rng = np.random.default_rng(6)
        mk = lambda: field_with_modes(g, {m: complex(*rng.standard_normal(2))
                                          for m in range(-3, 4)})
        u0, v0, w0 = mk(), mk(), mk()
        get = lambda terms, role, order: next(
            t.field for t in terms if t.role == role and t.order == order
        )
        base = picard_terms(C, u0, v0, w0, 2, 0.05, nodes=8)
        scaled = picard_terms(C, u0, v0.with_coeffs(3 * v0.coeffs), w0, 2, 0.05, nodes=8)
        # u2 = I(dx w1 * v1) is degree 1 in v0
        assert l2_norm(get(scaled, "u", 2)) == pytest.approx(
            3 * l2_norm(get(base, "u", 2)), rel=1e-10
        )

    def test_rejects_bad_inputs(self):
        g = grid1d()
        g2 = Grid(dim=2, n=16, length=2 * np.pi)
        z = zero_field(g)
        with pytest.raises(ValueError):
            picard_terms(C, z, z, z, 5, 0.1)
        with pytest.raises(ValueError):
            picard_terms(C, zero_field(g2), zero_field(g2), zero_field(g2), 3, 0.1)
        with pytest.raises(ValueError):
            picard_terms(C, z, z, zero_field(grid1d(n=64)), 3, 0.1)


class TestThirdIterateKernel:
    def test_zero_w0(self):
        prof_u = FrequencyProfile.from_indicator(0.125, -16.0, -15.0, 4.0)
        prof_w = FrequencyProfile(0.125, np.array([128]), np.array([0.0 + 0j]))
        out = third_iterate_profile(C, prof_u, prof_w, 0.1)
        assert np.all(out.amp == 0.0)

    def test_agreement_with_recursive_path(self):
        # compact random data; both paths share the grid's frequency lattice
        n, length = 256, 2 * np.pi
        g = grid1d(n=n, length=length)
        rng = np.random.default_rng(5)
        u_idx = np.arange(-14, -6)
        w_idx = np.arange(6, 14)
        u_amp = rng.standard_normal(u_idx.size) + 1j * rng.standard_normal(u_idx.size)
        w_amp = rng.standard_normal(w_idx.size) + 1j * rng.standard_normal(w_idx.size)
        u0 = field_with_modes(g, dict(zip(u_idx.tolist(), u_amp)))
        w0 = field_with_modes(g, dict(zip(w_idx.tolist(), w_amp)))
        t = 0.02
        terms = picard_terms(C, u0, zero_field(g), w0, 3, t, nodes=48)
        u3_grid = next(tm.field for tm in terms if tm.role == "u" and tm.order == 3)

        dxi = g.dxi
        prof = third_iterate_profile(
            C,
            FrequencyProfile(dxi, u_idx.astype(np.int64), u_amp.astype(complex)),
            FrequencyProfile(dxi, w_idx.astype(np.int64), w_amp.astype(complex)),
            t,
        )
        scale = np.max(np.abs(prof.amp))
        for m, a in zip(prof.index, prof.amp):
            assert abs(u3_grid.coeffs[0, int(m) % n] - a) < 1e-6 * scale
        # and the grid path has no mass off the predicted window
        grid_idx = (np.fft.fftfreq(n) * n).astype(int)
        off_window = ~np.isin(grid_idx, prof.index)
        assert np.max(np.abs(u3_grid.coeffs[0][off_window])) < 1e-10 * scale

    def test_inflation_data_support(self):
        # indicator data: output confined to [k*N - 1, k*N + 2]
        n_freq, s, dxi = 16.0, -0.5, 0.125
        k = C.gamma / C.alpha  # -1
        amp = n_freq**-s
        u0 = FrequencyProfile.from_indicator(dxi, k * n_freq, k * n_freq + 1.0, amp)
        w0 = FrequencyProfile.from_indicator(dxi, n_freq, n_freq + 1.0, amp)
        prof = third_iterate_profile(C, u0, w0, 0.1)
        xi = prof.xi
        assert xi.min() >= k * n_freq - 1.0 - 1e-12
        assert xi.max() <= k * n_freq + 2.0 + 1e-12
        assert np.max(np.abs(prof.amp)) > 0
        assert third_iterate_kernel(C, u0, w0, 0.1, k * n_freq - 2.0) == 0.0

    def test_kernel_point_evaluation_matches_profile(self):
        dxi = 0.25
        u0 = FrequencyProfile.from_indicator(dxi, -8.0, -7.0, 2.0)
        w0 = FrequencyProfile.from_indicator(dxi, 8.0, 9.0, 2.0)
        prof = third_iterate_profile(C, u0, w0, 0.05)
        mid = prof.index[prof.amp.argmax()]
        val = third_iterate_kernel(C, u0, w0, 0.05, float(mid) * dxi)
        assert val == pytest.approx(complex(prof.amp[prof.index == mid][0]), rel=1e-12)
