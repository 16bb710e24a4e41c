import numpy as np
import pytest

from qdnls.estimates.lattice import (
    BlockSpec,
    LatticeFunction,
    block_l2_norm,
    block_product_norm,
    block_product_norms_batch,
    block_support,
    dense_product_norm,
    synthesize_block,
    xsb_norm,
    xsb_norm_dyadic,
)


def single_point_function(dtau, dxi, block, it, ix, iy, value):
    return LatticeFunction(
        dtau, dxi, block,
        xi_idx=np.array([[ix, iy]], dtype=np.int64),
        tau_start=np.array([it], dtype=np.int64),
        win=np.array([[value]], dtype=complex),
    )


class TestBlockSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            BlockSpec(3, 1, 1.0)
        with pytest.raises(ValueError):
            BlockSpec(4, 5, 1.0)
        with pytest.raises(ValueError):
            BlockSpec(4, 1, 0.0)
        with pytest.raises(ValueError):
            BlockSpec(4, 1, 1.0, sector=(32, 0))
        with pytest.raises(ValueError):
            BlockSpec(4, 1, 1.0, sector=(64, 64))

    def test_support_resolvability(self):
        with pytest.raises(ValueError):
            block_support(BlockSpec(4, 1, 1.0), dtau=0.25, dxi=2.0)
        with pytest.raises(ValueError):
            block_support(BlockSpec(4, 1, 1.0), dtau=2.0, dxi=0.5)
        with pytest.raises(ValueError):
            # sectors of aperture 4pi/64 at radius 4 are thinner than the cells
            block_support(BlockSpec(4, 1, 1.0, sector=(64, 3)), dtau=0.25, dxi=1.0)


class TestSynthesize:
    def test_deterministic_for_seed(self):
        spec = BlockSpec(4, 2, 1.0)
        a = synthesize_block(spec, 0.5, 0.5, np.random.default_rng(42))
        b = synthesize_block(spec, 0.5, 0.5, np.random.default_rng(42))
        assert np.array_equal(a.win, b.win)
        assert np.array_equal(a.xi_idx, b.xi_idx)

    def test_normalized(self):
        spec = BlockSpec(8, 4, -2.0)
        f = synthesize_block(spec, 1.0, 1.0, np.random.default_rng(0))
        assert block_l2_norm(f) == pytest.approx(1.0, rel=1e-12)

    def test_support_constraints_hold(self):
        spec = BlockSpec(4, 2, 1.5, sector=None)
        f = synthesize_block(spec, 0.5, 0.5, np.random.default_rng(1))
        xi = f.xi_idx * f.dxi
        mag_sq = xi[:, 0] ** 2 + xi[:, 1] ** 2
        assert np.all((mag_sq >= 16) & (mag_sq < 64))
        taus = (f.tau_start[:, None] + np.arange(f.win.shape[1])[None, :]) * f.dtau
        theta = taus + 1.5 * mag_sq[:, None]
        nonzero = f.win != 0
        assert np.all(np.abs(theta[nonzero]) >= 2)
        assert np.all(np.abs(theta[nonzero]) < 4)

    def test_sector_block_confined(self):
        spec = BlockSpec(32, 1, 1.0, sector=(64, 10))
        f = synthesize_block(spec, 0.5, 0.5, np.random.default_rng(2))
        xi = f.xi_idx * f.dxi
        theta = np.arctan2(xi[:, 1], xi[:, 0])
        s = 64 * theta / np.pi
        dist = np.mod(s - 10, 64)
        dist = np.minimum(dist, 64 - dist)
        assert np.all(dist < 2.0)

    def test_patch_confines_support(self):
        spec = BlockSpec(8, 1, 1.0)
        f = synthesize_block(spec, 0.5, 1.0, np.random.default_rng(3),
                             patch=((12.0, 0.0), 4.0))
        xi = f.xi_idx * f.dxi
        assert np.all(np.abs(xi[:, 0] - 12.0) <= 2.0)
        assert np.all(np.abs(xi[:, 1]) <= 2.0)
        assert block_l2_norm(f) == pytest.approx(1.0, rel=1e-12)

    def test_off_support_values_rejected(self):
        spec = BlockSpec(4, 1, 1.0)
        with pytest.raises(ValueError):
            single_point_function(0.5, 0.5, spec, it=0, ix=100, iy=0, value=1.0)


class TestXsbNorm:
    def test_zero(self):
        spec = BlockSpec(4, 1, 1.0)
        f = synthesize_block(spec, 0.5, 0.5, np.random.default_rng(0)).scaled(0.0)
        assert xsb_norm(f, 0.7, 0.3) == 0.0

    def test_s0_b0_is_l2(self):
        spec = BlockSpec(4, 2, -1.0)
        f = synthesize_block(spec, 0.5, 0.5, np.random.default_rng(1))
        assert xsb_norm(f, 0.0, 0.0) == pytest.approx(block_l2_norm(f), rel=1e-12)

    def test_single_point_value(self):
        # mass m at (tau0, xi0): norm = m <xi0>^s <tau0 + sigma|xi0|^2>^b sqrt(measure)
        spec = BlockSpec(4, 2, 1.0)
        dtau, dxi = 0.5, 0.5
        ix, iy = 10, 0  # |xi| = 5
        tau0 = -(5.0**2) + 3.0  # theta = +3, inside the L=2 shell
        it = int(round(tau0 / dtau))
        m = 2.2
        f = single_point_function(dtau, dxi, spec, it, ix, iy, m)
        theta = it * dtau + 1.0 * 25.0
        expected = (
            m * (1 + 25.0) ** 0.35 * (1 + theta**2) ** 0.2
            * np.sqrt(dtau * dxi**2)
        )
        assert xsb_norm(f, 0.7, 0.4) == pytest.approx(expected, rel=1e-12)

    def test_dyadic_form_agrees_within_factor_four(self):
        # 1000 random block functions, exponents in the range the sweeps use
        rng = np.random.default_rng(7)
        supports = {}
        for _ in range(1000):
            n_block = int(2 ** rng.integers(0, 3))
            l_block = int(2 ** rng.integers(0, 3))
            sigma = float(rng.choice([1.0, -1.0, 2.0, -0.5]))
            spec = BlockSpec(n_block, l_block, sigma)
            f = synthesize_block(spec, l_block / 4.0, 0.5,
                                 np.random.default_rng(rng.integers(1 << 30)))
            s = rng.uniform(-1.0, 1.0)
            b = rng.uniform(-0.5, 0.5)
            weight = xsb_norm(f, s, b)  # asserts the factor-4 agreement itself
            dyadic = xsb_norm_dyadic(f, s, b)
            assert 0.25 * weight <= dyadic <= 4.0 * weight


class TestBlockProduct:
    def test_zero_inputs(self):
        spec1 = BlockSpec(4, 1, 1.0)
        spec2 = BlockSpec(4, 1, -1.0)
        f1 = synthesize_block(spec1, 0.5, 0.5, np.random.default_rng(0)).scaled(0.0)
        f2 = synthesize_block(spec2, 0.5, 0.5, np.random.default_rng(1))
        assert block_product_norm(f1, f2, 4) == 0.0

    def test_unreachable_output_annulus(self):
        spec1 = BlockSpec(2, 1, 1.0)
        spec2 = BlockSpec(2, 1, -1.0)
        f1 = synthesize_block(spec1, 0.5, 0.5, np.random.default_rng(0))
        f2 = synthesize_block(spec2, 0.5, 0.5, np.random.default_rng(1))
        # sums stay below |xi| < 8; the [16, 32) annulus is untouchable
        assert block_product_norm(f1, f2, 16) == 0.0

    def test_two_single_points(self):
        dtau, dxi = 0.5, 0.5
        spec1 = BlockSpec(4, 2, 1.0)
        spec2 = BlockSpec(4, 2, -1.0)
        # point 1: xi = (5, 0), theta = tau + 25 = 3  ->  tau index -44
        f1 = single_point_function(dtau, dxi, spec1, -44, 10, 0, 2.0 + 1.0j)
        # point 2: xi = (0, 4), theta = tau - 16 = 3  ->  tau index 38
        f2 = single_point_function(dtau, dxi, spec2, 38, 0, 8, 0.5 - 1.5j)
        # output: single point at the summed coordinates with the product mass
        m = dtau * dxi**2
        expected = abs((2.0 + 1.0j) * (0.5 - 1.5j)) * m**1.5
        got = block_product_norm(f1, f2, 4)  # |(5, 4)| = 6.4 in [4, 8)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_matches_dense_oracle(self):
        cases = [
            (BlockSpec(4, 2, 1.0), BlockSpec(4, 1, -1.0), 4, None, None),
            (BlockSpec(2, 1, 1.0), BlockSpec(4, 2, -2.0), 2, None, None),
            (BlockSpec(4, 1, 1.0), BlockSpec(4, 1, -1.0), 4, (2.0, 2), None),
            (BlockSpec(4, 2, 1.0), BlockSpec(4, 2, -1.0), 2, None, (64, 5)),
            (BlockSpec(4, 1, 1.0), BlockSpec(4, 1, -1.0), 1, (-1.0, 1), (64, 40)),
        ]
        for k, (spec1, spec2, n_out, mod, sector) in enumerate(cases):
            f1 = synthesize_block(spec1, 0.25, 0.5, np.random.default_rng(100 + k))
            f2 = synthesize_block(spec2, 0.25, 0.5, np.random.default_rng(200 + k))
            sparse = block_product_norm(f1, f2, n_out, out_modulation=mod, out_sector=sector)
            dense = dense_product_norm(f1, f2, n_out, out_modulation=mod, out_sector=sector)
            assert sparse == pytest.approx(dense, rel=1e-8, abs=1e-14)

    def test_batch_matches_singles(self):
        spec1 = BlockSpec(4, 1, 1.0)
        spec2 = BlockSpec(4, 2, -1.0)
        fs1 = [synthesize_block(spec1, 0.25, 0.5, np.random.default_rng(i)) for i in range(3)]
        fs2 = [synthesize_block(spec2, 0.25, 0.5, np.random.default_rng(10 + i)) for i in range(3)]
        batch = block_product_norms_batch(fs1, fs2, 4)
        singles = [block_product_norm(a, b, 4) for a, b in zip(fs1, fs2)]
        assert np.allclose(batch, singles, rtol=1e-12)

    def test_spacing_mismatch_rejected(self):
        f1 = synthesize_block(BlockSpec(4, 1, 1.0), 0.25, 0.5, np.random.default_rng(0))
        f2 = synthesize_block(BlockSpec(4, 1, -1.0), 0.25, 1.0, np.random.default_rng(1))
        with pytest.raises(ValueError):
            block_product_norm(f1, f2, 4)
