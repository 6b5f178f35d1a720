import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from micropolar import gevrey, spectral
from micropolar.gevrey import GevreyNorm
from micropolar.littlewood_paley import BesovSpec, DyadicPartition
from micropolar.spectral import Grid3


@pytest.fixture(scope="module")
def part32():
    return DyadicPartition(Grid3(32))


def _cos_mode(grid, k):
    c = grid.zeros()
    c[grid.mode_index(k)] += 0.5
    c[grid.mode_index([-x for x in k])] += 0.5
    return c


class TestGevreyNorm:
    def test_single_mode(self, grid16):
        f = _cos_mode(grid16, (1, 2, 2))
        assert gevrey.gevrey_norm(grid16, f, GevreyNorm(0.2)) == pytest.approx(np.exp(0.6) * np.sqrt(0.5))
        assert gevrey.gevrey_norm(grid16, f, GevreyNorm(0.2, "l1")) == pytest.approx(np.exp(1.0) * np.sqrt(0.5))

    def test_besov_inner(self, grid16):
        f = _cos_mode(grid16, (0, 0, 3))
        part = DyadicPartition(grid16)
        spec = BesovSpec(0.0, 2, 1)
        ref = np.exp(0.3) * gevrey.besov_norm(part, f, spec)
        assert gevrey.gevrey_norm(grid16, f, GevreyNorm(0.1, inner=spec), part) == pytest.approx(ref)

    def test_validation(self):
        with pytest.raises(ValueError):
            GevreyNorm(-1.0)
        with pytest.raises(ValueError):
            GevreyNorm(1.0, "l3")

    def test_overflow_guard(self, grid16, rng):
        f = spectral.random_real_field(grid16, rng)
        with pytest.raises(gevrey.GevreyOverflowError):
            gevrey.gevrey_multiply(grid16, f, 100.0)

    def test_guard_uses_support(self, grid16):
        f = _cos_mode(grid16, (1, 0, 0))
        assert np.isfinite(gevrey.gevrey_multiply(grid16, f, 500.0)).all()
        assert np.all(gevrey.gevrey_multiply(grid16, grid16.zeros(), 1e6) == 0)


class TestRadiusFit:
    @settings(max_examples=20, deadline=None)
    @given(a=st.floats(0.05, 1.0))
    def test_exact_exponential(self, a):
        g = Grid3(32)
        fit = gevrey.radius_fit(g, np.exp(-a * g.xi_norm) + 0j, (2, 10))
        assert fit.radius_estimate == pytest.approx(a, abs=1e-9)
        assert fit.residual < 1e-9

    def test_gevrey_multiplier_shrinks_radius(self, grid32):
        f = np.exp(-0.5 * grid32.xi_norm) + 0j
        g = spectral.apply_symbol(grid32, f, "gevrey_l2", 0.2)
        assert gevrey.radius_fit(grid32, g, (2, 10)).radius_estimate == pytest.approx(0.3)

    def test_clipped_at_zero(self, grid32):
        f = np.exp(0.1 * grid32.xi_norm) + 0j
        assert gevrey.radius_fit(grid32, f, (2, 10)).radius_estimate == 0.0

    def test_vector_field(self, grid32):
        f = np.stack([np.exp(-0.4 * grid32.xi_norm)] * 3) + 0j
        assert gevrey.radius_fit(grid32, f, (2, 10)).radius_estimate == pytest.approx(0.4)

    def test_errors(self, grid32):
        with pytest.raises(ValueError):
            gevrey.radius_fit(grid32, grid32.zeros(), (2, 10))
        with pytest.raises(ValueError, match="degenerate"):
            gevrey.radius_fit(grid32, np.ones(grid32.shape) + 0j, (2, 10))


class TestSmoothing:
    def test_constant_value(self):
        assert gevrey.smoothing_constant(1.0) == pytest.approx(2 + 8 / (1 - np.exp(-1 / 8)))
        assert gevrey.smoothing_constant(1.0) == pytest.approx(70.08, abs=0.01)
        with pytest.raises(ValueError):
            gevrey.smoothing_constant(0.0)

    @pytest.mark.parametrize("which", ["low", "high"])
    def test_inequality_holds(self, part32, which):
        rep = gevrey.smoothing_constant_check(part32, 2.0, 1.0, trials=4, which=which)
        assert rep["holds"] and 0 < rep["worst_ratio"] <= rep["C_m"]

    def test_fields_live_where_claimed(self, part32, rng):
        low = gevrey.random_low_field(part32, 1, rng)
        high = gevrey.random_high_field(part32, 1, rng)
        assert np.all(low[part32.grid.xi_norm > 2 ** 2 * 4 / 3] == 0)
        assert np.all(high[part32.grid.xi_norm < 2 ** 1 * 3 / 4] == 0)


class TestEquivalence:
    def test_zero_radius(self, part32):
        rep = gevrey.multiplier_equiv_check(part32, 0.0, 1, trials=2)
        assert rep["inv_C1"] == pytest.approx(1.0) and rep["C2"] == pytest.approx(1.0)

    def test_pointwise_bounds(self, part32):
        # |xi| <= |xi|_1 <= sqrt(3)|xi| makes both constants at most 1
        rep = gevrey.multiplier_equiv_check(part32, 0.5, 2, trials=3, c1=1 / np.sqrt(3), c2=1.0)
        assert rep["inv_C1"] <= 1 + 1e-12 and rep["C2"] <= 1 + 1e-12
        assert 1 / np.sqrt(3) <= rep["best_c1"] + 1e-8 and rep["best_c2"] <= 1.0

    def test_bisect(self):
        assert gevrey._bisect(lambda x: x < 0.3, 0.0, 1.0) == pytest.approx(0.3)


class TestBilinear:
    def test_collinear_exponents(self):
        xi = np.array([[1.0, 0, 0]])
        eta = np.array([[4.0, 0, 0]])
        assert gevrey.bilinear_exponent(xi, eta, 1, 1, 1)[0] == pytest.approx(0.0)
        assert gevrey.bilinear_exponent(xi, -eta, 1, 1, 1)[0] == pytest.approx(-2.0)
        assert gevrey.bilinear_exponent(xi, eta, 1, 1, 2)[0] == pytest.approx(-4.0)

    def test_exponent_negativity_fails_below_threshold(self):
        rep = gevrey.bilinear_symbol_check([1.0], 1.0, 1.0, 1.5, 0, 2, 400)
        assert not rep["exponent_ok"] and "violation" in rep

    def test_bounds_at_threshold(self):
        rep = gevrey.bilinear_symbol_check([0.1, 1.0, 10.0], 1.0, 1.0, 2.0, 0, 2, 400)
        assert rep["passed"]
        assert all(r["xi_bound"] <= 16 and r["eta_bound"] <= 16 for r in rep["rows"])

    def test_scan_reproducible(self):
        a = gevrey.c2_threshold_scan(1.0, 1.0, [1.0, 1.5, 2.0, 3.0], 0, 2, sample_density=300)
        b = gevrey.c2_threshold_scan(1.0, 1.0, [3.0, 2.0, 1.5, 1.0], 0, 2, sample_density=300)
        assert a["smallest_c2"] == b["smallest_c2"] == 2.0

    def test_block_separation_required(self):
        with pytest.raises(ValueError):
            gevrey.bilinear_symbol_check([1.0], 1, 1, 2, 1, 2)
