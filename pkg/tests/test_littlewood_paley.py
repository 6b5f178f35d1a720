import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from micropolar import littlewood_paley as lp
from micropolar import spectral
from micropolar.littlewood_paley import BesovSpec, DyadicPartition, NormSeries
from micropolar.spectral import Grid3


def _mean_free(grid, rng, band=True):
    f = spectral.random_real_field(grid, rng)
    f[0, 0, 0] = 0.0
    return spectral.dealias(grid, f) if band else f


def _cos_mode(grid, k):
    c = grid.zeros()
    c[grid.mode_index(k)] += 0.5
    c[grid.mode_index([-x for x in k])] += 0.5
    return c


@pytest.fixture(scope="module")
def part32():
    return DyadicPartition(Grid3(32))


class TestProfiles:
    def test_chi_plateaus(self):
        assert np.all(lp.chi_profile([0.0, 0.5, 0.75]) == 1.0)
        assert np.all(lp.chi_profile([4 / 3, 2.0]) == 0.0)

    def test_phi_support(self):
        r = np.linspace(0, 4, 4001)
        phi = lp.phi_profile(r)
        assert np.all(phi[(r < 0.75) | (r > 8 / 3)] == 0.0)
        assert np.all(phi >= 0)

    @settings(max_examples=50, deadline=None)
    @given(r=st.floats(1e-3, 1e3))
    def test_telescoping_sum(self, r):
        total = sum(lp.phi_profile(r * 2.0**-j) for j in range(-12, 14))
        assert total == pytest.approx(1.0, abs=1e-14)


class TestPartition:
    def test_partition_of_unity(self, part32):
        s = part32.partition_sum()
        s[0, 0, 0] = 1.0
        assert np.max(np.abs(s - 1)) < 1e-10

    def test_block_range_checked(self, part32):
        with pytest.raises(ValueError):
            part32.weight(part32.j_max + 1)

    def test_shell_weight_matches_grid_weight(self, part32):
        for j in part32.levels:
            w = part32.shell_weight(j)[part32.shell_index].reshape(part32.grid.shape)
            assert np.allclose(w, part32.weight(j), atol=1e-15)

    def test_reconstruction(self, part32, rng):
        f = _mean_free(part32.grid, rng, band=False)
        total = sum(lp.dyadic_block(part32, f, j) for j in part32.levels)
        assert np.max(np.abs(total - f)) < 1e-10 * np.max(np.abs(f))

    def test_frequency_split_sums(self, part32, rng):
        f = _mean_free(part32.grid, rng)
        low, high = lp.frequency_split(part32, f, 1)
        assert np.allclose(low + high, f)
        low_ref = sum(lp.dyadic_block(part32, f, j) for j in part32.levels if j <= 1)
        assert np.allclose(low, low_ref, atol=1e-14)


class TestNorms:
    def test_single_mode_block_norms(self, part32):
        # |k| = 3 lies in blocks 1 and 2 only
        f = _cos_mode(part32.grid, (0, 0, 3))
        norms = lp.block_norms(part32, f, 2.0)
        for j, v in norms.items():
            assert v == pytest.approx(float(lp.phi_profile(3 * 2.0**-j)) * np.sqrt(0.5), abs=1e-15)

    def test_besov_single_mode(self, part32):
        f = _cos_mode(part32.grid, (0, 3, 0))
        phi = {j: float(lp.phi_profile(3 * 2.0**-j)) for j in part32.levels}
        for s, q in [(0.0, 1.0), (1.0, 2.0), (-0.5, np.inf)]:
            vals = [2.0 ** (j * s) * phi[j] * np.sqrt(0.5) for j in part32.levels]
            ref = max(vals) if np.isinf(q) else np.sum(np.array(vals) ** q) ** (1 / q)
            assert lp.besov_norm(part32, f, BesovSpec(s, 2, q)) == pytest.approx(ref, rel=1e-12)

    def test_p2_fast_path_matches_physical(self, part32, rng):
        f = _mean_free(part32.grid, rng)
        fast = lp.block_norms(part32, f, 2.0)
        for j in part32.levels:
            slow = spectral.lp_norm_physical(spectral.to_physical_real(part32.weight(j) * f), 2)
            assert fast[j] == pytest.approx(slow, rel=1e-10, abs=1e-15)

    def test_low_high_split_consistent(self, part32, rng):
        f = _mean_free(part32.grid, rng)
        spec = BesovSpec(0.5, 2, 1, cutoff_j0=1)
        total = lp.besov_norm(part32, f, BesovSpec(0.5, 2, 1))
        assert lp.besov_norm(part32, f, spec, "low") + lp.besov_norm(part32, f, spec, "high") == pytest.approx(total)

    def test_requires_cutoff(self, part32, rng):
        with pytest.raises(ValueError):
            lp.besov_norm(part32, _mean_free(part32.grid, rng), BesovSpec(0), "low")

    def test_requires_mean_free(self, part32):
        f = part32.grid.zeros()
        f[0, 0, 0] = 1.0
        with pytest.raises(ValueError):
            lp.besov_norm(part32, f, BesovSpec(0))

    def test_bad_exponents(self):
        with pytest.raises(ValueError):
            BesovSpec(0, 0.5, 1)

    def test_lq_sum(self):
        assert lp.lq_sum([3, 4], 2) == pytest.approx(5.0)
        assert lp.lq_sum([3, 4], np.inf) == 4.0
        assert lp.lq_sum([], 1) == 0.0

    def test_block_table_csv(self, part32, rng, tmp_path):
        rows = lp.block_table(part32, _mean_free(part32.grid, rng), BesovSpec(1.0))
        lp.write_block_table(tmp_path / "t.csv", rows)
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "j,2^j,block_Lp,weighted" and len(lines) == len(rows) + 1


class TestTimeNorms:
    def test_chemin_lerner_below_time_lebesgue(self, part32, rng):
        # Minkowski: taking the time norm inside the l^q sum gives the larger value when rho >= q
        snaps = [_mean_free(part32.grid, rng) * np.exp(-t) for t in np.linspace(0, 1, 6)]
        times = np.linspace(0, 1, 6)
        spec = BesovSpec(0.0, 2, 1)
        cl = lp.chemin_lerner_norm(part32, snaps, times, 2.0, spec)
        tl = lp.time_lebesgue_besov_norm(part32, snaps, times, 2.0, spec)
        assert tl <= cl * (1 + 1e-12)

    def test_equal_when_rho_equals_q(self, part32, rng):
        snaps = [_mean_free(part32.grid, rng) for _ in range(4)]
        times = [0.0, 0.3, 0.5, 1.0]
        spec = BesovSpec(0.0, 2, np.inf)
        a = lp.chemin_lerner_norm(part32, snaps, times, np.inf, spec)
        b = lp.time_lebesgue_besov_norm(part32, snaps, times, np.inf, spec)
        assert a == pytest.approx(b, rel=1e-14)

    def test_times_must_increase(self, part32, rng):
        f = _mean_free(part32.grid, rng)
        with pytest.raises(ValueError):
            lp.chemin_lerner_norm(part32, [f, f], [1.0, 0.5], 2.0, BesovSpec(0))


class TestProducts:
    def test_bony_identity(self, part32, rng):
        for _ in range(3):
            a, b = _mean_free(part32.grid, rng), _mean_free(part32.grid, rng)
            t_ab, r, t_ba = lp.bony_decompose(part32, a, b)
            ref = lp.dealiased_product(part32.grid, a, b)
            assert np.max(np.abs(t_ab + r + t_ba - ref)) < 1e-10 * np.max(np.abs(ref))

    def test_paraproduct_of_low_and_high_mode(self, part32):
        # low-frequency a times high-frequency b is entirely T_a b
        g = part32.grid
        a, b = _cos_mode(g, (1, 0, 0)), _cos_mode(g, (0, 0, 8))
        t_ab, r, t_ba = lp.bony_decompose(part32, a, b)
        assert np.max(np.abs(r)) < 1e-14 and np.max(np.abs(t_ba)) < 1e-14
        assert np.allclose(t_ab, lp.dealiased_product(g, a, b), atol=1e-14)

    def test_rejects_unpadded(self, part32, rng):
        a = _mean_free(part32.grid, rng, band=False)
        with pytest.raises(ValueError, match="padding"):
            lp.bony_decompose(part32, a, a)


class TestInequalities:
    @pytest.mark.parametrize("j", [0, 1, 2])
    def test_bernstein_l2(self, part32, rng, j):
        f = part32.weight(j) * spectral.random_real_field(part32.grid, rng)
        ratio = lp.bernstein_ratio(part32, f, j, 2.0)
        assert 0.75 <= ratio <= 8 / 3

    def test_interpolation_holds(self, part32, rng):
        f = _mean_free(part32.grid, rng)
        rep = lp.interpolation_check(part32, f, -1.0, 1.0, 0.4)
        assert rep["holds"] and rep["ratio"] <= 1

    def test_interpolation_arguments(self, part32, rng):
        f = _mean_free(part32.grid, rng)
        with pytest.raises(ValueError):
            lp.interpolation_check(part32, f, 1.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            lp.interpolation_check(part32, f, 0.0, 1.0, 1.5)

    def test_embedding_trivial_case(self, part32, rng):
        f = _mean_free(part32.grid, rng)
        assert lp.embedding_constant(part32, f, 0.5, 2, 2, 1, 1) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            lp.embedding_constant(part32, f, 0.5, 4, 2, 1, 1)


class TestNormSeries:
    def test_csv_round_trip(self, tmp_path):
        s = NormSeries()
        for t in (0.5, 1.0, 2.0):
            s.append(t, {"a": t**-1, "b": 1 / 3})
        s.to_csv(tmp_path / "s.csv")
        back = NormSeries.from_csv(tmp_path / "s.csv")
        assert back.times == s.times and back.values == s.values

    def test_rejects_bad_records(self):
        s = NormSeries()
        s.append(1.0, {"a": 1.0})
        with pytest.raises(ValueError):
            s.append(0.5, {"a": 1.0})
        with pytest.raises(ValueError):
            s.append(2.0, {"a": -1.0})
        with pytest.raises(ValueError):
            s.append(2.0, {"b": 1.0})
