import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from micropolar import linear, spectral
from micropolar.littlewood_paley import DyadicPartition
from micropolar.spectral import Grid3, State, Viscosities

visc_st = st.tuples(*[st.floats(0.05, 5.0)] * 4).map(lambda v: Viscosities(*v))


def _state(grid, rng, band=None):
    u = spectral.leray_project(grid, spectral.random_real_field(grid, rng, vector=True))
    om = spectral.random_real_field(grid, rng, vector=True)
    u[:, 0, 0, 0] = om[:, 0, 0, 0] = 0.0
    if band is not None:
        keep = grid.xi_norm <= band
        u, om = u * keep, om * keep
    return State(grid, u, om)


class TestSpectrum:
    def test_normalized_unit_frequency(self):
        ev = linear.eigenvalues(1.0, Viscosities.normalized())
        assert float(ev.lambda_plus) == pytest.approx(2 + np.sqrt(2), rel=1e-14)
        assert float(ev.lambda_minus) == pytest.approx(2 - np.sqrt(2), rel=1e-14)

    @settings(max_examples=200, deadline=None)
    @given(xi=st.floats(0.0, 50.0), v=visc_st)
    def test_matches_dense_eigensolver(self, xi, v):
        ev = linear.eigenvalues(xi, v)
        ref = np.sort(np.linalg.eigvals(linear.SymbolMatrix(xi, v).entries).real)
        got = np.array([float(ev.lambda_minus), float(ev.lambda_plus)])
        assert not ev.complex_pair
        assert np.allclose(got, ref, rtol=1e-10, atol=1e-12 * max(ref.max(), 1e-300))

    def test_small_frequency_no_cancellation(self):
        v = Viscosities.normalized()
        lm = float(linear.eigenvalues(1e-6, v).lambda_minus)
        assert lm == pytest.approx(v.nu * 1e-12, rel=1e-6)

    def test_trace_and_determinant(self):
        v = Viscosities(0.3, 0.7, 1.2, 0.4)
        m = linear.SymbolMatrix(2.0, v)
        assert m.trace == pytest.approx(np.trace(m.entries))
        assert m.determinant == pytest.approx(np.linalg.det(m.entries))

    def test_negative_frequency_rejected(self):
        with pytest.raises(ValueError):
            linear.eigenvalues(-1.0, Viscosities.normalized())

    def test_asymptotic_ratios(self):
        rep = linear.asymptotics_report(Viscosities.normalized(), np.geomspace(1e-3, 1e3, 121))
        assert rep["passed"]
        assert set(rep["checks"]) >= {"low_plus", "low_minus", "high_product"}

    def test_asymptotic_grid_span(self):
        with pytest.raises(ValueError):
            linear.asymptotics_report(Viscosities.normalized(), np.geomspace(1, 100, 10))


class TestPropagator:
    v = Viscosities(0.7, 0.4, 1.3, 0.9)

    def test_against_mp_dense_oracle(self, rng):
        g = Grid3(8)
        s = _state(g, rng)
        u, om = linear.propagate_fields(g, s.u, s.omega, 1.0, self.v)
        for idx in [(1, 2, 3), (0, 1, 0), (3, 3, 1), (7, 2, 5)]:
            xi = np.array([g.k1d[i] * g.dk for i in idx])
            sl = (slice(None),) + idx
            ru, rw = linear.dense_mode_propagate(xi, s.u[sl], s.omega[sl], 1.0, self.v, dps=20)
            scale = np.max(np.abs(np.concatenate([ru, rw])))
            assert np.max(np.abs(np.concatenate([u[sl] - ru, om[sl] - rw]))) < 1e-12 * scale

    def test_dense_oracle_list_of_times(self, rng):
        xi = np.array([0.3, -0.2, 0.5])
        u = np.array([0.2, 0.3, 0.0]) + 0j
        u -= xi * (xi @ u) / (xi @ xi)
        om = np.array([1.0, -0.5, 0.25]) + 0j
        out = linear.dense_mode_propagate(xi, u, om, [0.5, 1.0], self.v, dps=20)
        one = linear.dense_mode_propagate(xi, u, om, 1.0, self.v, dps=20)
        assert np.allclose(out[1][0], one[0], rtol=1e-14) and np.allclose(out[1][1], one[1], rtol=1e-14)

    def test_semigroup(self, rng):
        g = Grid3(8)
        s = _state(g, rng)
        u, om = linear.propagate_fields(g, s.u, s.omega, 0.7, self.v)
        u2, om2 = linear.propagate_fields(g, *linear.propagate_fields(g, s.u, s.omega, 0.3, self.v), 0.4, self.v)
        assert np.max(np.abs(u2 - u)) < 1e-12 * np.max(np.abs(u))
        assert np.max(np.abs(om2 - om)) < 1e-12 * np.max(np.abs(om))

    def test_identity_at_zero(self, rng):
        g = Grid3(8)
        s = _state(g, rng)
        u, om = linear.propagate_fields(g, s.u, s.omega, 0.0, self.v)
        assert np.allclose(u, s.u, atol=1e-15) and np.allclose(om, s.omega, atol=1e-15)

    def test_curl_free_microrotation_decay(self):
        # a gradient omega decouples and decays with (mu + kappa)|xi|^2 + 4 chi
        g = Grid3(8)
        phi = g.zeros()
        phi[g.mode_index((1, 1, 0))] = 1.0
        phi[g.mode_index((-1, -1, 0))] = 1.0
        om = spectral.gradient(g, phi)
        u, out = linear.propagate_fields(g, g.zeros(True), om, 0.5, self.v)
        rate = (self.v.mu + self.v.kappa) * 2 + 4 * self.v.chi
        assert np.allclose(out, np.exp(-0.5 * rate) * om, atol=1e-15)
        assert np.max(np.abs(u)) == 0

    def test_chi_zero_is_heat_flow(self, rng):
        g = Grid3(8)
        v = Viscosities(0.6, 0.0, 1.0, 1.0)
        s = _state(g, rng)
        u, _ = linear.propagate_fields(g, s.u, s.omega, 0.8, v)
        assert np.allclose(u, np.exp(-0.6 * 0.8 * g.xi_sq) * s.u, atol=1e-14)

    def test_linear_flow_matches_propagate(self, rng):
        g = Grid3(8)
        s = _state(g, rng)
        flow = linear.LinearFlow(g, s.u, s.omega, self.v)
        u, om = flow.at(2.5)
        ru, rw = linear.propagate_fields(g, s.u, s.omega, 2.5, self.v)
        assert np.allclose(u, ru, atol=1e-15) and np.allclose(om, rw, atol=1e-15)

    def test_requires_divergence_free(self, rng):
        g = Grid3(8)
        s = State(g, spectral.random_real_field(g, rng, True), g.zeros(True))
        with pytest.raises(ValueError):
            linear.linear_propagate(s, 1.0, self.v)

    def test_energy_decreases(self, rng):
        g = Grid3(8)
        s = _state(g, rng)
        e = [spectral.energy(linear.linear_propagate(s, t, Viscosities.normalized())) for t in (0, 0.1, 1, 10)]
        assert all(b < a for a, b in zip(e, e[1:]))


class TestEffectiveVelocity:
    def test_residual_small(self, rng):
        s = _state(Grid3(32), rng, band=2.0)
        assert linear.effective_velocity_residual(s, Viscosities.normalized()) < 1e-6

    def test_needs_normalized(self, rng):
        s = _state(Grid3(8), rng)
        with pytest.raises(ValueError):
            linear.effective_velocity(s, Viscosities(1, 1, 1, 1))

    def test_not_a_conserved_quantity(self, rng):
        # control: dropping the damping term leaves an O(1) residual
        g = Grid3(32)
        s = _state(g, rng, band=2.0)
        v = Viscosities.normalized()
        r0 = linear.effective_velocity(s, v)
        u, om = linear.propagate_fields(g, s.u, s.omega, 1e-4, v)
        r1 = linear.effective_velocity(State(g, u, om), v)
        assert spectral.lp_norm(r1 - r0, 2) / 1e-4 > 1e-2 * spectral.lp_norm(r0, 2)


class TestDampedKernel:
    @pytest.mark.parametrize("p", [1.0, 2.0, np.inf])
    def test_bound(self, p):
        part = DyadicPartition(Grid3(16))
        rep = linear.damped_kernel_check(part, 1, [0.0, 0.1, 1.0], p, trials=3)
        assert rep["worst"] <= 4
        assert rep["ratios"][0][0] == pytest.approx(1.0)

    def test_l2_ratio_below_one(self):
        # in L^2 the multiplier exp(-(|xi|^2 - c 4^j) t) is at most 1 on the annulus
        part = DyadicPartition(Grid3(16))
        rep = linear.damped_kernel_check(part, 2, [0.5, 2.0], 2.0, trials=3)
        assert rep["worst"] <= 1.0
