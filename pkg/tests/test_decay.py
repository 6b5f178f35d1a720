import numpy as np
import pytest

from micropolar import decay
from micropolar.decay import ExperimentSpec, SideConditionError
from micropolar.littlewood_paley import NormSeries
from micropolar.solver import SolverConfig, random_slope
from micropolar.spectral import Grid3


def _series(fn, times):
    s = NormSeries()
    for t in times:
        s.append(t, {"v": fn(t)})
    return s


def _small_spec(**kw):
    base = dict(
        config=SolverConfig(dt=0.1, t_end=1.0, nonlinear=False),
        n=32, L=8 * np.pi, fit_window=(1.0, 8.0), repetitions=2, samples=12,
    )
    base.update(kw)
    return ExperimentSpec(**base)


class TestPredictions:
    def test_reference_values(self):
        assert decay.predicted_exponent(0, 2, 2, 1.5, "u") == pytest.approx(-0.75)
        assert decay.predicted_exponent(0, 2, 2, 1.5, "omega") == pytest.approx(-0.25)

    @pytest.mark.parametrize("sigma", [-0.4, 0.3, 1.2, 1.9])
    def test_r_equals_p(self, sigma):
        assert decay.predicted_exponent(2, 2, 2, sigma, "u") == pytest.approx(-sigma / 2 - 1)

    def test_r_dependence(self):
        # moving r from p to infinity steepens by (3/p)/2
        gap = decay.predicted_exponent(0, 2, 2, 1.5, "u") - decay.predicted_exponent(0, np.inf, 2, 1.5, "u")
        assert gap == pytest.approx(0.75)

    def test_gap_between_fields(self):
        for l in (0, 1, 2):
            d = decay.predicted_exponent(l, 4, 2, 1.0, "omega") - decay.predicted_exponent(l, 4, 2, 1.0, "u")
            assert d == pytest.approx(0.5)

    @pytest.mark.parametrize("args", [
        (0, 2, 2, 2.5, "u"),       # sigma above the upper bound
        (0, 2, 2, -0.5, "u"),      # sigma below 1 - 3/p
        (0, 1.5, 2, 1.5, "u"),     # r < p
        (-2.0, 2, 2, 1.5, "u"),    # l too negative for u
        (-1.0, 2, 2, 1.5, "omega"),
    ])
    def test_side_conditions(self, args):
        with pytest.raises(SideConditionError):
            decay.predicted_exponent(*args)

    def test_sigma_tilde(self):
        assert decay.sigma_tilde(1.5, np.inf, 2) == pytest.approx(3.0)


class TestFit:
    def test_exact_power(self):
        fit = decay.fit_power_law(_series(lambda t: t**-0.75, np.geomspace(1, 50, 20)), "v", (1, 50))
        assert fit.exponent == pytest.approx(-0.75, abs=1e-10) and fit.n_points == 20

    def test_intercept_ignored(self):
        fit = decay.fit_power_law(_series(lambda t: 5 * t**-2, np.geomspace(1, 50, 10)), "v", (1, 50))
        assert fit.exponent == pytest.approx(-2.0, abs=1e-10)
        assert fit.intercept == pytest.approx(np.log(5))

    def test_window_selects(self):
        s = _series(lambda t: t**-1 if t < 10 else 10 * t**-2, np.geomspace(1, 100, 41))
        assert decay.fit_power_law(s, "v", (10, 100)).exponent == pytest.approx(-2.0)

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="at least 5"):
            decay.fit_power_law(_series(lambda t: t, [1, 2, 3, 4]), "v", (1, 4))

    def test_nonpositive(self):
        with pytest.raises(ValueError, match="nonpositive"):
            decay.fit_power_law(_series(lambda t: 0.0, np.arange(1, 8.0)), "v", (1, 7))

    def test_heat_semigroup_rate(self):
        # exact per-mode heat evolution of the random data as oracle
        g = Grid3(128, 32 * np.pi)
        power = np.sum(np.abs(random_slope(g, 1.5, 1.0, seed=0).u) ** 2, axis=0)
        s = _series(lambda t: np.sqrt(np.sum(power * np.exp(-g.xi_sq * t))), np.geomspace(0.5, 50, 30))
        assert decay.fit_power_law(s, "v", (1, 50)).exponent == pytest.approx(-0.75, abs=0.05)


class TestExperimentSpec:
    def test_horizon(self):
        assert _small_spec().horizon == pytest.approx(32.0)

    def test_refuses_window_beyond_horizon(self):
        with pytest.raises(ValueError, match="horizon"):
            _small_spec(fit_window=(1.0, 20.0))

    def test_refuses_bad_sigma(self):
        with pytest.raises(SideConditionError):
            _small_spec(sigma=3.0)

    def test_sample_times_cover_shifted_window(self):
        t = _small_spec().sample_times
        assert t[0] == pytest.approx(0.5) and t[-1] == pytest.approx(8.0)


@pytest.fixture(scope="module")
def report():
    return decay.run_decay_experiment(_small_spec(r_values=[1.0, 2.0]), keep_series=True)


class TestExperiment:
    def test_degenerate(self):
        rep = decay.run_decay_experiment(_small_spec(amplitude=0.0, repetitions=1))
        assert rep["status"] == "degenerate" and not rep["passed"]

    def test_report_structure(self, report):
        assert report["status"] == "ok"
        kinds = {(r["which"], r["part"], r["r"]) for r in report["rows"]}
        assert ("u", "full", 2.0) in kinds and ("omega", "low", 1.0) in kinds
        assert len(report["series"]) == 2

    def test_r1_rows_ungraded(self, report):
        assert all(r["pass"] is None for r in report["rows"] if r["r"] == 1.0)

    def test_linear_monotone_and_high_fast(self, report):
        assert report["monotone"] is True
        assert all(h["fitted"] < -5 for h in report["high"])

    def test_fits_are_decay(self, report):
        assert all(r["fitted"] < 0 for r in report["rows"])

    def test_comparison_table(self, report):
        rows = decay.comparison_table(report)
        assert len(rows) == len(report["rows"]) and set(rows[0]) >= {"predicted", "fitted", "pass"}

    def test_reproducible(self, report):
        again = decay.run_decay_experiment(_small_spec(r_values=[1.0, 2.0]))
        assert [r["fitted"] for r in again["rows"]] == [r["fitted"] for r in report["rows"]]
