import math

import numpy as np
import pytest

from lindbraid import fcs
from lindbraid.errors import CutoffError, RangeError
from lindbraid.model import ModelParams


@pytest.fixture(scope="module")
def tcl():
    return fcs.Rates.from_params(ModelParams()).t_cl


class TestRates:
    def test_characteristic_rates(self, defaults):
        rates = fcs.Rates.from_params(defaults)
        assert rates.click_rate == pytest.approx(defaults.omega_b**2 / defaults.gamma_b)
        assert rates.slow_rate == pytest.approx(
            defaults.gamma_b * defaults.omega_d**2 / defaults.omega_b**2
        )
        assert rates.t_cl == pytest.approx(1.0 / rates.click_rate)


class TestGeneratingFunction:
    def test_zero_field_is_unity(self, defaults, tcl):
        series = fcs.pk(defaults, 0.0, "G", np.linspace(0.0, 20 * tcl, 9))
        assert np.max(np.abs(series.values - 1.0)) < 1e-10

    def test_zero_time_is_unity(self, defaults):
        for k in (0.4, np.pi, 5.0):
            series = fcs.pk(defaults, k, "G", np.array([0.0]))
            assert abs(series.values[0] - 1.0) < 1e-14

    def test_staggered_value_in_oscillatory_regime(self, tcl):
        p = ModelParams(omega_d=0.03)
        val = fcs.staggered(p, "G", np.array([3 * tcl]))[0]
        assert val == pytest.approx(0.158, abs=2e-3)

    def test_rejects_invalid_state(self, defaults):
        bad = np.diag([0.5, 0.5, 0.1])
        with pytest.raises(RangeError):
            fcs.pk(defaults, 0.0, bad, np.array([1.0]))


class TestJumpDistribution:
    def test_dark_initial_state_never_clicks(self, tcl):
        p = ModelParams(omega_d=0.0)
        h = fcs.pn(p, "D", 5 * tcl)
        assert h.probs[0] == pytest.approx(1.0, abs=1e-12)
        assert np.all(h.probs[1:] < 1e-12)

    def test_normalization_random_parameters(self, rng, tcl):
        for _ in range(3):
            p = ModelParams(
                gamma_b=float(rng.uniform(0.3, 0.8)),
                omega_b=float(rng.uniform(0.05, 0.15)),
                omega_d=float(rng.uniform(0.001, 0.03)),
            )
            t = float(rng.uniform(1, 8)) * fcs.Rates.from_params(p).t_cl
            h = fcs.pn(p, "G", t)
            assert abs(h.probs.sum() - 1.0) < 1e-9
            assert np.all(h.probs > -1e-12)

    def test_transform_round_trip(self, tcl):
        p = ModelParams(omega_d=0.03)
        t = 5 * tcl
        h = fcs.pn(p, "G", t)
        direct = fcs.staggered(p, "G", np.array([t]))[0]
        assert h.staggered() == pytest.approx(direct, abs=1e-9)

    def test_first_moment_against_derivative_oracle(self, tcl):
        # central difference of the generating function at zero field
        p = ModelParams(omega_d=0.012)
        t = 4 * tcl
        h = fcs.pn(p, "G", t)
        step = 1e-4
        plus = fcs.pk(p, step, "G", np.array([t])).values[0]
        minus = fcs.pk(p, -step, "G", np.array([t])).values[0]
        derivative = ((plus - minus) / (2j * step)).real
        assert h.mean() == pytest.approx(derivative, rel=1e-5)

    def test_peak_times_scale_with_click_number(self, tcl):
        # the n-click probability peaks near n inverse click rates
        p = ModelParams(omega_d=0.008)
        grid = np.linspace(0.2 * tcl, 6 * tcl, 40)
        probs = np.array([fcs.pn(p, "G", float(t)).probs[:4] for t in grid])
        for n in (1, 2, 3):
            peak_t = grid[int(np.argmax(probs[:, n]))]
            assert peak_t == pytest.approx(n * tcl, abs=0.75 * tcl)

    def test_cutoff_error_when_tail_not_contained(self, tcl):
        p = ModelParams(omega_d=0.01)
        with pytest.raises(CutoffError):
            fcs.pn(p, "G", 10 * tcl, n_max=2)


class TestPoissonBaseline:
    def test_moment_matching(self, tcl):
        h = fcs.pn(ModelParams(omega_d=0.03), "G", 3 * tcl)
        mu, c_pi, baseline = fcs.poisson_baseline(h)
        assert mu == pytest.approx(h.mean(), abs=1e-12)
        assert c_pi == pytest.approx(math.exp(-2 * mu), abs=1e-15)
        assert baseline.sum() == pytest.approx(1.0, abs=1e-6)

    def test_degenerate_histogram(self):
        h = fcs.JumpHistogram(time=1.0, probs=np.array([1.0, 0.0]), n_max=1)
        mu, c_pi, baseline = fcs.poisson_baseline(h)
        assert mu == 0.0 and c_pi == 1.0
        assert np.array_equal(baseline, [1.0, 0.0])

    def test_alternating_sum_identity(self):
        # direct series oracle at mu = 1
        mu = 1.0
        total = sum((-1.0) ** n * math.exp(-mu) * mu**n / math.factorial(n)
                    for n in range(60))
        assert total == pytest.approx(math.exp(-2 * mu), abs=1e-12)


class TestPartialSums:
    def test_zeroth_is_no_click_probability(self, tcl):
        p = ModelParams(omega_d=0.01)
        t = 3 * tcl
        assert fcs.partial_sum(p, t, 0) == pytest.approx(
            fcs.pn(p, "G", t).probs[0], abs=1e-12
        )

    def test_saturation(self, tcl):
        p = ModelParams(omega_d=0.01)
        h = fcs.pn(p, "G", 14 * tcl)
        sums = fcs.partial_sums_from(h)
        assert sums[-1] == pytest.approx(0.0024, abs=2e-4)
        # transient amplitudes exceed the saturation value
        assert np.max(np.abs(sums)) > 10 * abs(sums[-1])

    def test_negative_terms_rejected(self, defaults):
        with pytest.raises(RangeError):
            fcs.partial_sum(defaults, 1.0, -1)


class TestClassSignatures:
    def test_pure_decay_regime_stays_positive(self, tcl):
        p = ModelParams(omega_d=0.0075)
        times = np.linspace(0.5 * tcl, 100 * tcl, 120)
        values = fcs.staggered(p, "G", times)
        assert np.all(values > 0)

    def test_oscillatory_regime_changes_sign(self, tcl):
        p = ModelParams(omega_d=0.009)
        times = np.linspace(0.5 * tcl, 100 * tcl, 120)
        values = fcs.staggered(p, "G", times)
        assert np.min(values) < 0 < np.max(values)


class TestTimeGrids:
    def test_kinds(self):
        t_cl = 50.0
        lin = fcs.time_grid("linear", t_cl, stop=10.0, num=5)
        assert np.allclose(lin, np.linspace(0, 10, 5))
        log = fcs.time_grid("log", t_cl, start=1.0, stop=100.0, num=3)
        assert np.allclose(log, [1.0, 10.0, 100.0])
        tcl_grid = fcs.time_grid("tcl", t_cl, values=[3, 5, 8])
        assert np.allclose(tcl_grid, [150.0, 250.0, 400.0])
        with pytest.raises(RangeError):
            fcs.time_grid("cubic", t_cl, stop=1.0)
