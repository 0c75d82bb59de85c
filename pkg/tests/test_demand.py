"""Tests for the Poisson demand model."""

import math

import numpy as np
import pytest
from scipy import stats

from pseudotwin.demand import (
    DemandModel,
    demand_pmf,
    estimate_frequency,
    extend_pmf,
    sample_arrival_times,
    sample_demand,
)


def factorial_pmf(lam: float, k: int) -> float:
    """Independent oracle: direct factorial-formula Poisson mass."""
    return math.exp(-lam) * lam**k / math.factorial(k)


class TestModel:
    def test_rate(self):
        assert DemandModel(frequency=1.5, period=60.0).rate == pytest.approx(90.0)

    def test_negative_frequency_rejected(self):
        with pytest.raises(ValueError):
            DemandModel(frequency=-1.0, period=60.0)

    def test_nonpositive_period_rejected(self):
        with pytest.raises(ValueError):
            DemandModel(frequency=1.0, period=0.0)


class TestSampling:
    def test_zero_rate_always_zero(self):
        model = DemandModel(frequency=0.0, period=60.0)
        assert all(sample_demand(model, seed) == 0 for seed in range(50))

    def test_reproducible(self):
        model = DemandModel(frequency=2.0, period=60.0)
        assert sample_demand(model, 42) == sample_demand(model, 42)

    def test_mean_matches_poisson(self):
        model = DemandModel(frequency=1.0, period=60.0)
        n = 10**5
        draws = np.array([sample_demand(model, s) for s in range(n)])
        tol = 3.0 * math.sqrt(60.0) / math.sqrt(n)
        assert abs(draws.mean() - 60.0) < tol

    def test_variance_matches_poisson(self):
        model = DemandModel(frequency=2.0, period=60.0)
        draws = np.array([sample_demand(model, s) for s in range(10**5)])
        assert draws.var() == pytest.approx(120.0, rel=0.05)

    def test_chi_square_against_pmf(self):
        # Sampled counts must be distributed per the exact pmf.
        model = DemandModel(frequency=0.1, period=60.0)  # lam = 6
        n = 10**5
        draws = np.array([sample_demand(model, seed) for seed in range(n)])
        pmf = demand_pmf(model, 1e-9)
        # bucket the far tail together to keep expected counts > 5
        edges = [k for k in range(len(pmf.probabilities)) if n * pmf.probabilities[k] > 5]
        k_max = max(edges)
        observed = np.bincount(np.minimum(draws, k_max), minlength=k_max + 1)
        expected = np.array(
            [pmf.probabilities[k] for k in range(k_max)]
            + [1.0 - sum(pmf.probabilities[:k_max])]
        ) * n
        chi2 = float(((observed - expected) ** 2 / expected).sum())
        crit = stats.chi2.ppf(1 - 0.001, df=k_max)
        assert chi2 < crit

    def test_arrival_times_sorted_within_period(self):
        model = DemandModel(frequency=2.0, period=60.0)
        times = sample_arrival_times(model, 7)
        assert (np.diff(times) > 0).all()
        assert times[0] >= 0.0 and times[-1] < 60.0

    def test_arrival_count_mean(self):
        model = DemandModel(frequency=1.0, period=30.0)
        counts = [len(sample_arrival_times(model, s)) for s in range(20000)]
        assert np.mean(counts) == pytest.approx(30.0, rel=0.02)

    def test_zero_frequency_no_arrivals(self):
        model = DemandModel(frequency=0.0, period=60.0)
        assert len(sample_arrival_times(model, 3)) == 0


class TestPmf:
    def test_zero_rate(self):
        pmf = demand_pmf(DemandModel(frequency=0.0, period=60.0))
        assert pmf.probabilities == (1.0,)
        assert pmf.truncation_mass == 0.0

    def test_known_mass_at_zero(self):
        pmf = demand_pmf(DemandModel(frequency=2.0, period=1.0), 1e-9)
        assert pmf.probabilities[0] == pytest.approx(math.exp(-2.0), abs=1e-9)

    def test_epsilon_out_of_range(self):
        model = DemandModel(frequency=1.0, period=1.0)
        for bad in (0.0, 1.0, -0.1, 2.0):
            with pytest.raises(ValueError):
                demand_pmf(model, bad)

    def test_truncation_point_minimal(self):
        model = DemandModel(frequency=1.0, period=4.0)
        eps = 1e-6
        pmf = demand_pmf(model, eps)
        cum = sum(pmf.probabilities)
        assert cum >= 1.0 - eps
        assert cum - pmf.probabilities[-1] < 1.0 - eps  # one fewer term is short

    def test_sub_distribution(self):
        for lam in (0.3, 2.0, 17.5, 120.0):
            model = DemandModel(frequency=lam, period=1.0)
            pmf = demand_pmf(model, 1e-9)
            assert all(p >= 0 for p in pmf.probabilities)
            assert sum(pmf.probabilities) + pmf.truncation_mass == pytest.approx(
                1.0, abs=1e-12
            )

    def test_matches_factorial_formula(self):
        # lam <= 20: recurrence vs direct factorial within 1e-10 per entry.
        for lam in (0.5, 3.0, 11.0, 20.0):
            pmf = demand_pmf(DemandModel(frequency=lam, period=1.0), 1e-9)
            for k, p in enumerate(pmf.probabilities):
                assert p == pytest.approx(factorial_pmf(lam, k), abs=1e-10)

    def test_mean_near_rate(self):
        for lam in (0.7, 5.0, 42.0):
            model = DemandModel(frequency=lam, period=1.0)
            eps = 1e-9
            pmf = demand_pmf(model, eps)
            assert abs(pmf.mean() - lam) <= max(eps * pmf.n_trunc, 1e-9) + 1e-9

    def test_huge_rate_log_space(self):
        pmf = demand_pmf(DemandModel(frequency=800.0, period=1.0), 1e-9)
        assert sum(pmf.probabilities) + pmf.truncation_mass == pytest.approx(
            1.0, abs=1e-9
        )
        assert pmf.mean() == pytest.approx(800.0, rel=1e-6)

    def test_unreachable_tolerance_terminates(self):
        # tolerances beyond float resolution must not loop forever
        for lam in (2.0, 50.0, 800.0):
            pmf = demand_pmf(DemandModel(frequency=lam, period=1.0), 1e-300)
            assert pmf.mean() == pytest.approx(lam, rel=1e-6)

    def test_infinite_inputs_rejected(self):
        with pytest.raises(ValueError):
            DemandModel(frequency=math.inf, period=1.0)
        with pytest.raises(ValueError):
            DemandModel(frequency=1.0, period=math.inf)

    def test_extend_pmf(self):
        model = DemandModel(frequency=2.0, period=1.0)
        pmf = demand_pmf(model, 1e-3)
        probs, tail = extend_pmf(pmf, model, pmf.n_trunc + 10)
        assert len(probs) == pmf.n_trunc + 11
        assert probs.sum() + tail == pytest.approx(1.0, abs=1e-12)
        for k in range(len(probs)):
            assert probs[k] == pytest.approx(factorial_pmf(2.0, k), abs=1e-12)


class TestEstimateFrequency:
    def test_unit_rate(self):
        stamps = [i + 0.5 for i in range(60)]
        assert estimate_frequency(stamps, 60.0) == pytest.approx(1.0)

    def test_empty_history(self):
        assert estimate_frequency([], 60.0) == 0.0

    def test_dense_history(self):
        stamps = np.linspace(0.1, 59.9, 90)
        assert estimate_frequency(list(stamps), 60.0) == pytest.approx(1.5)

    def test_bad_window(self):
        with pytest.raises(ValueError):
            estimate_frequency([], 0.0)

    def test_out_of_window_timestamp(self):
        with pytest.raises(ValueError):
            estimate_frequency([61.0], 60.0)

    def test_non_increasing_rejected(self):
        with pytest.raises(ValueError):
            estimate_frequency([1.0, 1.0], 60.0)
