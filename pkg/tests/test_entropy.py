"""Tests for the sawtooth privacy-entropy model."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudotwin.entropy import (
    EntropyParams,
    average_entropy,
    decay_time,
    instantaneous_entropy,
    reset_level,
    timeline,
    tracking_entropy,
)

# Baseline parameter set used throughout: the six-VMU scenario constants.
BASE = dict(h_max=1.5, h_0=1.0, h_min=0.25, alpha=1.0)


def params(p=0.5, **overrides):
    return EntropyParams(p=p, **{**BASE, **overrides})


def trapezoid_average(pr: EntropyParams, tau: float, steps: int = 10**6) -> float:
    """Independent oracle: numerical area under the sawtooth over [0, tau]."""
    ts = np.linspace(0.0, tau, steps + 1)
    vals = np.maximum(pr.h_min, reset_level(pr) - pr.alpha * ts)
    return float(np.trapezoid(vals, ts) / tau)


class TestParams:
    def test_valid_construction(self):
        pr = params()
        assert pr.h_max == 1.5

    @pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
    def test_p_out_of_range(self, p):
        with pytest.raises(ValueError):
            params(p=p)

    def test_negative_floor_rejected(self):
        with pytest.raises(ValueError):
            params(h_min=-0.1)

    def test_negative_slope_rejected(self):
        with pytest.raises(ValueError):
            params(alpha=-1.0)

    def test_reset_below_floor_rejected(self):
        # h_max - p*h_0 = 0.1 < h_min = 0.25
        with pytest.raises(ValueError):
            EntropyParams(h_max=1.1, h_0=1.0, h_min=0.25, alpha=1.0, p=1.0)

    def test_reset_above_ceiling_rejected(self):
        with pytest.raises(ValueError):
            EntropyParams(h_max=1.5, h_0=-1.0, h_min=0.25, alpha=1.0, p=0.5)


class TestResetLevel:
    def test_scenario_constants(self):
        assert reset_level(params(p=0.5)) == pytest.approx(1.0)

    def test_boundary_p(self):
        assert reset_level(params(p=1.0)) == pytest.approx(0.5)

    def test_h0_zero_ignores_p(self):
        pr = EntropyParams(h_max=2.0, h_0=0.0, h_min=0.25, alpha=1.0, p=0.3)
        assert reset_level(pr) == pytest.approx(2.0)


class TestInstantaneous:
    def test_at_change(self):
        assert instantaneous_entropy(params(), 0.0) == pytest.approx(1.0)

    def test_mid_decay(self):
        assert instantaneous_entropy(params(), 0.5) == pytest.approx(0.5)

    def test_clamped_at_floor(self):
        assert instantaneous_entropy(params(), 2.0) == pytest.approx(0.25)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            instantaneous_entropy(params(), -0.1)


class TestTrackingEntropy:
    @pytest.mark.parametrize("p,expected", [(1.0, 0.0), (0.5, 1.0), (0.25, 2.0)])
    def test_known_values(self, p, expected):
        assert tracking_entropy(p) == pytest.approx(expected)

    @pytest.mark.parametrize("p", [0.0, -0.5, 1.01])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            tracking_entropy(p)

    def test_strictly_decreasing(self):
        ps = np.linspace(0.01, 1.0, 100)
        vals = [tracking_entropy(p) for p in ps]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestAverageEntropy:
    def test_pre_floor_interval(self):
        # Frozen from the trapezoid oracle (10^6 steps): 0.625.
        assert average_entropy(params(), 0.75) == pytest.approx(0.625, abs=1e-6)
        assert average_entropy(params(), 0.75) == pytest.approx(
            trapezoid_average(params(), 0.75), abs=1e-6
        )

    def test_past_floor_interval(self):
        # Frozen from the trapezoid oracle: 0.4375.
        assert average_entropy(params(), 1.5) == pytest.approx(0.4375, abs=1e-6)
        assert average_entropy(params(), 1.5) == pytest.approx(
            trapezoid_average(params(), 1.5), abs=1e-6
        )

    def test_no_decay_returns_reset(self):
        pr = params(alpha=0.0)
        for tau in (0.1, 1.0, 100.0):
            assert average_entropy(pr, tau) == pytest.approx(reset_level(pr))

    def test_nonpositive_tau_rejected(self):
        with pytest.raises(ValueError):
            average_entropy(params(), 0.0)
        with pytest.raises(ValueError):
            average_entropy(params(), -1.0)

    def test_branch_continuity_at_decay_time(self):
        pr = params()
        t_f = decay_time(pr)
        lo = average_entropy(pr, t_f)
        hi = average_entropy(pr, t_f * (1 + 1e-12))
        assert abs(lo - hi) < 1e-9


@st.composite
def entropy_params(draw):
    """Random valid parameter sets: h_min <= reset <= h_max by construction."""
    p = draw(st.floats(0.01, 1.0))
    h_0 = draw(st.floats(0.0, 2.0))
    h_max = draw(st.floats(0.0, 5.0)) + p * h_0
    reset = h_max - p * h_0  # float-exact value EntropyParams recomputes
    h_min = reset * draw(st.floats(0.0, 1.0))
    alpha = draw(st.floats(0.0, 5.0))
    return EntropyParams(h_max=h_max, h_0=h_0, h_min=h_min, alpha=alpha, p=p)


class TestProperties:
    @given(entropy_params(), st.floats(0.01, 20.0))
    @settings(max_examples=200)
    def test_average_bounded(self, pr, tau):
        avg = average_entropy(pr, tau)
        assert pr.h_min - 1e-12 <= avg <= reset_level(pr) + 1e-12
        assert reset_level(pr) <= pr.h_max + 1e-12

    @given(entropy_params(), st.floats(0.01, 10.0), st.floats(0.01, 10.0))
    @settings(max_examples=200)
    def test_average_nonincreasing_in_tau(self, pr, tau_a, tau_b):
        lo, hi = sorted((tau_a, tau_b))
        assert average_entropy(pr, lo) >= average_entropy(pr, hi) - 1e-12

    def test_average_matches_integration_bulk(self):
        # 1000 random valid draws, coarse integration, 1e-6 agreement.
        rng = np.random.Generator(np.random.PCG64(7))
        for _ in range(1000):
            p = rng.uniform(0.01, 1.0)
            h_0 = rng.uniform(0.0, 2.0)
            h_max = rng.uniform(0.0, 5.0) + p * h_0
            reset = h_max - p * h_0
            pr = EntropyParams(
                h_max=h_max,
                h_0=h_0,
                h_min=reset * rng.uniform(0.0, 1.0),
                alpha=rng.uniform(0.0, 5.0),
                p=p,
            )
            tau = rng.uniform(0.05, 10.0)
            assert average_entropy(pr, tau) == pytest.approx(
                trapezoid_average(pr, tau, steps=20000), abs=1e-6
            )

    def test_branch_continuity_bulk(self):
        rng = np.random.Generator(np.random.PCG64(11))
        for _ in range(200):
            p = rng.uniform(0.01, 1.0)
            h_0 = rng.uniform(0.0, 2.0)
            h_max = rng.uniform(0.1, 5.0) + p * h_0
            reset = h_max - p * h_0
            pr = EntropyParams(
                h_max=h_max,
                h_0=h_0,
                h_min=reset * rng.uniform(0.0, 0.95),
                alpha=rng.uniform(0.1, 5.0),
                p=p,
            )
            t_f = decay_time(pr)
            ramp = reset_level(pr) - pr.alpha * t_f / 2.0
            mixed = (t_f * (reset_level(pr) + pr.h_min) / 2.0) / t_f
            assert abs(ramp - mixed) < 1e-12


class TestTimeline:
    def test_no_epochs_single_segment(self):
        tl = timeline(params(), [], horizon=1.0)
        assert tl.breakpoints[0] == (0.0, 1.0)
        assert tl.value(0.0) == pytest.approx(1.0)
        assert tl.value(0.4) == pytest.approx(0.6)

    def test_reset_at_epoch(self):
        tl = timeline(params(), [0.5], horizon=1.0)
        assert tl.value(0.5, side="left") == pytest.approx(0.5)
        assert tl.value(0.5, side="right") == pytest.approx(1.0)

    def test_floor_vertex_inserted(self):
        tl = timeline(params(), [], horizon=2.0)
        # decay_time = 0.75 for the base params; curve flat afterwards
        assert tl.value(0.75) == pytest.approx(0.25)
        assert tl.value(1.9) == pytest.approx(0.25)
        times = [t for t, _ in tl.breakpoints]
        assert 0.75 in times

    def test_fast_cadence_stays_above_floor(self):
        # Epochs spaced tau < decay_time keep the minimum at reset - alpha*tau.
        pr = params()
        tau = 0.5
        epochs = [tau * k for k in range(1, 4)]
        tl = timeline(pr, epochs, horizon=2.0)
        low = min(tl.value(e, side="left") for e in epochs)
        assert low == pytest.approx(reset_level(pr) - pr.alpha * tau)
        assert low > pr.h_min

    def test_unsorted_epochs_rejected(self):
        with pytest.raises(ValueError):
            timeline(params(), [0.5, 0.4], horizon=1.0)

    def test_epoch_outside_horizon_rejected(self):
        with pytest.raises(ValueError):
            timeline(params(), [1.5], horizon=1.0)

    def test_breakpoint_invariants(self):
        tl = timeline(params(), [0.3, 0.9, 1.6], horizon=2.5)
        times = [t for t, _ in tl.breakpoints]
        vals = [v for _, v in tl.breakpoints]
        assert all(a < b for a, b in zip(times, times[1:]))
        assert all(params().h_min <= v <= params().h_max for v in vals)

    def test_nonincreasing_between_epochs(self):
        tl = timeline(params(), [0.8], horizon=2.0)
        grid = np.linspace(0.0, 0.8, 50, endpoint=False)
        vals = [tl.value(float(t)) for t in grid]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_sawtooth_points_duplicate_jump_times(self):
        tl = timeline(params(), [0.5], horizon=1.0)
        pts = tl.sawtooth_points()
        ts = [t for t, _ in pts]
        assert ts.count(0.5) == 2
