"""Learning-rule contract: adaptive factors, window dispatch, decay,
trace bookkeeping, and equivalence with a per-element reference pass."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftsnn.errors import ConfigError
from driftsnn.plasticity import (
    LearningParams,
    SpikeAccumulators,
    TraceState,
    apply_weight_decay,
    count_update_events,
    depression_factor,
    on_spike_trace_update,
    per_spike_update,
    potentiation_factor,
    run_on_raster,
    stdp_update,
    weight_decay_rate,
    window_update,
)

from .oracles import transliterated_training_pass

DT = 0.5


# ----------------------------------------------------------------------
# adaptive factors


@pytest.mark.parametrize(
    "max_post,sp_th,expected",
    [(5, 2, 3), (0, 2, 0), (4, 4, 1), (1, 5, 1), (10, 3, 4)],
)
def test_potentiation_factor_is_ceiling(max_post, sp_th, expected):
    assert potentiation_factor(max_post, sp_th) == expected


def test_potentiation_factor_rejects_zero_threshold():
    with pytest.raises(ConfigError):
        potentiation_factor(5, 0)


@pytest.mark.parametrize(
    "max_post,max_pre,expected",
    [(2, 10, 0.2), (0, 7, 0.0), (3, 0, 0.0), (7, 7, 1.0)],
)
def test_depression_factor_ratio_with_zero_convention(max_post, max_pre, expected):
    assert depression_factor(max_post, max_pre) == pytest.approx(expected)


@settings(max_examples=50, deadline=None)
@given(max_post=st.integers(0, 10**6), sp_th=st.integers(1, 10**4))
def test_potentiation_factor_is_nonnegative_integer(max_post, sp_th):
    k = potentiation_factor(max_post, sp_th)
    assert isinstance(k, int)
    assert k >= 0
    # ceiling bracket
    assert (k - 1) * sp_th < max_post <= k * sp_th or (max_post == 0 and k == 0)


@settings(max_examples=50, deadline=None)
@given(max_post=st.integers(0, 10**6), max_pre=st.integers(0, 10**6))
def test_depression_factor_is_nonnegative_real(max_post, max_pre):
    assert depression_factor(max_post, max_pre) >= 0.0


# ----------------------------------------------------------------------
# deltas


def test_stdp_update_zero_factor_gives_zero_deltas():
    traces = TraceState(x_pre=np.array([0.5, 0.2]), x_post=np.array([0.4, 0.1, 0.9]))
    assert np.all(stdp_update("depression", 0.0, LearningParams(), traces) == 0.0)


def test_stdp_update_potentiation_arithmetic():
    lp = LearningParams(eta_post=0.01)
    traces = TraceState(x_pre=np.array([0.5]), x_post=np.array([0.0, 0.0]))
    delta = stdp_update("potentiation", 3, lp, traces, row=1)
    assert delta[0] == pytest.approx(0.015)


def test_stdp_update_depression_scales_post_trace():
    lp = LearningParams(eta_pre=1e-4)
    traces = TraceState(x_pre=np.zeros(2), x_post=np.array([1.0, 2.0]))
    delta = stdp_update("depression", 0.5, lp, traces)
    assert delta == pytest.approx([-0.5 * 1e-4, -1.0 * 1e-4])


def test_stdp_update_row_out_of_range():
    traces = TraceState(x_pre=np.zeros(2), x_post=np.zeros(3))
    with pytest.raises(IndexError):
        stdp_update("potentiation", 1, LearningParams(), traces, row=3)


# ----------------------------------------------------------------------
# weight decay


@pytest.mark.parametrize("base,n_exc,expected", [(40.0, 400, 0.1), (40.0, 200, 0.2)])
def test_weight_decay_rate_inverse_in_size(base, n_exc, expected):
    assert weight_decay_rate(n_exc, base) == pytest.approx(expected)
    assert weight_decay_rate(2 * n_exc, base) == pytest.approx(expected / 2)


def test_weight_decay_rate_rejects_empty_network():
    with pytest.raises(ConfigError):
        weight_decay_rate(0, 40.0)


def test_zero_rate_decay_is_identity():
    w = np.array([[0.3, 0.7]])
    before = w.copy()
    apply_weight_decay(w, 0.0, 100.0, DT)
    assert np.array_equal(w, before)


def test_decay_halves_weight_at_ln2_exponent():
    # rate*dt/tau = ln 2  ->  multiply by 1/2 exactly
    w = np.array([[1.0]])
    apply_weight_decay(w, math.log(2.0), 1.0, 1.0)
    assert w[0, 0] == pytest.approx(0.5)


@settings(max_examples=40, deadline=None)
@given(
    values=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=16),
    rate=st.floats(0.0, 10.0),
)
def test_decay_is_a_contraction(values, rate):
    w = np.array([values])
    before = w.copy()
    apply_weight_decay(w, rate, 100.0, DT)
    assert np.all(w >= 0.0)
    assert np.all(w <= before + 1e-15)


# ----------------------------------------------------------------------
# window dispatch


def make_state(n_exc=4, n_syn=6):
    traces = TraceState.zeros(n_exc, n_syn)
    acc = SpikeAccumulators.zeros(n_exc, n_syn)
    weights = np.full((n_exc, n_syn), 0.5)
    return traces, acc, weights


def test_empty_window_reports_depression_with_zero_factor():
    traces, acc, weights = make_state()
    before = weights.copy()
    _, report = window_update(acc, traces, weights, LearningParams())
    assert report.kind == "depression"
    assert report.k_d == 0.0
    assert report.elements_touched == weights.size
    assert np.array_equal(weights, before)


def test_window_with_only_pre_spikes_depresses_nothing():
    # dispatch picks depression; the factor is post/pre = 0/max_pre = 0
    traces, acc, weights = make_state()
    acc.n_sp_pre[:] = [3, 1, 0, 0, 2, 1]
    before = weights.copy()
    _, report = window_update(acc, traces, weights, LearningParams())
    assert report.kind == "depression"
    assert report.k_d == 0.0
    assert np.array_equal(weights, before)
    assert np.all(acc.n_sp_pre == 0)  # consumed


def test_window_potentiates_only_the_most_active_row():
    lp = LearningParams(sp_th=5, eta_post=0.01)
    traces, acc, weights = make_state()
    traces.x_pre[:] = 0.5
    acc.n_sp_post[:] = [0, 0, 2, 0]
    before = weights.copy()
    _, report = window_update(acc, traces, weights, lp)
    assert report.kind == "potentiation"
    assert report.row == 3 or report.row == 2
    assert report.row == 2  # lowest index holding the max
    assert report.k_p == 1  # ceil(2/5)
    assert report.elements_touched == weights.shape[1]
    assert np.array_equal(weights[[0, 1, 3]], before[[0, 1, 3]])
    assert weights[2] == pytest.approx(before[2] + 0.01 * 0.5)


def test_argmax_tie_breaks_to_lowest_index():
    traces, acc, weights = make_state()
    acc.n_sp_post[:] = [0, 4, 4, 0]
    _, report = window_update(acc, traces, weights, LearningParams())
    assert report.row == 1


def test_argmax_invariant_under_positive_scaling():
    traces, acc, weights = make_state()
    acc.n_sp_post[:] = [1, 5, 3, 2]
    _, r1 = window_update(acc, traces, weights, LearningParams())
    acc.n_sp_post[:] = [3, 15, 9, 6]
    _, r2 = window_update(acc, traces, weights, LearningParams())
    assert r1.row == r2.row == 1


def test_weights_stay_clamped_after_updates():
    lp = LearningParams(eta_post=10.0, w_max=1.0)  # huge rate forces the clamp
    traces, acc, weights = make_state()
    traces.x_pre[:] = 1.0
    acc.n_sp_post[:] = [9, 0, 0, 0]
    window_update(acc, traces, weights, lp)
    assert weights.max() <= lp.w_max
    assert weights.min() >= lp.w_min


# ----------------------------------------------------------------------
# traces


def test_trace_decays_exponentially_without_spikes():
    lp = LearningParams(tau_x_pre=20.0, tau_x_post=20.0)
    traces = TraceState(x_pre=np.array([1.0]), x_post=np.array([1.0]))
    none = np.zeros(1, dtype=bool)
    k = 10
    for _ in range(k):
        on_spike_trace_update(traces, none, none, DT, lp)
    assert traces.x_pre[0] == pytest.approx(math.exp(-k * DT / 20.0))


def test_trace_increments_on_own_spike():
    lp = LearningParams()
    traces = TraceState.zeros(1, 1)
    spike = np.ones(1, dtype=bool)
    none = np.zeros(1, dtype=bool)
    on_spike_trace_update(traces, spike, none, DT, lp)
    assert traces.x_pre[0] == 1.0
    on_spike_trace_update(traces, spike, none, DT, lp)
    # two spikes one step apart
    assert traces.x_pre[0] == pytest.approx(1.0 + math.exp(-DT / lp.tau_x_pre))
    assert traces.x_post[0] == 0.0


def test_accumulators_advance_with_traces():
    lp = LearningParams()
    traces = TraceState.zeros(2, 3)
    acc = SpikeAccumulators.zeros(2, 3)
    pre = np.array([True, False, True])
    post = np.array([False, True])
    on_spike_trace_update(traces, pre, post, DT, lp, acc)
    on_spike_trace_update(traces, pre, post, DT, lp, acc)
    assert acc.n_sp_pre.tolist() == [2, 0, 2]
    assert acc.n_sp_post.tolist() == [0, 2]


# ----------------------------------------------------------------------
# update-event gating


def random_raster(rng, n_steps, n_channels, p):
    return rng.random((n_steps, n_channels)) < p


def test_window_gating_never_fires_more_events_than_per_spike():
    rng = np.random.default_rng(0)
    strict_checked = 0
    for trial in range(100):
        n_steps = 80
        pre = random_raster(rng, n_steps, 8, rng.uniform(0.0, 0.2))
        post = random_raster(rng, n_steps, 4, rng.uniform(0.0, 0.1))
        windowed, per_spike = count_update_events(pre, post, t_step_steps=20)
        assert windowed <= per_spike
        # strict whenever some window holds more than one spike
        per_window = (pre.sum(axis=1) + post.sum(axis=1)).reshape(4, 20).sum(axis=1)
        if (per_window > 1).any():
            assert windowed < per_spike
            strict_checked += 1
    assert strict_checked > 50


def test_update_events_zero_raster():
    pre = np.zeros((40, 3), dtype=bool)
    post = np.zeros((40, 2), dtype=bool)
    assert count_update_events(pre, post, 10) == (0, 0)


# ----------------------------------------------------------------------
# per-spike baseline


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    eta_pre=st.floats(1e-5, 0.5),
    eta_post=st.floats(1e-5, 0.5),
)
def test_per_spike_update_respects_weight_bounds(seed, eta_pre, eta_post):
    rng = np.random.default_rng(seed)
    lp = LearningParams(eta_pre=eta_pre, eta_post=eta_post, w_min=0.0, w_max=1.0)
    weights = rng.random((4, 6))
    traces = TraceState(x_pre=rng.random(6) * 3, x_post=rng.random(4) * 3)
    per_spike_update(weights, traces, rng.random(6) < 0.5, rng.random(4) < 0.5, lp)
    assert weights.min() >= lp.w_min
    assert weights.max() <= lp.w_max


def test_per_spike_update_touches_column_and_row():
    lp = LearningParams(eta_pre=0.1, eta_post=0.2, w_min=0.0, w_max=10.0)
    weights = np.full((2, 3), 1.0)
    traces = TraceState(x_pre=np.array([0.5, 0.0, 0.0]), x_post=np.array([0.25, 0.0]))
    pre = np.array([True, False, False])
    post = np.array([False, True])
    touched = per_spike_update(weights, traces, pre, post, lp)
    assert touched == 2 + 3
    # column 0 depressed by eta_pre * x_post
    assert weights[0, 0] == pytest.approx(1.0 - 0.1 * 0.25 + 0.2 * 0.0)
    # row 1: depression on column 0 then potentiation by eta_post * x_pre
    assert weights[1, 1] == pytest.approx(1.0 + 0.2 * 0.0)
    assert weights[1, 0] == pytest.approx(1.0 - 0.1 * 0.0 + 0.2 * 0.5)


# ----------------------------------------------------------------------
# reference-equivalence on a small instance


def test_engine_matches_per_element_transliteration():
    rng = np.random.default_rng(42)
    n_exc, n_syn, n_steps = 5, 16, 80
    lp = LearningParams(t_step=10.0, sp_th=2, eta_post=0.01, eta_pre=1e-4)
    w0 = rng.random((n_exc, n_syn)) * 0.3
    pre = random_raster(rng, n_steps, n_syn, 0.08)
    post = random_raster(rng, n_steps, n_exc, 0.05)

    engine_w, reports = run_on_raster(w0.copy(), pre, post, lp, DT)
    oracle_w = transliterated_training_pass(w0, pre, post, lp, DT)
    assert np.array_equal(engine_w, oracle_w)
    assert len(reports) == n_steps // round(lp.t_step / DT)
