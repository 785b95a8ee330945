"""Windowed-update STDP with adaptive factors, plus synaptic weight decay.

Training time is divided into windows of ``t_step`` ms.  Pre- and
post-synaptic spikes are accumulated over the current window; at each
window boundary exactly one decision is made:

* if no postsynaptic spike occurred in the window, a depression update is
  applied to every row, scaled by the ratio of the window's maximum
  accumulated post- to pre-synaptic spike counts;
* otherwise the single most active neuron (lowest index on ties) receives
  a potentiation update scaled by its accumulated spike count normalized
  by ``sp_th`` (rounded up).

Weight deltas follow the trace rule: depression moves row i by
``-k_d * eta_pre * x_post[i]`` and potentiation moves row m by
``k_p * eta_post * x_pre``.  On every non-boundary step the weights decay
multiplicatively instead (closed-form exponential, unconditionally
stable).  Compared with per-spike STDP this gates the number of update
events per sample to at most ``t_sim / t_step``.

A conventional per-spike trace rule with fixed rates and no decay is also
provided (``per_spike_update``); it serves as the degraded baseline
configuration in continual-learning comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass
class LearningParams:
    """Rates, trace constants, and scheduling for the plasticity engine.

    ``eta_pre`` scales presynaptic-triggered depression, ``eta_post``
    postsynaptic-triggered potentiation.  ``sp_th`` normalizes the window's
    maximum postsynaptic count into the potentiation factor.  ``t_step``
    is the update window length in ms and must divide the presentation
    time.  ``w_decay_base`` is the numerator of the size-dependent decay
    rate (``w_decay = w_decay_base / n_exc``).
    """

    eta_pre: float = 1e-4
    eta_post: float = 5e-3
    sp_th: int = 5
    tau_x_pre: float = 20.0
    tau_x_post: float = 20.0
    tau_decay: float = 1e4
    w_decay_base: float = 1.0
    t_step: float = 10.0
    w_min: float = 0.0
    w_max: float = 1.0

    def validate(self):
        if self.eta_pre <= 0 or self.eta_post <= 0:
            raise ConfigError("learning rates eta_pre and eta_post must be positive")
        if self.sp_th < 1:
            raise ConfigError(f"sp_th must be >= 1, got {self.sp_th}")
        if self.tau_x_pre <= 0 or self.tau_x_post <= 0 or self.tau_decay <= 0:
            raise ConfigError("trace and decay time constants must be positive")
        if not (0 <= self.w_min < self.w_max):
            raise ConfigError(
                f"invalid weight bounds [{self.w_min}, {self.w_max}]"
            )
        if self.w_decay_base < 0:
            raise ConfigError("w_decay_base must be non-negative")
        if self.t_step <= 0:
            raise ConfigError("t_step must be positive")
        return self


@dataclass
class TraceState:
    """Exponentially decaying spike traces (one per channel, one per neuron)."""

    x_pre: np.ndarray
    x_post: np.ndarray

    @classmethod
    def zeros(cls, n_exc: int, n_syn: int) -> "TraceState":
        return cls(
            x_pre=np.zeros(n_syn, dtype=np.float64),
            x_post=np.zeros(n_exc, dtype=np.float64),
        )

    def reset(self):
        self.x_pre[:] = 0.0
        self.x_post[:] = 0.0


@dataclass
class SpikeAccumulators:
    """Windowed spike counters, reset at every window boundary.

    Presynaptic counts are stored per input channel rather than per
    (neuron, channel) pair: with full connectivity every row would be
    identical, so the maximum over channels equals the maximum over pairs.
    """

    n_sp_pre: np.ndarray
    n_sp_post: np.ndarray

    @classmethod
    def zeros(cls, n_exc: int, n_syn: int) -> "SpikeAccumulators":
        return cls(
            n_sp_pre=np.zeros(n_syn, dtype=np.int64),
            n_sp_post=np.zeros(n_exc, dtype=np.int64),
        )

    def reset(self):
        self.n_sp_pre[:] = 0
        self.n_sp_post[:] = 0


@dataclass
class UpdateReport:
    """What one window boundary did to the weights."""

    kind: str  # "potentiation" or "depression"
    row: int | None  # potentiated row, None for depression
    k_p: int | None
    k_d: float | None
    elements_touched: int


def potentiation_factor(max_sp_post: int, sp_th: int) -> int:
    """Adaptive potentiation factor: ceil(max_sp_post / sp_th)."""
    if sp_th < 1:
        raise ConfigError(f"sp_th must be >= 1, got {sp_th}")
    if max_sp_post < 0:
        raise ConfigError("max_sp_post must be non-negative")
    return -(-max_sp_post // sp_th)


def depression_factor(max_sp_post: int, max_sp_pre: int) -> float:
    """Adaptive depression factor: max_sp_post / max_sp_pre.

    Zero presynaptic activity yields factor 0 by convention: with no
    presynaptic drive there is nothing to depress.
    """
    if max_sp_pre < 0:
        raise ConfigError("max_sp_pre must be non-negative")
    if max_sp_pre == 0:
        return 0.0
    return max_sp_post / max_sp_pre


def stdp_update(
    kind: str,
    k: float,
    params: LearningParams,
    traces: TraceState,
    row: int | None = None,
) -> np.ndarray:
    """Weight deltas for one window decision, before clamping.

    Depression returns one delta per row (``-k * eta_pre * x_post``, the
    same value across each row); potentiation returns one delta per column
    for row ``row`` (``k * eta_post * x_pre``).
    """
    if kind == "depression":
        return -k * params.eta_pre * traces.x_post
    if kind == "potentiation":
        if row is None or not (0 <= row < traces.x_post.shape[0]):
            raise IndexError(f"potentiation row {row} out of range")
        return k * params.eta_post * traces.x_pre
    raise ConfigError(f"unknown update kind {kind!r}")


def weight_decay_rate(n_exc: int, w_decay_base: float) -> float:
    """Size-dependent decay rate: smaller networks forget faster."""
    if n_exc < 1:
        raise ConfigError(f"n_exc must be >= 1, got {n_exc}")
    return w_decay_base / n_exc


def apply_weight_decay(
    weights: np.ndarray,
    rate: float,
    tau_decay: float,
    dt: float,
    w_min: float = 0.0,
    w_max: float = 1.0,
) -> np.ndarray:
    """One step of multiplicative weight decay, in place.

    Every weight is multiplied by ``exp(-rate * dt / tau_decay)`` and the
    result clamped to ``[w_min, w_max]``.  The closed form never
    overshoots, whatever the step size.
    """
    if dt <= 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if rate == 0.0:
        return weights
    factor = math.exp(-rate * dt / tau_decay)
    np.multiply(weights, factor, out=weights)
    if w_min > 0.0:
        # with w_min <= 0 the contraction cannot leave [w_min, w_max]
        np.clip(weights, w_min, w_max, out=weights)
    return weights


def window_update(
    acc: SpikeAccumulators,
    traces: TraceState,
    weights: np.ndarray,
    params: LearningParams,
) -> tuple[np.ndarray, UpdateReport]:
    """Apply the one-per-window update decision and reset the accumulators.

    Mutates ``weights`` in place (clamped to the configured bounds) and
    returns it with a report of what happened.  Depression touches every
    element; potentiation touches exactly one row.
    """
    n_exc, n_syn = weights.shape
    max_pre = int(acc.n_sp_pre.max()) if acc.n_sp_pre.size else 0
    max_post = int(acc.n_sp_post.max()) if acc.n_sp_post.size else 0

    if max_post == 0:
        # no postsynaptic spike in this window -> depression of all rows
        k_d = depression_factor(max_post, max_pre)
        if k_d != 0.0:
            delta = stdp_update("depression", k_d, params, traces)
            weights += delta[:, None]
            np.clip(weights, params.w_min, params.w_max, out=weights)
        report = UpdateReport(
            kind="depression",
            row=None,
            k_p=None,
            k_d=k_d,
            elements_touched=n_exc * n_syn,
        )
    else:
        m = int(np.argmax(acc.n_sp_post))  # ties resolve to the lowest index
        k_p = potentiation_factor(max_post, params.sp_th)
        delta = stdp_update("potentiation", k_p, params, traces, row=m)
        weights[m] += delta
        np.clip(weights[m], params.w_min, params.w_max, out=weights[m])
        report = UpdateReport(
            kind="potentiation",
            row=m,
            k_p=k_p,
            k_d=None,
            elements_touched=n_syn,
        )

    acc.reset()
    return weights, report


def on_spike_trace_update(
    traces: TraceState,
    pre_spikes: np.ndarray,
    post_spikes: np.ndarray,
    dt: float,
    params: LearningParams,
    acc: SpikeAccumulators | None = None,
) -> TraceState:
    """Per-step trace maintenance: exponential decay, then +1 per own spike.

    Also advances the windowed spike accumulators when given.  Called on
    every simulation step during training.
    """
    traces.x_pre *= math.exp(-dt / params.tau_x_pre)
    traces.x_post *= math.exp(-dt / params.tau_x_post)
    pre_idx = np.flatnonzero(pre_spikes)
    post_idx = np.flatnonzero(post_spikes)
    if pre_idx.size:
        traces.x_pre[pre_idx] += 1.0
    if post_idx.size:
        traces.x_post[post_idx] += 1.0
    if acc is not None:
        if pre_idx.size:
            acc.n_sp_pre[pre_idx] += 1
        if post_idx.size:
            acc.n_sp_post[post_idx] += 1
    return traces


def per_spike_update(
    weights: np.ndarray,
    traces: TraceState,
    pre_spikes: np.ndarray,
    post_spikes: np.ndarray,
    params: LearningParams,
) -> int:
    """Conventional pair-based STDP at fixed rates: one update per spike.

    On each presynaptic spike, its column is depressed by
    ``eta_pre * x_post``; on each postsynaptic spike, its row is
    potentiated by ``eta_post * x_pre``.  Traces must already include the
    current step's spikes.  Returns the number of weight elements touched.
    This is the degraded baseline rule (no window gating, no adaptive
    factors, intended to be combined with decay disabled).
    """
    n_exc, n_syn = weights.shape
    touched = 0
    pre_idx = np.flatnonzero(pre_spikes)
    post_idx = np.flatnonzero(post_spikes)
    if pre_idx.size:
        cols = weights[:, pre_idx]  # fancy indexing copies; write back below
        cols -= params.eta_pre * traces.x_post[:, None]
        np.clip(cols, params.w_min, params.w_max, out=cols)
        weights[:, pre_idx] = cols
        touched += pre_idx.size * n_exc
    if post_idx.size:
        rows = weights[post_idx]
        rows += params.eta_post * traces.x_pre[None, :]
        np.clip(rows, params.w_min, params.w_max, out=rows)
        weights[post_idx] = rows
        touched += post_idx.size * n_syn
    return touched


def run_on_raster(
    weights: np.ndarray,
    pre_raster: np.ndarray,
    post_raster: np.ndarray,
    params: LearningParams,
    dt: float,
    decay_enabled: bool = True,
) -> tuple[np.ndarray, list[UpdateReport]]:
    """Drive the full windowed engine over recorded rasters.

    This is exactly the per-step schedule the network runs during
    training (traces and accumulators each step, one window decision per
    ``t_step``, weight decay on the remaining steps), applied to spike
    rasters recorded elsewhere.  Mutates and returns ``weights``.
    """
    n_steps = pre_raster.shape[0]
    if post_raster.shape[0] != n_steps:
        raise ConfigError("pre and post rasters must cover the same steps")
    n_exc, n_syn = weights.shape
    window = round(params.t_step / dt)
    if window < 1 or n_steps % window != 0:
        raise ConfigError(
            f"t_step={params.t_step} ms must be a multiple of dt covering the raster"
        )
    traces = TraceState.zeros(n_exc, n_syn)
    acc = SpikeAccumulators.zeros(n_exc, n_syn)
    rate = weight_decay_rate(n_exc, params.w_decay_base) if decay_enabled else 0.0
    reports = []
    for t in range(n_steps):
        on_spike_trace_update(traces, pre_raster[t], post_raster[t], dt, params, acc)
        if (t + 1) % window == 0:
            _, report = window_update(acc, traces, weights, params)
            reports.append(report)
        elif rate > 0.0:
            apply_weight_decay(
                weights, rate, params.tau_decay, dt, params.w_min, params.w_max
            )
    return weights, reports


def count_update_events(
    pre_raster: np.ndarray,
    post_raster: np.ndarray,
    t_step_steps: int,
) -> tuple[int, int]:
    """Update events a recorded raster would trigger under both schedules.

    Window gating fires at most one update event per window, and only for
    windows containing at least one spike; per-spike updating fires one
    event per spike.  Window gating therefore never fires more events, and
    fires strictly fewer whenever some window holds more than one spike.
    """
    if t_step_steps < 1:
        raise ConfigError(f"t_step_steps must be >= 1, got {t_step_steps}")
    n_steps = pre_raster.shape[0]
    if post_raster.shape[0] != n_steps:
        raise ConfigError("pre and post rasters must cover the same steps")
    spikes_per_step = pre_raster.sum(axis=1) + post_raster.sum(axis=1)
    per_spike_events = int(spikes_per_step.sum())
    windowed_events = 0
    for start in range(0, n_steps, t_step_steps):
        if spikes_per_step[start : start + t_step_steps].sum() > 0:
            windowed_events += 1
    return windowed_events, per_spike_events
