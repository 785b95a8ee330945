"""Excitatory-layer dynamics: LIF neurons with conductance synapses,
an adaptive firing threshold, and direct lateral inhibition.

There is no inhibitory neuron population.  A spike directly subtracts a
fixed amount from every other neuron's membrane potential, which removes
the inhibitory layer's state and operations while keeping winner-take-all
competition.

The effective firing threshold of neuron i is ``v_th_base + theta[i]``.
``theta`` grows by a fixed increment on every output spike and otherwise
decays linearly at ``theta_decay`` per ms, so persistently active neurons
become harder to excite and quiet ones recover.  ``theta`` is the
long-term homeostatic variable: it survives per-sample resets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalFault


@dataclass
class LifParams:
    """Leaky integrate-and-fire parameters (potentials in mV, times in ms).

    ``theta_inc`` may be left as None, in which case the network derives it
    from the adaptive target ``c_theta * theta_decay * t_sim`` so that one
    spike per presentation exactly balances the linear theta decay over a
    presentation (see ``adaptive_theta_target``).
    """

    v_rest: float = -65.0
    v_reset: float = -60.0
    v_th_base: float = -52.0
    tau_mem: float = 100.0
    refrac: float = 5.0
    tau_ge: float = 1.0
    theta_inc: float | None = None
    theta_decay: float = 1.5e-4  # theta units per ms, linear decay
    c_theta: float = 20.0

    def validate(self):
        if not self.v_reset < self.v_th_base:
            raise ConfigError(
                f"v_reset={self.v_reset} must be below v_th_base={self.v_th_base}"
            )
        for name in ("tau_mem", "tau_ge"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.refrac < 0:
            raise ConfigError("refrac must be non-negative")
        if self.theta_inc is not None and self.theta_inc < 0:
            raise ConfigError("theta_inc must be non-negative")
        if self.theta_decay < 0:
            raise ConfigError("theta_decay must be non-negative")
        return self


@dataclass
class InhibitionParams:
    """Direct lateral inhibition: each spike subtracts ``w_inh`` (mV) from
    every other neuron's potential, floored at ``v_rest - floor_gap``.
    Simultaneous spikes accumulate linearly."""

    w_inh: float = 0.3
    floor_gap: float = 35.0

    def validate(self):
        if self.w_inh < 0:
            raise ConfigError("w_inh must be non-negative")
        if self.floor_gap < 0:
            raise ConfigError("floor_gap must be non-negative")
        return self


@dataclass
class NeuronState:
    """Per-neuron state vectors for the excitatory layer."""

    v: np.ndarray
    theta: np.ndarray
    ge: np.ndarray
    refrac_left: np.ndarray  # remaining refractory steps, int

    @classmethod
    def zeros(cls, n_exc: int, params: LifParams) -> "NeuronState":
        return cls(
            v=np.full(n_exc, params.v_rest, dtype=np.float64),
            theta=np.zeros(n_exc, dtype=np.float64),
            ge=np.zeros(n_exc, dtype=np.float64),
            refrac_left=np.zeros(n_exc, dtype=np.int64),
        )

    @property
    def n_exc(self) -> int:
        return self.v.shape[0]

    def copy(self) -> "NeuronState":
        return NeuronState(
            self.v.copy(), self.theta.copy(), self.ge.copy(), self.refrac_left.copy()
        )


def adaptive_theta_target(params: LifParams, t_sim: float) -> float:
    """Adaptation scale ``c_theta * theta_decay * t_sim``.

    This is the amount of theta shed by linear decay over one presentation,
    scaled by ``c_theta``; using it as the per-spike increment makes a
    neuron firing ``c_theta`` times per presentation hold its threshold
    steady.  Zero ``c_theta`` disables adaptation.
    """
    if t_sim <= 0:
        raise ConfigError(f"t_sim must be positive, got {t_sim}")
    return params.c_theta * params.theta_decay * t_sim


def resolve_theta_inc(params: LifParams, t_sim: float) -> float:
    """The concrete per-spike theta increment: explicit value or adaptive target."""
    if params.theta_inc is not None:
        return params.theta_inc
    return adaptive_theta_target(params, t_sim)


def step(
    state: NeuronState,
    weights: np.ndarray,
    input_spikes: np.ndarray,
    params: LifParams,
    inh: InhibitionParams,
    dt: float,
    theta_inc: float | None = None,
    freeze_theta: bool = False,
) -> tuple[NeuronState, np.ndarray]:
    """Advance the excitatory layer by one step of length ``dt`` ms.

    Order of operations:
      1. conductance injection ``ge += weights @ input_spikes``, then
         exponential conductance decay with ``tau_ge``;
      2. Euler integration of non-refractory potentials: leak toward
         ``v_rest`` plus the conductance drive;
      3. threshold test against ``v_th_base + theta`` (refractory neurons
         never spike);
      4. spiking neurons reset to ``v_reset``, gain ``theta_inc``, and
         start their refractory countdown;
      5. each spike subtracts ``w_inh`` from every *other* neuron's
         potential (linear accumulation), floored at
         ``v_rest - floor_gap``;
      6. theta of non-spiking neurons decays linearly by
         ``theta_decay * dt`` (floored at zero).

    Mutates ``state`` in place and returns it together with the boolean
    output spike vector.  Raises ``NumericalFault`` if a non-finite value
    appears, naming the first offending neuron.
    """
    if dt <= 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    n_exc = state.n_exc
    if weights.shape[0] != n_exc or weights.shape[1] != input_spikes.shape[0]:
        raise ConfigError(
            f"shape mismatch: weights {weights.shape}, state n_exc={n_exc}, "
            f"input {input_spikes.shape}"
        )
    if theta_inc is None:
        theta_inc = params.theta_inc if params.theta_inc is not None else 0.0

    # 1. synaptic injection, then conductance decay
    active = np.flatnonzero(input_spikes)
    if active.size:
        state.ge += weights[:, active].sum(axis=1)
    state.ge *= math.exp(-dt / params.tau_ge)

    # 2. membrane integration (refractory neurons hold their potential)
    ready = state.refrac_left == 0
    dv = (dt / params.tau_mem) * (params.v_rest - state.v) + dt * state.ge
    state.v[ready] += dv[ready]

    # 3. threshold with per-neuron adaptation
    out = ready & (state.v >= params.v_th_base + state.theta)

    # 4. reset, adaptation increment, refractory countdown
    state.refrac_left[state.refrac_left > 0] -= 1
    if out.any():
        state.v[out] = params.v_reset
        if not freeze_theta:
            state.theta[out] += theta_inc
        state.refrac_left[out] = int(round(params.refrac / dt))

        # 5. direct lateral inhibition (a spike never inhibits its owner)
        n_spikes = int(out.sum())
        if inh.w_inh > 0.0:
            kick = inh.w_inh * (n_spikes - out.astype(np.float64))
            floor = params.v_rest - inh.floor_gap
            np.maximum(state.v - kick, floor, out=state.v)

    # 6. linear theta decay for non-spiking neurons
    if not freeze_theta and params.theta_decay > 0.0:
        decayed = state.theta - params.theta_decay * dt
        np.maximum(decayed, 0.0, out=decayed)
        state.theta = np.where(out, state.theta, decayed)

    for name, arr in (("v", state.v), ("ge", state.ge), ("theta", state.theta)):
        finite = np.isfinite(arr)
        if not finite.all():
            raise NumericalFault(name, int(np.flatnonzero(~finite)[0]))

    return state, out


def reset_for_sample(state: NeuronState, params: LifParams) -> NeuronState:
    """Clear per-presentation state; theta persists across samples."""
    state.v[:] = params.v_rest
    state.ge[:] = 0.0
    state.refrac_left[:] = 0
    return state
