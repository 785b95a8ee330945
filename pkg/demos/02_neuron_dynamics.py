"""Excitatory-layer dynamics: leaky integration, adaptive threshold,
and direct lateral inhibition.

A single neuron under steady drive fires with growing inter-spike
intervals as its adaptation potential rises.  A second experiment shows
one spiking neuron directly suppressing its neighbors, with no
inhibitory population in between.
"""

import numpy as np

from driftsnn.dynamics import (
    InhibitionParams,
    LifParams,
    NeuronState,
    adaptive_theta_target,
    step,
)

DT = 0.5

# --- adaptation stretches inter-spike intervals -----------------------
params = LifParams(theta_decay=0.0)
theta_inc = 0.6
state = NeuronState.zeros(1, params)
weights = np.array([[0.35]])
drive = np.ones(1, dtype=bool)  # one input spike every step

spike_times = []
trace_v, trace_theta = [], []
for t in range(700):
    _, out = step(state, weights, drive, params, InhibitionParams(w_inh=0.0), DT,
                  theta_inc=theta_inc)
    trace_v.append(state.v[0])
    trace_theta.append(state.theta[0])
    if out[0]:
        spike_times.append(t * DT)

isi = np.diff(spike_times)
print(f"{len(spike_times)} spikes in 350 ms under constant drive")
print("inter-spike intervals (ms):", [f"{x:.1f}" for x in isi])
print(f"adaptation target for these settings: "
      f"{adaptive_theta_target(LifParams(), 350.0):.3f} mV per presentation")

# --- direct lateral inhibition ----------------------------------------
params = LifParams()
inh = InhibitionParams(w_inh=2.0)
trio = NeuronState.zeros(3, params)
trio.v[0] = params.v_th_base + 1.0  # neuron 0 will fire this step
before = trio.v.copy()
_, out = step(trio, np.zeros((3, 4)), np.zeros(4, dtype=bool), params, inh, DT)
print(f"\nneuron 0 spiked: {bool(out[0])}")
print(f"neighbors moved {before[1] - trio.v[1]:.1f} mV down "
      f"(w_inh = {inh.w_inh}); the spiking neuron only reset itself")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    time_ms = np.arange(700) * DT
    fig, (ax_v, ax_th) = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
    ax_v.plot(time_ms, trace_v)
    ax_v.set_ylabel("membrane (mV)")
    for s in spike_times:
        ax_v.axvline(s, color="red", alpha=0.2)
    ax_th.plot(time_ms, trace_theta)
    ax_th.set_ylabel("adaptation theta (mV)")
    ax_th.set_xlabel("time (ms)")
    fig.tight_layout()
    fig.savefig("neuron_dynamics.png", dpi=120)
    print("saved neuron_dynamics.png")
except ImportError:
    print("matplotlib not available; skipped the trace plot")
