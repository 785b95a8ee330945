"""Fused presentation kernel.

One jitted loop carries a whole presentation: dynamics, traces,
accumulators, and the configured update schedule.  It mirrors the public
per-step operations (``dynamics.step``, ``plasticity.on_spike_trace_update``,
``plasticity.window_update``, ``plasticity.apply_weight_decay``,
``plasticity.per_spike_update``) expression by expression so both routes
produce the same trajectories; the test suite asserts the agreement.

All exponential decay factors are precomputed by the caller, so the
kernel body is pure arithmetic and comparisons.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def present_kernel(
    spikes,  # bool [n_steps, n_syn]
    weights,  # f8 [n_exc, n_syn], mutated
    v,
    theta,
    ge,
    refrac_left,  # i8 [n_exc]
    x_pre,
    x_post,
    nsp_pre,  # i8 [n_syn]
    nsp_post,  # i8 [n_exc]
    out_counts,  # i8 [n_exc], mutated
    rep_kind,  # i8 [n_windows] (0 depression, 1 potentiation)
    rep_row,  # i8 [n_windows]
    rep_kp,  # i8 [n_windows]
    rep_kd,  # f8 [n_windows]
    leak_coef,  # dt / tau_mem
    dt,
    v_rest,
    v_reset,
    v_th_base,
    ge_decay,
    refrac_steps,
    theta_inc,
    theta_dec_step,  # theta_decay * dt
    w_inh,
    v_floor,
    xpre_decay,
    xpost_decay,
    wdecay_factor,  # per-step weight multiplier; 1.0 disables decay
    w_min,
    w_max,
    window_steps,
    sp_th,
    eta_pre,
    eta_post,
    plastic,
    windowed,
):
    n_steps, n_syn = spikes.shape
    n_exc = weights.shape[0]
    out_flags = np.zeros(n_exc, np.bool_)
    pot_windows = 0
    dep_windows = 0
    events = 0
    touched = 0
    win_i = 0
    window_had_spike = False

    for t in range(n_steps):
        # -- synaptic injection, then conductance decay
        for j in range(n_syn):
            if spikes[t, j]:
                for i in range(n_exc):
                    ge[i] += weights[i, j]
        for i in range(n_exc):
            ge[i] *= ge_decay

        # -- membrane integration and threshold
        n_out = 0
        for i in range(n_exc):
            if refrac_left[i] == 0:
                v[i] += leak_coef * (v_rest - v[i]) + dt * ge[i]
                if v[i] >= v_th_base + theta[i]:
                    out_flags[i] = True
                    n_out += 1
                else:
                    out_flags[i] = False
            else:
                out_flags[i] = False
                refrac_left[i] -= 1

        if n_out > 0:
            for i in range(n_exc):
                if out_flags[i]:
                    v[i] = v_reset
                    if plastic:
                        theta[i] += theta_inc
                    refrac_left[i] = refrac_steps
                    out_counts[i] += 1
            if w_inh > 0.0:
                for i in range(n_exc):
                    kick = w_inh * (n_out - (1.0 if out_flags[i] else 0.0))
                    nv = v[i] - kick
                    v[i] = nv if nv > v_floor else v_floor

        if plastic and theta_dec_step > 0.0:
            for i in range(n_exc):
                if not out_flags[i]:
                    nt = theta[i] - theta_dec_step
                    theta[i] = nt if nt > 0.0 else 0.0

        if not plastic:
            continue

        # -- traces and windowed accumulators
        step_spikes = 0
        for j in range(n_syn):
            x_pre[j] *= xpre_decay
            if spikes[t, j]:
                x_pre[j] += 1.0
                nsp_pre[j] += 1
                step_spikes += 1
        for i in range(n_exc):
            x_post[i] *= xpost_decay
            if out_flags[i]:
                x_post[i] += 1.0
                nsp_post[i] += 1
                step_spikes += 1

        if windowed:
            if step_spikes > 0:
                window_had_spike = True
            if (t + 1) % window_steps == 0:
                max_pre = 0
                for j in range(n_syn):
                    if nsp_pre[j] > max_pre:
                        max_pre = nsp_pre[j]
                max_post = 0
                m = 0
                for i in range(n_exc):
                    if nsp_post[i] > max_post:
                        max_post = nsp_post[i]
                        m = i
                if max_post == 0:
                    k_d = (max_post / max_pre) if max_pre > 0 else 0.0
                    if k_d != 0.0:
                        for i in range(n_exc):
                            dw = -k_d * eta_pre * x_post[i]
                            for j in range(n_syn):
                                wv = weights[i, j] + dw
                                if wv < w_min:
                                    wv = w_min
                                elif wv > w_max:
                                    wv = w_max
                                weights[i, j] = wv
                    rep_kind[win_i] = 0
                    rep_row[win_i] = -1
                    rep_kp[win_i] = 0
                    rep_kd[win_i] = k_d
                    dep_windows += 1
                    touched += n_exc * n_syn
                else:
                    k_p = -((-max_post) // sp_th)
                    for j in range(n_syn):
                        wv = weights[m, j] + k_p * eta_post * x_pre[j]
                        if wv < w_min:
                            wv = w_min
                        elif wv > w_max:
                            wv = w_max
                        weights[m, j] = wv
                    rep_kind[win_i] = 1
                    rep_row[win_i] = m
                    rep_kp[win_i] = k_p
                    rep_kd[win_i] = 0.0
                    pot_windows += 1
                    touched += n_syn
                win_i += 1
                if window_had_spike:
                    events += 1
                window_had_spike = False
                for j in range(n_syn):
                    nsp_pre[j] = 0
                for i in range(n_exc):
                    nsp_post[i] = 0
            elif wdecay_factor != 1.0:
                if w_min > 0.0:
                    for i in range(n_exc):
                        for j in range(n_syn):
                            wv = weights[i, j] * wdecay_factor
                            if wv < w_min:
                                wv = w_min
                            weights[i, j] = wv
                else:
                    # contraction cannot leave [w_min, w_max]; plain multiply
                    for i in range(n_exc):
                        for j in range(n_syn):
                            weights[i, j] *= wdecay_factor
        else:
            # per-spike schedule: every spike is an update event
            events += step_spikes
            for j in range(n_syn):
                if spikes[t, j]:
                    for i in range(n_exc):
                        wv = weights[i, j] - eta_pre * x_post[i]
                        if wv < w_min:
                            wv = w_min
                        elif wv > w_max:
                            wv = w_max
                        weights[i, j] = wv
                    touched += n_exc
            for i in range(n_exc):
                if out_flags[i]:
                    for j in range(n_syn):
                        wv = weights[i, j] + eta_post * x_pre[j]
                        if wv < w_min:
                            wv = w_min
                        elif wv > w_max:
                            wv = w_max
                        weights[i, j] = wv
                    touched += n_syn
            if wdecay_factor != 1.0:
                if w_min > 0.0:
                    for i in range(n_exc):
                        for j in range(n_syn):
                            wv = weights[i, j] * wdecay_factor
                            if wv < w_min:
                                wv = w_min
                            weights[i, j] = wv
                else:
                    for i in range(n_exc):
                        for j in range(n_syn):
                            weights[i, j] *= wdecay_factor

    # -- non-finite detection (first offending neuron, -1 if clean)
    bad = -1
    for i in range(n_exc):
        if not (
            np.isfinite(v[i]) and np.isfinite(ge[i]) and np.isfinite(theta[i])
        ):
            bad = i
            break

    return pot_windows, dep_windows, events, touched, win_i, bad
