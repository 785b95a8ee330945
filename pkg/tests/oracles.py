"""Independent reference implementations used as test oracles.

Everything here is deliberately written with plain Python loops and
scalar arithmetic, separate from the package's vectorized paths, so a
test comparing the two exercises two genuinely different routes to the
same numbers.
"""

import math

import numpy as np


def transliterated_training_pass(w0, pre_raster, post_raster, lp, dt):
    """Per-element reading of the windowed learning schedule.

    Accumulates presynaptic counts per (neuron, channel) pair, makes one
    potentiation-or-depression decision per window, applies multiplicative
    weight decay on the other steps, and clamps every element.  Returns
    the post-pass weights as a float array.
    """
    n_steps, n_syn = pre_raster.shape
    n_exc = post_raster.shape[1]
    w = [[float(w0[i][j]) for j in range(n_syn)] for i in range(n_exc)]
    x_pre = [0.0] * n_syn
    x_post = [0.0] * n_exc
    nsp_pre = [[0] * n_syn for _ in range(n_exc)]
    nsp_post = [0] * n_exc
    window = round(lp.t_step / dt)
    d_pre = math.exp(-dt / lp.tau_x_pre)
    d_post = math.exp(-dt / lp.tau_x_post)
    rate = lp.w_decay_base / n_exc
    decay_f = math.exp(-rate * dt / lp.tau_decay)

    for t in range(n_steps):
        for j in range(n_syn):
            x_pre[j] *= d_pre
            if pre_raster[t][j]:
                x_pre[j] += 1.0
        for i in range(n_exc):
            x_post[i] *= d_post
            if post_raster[t][i]:
                x_post[i] += 1.0
        for i in range(n_exc):
            for j in range(n_syn):
                if pre_raster[t][j]:
                    nsp_pre[i][j] += 1
            if post_raster[t][i]:
                nsp_post[i] += 1

        if (t + 1) % window == 0:
            max_pre = max(max(row) for row in nsp_pre)
            max_post = max(nsp_post)
            if max_post == 0:
                k_d = (max_post / max_pre) if max_pre > 0 else 0.0
                if k_d != 0.0:
                    for i in range(n_exc):
                        dw = -k_d * lp.eta_pre * x_post[i]
                        for j in range(n_syn):
                            w[i][j] = min(max(w[i][j] + dw, lp.w_min), lp.w_max)
            else:
                m = nsp_post.index(max_post)
                k_p = math.ceil(max_post / lp.sp_th)
                for j in range(n_syn):
                    w[m][j] = min(
                        max(w[m][j] + k_p * lp.eta_post * x_pre[j], lp.w_min), lp.w_max
                    )
            for i in range(n_exc):
                nsp_post[i] = 0
                for j in range(n_syn):
                    nsp_pre[i][j] = 0
        else:
            if rate > 0.0:
                for i in range(n_exc):
                    for j in range(n_syn):
                        w[i][j] = min(max(w[i][j] * decay_f, lp.w_min), lp.w_max)

    return np.array(w)


def scalar_lif(
    input_times,
    w,
    p,
    dt,
    t_end,
    theta_inc,
):
    """Single-neuron LIF integration with scalar Python floats.

    Same model as the vectorized engine (conductance injection then decay,
    Euler leak integration, adaptive threshold with linear decay, hard
    refractory period) at an arbitrary step size, used to cross-check
    spike timing statistics at finer resolution.
    """
    v = p.v_rest
    ge = 0.0
    theta = 0.0
    refrac_steps_left = 0
    refrac_steps = int(round(p.refrac / dt))
    spike_times = []
    input_times = sorted(input_times)
    next_input = 0
    n_steps = int(round(t_end / dt))
    for k in range(n_steps):
        t = k * dt
        while next_input < len(input_times) and input_times[next_input] <= t + 1e-12:
            ge += w
            next_input += 1
        ge *= math.exp(-dt / p.tau_ge)
        ready = refrac_steps_left == 0
        if ready:
            v += dt * ((p.v_rest - v) / p.tau_mem + ge)
        spiked = ready and v >= p.v_th_base + theta
        if refrac_steps_left > 0:
            refrac_steps_left -= 1
        if spiked:
            spike_times.append(t)
            v = p.v_reset
            theta += theta_inc
            refrac_steps_left = refrac_steps
        else:
            theta = max(theta - p.theta_decay * dt, 0.0)
    return spike_times
