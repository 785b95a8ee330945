"""Acceptance suite.

Each test prints one PASS/FAIL line for its criterion.  Tolerances are
pinned here, not configured elsewhere:

1. analytic memory and energy estimators within 5% of the measured run
   at n_exc in {100, 200, 400};
2. the lateral-inhibition architecture strictly beats an equal-size
   inhibitory-layer reference on parameter count and inference ops;
3. window gating never fires more update events than per-spike updating
   on 100 random rasters, strictly fewer when a window holds >1 spike;
4. dynamic scenario (digits 0-4, 1000 samples/task, 5 seeds): mean
   most-recent-task accuracy beats the degraded baseline (per-spike
   updates, no decay, fixed rates) on at least 4 of 5 seeds;
5. shuffled scenario, 5000 samples: overall accuracy >= 0.6 on a
   2000-sample test slice;
6. the plasticity engine matches a per-element transliterated reference
   bit-exactly on a 5-neuron/16-synapse instance;
7. search with constraints admitting {100, 200, 300} returns 300 within
   the probe budget, and its result satisfies the constraints;
8. a repeated run with identical config and seed emits byte-identical
   CSV files.
"""

from pathlib import Path

import numpy as np
import pytest

from driftsnn.datasets import as_samples, load_idx_images, load_idx_labels, write_idx_corpus
from driftsnn.dynamics import LifParams, NeuronState, step
from driftsnn.harness import (
    DatasetConfig,
    ExperimentConfig,
    ScenarioSpec,
    build_scenario,
    run_experiment,
    select_calibration,
)
from driftsnn.network import (
    NetworkConfig,
    SpikingNetwork,
    inference_op_count,
    parameter_count,
)
from driftsnn.plasticity import LearningParams, count_update_events, run_on_raster
from driftsnn.search import (
    CostModel,
    SearchConfig,
    calibrate_e1,
    energy_estimate,
    memory_estimate,
    search,
)

from .oracles import transliterated_training_pass


def announce(criterion: str, passed: bool, detail: str = ""):
    tag = "PASS" if passed else "FAIL"
    print(f"\n[acceptance] {criterion}: {tag} {detail}")
    assert passed, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    """Digit corpus served through the IDX loaders (1200/class train,
    200/class test)."""
    directory = tmp_path_factory.mktemp("acceptance-corpus")
    paths = write_idx_corpus(directory, n_train_per_class=1200, n_test_per_class=200, seed=20)
    train_x = load_idx_images(paths["train_images"])
    train_y = load_idx_labels(paths["train_labels"])
    test_x = load_idx_images(paths["test_images"])
    test_y = load_idx_labels(paths["test_labels"])
    return {"dir": directory, "paths": paths, "train": (train_x, train_y), "test": (test_x, test_y)}


def training_stream(corpus, n, seed=0):
    train_x, train_y = corpus["train"]
    calib_idx = select_calibration(train_y, 100, 10, seed)
    spec = ScenarioSpec(
        mode="shuffled", task_order=list(range(10)),
        samples_per_task=max(n // 10, 1), seed=seed,
    )
    return build_scenario(spec, train_x, train_y, exclude=calib_idx)[:n]


# ----------------------------------------------------------------------
# 1. estimator accuracy


def test_criterion_1_estimator_accuracy(corpus):
    stream = training_stream(corpus, 100)
    cm = CostModel()
    worst_mem = 0.0
    worst_energy = 0.0
    for n_exc in (100, 200, 400):
        cfg = NetworkConfig(n_exc=n_exc, seed=1)

        net = SpikingNetwork(cfg)
        est_mem = memory_estimate(n_exc, cfg.n_syn, 32)
        act_mem = net.serialized_state_bytes(32)
        worst_mem = max(worst_mem, abs(act_mem - est_mem) / act_mem)

        probe = stream[0]
        e1t = calibrate_e1(cfg, "training", cm, probe)
        net_t = SpikingNetwork(cfg)
        for s in stream:
            net_t.train_sample(s)
        actual_t = cm.energy(net_t.count_ops("training"))
        err_t = abs(energy_estimate(e1t, 100) - actual_t) / actual_t

        e1i = calibrate_e1(cfg, "inference", cm, probe)
        net_i = SpikingNetwork(cfg)
        for k, s in enumerate(stream):
            net_i.infer_sample(s, idx=k)
        actual_i = cm.energy(net_i.count_ops("inference"))
        err_i = abs(energy_estimate(e1i, 100) - actual_i) / actual_i
        worst_energy = max(worst_energy, err_t, err_i)

    ok = worst_mem < 0.05 and worst_energy < 0.05
    announce(
        "criterion 1 (estimators within 5%)",
        ok,
        f"worst memory err {worst_mem * 100:.2f}%, worst energy err {worst_energy * 100:.2f}%",
    )


# ----------------------------------------------------------------------
# 2. architecture reduction


def test_criterion_2_architecture_reduction():
    ok = True
    details = []
    for n_exc in (100, 200, 400):
        p_slim = parameter_count(n_exc, 784)
        p_full = parameter_count(n_exc, 784, inhibitory_layer=True)
        o_slim = inference_op_count(700, n_exc, 2000, 80)
        o_full = inference_op_count(700, n_exc, 2000, 80, inhibitory_layer=True)
        ok = ok and p_slim < p_full and o_slim < o_full
        details.append(f"n_exc={n_exc}: params {p_slim}<{p_full}, ops {o_slim}<{o_full}")
    announce("criterion 2 (architecture reduction)", ok, "; ".join(details))


# ----------------------------------------------------------------------
# 3. spurious-update reduction


def test_criterion_3_update_event_reduction():
    rng = np.random.default_rng(3)
    ok = True
    strict_needed = 0
    for _ in range(100):
        n_steps = 100
        pre = rng.random((n_steps, 12)) < rng.uniform(0, 0.15)
        post = rng.random((n_steps, 6)) < rng.uniform(0, 0.08)
        windowed, per_spike = count_update_events(pre, post, t_step_steps=20)
        ok = ok and windowed <= per_spike
        per_window = (pre.sum(axis=1) + post.sum(axis=1)).reshape(5, 20).sum(axis=1)
        if (per_window > 1).any():
            strict_needed += 1
            ok = ok and windowed < per_spike
    announce(
        "criterion 3 (update gating)",
        ok,
        f"100 rasters, {strict_needed} with multi-spike windows all strictly reduced",
    )


# ----------------------------------------------------------------------
# 4. continual-learning direction


def run_dynamic(corpus, seed: int, degraded: bool) -> float:
    """Mean most-recent-task accuracy over the 5-task dynamic scenario."""
    train_x, train_y = corpus["train"]
    test_x, test_y = corpus["test"]
    cfg = NetworkConfig(n_exc=100, seed=seed)
    if degraded:
        cfg.rule = "per_spike"
        cfg.decay_enabled = False
    net = SpikingNetwork(cfg)

    calib_idx = select_calibration(train_y, 1000, 10, seed)
    spec = ScenarioSpec(
        mode="dynamic", task_order=[0, 1, 2, 3, 4], samples_per_task=1000, seed=seed
    )
    stream = build_scenario(spec, train_x, train_y, exclude=calib_idx)
    calib = as_samples(train_x[calib_idx], train_y[calib_idx])
    test_samples = as_samples(test_x, test_y)

    recents = []
    for k, task in enumerate(spec.task_order):
        for s in stream[k * 1000 : (k + 1) * 1000]:
            net.train_sample(s)
        scope = spec.task_order[: k + 1]
        labels = net.assign_labels(calib, classes=scope)
        subset = [s for s in test_samples if s.label in scope]
        report = net.evaluate(labels, subset, scope=scope, recent_task=task)
        recents.append(report.most_recent_accuracy)
    return float(np.mean(recents))


def test_criterion_4_continual_learning_direction(corpus):
    wins = 0
    details = []
    for seed in range(5):
        full = run_dynamic(corpus, seed, degraded=False)
        base = run_dynamic(corpus, seed, degraded=True)
        wins += full > base
        details.append(f"seed {seed}: {full:.3f} vs {base:.3f}")
    announce(
        "criterion 4 (dynamic recent-task direction)",
        wins >= 4,
        f"wins {wins}/5 | " + "; ".join(details),
    )


# ----------------------------------------------------------------------
# 5. non-dynamic sanity


def test_criterion_5_shuffled_accuracy(corpus):
    train_x, train_y = corpus["train"]
    test_x, test_y = corpus["test"]
    cfg = NetworkConfig(n_exc=100, seed=0)
    net = SpikingNetwork(cfg)

    calib_idx = select_calibration(train_y, 1000, 10, 0)
    spec = ScenarioSpec(
        mode="shuffled", task_order=list(range(10)), samples_per_task=500, seed=0
    )
    stream = build_scenario(spec, train_x, train_y, exclude=calib_idx)
    assert len(stream) == 5000
    for s in stream:
        net.train_sample(s)
    labels = net.assign_labels(as_samples(train_x[calib_idx], train_y[calib_idx]))
    test_samples = as_samples(test_x, test_y)
    assert len(test_samples) == 2000
    report = net.evaluate(labels, test_samples, scope=range(10))
    announce(
        "criterion 5 (shuffled accuracy >= 0.6)",
        report.overall_accuracy >= 0.6,
        f"accuracy {report.overall_accuracy:.3f} on 2000 test samples",
    )


# ----------------------------------------------------------------------
# 6. oracle equivalence


def test_criterion_6_transliteration_equivalence():
    # record rasters from an actual 5-neuron/16-synapse dynamics run
    rng = np.random.default_rng(6)
    n_exc, n_syn, n_steps = 5, 16, 100
    lp = LearningParams(t_step=10.0, sp_th=2)
    p = LifParams()
    weights = rng.random((n_exc, n_syn)) * 0.4
    state = NeuronState.zeros(n_exc, p)
    from driftsnn.dynamics import InhibitionParams

    inh = InhibitionParams(w_inh=1.0)
    pre = rng.random((n_steps, n_syn)) < 0.08
    post = np.zeros((n_steps, n_exc), dtype=bool)
    for t in range(n_steps):
        _, out = step(state, weights, pre[t], p, inh, 0.5, theta_inc=0.05)
        post[t] = out

    w0 = rng.random((n_exc, n_syn)) * 0.3
    engine_w, _ = run_on_raster(w0.copy(), pre, post, lp, 0.5)
    oracle_w = transliterated_training_pass(w0, pre, post, lp, 0.5)
    exact = np.array_equal(engine_w, oracle_w)
    announce(
        "criterion 6 (transliteration equivalence)",
        exact,
        f"max |diff| = {np.max(np.abs(engine_w - oracle_w)):.3e}"
        + (" (bit-exact)" if exact else ""),
    )


# ----------------------------------------------------------------------
# 7. search contract


def test_criterion_7_search_contract(corpus):
    stream = training_stream(corpus, 1)
    base = NetworkConfig(n_exc=100, seed=0)
    cfg = SearchConfig(
        mem_c=memory_estimate(300, base.n_syn, 32),
        e_ct=float("inf"),
        e_ci=float("inf"),
        n_add=100,
        bp=32,
        base=base,
    )
    result = search(cfg, CostModel(), stream[0])
    sizes = [c.n_exc for c in result.candidates]
    probe_budget = 2 * (len(sizes))
    probes = result.training_probes + result.inference_probes
    ok = (
        result.feasible
        and result.best.n_exc == 300
        and sizes == [100, 200, 300]
        and probes <= probe_budget
        and result.best.mem <= cfg.mem_c
        and result.best.e_t <= cfg.e_ct
        and result.best.e_i <= cfg.e_ci
    )
    announce(
        "criterion 7 (search contract)",
        ok,
        f"selected n_exc={result.best.n_exc if result.best else None}, "
        f"candidates {sizes}, probes {probes} <= {probe_budget}",
    )


# ----------------------------------------------------------------------
# 8. determinism


def test_criterion_8_run_determinism(corpus, tmp_path):
    def one_run(out_dir) -> dict[str, bytes]:
        cfg = ExperimentConfig(
            network=NetworkConfig(n_exc=30, seed=5, t_sim=100.0),
            scenario=ScenarioSpec(
                mode="dynamic", task_order=[0, 1, 2], samples_per_task=20, seed=5
            ),
            dataset=DatasetConfig(
                train_images=str(corpus["paths"]["train_images"]),
                train_labels=str(corpus["paths"]["train_labels"]),
                test_images=str(corpus["paths"]["test_images"]),
                test_labels=str(corpus["paths"]["test_labels"]),
            ),
            out_dir=str(out_dir),
            calibration_samples=50,
            eval_test_samples=100,
        )
        run_experiment(cfg)
        return {
            name: (Path(out_dir) / name).read_bytes()
            for name in ("eval.csv", "confusion.csv", "ops.csv")
        }

    a = one_run(tmp_path / "a")
    b = one_run(tmp_path / "b")
    identical = all(a[k] == b[k] for k in a)
    announce(
        "criterion 8 (byte-identical reruns)",
        identical,
        f"{len(a)} CSV files compared",
    )
