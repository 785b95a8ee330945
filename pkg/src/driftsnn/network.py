"""Network assembly: encoding + dynamics + plasticity, end to end.

A ``SpikingNetwork`` owns one excitatory layer, its input weight matrix,
and the learning state.  Training is unsupervised: labels never influence
weight updates.  Classification is read out afterwards by assigning each
neuron the class it responds to most (a separate labeling pass with
plasticity off and the adaptive threshold frozen) and then voting on
per-label mean spike counts.

Operation counting runs alongside both phases and feeds the energy proxy
used by the model search.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import dynamics, plasticity
from ._kernels import present_kernel
from .dynamics import InhibitionParams, LifParams, NeuronState
from .encoding import GENERATOR_NAME, ImageSample, SpikeTrain, encode, steps_for
from .errors import ConfigError, NumericalFault
from .plasticity import LearningParams, SpikeAccumulators, TraceState, UpdateReport

UNASSIGNED = -1
NO_PREDICTION = -1

# Persistent per-neuron scalars: potential, adaptation, conductance, label.
PERSISTENT_NEURON_PARAMS = 4

RULES = ("windowed", "per_spike")


@dataclass
class NetworkConfig:
    """Everything needed to build and run one network deterministically."""

    n_exc: int = 100
    n_syn: int = 784
    n_classes: int = 10
    t_sim: float = 350.0
    dt: float = 0.5
    max_rate: float = 63.75
    seed: int = 0
    rule: str = "windowed"
    decay_enabled: bool = True
    # readout retries: when a presentation yields fewer than
    # min_eval_spikes output spikes, re-present at a higher input rate
    # (each attempt adds 50% of max_rate, at most max_eval_boosts times)
    min_eval_spikes: int = 5
    max_eval_boosts: int = 8
    lif: LifParams = field(default_factory=LifParams)
    inhibition: InhibitionParams = field(default_factory=InhibitionParams)
    learning: LearningParams = field(default_factory=LearningParams)

    def validate(self) -> "NetworkConfig":
        if self.n_exc < 1:
            raise ConfigError(f"n_exc must be >= 1, got {self.n_exc}")
        if self.n_syn < 1:
            raise ConfigError(f"n_syn must be >= 1, got {self.n_syn}")
        if self.n_classes < 1:
            raise ConfigError(f"n_classes must be >= 1, got {self.n_classes}")
        if self.rule not in RULES:
            raise ConfigError(f"rule must be one of {RULES}, got {self.rule!r}")
        if self.min_eval_spikes < 0 or self.max_eval_boosts < 0:
            raise ConfigError("min_eval_spikes and max_eval_boosts must be >= 0")
        top_rate = self.max_rate * (1.0 + 0.5 * self.max_eval_boosts)
        if top_rate * self.dt * 1e-3 > 1.0:
            raise ConfigError(
                f"max_rate with {self.max_eval_boosts} readout boosts reaches "
                f"{top_rate} Hz, above one spike per step at dt={self.dt} ms"
            )
        self.lif.validate()
        self.inhibition.validate()
        self.learning.validate()
        n_steps = steps_for(self.t_sim, self.dt)
        window = steps_for(self.learning.t_step, self.dt)
        if n_steps % window != 0:
            raise ConfigError(
                f"t_step={self.learning.t_step} ms must divide t_sim={self.t_sim} ms"
            )
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["generator"] = GENERATOR_NAME
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        d = dict(d)
        d.pop("generator", None)
        lif = LifParams(**d.pop("lif", {}))
        inhibition = InhibitionParams(**d.pop("inhibition", {}))
        learning = LearningParams(**d.pop("learning", {}))
        return cls(lif=lif, inhibition=inhibition, learning=learning, **d)


@dataclass
class OpCounters:
    """Accumulated operation counts for one phase (training or inference)."""

    syn_additions: int = 0
    integrations: int = 0
    trace_updates: int = 0
    weight_elements: int = 0
    decay_elements: int = 0

    def as_dict(self) -> dict:
        return asdict(self)

    def snapshot(self) -> "OpCounters":
        return OpCounters(**asdict(self))

    def total(self) -> int:
        return (
            self.syn_additions
            + self.integrations
            + self.trace_updates
            + self.weight_elements
            + self.decay_elements
        )


@dataclass
class SampleStats:
    """Per-presentation activity and update accounting."""

    input_spikes: int
    output_spikes: int
    potentiation_windows: int = 0
    depression_windows: int = 0
    update_events: int = 0
    elements_touched: int = 0
    reports: list[UpdateReport] = field(default_factory=list)


@dataclass
class EvalReport:
    """Classification quality over a task scope, plus accounting streams."""

    scope: tuple[int, ...]
    confusion: np.ndarray  # [n_classes, n_classes + 1]; last column = no-prediction
    per_class_accuracy: dict[int, float]
    overall_accuracy: float
    most_recent_task: int | None
    most_recent_accuracy: float | None
    previous_accuracy: float | None
    update_events: int
    op_counts: dict


class SpikingNetwork:
    """One excitatory layer with full input connectivity."""

    def __init__(self, config: NetworkConfig):
        self.config = config.validate()
        cfg = config
        init_rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(cfg.seed, spawn_key=(0,)))
        )
        self.weights = init_rng.random((cfg.n_exc, cfg.n_syn)) * (0.3 * cfg.learning.w_max)
        self.state = NeuronState.zeros(cfg.n_exc, cfg.lif)
        self.traces = TraceState.zeros(cfg.n_exc, cfg.n_syn)
        self.acc = SpikeAccumulators.zeros(cfg.n_exc, cfg.n_syn)
        self.train_ops = OpCounters()
        self.infer_ops = OpCounters()
        self.presentations = 0  # training presentations seen, drives encode seeds
        self.update_events = 0
        self._n_steps = steps_for(cfg.t_sim, cfg.dt)
        self._window_steps = steps_for(cfg.learning.t_step, cfg.dt)
        self._theta_inc = dynamics.resolve_theta_inc(cfg.lif, cfg.t_sim)
        self._w_decay = plasticity.weight_decay_rate(cfg.n_exc, cfg.learning.w_decay_base)

    # ------------------------------------------------------------------
    # presentation machinery

    def _encode(
        self, sample: ImageSample, stream: int, index: int, attempt: int = 0
    ) -> SpikeTrain:
        seed = np.random.SeedSequence(
            self.config.seed, spawn_key=(stream, index, attempt)
        )
        return encode(
            sample,
            t_sim=self.config.t_sim,
            dt=self.config.dt,
            max_rate=self.config.max_rate * (1.0 + 0.5 * attempt),
            rng_seed=seed,
            n_syn=self.config.n_syn,
        )

    def _readout_counts(self, sample: ImageSample, stream: int, index: int) -> np.ndarray:
        """Inference presentation with bounded intensity escalation.

        A sample that draws fewer than ``min_eval_spikes`` output spikes is
        re-presented at increasing input rates, so heavily adapted (high
        theta) networks stay readable.  Every attempt runs through the
        simulator and is charged to the inference counters.
        """
        cfg = self.config
        counts = np.zeros(cfg.n_exc, dtype=np.int64)
        for attempt in range(cfg.max_eval_boosts + 1):
            train = self._encode(sample, stream=stream, index=index, attempt=attempt)
            counts, _ = self._present(train, plastic=False)
            if counts.sum() >= cfg.min_eval_spikes:
                break
        return counts

    def _present(self, train: SpikeTrain, plastic: bool) -> tuple[np.ndarray, SampleStats]:
        """Run one presentation; returns per-neuron spike counts and stats.

        Plastic presentations update traces, accumulators, and weights on
        the configured schedule; non-plastic ones freeze theta and leave
        all learning state untouched.  Membrane state is reset afterwards
        either way (theta persists).

        The whole presentation runs inside one fused kernel that mirrors
        the per-step module operations (see ``_kernels``).
        """
        cfg = self.config
        lp = cfg.learning
        counters = self.train_ops if plastic else self.infer_ops
        spikes = np.ascontiguousarray(train.spikes)
        n_steps = spikes.shape[0]
        total_in = int(spikes.sum())
        out_counts = np.zeros(cfg.n_exc, dtype=np.int64)
        stats = SampleStats(input_spikes=total_in, output_spikes=0)

        window = self._window_steps
        windowed = cfg.rule == "windowed"
        decay_rate = self._w_decay if cfg.decay_enabled else 0.0
        if plastic:
            self.traces.reset()
            self.acc.reset()
        n_windows = n_steps // window if (plastic and windowed) else 0
        rep_kind = np.zeros(n_windows, dtype=np.int64)
        rep_row = np.zeros(n_windows, dtype=np.int64)
        rep_kp = np.zeros(n_windows, dtype=np.int64)
        rep_kd = np.zeros(n_windows, dtype=np.float64)

        wdecay_factor = 1.0
        if plastic and decay_rate > 0.0:
            wdecay_factor = math.exp(-decay_rate * cfg.dt / lp.tau_decay)

        pot, dep, events, touched, win_n, bad = present_kernel(
            spikes,
            self.weights,
            self.state.v,
            self.state.theta,
            self.state.ge,
            self.state.refrac_left,
            self.traces.x_pre,
            self.traces.x_post,
            self.acc.n_sp_pre,
            self.acc.n_sp_post,
            out_counts,
            rep_kind,
            rep_row,
            rep_kp,
            rep_kd,
            cfg.dt / cfg.lif.tau_mem,
            cfg.dt,
            cfg.lif.v_rest,
            cfg.lif.v_reset,
            cfg.lif.v_th_base,
            math.exp(-cfg.dt / cfg.lif.tau_ge),
            int(round(cfg.lif.refrac / cfg.dt)),
            self._theta_inc,
            cfg.lif.theta_decay * cfg.dt,
            cfg.inhibition.w_inh,
            cfg.lif.v_rest - cfg.inhibition.floor_gap,
            math.exp(-cfg.dt / lp.tau_x_pre),
            math.exp(-cfg.dt / lp.tau_x_post),
            wdecay_factor,
            lp.w_min,
            lp.w_max,
            window,
            lp.sp_th,
            lp.eta_pre,
            lp.eta_post,
            plastic,
            windowed,
        )
        if bad >= 0:
            raise NumericalFault("state", bad)

        counters.syn_additions += total_in * cfg.n_exc
        counters.integrations += n_steps * cfg.n_exc
        if plastic:
            counters.trace_updates += n_steps * (cfg.n_syn + cfg.n_exc)
            counters.weight_elements += touched
            if windowed:
                if wdecay_factor != 1.0:
                    counters.decay_elements += (n_steps - win_n) * cfg.n_exc * cfg.n_syn
            elif wdecay_factor != 1.0:
                counters.decay_elements += n_steps * cfg.n_exc * cfg.n_syn
            stats.potentiation_windows = pot
            stats.depression_windows = dep
            stats.update_events = events
            stats.elements_touched = touched
            self.update_events += events
            for w in range(win_n):
                if rep_kind[w] == 1:
                    stats.reports.append(
                        UpdateReport(
                            kind="potentiation",
                            row=int(rep_row[w]),
                            k_p=int(rep_kp[w]),
                            k_d=None,
                            elements_touched=cfg.n_syn,
                        )
                    )
                else:
                    stats.reports.append(
                        UpdateReport(
                            kind="depression",
                            row=None,
                            k_p=None,
                            k_d=float(rep_kd[w]),
                            elements_touched=cfg.n_exc * cfg.n_syn,
                        )
                    )

        stats.output_spikes = int(out_counts.sum())
        dynamics.reset_for_sample(self.state, cfg.lif)
        return out_counts, stats

    # ------------------------------------------------------------------
    # training

    def train_sample(self, sample: ImageSample) -> SampleStats:
        """Present one sample with plasticity on.

        Unsupervised by construction: the sample's label is never read.
        Deterministic given the network state, the sample, and the seed.
        """
        train = self._encode(sample, stream=1, index=self.presentations)
        self.presentations += 1
        _, stats = self._present(train, plastic=True)
        return stats

    def infer_sample(self, sample: ImageSample, idx: int = 0) -> np.ndarray:
        """Present one sample with plasticity off; per-neuron spike counts.

        Weights and theta are untouched; only the inference op counters
        advance.  ``idx`` seeds the encoding so batched evaluations stay
        deterministic regardless of processing order.
        """
        train = self._encode(sample, stream=3, index=idx)
        out_counts, _ = self._present(train, plastic=False)
        return out_counts

    # ------------------------------------------------------------------
    # readout

    def assign_labels(
        self, samples: Sequence[ImageSample], classes: Iterable[int] | None = None
    ) -> np.ndarray:
        """Label each neuron with the class it responds to most.

        Runs inference-mode presentations (plasticity off, theta frozen)
        over a labeled subset.  The label space is ``classes`` when given
        (every one of them must appear in the subset), otherwise the
        classes present in the subset; restricting it to the classes
        learned so far keeps mid-stream readouts meaningful.  Silent
        neurons stay ``UNASSIGNED``; ties resolve to the lowest class
        index.
        """
        cfg = self.config
        if len(samples) == 0:
            raise ConfigError("labeling subset is empty")
        covered = {int(s.label) for s in samples}
        if classes is None:
            classes = sorted(covered)
        else:
            classes = sorted({int(c) for c in classes})
            missing = set(classes) - covered
            if missing:
                raise ConfigError(f"labeling subset misses classes {sorted(missing)}")
        bad = [c for c in classes if not 0 <= c < cfg.n_classes]
        if bad:
            raise ConfigError(f"label classes {bad} outside [0, n_classes)")

        sums = np.zeros((cfg.n_classes, cfg.n_exc), dtype=np.float64)
        counts = np.zeros(cfg.n_classes, dtype=np.int64)
        for idx, sample in enumerate(samples):
            if int(sample.label) not in classes:
                continue
            out_counts = self._readout_counts(sample, stream=2, index=idx)
            sums[sample.label] += out_counts
            counts[sample.label] += 1
        mean = np.zeros_like(sums)
        seen = counts > 0
        mean[seen] = sums[seen] / counts[seen, None]
        labels = np.asarray(classes, dtype=np.int64)[
            np.argmax(mean[classes], axis=0)
        ]
        labels[mean.sum(axis=0) == 0.0] = UNASSIGNED
        return labels

    def classify(self, labels: np.ndarray, sample: ImageSample, idx: int = 0) -> int:
        """Predict a class by per-label mean spike count.

        The winning class maximizes (summed spikes of its neurons) divided
        by (count of its neurons); ties resolve to the lowest class index.
        Returns ``NO_PREDICTION`` when no labeled neuron spikes.
        """
        out_counts = self._readout_counts(sample, stream=3, index=idx)
        return predict_from_counts(out_counts, labels, self.config.n_classes)

    def evaluate(
        self,
        labels: np.ndarray,
        test_set: Sequence[ImageSample],
        scope: Iterable[int],
        recent_task: int | None = None,
    ) -> EvalReport:
        """Classify every scoped test sample and aggregate the results.

        ``recent_task`` marks the last-trained class; its accuracy and the
        pooled accuracy over the remaining scoped (previously learned)
        classes are reported separately.  No-predictions occupy the last
        confusion column and count as errors.
        """
        cfg = self.config
        scope = tuple(sorted({int(c) for c in scope}))
        if not scope:
            raise ConfigError("evaluation scope is empty")
        scoped = [s for s in test_set if int(s.label) in scope]
        if not scoped:
            raise ConfigError(f"test set has no samples for scope {scope}")

        confusion = np.zeros((cfg.n_classes, cfg.n_classes + 1), dtype=np.int64)
        for idx, sample in enumerate(scoped):
            pred = self.classify(labels, sample, idx=idx)
            col = pred if pred != NO_PREDICTION else cfg.n_classes
            confusion[sample.label, col] += 1

        per_class = {}
        for c in scope:
            total = int(confusion[c].sum())
            per_class[c] = (confusion[c, c] / total) if total else 0.0
        correct = sum(int(confusion[c, c]) for c in scope)
        total = int(confusion[list(scope)].sum())
        overall = correct / total

        recent_acc = None
        previous_acc = None
        if recent_task is not None:
            if recent_task not in scope:
                raise ConfigError(f"recent task {recent_task} outside scope {scope}")
            recent_acc = per_class[recent_task]
            earlier = [c for c in scope if c != recent_task]
            if earlier:
                prev_correct = sum(int(confusion[c, c]) for c in earlier)
                prev_total = int(confusion[earlier].sum())
                previous_acc = prev_correct / prev_total if prev_total else 0.0

        return EvalReport(
            scope=scope,
            confusion=confusion,
            per_class_accuracy=per_class,
            overall_accuracy=overall,
            most_recent_task=recent_task,
            most_recent_accuracy=recent_acc,
            previous_accuracy=previous_acc,
            update_events=self.update_events,
            op_counts={
                "training": self.train_ops.as_dict(),
                "inference": self.infer_ops.as_dict(),
            },
        )

    # ------------------------------------------------------------------
    # accounting and persistence

    def count_ops(self, phase: str) -> OpCounters:
        """Snapshot of the accumulated operation counters for a phase."""
        if phase == "training":
            return self.train_ops.snapshot()
        if phase == "inference":
            return self.infer_ops.snapshot()
        raise ConfigError(f"phase must be 'training' or 'inference', got {phase!r}")

    def state_arrays(self, labels: np.ndarray | None = None) -> dict[str, np.ndarray]:
        """The persistent state of the model, as named arrays.

        This is what a deployment must keep between samples: the weight
        matrix, the per-neuron scalars (including the readout label), and
        the learning traces/accumulators.
        """
        if labels is None:
            labels = np.full(self.config.n_exc, UNASSIGNED, dtype=np.int64)
        return {
            "weights": self.weights,
            "v": self.state.v,
            "theta": self.state.theta,
            "ge": self.state.ge,
            "refrac_left": self.state.refrac_left,
            "labels": labels,
            "x_pre": self.traces.x_pre,
            "x_post": self.traces.x_post,
            "n_sp_pre": self.acc.n_sp_pre,
            "n_sp_post": self.acc.n_sp_post,
        }

    def serialized_state_bytes(self, bp: int, labels: np.ndarray | None = None) -> int:
        """Size of the persistent state at ``bp`` bits per parameter."""
        n_elements = sum(a.size for a in self.state_arrays(labels).values())
        return n_elements * bp // 8

    def save(self, path, labels: np.ndarray | None = None):
        arrays = self.state_arrays(labels)
        np.savez(
            path,
            config_json=np.asarray(json.dumps(self.config.to_dict())),
            presentations=np.asarray(self.presentations),
            update_events=np.asarray(self.update_events),
            **arrays,
        )

    @classmethod
    def load(cls, path) -> tuple["SpikingNetwork", np.ndarray]:
        with np.load(path, allow_pickle=False) as bundle:
            config = NetworkConfig.from_dict(json.loads(str(bundle["config_json"])))
            net = cls(config)
            net.weights = bundle["weights"].copy()
            net.state.v = bundle["v"].copy()
            net.state.theta = bundle["theta"].copy()
            net.state.ge = bundle["ge"].copy()
            net.state.refrac_left = bundle["refrac_left"].copy()
            net.traces.x_pre = bundle["x_pre"].copy()
            net.traces.x_post = bundle["x_post"].copy()
            net.acc.n_sp_pre = bundle["n_sp_pre"].copy()
            net.acc.n_sp_post = bundle["n_sp_post"].copy()
            net.presentations = int(bundle["presentations"])
            net.update_events = int(bundle["update_events"])
            labels = bundle["labels"].copy()
        return net, labels


def predict_from_counts(
    out_counts: np.ndarray, labels: np.ndarray, n_classes: int
) -> int:
    """Vote on per-label mean spike counts.

    Each class scores the summed spikes of its assigned neurons divided by
    how many neurons carry that label, so one decisive neuron can outvote
    a large lukewarm group.  Ties go to the lowest class index; if no
    labeled neuron spiked the outcome is ``NO_PREDICTION``.
    """
    scores = np.full(n_classes, -1.0)
    for c in range(n_classes):
        members = labels == c
        n = int(members.sum())
        if n:
            scores[c] = out_counts[members].sum() / n
    if scores.max() <= 0.0:
        return NO_PREDICTION
    return int(np.argmax(scores))


# ----------------------------------------------------------------------
# analytic architecture accounting (no simulation involved)


def parameter_count(n_exc: int, n_syn: int, inhibitory_layer: bool = False) -> int:
    """Persistent parameters of the architecture.

    The optimized architecture keeps the input weight matrix, four scalars
    per excitatory neuron, and one shared presynaptic trace per channel.
    The reference architecture adds an inhibitory layer of equal size:
    one-to-one excitatory->inhibitory weights, dense inhibitory->excitatory
    weights (no self-connection), and three state scalars per inhibitory
    neuron (potential, conductance, refractory counter).
    """
    if n_exc < 0 or n_syn < 0:
        raise ConfigError("n_exc and n_syn must be non-negative")
    params = n_exc * n_syn + PERSISTENT_NEURON_PARAMS * n_exc + n_syn
    if inhibitory_layer:
        params += n_exc + n_exc * max(n_exc - 1, 0) + 3 * n_exc
    return params


def inference_op_count(
    n_steps: int,
    n_exc: int,
    n_input_spikes: int,
    n_exc_spikes: int,
    inhibitory_layer: bool = False,
) -> int:
    """Analytic per-sample inference operation count.

    Both architectures pay the input conductance additions and one
    integration per neuron per step.  The optimized architecture adds a
    direct lateral kick per spike; the reference instead integrates a
    second (inhibitory) population and routes each excitatory spike
    through it (one-to-one in, dense fan-out back, with the inhibitory
    spike count taken equal to the excitatory one).
    """
    base = n_input_spikes * n_exc + n_steps * n_exc
    lateral = n_exc_spikes * max(n_exc - 1, 0)
    if not inhibitory_layer:
        return base + lateral
    return base + n_steps * n_exc + n_exc_spikes + lateral
