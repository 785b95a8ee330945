"""Memory- and energy-constrained model sizing.

The search walks candidate network sizes in fixed increments while the
analytic memory estimate stays within the constraint.  For each
memory-feasible size it calibrates the per-sample training energy with a
single probe run, extrapolates linearly to the full workload, and only if
that passes does the same for inference.  The returned model is the
largest feasible candidate (larger networks generally classify better).

Energy here is an abstract operation-count proxy: a weighted sum of the
simulator's counted operations.  The weights are configurable; the
defaults price a neuron integration step above a single synaptic or
per-element weight operation, reflecting the relative state touched.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .encoding import ImageSample
from .errors import ConfigError
from .network import NetworkConfig, OpCounters, SpikingNetwork, parameter_count

SUPPORTED_BIT_PRECISIONS = (8, 16, 32, 64)


@dataclass
class CostModel:
    """Energy per counted operation, in arbitrary consistent units.

    Decay applications are priced as weight-element touches: both walk the
    weight matrix once per application.
    """

    syn_op: float = 1.0
    neuron_update: float = 10.0
    trace_update: float = 1.0
    weight_element: float = 1.0

    def validate(self) -> "CostModel":
        for name in ("syn_op", "neuron_update", "trace_update", "weight_element"):
            if getattr(self, name) < 0:
                raise ConfigError(f"cost model weight {name} must be non-negative")
        return self

    def energy(self, ops: OpCounters) -> float:
        return (
            self.syn_op * ops.syn_additions
            + self.neuron_update * ops.integrations
            + self.trace_update * ops.trace_updates
            + self.weight_element * (ops.weight_elements + ops.decay_elements)
        )


@dataclass
class SearchConfig:
    """Constraints and workload for the size search."""

    mem_c: float  # bytes
    e_ct: float  # training energy budget
    e_ci: float  # inference energy budget
    n_add: int = 100
    n_train: int = 60000
    n_inf: int = 10000
    bp: int = 32
    base: NetworkConfig = field(default_factory=NetworkConfig)

    def validate(self) -> "SearchConfig":
        if self.mem_c <= 0:
            raise ConfigError(f"mem_c must be positive, got {self.mem_c}")
        if self.n_add < 1:
            raise ConfigError(f"n_add must be >= 1, got {self.n_add}")
        if self.bp not in SUPPORTED_BIT_PRECISIONS:
            raise ConfigError(
                f"bp must be one of {SUPPORTED_BIT_PRECISIONS}, got {self.bp}"
            )
        if self.n_train < 0 or self.n_inf < 0:
            raise ConfigError("sample counts must be non-negative")
        return self


@dataclass
class ModelCandidate:
    """One investigated size with its estimates."""

    n_exc: int
    mem: float
    e_1t: float | None = None
    e_t: float | None = None
    e_1i: float | None = None
    e_i: float | None = None
    feasible: bool = False


@dataclass
class SearchResult:
    """Outcome of a search: the chosen model (None when infeasible) plus
    the full candidate log and probe accounting."""

    best: ModelCandidate | None
    candidates: list[ModelCandidate]
    training_probes: int = 0
    inference_probes: int = 0

    @property
    def feasible(self) -> bool:
        return self.best is not None


def memory_estimate(n_exc: int, n_syn: int, bp: int) -> float:
    """Analytic footprint in bytes: (weights + neuron params) * precision.

    Weight parameters are ``n_exc * n_syn``; neuron parameters are four
    persistent scalars per neuron plus the shared per-channel trace array.
    """
    if bp not in SUPPORTED_BIT_PRECISIONS:
        raise ConfigError(f"bp must be one of {SUPPORTED_BIT_PRECISIONS}, got {bp}")
    return parameter_count(n_exc, n_syn) * bp / 8


def energy_estimate(e_1: float, n: int) -> float:
    """Workload energy from a single-sample calibration: ``e_1 * n``."""
    if e_1 < 0:
        raise ConfigError(f"e_1 must be non-negative, got {e_1}")
    if n < 0:
        raise ConfigError(f"n must be non-negative, got {n}")
    return e_1 * n


def calibrate_e1(
    config: NetworkConfig,
    phase: str,
    cost_model: CostModel,
    probe_sample: ImageSample,
) -> float:
    """Per-sample energy of one phase, measured on a fresh network.

    Builds the candidate network, runs exactly one probe sample through
    the requested phase, and converts the counted operations into a scalar
    through the cost model.
    """
    net = SpikingNetwork(config)
    if phase == "training":
        net.train_sample(probe_sample)
    elif phase == "inference":
        net.infer_sample(probe_sample)
    else:
        raise ConfigError(f"phase must be 'training' or 'inference', got {phase!r}")
    return cost_model.energy(net.count_ops(phase))


def search(
    cfg: SearchConfig,
    cost_model: CostModel,
    probe_sample: ImageSample,
) -> SearchResult:
    """Walk sizes ``n_add, 2*n_add, ...`` while memory permits.

    For each memory-feasible size: calibrate training energy; if within
    budget, calibrate inference energy; if that is also within budget the
    candidate is feasible.  Returns the last (largest) feasible candidate
    together with the complete candidate log.  At most one training and
    one inference probe run per size.
    """
    cfg.validate()
    cost_model.validate()
    result = SearchResult(best=None, candidates=[])

    n_exc = 0
    mem = 0.0
    while mem <= cfg.mem_c:
        if n_exc > 0:
            candidate = ModelCandidate(n_exc=n_exc, mem=mem)
            config = replace(cfg.base, n_exc=n_exc)
            candidate.e_1t = calibrate_e1(config, "training", cost_model, probe_sample)
            candidate.e_t = energy_estimate(candidate.e_1t, cfg.n_train)
            result.training_probes += 1
            if candidate.e_t <= cfg.e_ct:
                candidate.e_1i = calibrate_e1(config, "inference", cost_model, probe_sample)
                candidate.e_i = energy_estimate(candidate.e_1i, cfg.n_inf)
                result.inference_probes += 1
                if candidate.e_i <= cfg.e_ci:
                    candidate.feasible = True
                    result.best = candidate
            result.candidates.append(candidate)
        n_exc += cfg.n_add
        mem = memory_estimate(n_exc, cfg.base.n_syn, cfg.bp)

    return result
