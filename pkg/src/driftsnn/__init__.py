"""Clock-driven spiking-network simulation for continual unsupervised
learning under task drift, with memory/energy-constrained model sizing."""

from .dynamics import InhibitionParams, LifParams, NeuronState, adaptive_theta_target
from .encoding import ImageSample, SpikeTrain, encode
from .errors import ConfigError, DataFormatError, InfeasibleSearchError, NumericalFault
from .harness import (
    ExperimentConfig,
    ScenarioSpec,
    build_scenario,
    load_config,
    run_experiment,
)
from .network import EvalReport, NetworkConfig, SpikingNetwork
from .plasticity import LearningParams, SpikeAccumulators, TraceState
from .search import CostModel, ModelCandidate, SearchConfig, SearchResult, search

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CostModel",
    "DataFormatError",
    "EvalReport",
    "ExperimentConfig",
    "ImageSample",
    "InfeasibleSearchError",
    "InhibitionParams",
    "LearningParams",
    "LifParams",
    "ModelCandidate",
    "NetworkConfig",
    "NeuronState",
    "NumericalFault",
    "ScenarioSpec",
    "SearchConfig",
    "SearchResult",
    "SpikeAccumulators",
    "SpikeTrain",
    "SpikingNetwork",
    "TraceState",
    "adaptive_theta_target",
    "build_scenario",
    "encode",
    "load_config",
    "run_experiment",
    "search",
    "__version__",
]
