"""Experiment orchestration: datasets in, trained models and CSV metrics out.

A run is described by one config (YAML on disk, fully defaulted in
memory): the network, a task scenario, dataset locations, optional size
search constraints, and the energy cost model.  The resolved config is
always echoed to the output directory, and every output is written
deterministically so identical config + seed reproduce byte-identical
files.

Scenario semantics: ``dynamic`` feeds consecutive single-class blocks in
task order, never re-feeding an earlier task; ``shuffled`` feeds the same
multiset of samples uniformly permuted.  Samples for both are drawn with
the scenario seed, so the two modes differ only in presentation order.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .datasets import (
    as_samples,
    load_idx_images,
    load_idx_labels,
    pair_dataset,
    synthetic_digit_corpus,
)
from .encoding import ImageSample
from .errors import ConfigError, InfeasibleSearchError
from .network import EvalReport, NetworkConfig, SpikingNetwork
from .search import CostModel, SearchConfig, SearchResult, search

DATA_DIR_ENV = "DRIFTSNN_DATA_DIR"

SCENARIO_MODES = ("dynamic", "shuffled")
EVAL_POINTS = ("after_each_task", "final")


@dataclass
class ScenarioSpec:
    """Ordered task stream description."""

    mode: str = "dynamic"
    task_order: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    samples_per_task: int = 1000
    eval_points: str = "after_each_task"
    seed: int = 0

    def validate(self) -> "ScenarioSpec":
        if self.mode not in SCENARIO_MODES:
            raise ConfigError(f"scenario mode must be one of {SCENARIO_MODES}")
        if self.eval_points not in EVAL_POINTS:
            raise ConfigError(f"eval_points must be one of {EVAL_POINTS}")
        if not self.task_order:
            raise ConfigError("task_order must not be empty")
        if len(set(self.task_order)) != len(self.task_order):
            raise ConfigError("task_order must not repeat classes")
        if self.samples_per_task < 1:
            raise ConfigError("samples_per_task must be >= 1")
        return self


@dataclass
class DatasetConfig:
    """Where samples come from: IDX files, or the built-in generator."""

    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    synthetic: bool = False
    synthetic_train_per_class: int = 700
    synthetic_test_per_class: int = 200
    synthetic_seed: int = 1234

    def validate(self) -> "DatasetConfig":
        if not self.synthetic:
            missing = [
                name
                for name in ("train_images", "train_labels", "test_images", "test_labels")
                if getattr(self, name) is None
            ]
            if missing:
                raise ConfigError(
                    f"dataset paths missing ({', '.join(missing)}); "
                    f"set them or enable dataset.synthetic"
                )
        return self


@dataclass
class SearchSpec:
    """Search constraints as they appear in a config file (the base
    network comes from the experiment's network section)."""

    mem_c: float = 2.0e6
    e_ct: float = float("inf")
    e_ci: float = float("inf")
    n_add: int = 100
    n_train: int = 60000
    n_inf: int = 10000
    bp: int = 32


@dataclass
class ExperimentConfig:
    """Everything one run needs, with full defaulting."""

    network: NetworkConfig = field(default_factory=NetworkConfig)
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    cost_model: CostModel = field(default_factory=CostModel)
    search: SearchSpec | None = None
    out_dir: str = "out"
    calibration_samples: int = 1000
    eval_test_samples: int | None = None
    schema_version: int = 1

    def validate(self) -> "ExperimentConfig":
        self.network.validate()
        self.scenario.validate()
        self.dataset.validate()
        self.cost_model.validate()
        if self.calibration_samples < self.network.n_classes:
            raise ConfigError(
                "calibration_samples must cover at least one sample per class"
            )
        bad = [c for c in self.scenario.task_order if not 0 <= c < self.network.n_classes]
        if bad:
            raise ConfigError(f"task_order classes {bad} outside [0, n_classes)")
        return self

    def to_dict(self) -> dict:
        d = {
            "schema_version": self.schema_version,
            "network": self.network.to_dict(),
            "scenario": asdict(self.scenario),
            "dataset": asdict(self.dataset),
            "cost_model": asdict(self.cost_model),
            "search": asdict(self.search) if self.search is not None else None,
            "out_dir": self.out_dir,
            "calibration_samples": self.calibration_samples,
            "eval_test_samples": self.eval_test_samples,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d.pop("schema_version", None)
        known = {
            "network",
            "scenario",
            "dataset",
            "cost_model",
            "search",
            "out_dir",
            "calibration_samples",
            "eval_test_samples",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        network = NetworkConfig.from_dict(d.pop("network", {}))
        scenario = ScenarioSpec(**d.pop("scenario", {}))
        dataset = DatasetConfig(**d.pop("dataset", {}))
        cost_model = CostModel(**d.pop("cost_model", {}))
        search_d = d.pop("search", None)
        search_spec = SearchSpec(**search_d) if search_d else None
        try:
            return cls(
                network=network,
                scenario=scenario,
                dataset=dataset,
                cost_model=cost_model,
                search=search_spec,
                **d,
            )
        except TypeError as err:
            raise ConfigError(str(err)) from err


def load_config(path) -> ExperimentConfig:
    """Read a YAML config file, applying defaults for absent keys."""
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: {err}") from err
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return ExperimentConfig.from_dict(raw).validate()


def dump_config(cfg: ExperimentConfig, path):
    """Echo the fully resolved config (defaults materialized) to disk."""
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True))


def resolve_data_path(path: str) -> Path:
    """Dataset paths resolve against $DRIFTSNN_DATA_DIR when relative."""
    p = Path(path)
    base = os.environ.get(DATA_DIR_ENV)
    if base and not p.is_absolute():
        return Path(base) / p
    return p


def load_dataset(cfg: DatasetConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Materialize (train_x, train_y, test_x, test_y) per the config."""
    if cfg.synthetic:
        train_x, train_y = synthetic_digit_corpus(
            cfg.synthetic_train_per_class, seed=cfg.synthetic_seed
        )
        test_x, test_y = synthetic_digit_corpus(
            cfg.synthetic_test_per_class, seed=cfg.synthetic_seed + 1
        )
        return train_x, train_y, test_x, test_y
    train_x = load_idx_images(resolve_data_path(cfg.train_images))
    train_y = load_idx_labels(resolve_data_path(cfg.train_labels))
    pair_dataset(train_x, train_y, cfg.train_images)
    test_x = load_idx_images(resolve_data_path(cfg.test_images))
    test_y = load_idx_labels(resolve_data_path(cfg.test_labels))
    pair_dataset(test_x, test_y, cfg.test_images)
    return train_x, train_y, test_x, test_y


# ----------------------------------------------------------------------
# scenario construction


def select_calibration(
    labels: np.ndarray, n: int, n_classes: int, seed: int
) -> np.ndarray:
    """Pick a class-balanced labeled calibration slice (round-robin).

    Returns the chosen indices; they are withheld from the training pool.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(8,))))
    per_class = []
    for c in range(n_classes):
        idx = np.flatnonzero(labels == c)
        if idx.size == 0:
            raise ConfigError(f"dataset has no samples of class {c} for calibration")
        per_class.append(rng.permutation(idx))
    chosen: list[int] = []
    depth = 0
    while len(chosen) < n:
        progressed = False
        for c in range(n_classes):
            if len(chosen) >= n:
                break
            if depth < per_class[c].size:
                chosen.append(int(per_class[c][depth]))
                progressed = True
        if not progressed:
            raise ConfigError(
                f"dataset too small for a {n}-sample calibration slice"
            )
        depth += 1
    return np.array(chosen, dtype=np.int64)


def build_scenario(
    spec: ScenarioSpec,
    images: np.ndarray,
    labels: np.ndarray,
    exclude: np.ndarray | None = None,
) -> list[ImageSample]:
    """Materialize the ordered training stream for a scenario.

    Per-class sample selection is seeded and identical across modes; the
    shuffled mode then permutes the concatenation, so its label multiset
    equals the dynamic stream's exactly.
    """
    spec.validate()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed, spawn_key=(5,))))
    banned = set(exclude.tolist()) if exclude is not None else set()
    blocks: list[np.ndarray] = []
    for task in spec.task_order:
        pool = np.array(
            [i for i in np.flatnonzero(labels == task) if i not in banned],
            dtype=np.int64,
        )
        if pool.size < spec.samples_per_task:
            raise ConfigError(
                f"class {task} has {pool.size} available samples, "
                f"scenario needs {spec.samples_per_task}"
            )
        blocks.append(rng.choice(pool, size=spec.samples_per_task, replace=False))
    order = np.concatenate(blocks)
    if spec.mode == "shuffled":
        order = rng.permutation(order)
    return [ImageSample(pixels=images[i], label=int(labels[i])) for i in order]


# ----------------------------------------------------------------------
# CSV emission (manual writing keeps the bytes fully deterministic)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header: list[str], rows: list[list]):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def scope_tag(scope) -> str:
    return "-".join(str(c) for c in scope)


def write_eval_csv(path, evals: list[tuple[int, EvalReport]]):
    """eval.csv: per-class rows plus overall/recent/previous summaries."""
    rows = []
    for point, report in evals:
        tag = scope_tag(report.scope)
        for c in report.scope:
            row_total = int(report.confusion[c].sum())
            rows.append(
                [point, tag, c, int(report.confusion[c, c]), row_total,
                 f"{report.per_class_accuracy[c]:.6f}"]
            )
        total = int(report.confusion[list(report.scope)].sum())
        correct = sum(int(report.confusion[c, c]) for c in report.scope)
        rows.append([point, tag, "overall", correct, total, f"{report.overall_accuracy:.6f}"])
        if report.most_recent_task is not None:
            r = report.most_recent_task
            rows.append(
                [point, tag, "recent", int(report.confusion[r, r]),
                 int(report.confusion[r].sum()), f"{report.most_recent_accuracy:.6f}"]
            )
            earlier = [c for c in report.scope if c != r]
            if earlier and report.previous_accuracy is not None:
                prev_correct = sum(int(report.confusion[c, c]) for c in earlier)
                prev_total = int(report.confusion[earlier].sum())
                rows.append(
                    [point, tag, "previous", prev_correct, prev_total,
                     f"{report.previous_accuracy:.6f}"]
                )
    write_csv(path, ["eval_point", "scope", "class", "correct", "total", "accuracy"], rows)


def write_confusion_csv(path, evals: list[tuple[int, EvalReport]], n_classes: int):
    """confusion.csv: full scoped rows; predicted -1 means no-prediction."""
    rows = []
    for point, report in evals:
        for true in report.scope:
            for pred in range(n_classes):
                rows.append([point, true, pred, int(report.confusion[true, pred])])
            rows.append([point, true, -1, int(report.confusion[true, n_classes])])
    write_csv(path, ["eval_point", "true", "predicted", "count"], rows)


def write_ops_csv(path, net: SpikingNetwork):
    rows = []
    for phase in ("training", "inference"):
        ops = net.count_ops(phase)
        for op, count in ops.as_dict().items():
            rows.append([phase, op, count])
    rows.append(["training", "update_events", net.update_events])
    write_csv(path, ["phase", "op", "count"], rows)


def write_candidates_csv(path, result: SearchResult):
    rows = [
        [c.n_exc, c.mem, c.e_1t, c.e_t, c.e_1i, c.e_i, c.feasible]
        for c in result.candidates
    ]
    write_csv(path, ["n_exc", "mem", "e_1t", "e_t", "e_1i", "e_i", "feasible"], rows)


# ----------------------------------------------------------------------
# experiment driver


@dataclass
class ExperimentResult:
    evals: list[tuple[int, EvalReport]]
    net: SpikingNetwork
    labels: np.ndarray | None
    search_result: SearchResult | None
    out_dir: Path


def _eval_test_subset(
    test_samples: list[ImageSample],
    scope,
    cap: int | None,
    seed: int,
) -> list[ImageSample]:
    scoped = [s for s in test_samples if s.label in scope]
    if cap is None or len(scoped) <= cap:
        return scoped
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(9,))))
    pick = rng.permutation(len(scoped))[:cap]
    pick.sort()
    return [scoped[i] for i in pick]


def run_experiment(cfg: ExperimentConfig, log=None) -> ExperimentResult:
    """Execute one full experiment per the config.

    Order of operations: echo the resolved config; load data; optionally
    run the size search (its candidate log is written even when the
    search fails); train over the scenario stream; at each eval point
    reassign neuron labels from the calibration slice and evaluate over
    the classes learned so far; write eval/confusion/ops CSVs and the
    final model.
    """
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    say = log or (lambda msg: None)
    # echo the resolved input config first, so provenance survives failures
    dump_config(cfg, out / "config.yaml")

    train_x, train_y, test_x, test_y = load_dataset(cfg.dataset)
    calib_idx = select_calibration(
        train_y, cfg.calibration_samples, cfg.network.n_classes, cfg.scenario.seed
    )
    stream = build_scenario(cfg.scenario, train_x, train_y, exclude=calib_idx)
    calib_samples = as_samples(train_x[calib_idx], train_y[calib_idx])
    test_samples = as_samples(test_x, test_y)

    search_result = None
    net_config = cfg.network
    if cfg.search is not None:
        sc = SearchConfig(
            mem_c=cfg.search.mem_c,
            e_ct=cfg.search.e_ct,
            e_ci=cfg.search.e_ci,
            n_add=cfg.search.n_add,
            n_train=cfg.search.n_train,
            n_inf=cfg.search.n_inf,
            bp=cfg.search.bp,
            base=cfg.network,
        )
        say(f"searching sizes up to mem_c={sc.mem_c:.0f} bytes")
        search_result = search(sc, cfg.cost_model, stream[0])
        write_candidates_csv(out / "candidates.csv", search_result)
        if not search_result.feasible:
            raise InfeasibleSearchError(
                "infeasible constraints: no candidate satisfies the memory "
                "and energy budgets (see candidates.csv)"
            )
        net_config = replace(cfg.network, n_exc=search_result.best.n_exc)
        say(f"search selected n_exc={net_config.n_exc}")

    net = SpikingNetwork(net_config)
    spt = cfg.scenario.samples_per_task
    n_tasks = len(cfg.scenario.task_order)
    evals: list[tuple[int, EvalReport]] = []
    labels = None

    for task_i in range(n_tasks):
        block = stream[task_i * spt : (task_i + 1) * spt]
        for sample in block:
            net.train_sample(sample)
        boundary = (task_i + 1) * spt
        is_last = task_i == n_tasks - 1
        if cfg.scenario.eval_points == "after_each_task" or is_last:
            if cfg.scenario.mode == "dynamic":
                scope = cfg.scenario.task_order[: task_i + 1]
                recent = cfg.scenario.task_order[task_i]
            else:
                scope = cfg.scenario.task_order
                recent = None
            labels = net.assign_labels(calib_samples, classes=scope)
            subset = _eval_test_subset(
                test_samples, set(scope), cfg.eval_test_samples, cfg.scenario.seed
            )
            report = net.evaluate(labels, subset, scope=scope, recent_task=recent)
            evals.append((boundary, report))
            say(
                f"eval@{boundary}: scope={scope_tag(report.scope)} "
                f"overall={report.overall_accuracy:.3f}"
            )

    write_eval_csv(out / "eval.csv", evals)
    write_confusion_csv(out / "confusion.csv", evals, net_config.n_classes)
    write_ops_csv(out / "ops.csv", net)
    net.save(out / "model.npz", labels)
    return ExperimentResult(
        evals=evals, net=net, labels=labels, search_result=search_result, out_dir=out
    )


def run_training(cfg: ExperimentConfig, log=None) -> ExperimentResult:
    """Train over the scenario stream without intermediate evaluations.

    Writes the resolved config, the operation counters, and the trained
    model (with labels assigned once from the calibration slice).
    """
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    say = log or (lambda msg: None)
    dump_config(cfg, out / "config.yaml")

    train_x, train_y, _, _ = load_dataset(cfg.dataset)
    calib_idx = select_calibration(
        train_y, cfg.calibration_samples, cfg.network.n_classes, cfg.scenario.seed
    )
    stream = build_scenario(cfg.scenario, train_x, train_y, exclude=calib_idx)
    net = SpikingNetwork(cfg.network)
    for i, sample in enumerate(stream):
        net.train_sample(sample)
        if (i + 1) % 500 == 0:
            say(f"trained {i + 1}/{len(stream)} samples")
    labels = net.assign_labels(
        as_samples(train_x[calib_idx], train_y[calib_idx]),
        classes=cfg.scenario.task_order,
    )
    write_ops_csv(out / "ops.csv", net)
    net.save(out / "model.npz", labels)
    say(f"model saved to {out / 'model.npz'}")
    return ExperimentResult(
        evals=[], net=net, labels=labels, search_result=None, out_dir=out
    )


def run_evaluation(cfg: ExperimentConfig, log=None) -> ExperimentResult:
    """Evaluate a previously trained model (``model.npz`` in the output
    directory) over the scenario's full task scope."""
    cfg.validate()
    out = Path(cfg.out_dir)
    model_path = out / "model.npz"
    if not model_path.exists():
        raise ConfigError(f"no trained model at {model_path}; run train first")
    say = log or (lambda msg: None)

    net, labels = SpikingNetwork.load(model_path)
    _, _, test_x, test_y = load_dataset(cfg.dataset)
    test_samples = as_samples(test_x, test_y)
    scope = cfg.scenario.task_order
    subset = _eval_test_subset(
        test_samples, set(scope), cfg.eval_test_samples, cfg.scenario.seed
    )
    report = net.evaluate(labels, subset, scope=scope)
    evals = [(net.presentations, report)]
    write_eval_csv(out / "eval.csv", evals)
    write_confusion_csv(out / "confusion.csv", evals, net.config.n_classes)
    say(f"overall accuracy {report.overall_accuracy:.3f} over scope {scope_tag(scope)}")
    return ExperimentResult(
        evals=evals, net=net, labels=labels, search_result=None, out_dir=out
    )


def run_search_only(cfg: ExperimentConfig, log=None) -> SearchResult:
    """Run the constrained size search and write its candidate log."""
    cfg.validate()
    if cfg.search is None:
        raise ConfigError("config has no search section")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    say = log or (lambda msg: None)
    dump_config(cfg, out / "config.yaml")

    train_x, train_y, _, _ = load_dataset(cfg.dataset)
    calib_idx = select_calibration(
        train_y, cfg.calibration_samples, cfg.network.n_classes, cfg.scenario.seed
    )
    stream = build_scenario(cfg.scenario, train_x, train_y, exclude=calib_idx)
    sc = SearchConfig(
        mem_c=cfg.search.mem_c,
        e_ct=cfg.search.e_ct,
        e_ci=cfg.search.e_ci,
        n_add=cfg.search.n_add,
        n_train=cfg.search.n_train,
        n_inf=cfg.search.n_inf,
        bp=cfg.search.bp,
        base=cfg.network,
    )
    result = search(sc, cfg.cost_model, stream[0])
    write_candidates_csv(out / "candidates.csv", result)
    for c in result.candidates:
        say(
            f"n_exc={c.n_exc}: mem={c.mem:.0f}B e_t={c.e_t} e_i={c.e_i} "
            f"feasible={c.feasible}"
        )
    if not result.feasible:
        raise InfeasibleSearchError(
            "infeasible constraints: no candidate satisfies the memory "
            "and energy budgets (see candidates.csv)"
        )
    say(f"selected n_exc={result.best.n_exc}")
    return result
