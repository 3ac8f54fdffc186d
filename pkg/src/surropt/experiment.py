"""End-to-end campaign orchestration: data, training, optimization, statistics.

Every command records the files it wrote (with content hashes), the seeds
it used, and its wall time in `manifest.json` at the output root. Seeds for
individual trainings and runs are derived from one base seed so the whole
campaign is reproducible; wall-clock timing is kept out of all data
artifacts (it lives only in the manifest and the training-time table).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (
    DataSplit,
    NormalizationStats,
    SyntheticOracleConfig,
    gen_dataset,
    load_csv,
    metric_arrays,
    split,
    write_csv,
    METRICS,
)
from .de.base import ALL_VARIANTS, DEConfig, RunTrace, VariantId, read_trace_csv, write_trace_csv
from .de.runner import run
from .objective import ScalarizedObjective, SearchSpace, scenario_weights
from .stats import RunSet, aggregate, outperformance_counts, pairwise_comparison_matrix
from .surrogate import (
    LabeledData,
    RegressionSplit,
    SurrogateModel,
    TrainingConfig,
    TrainingDivergedError,
    build_network,
    load_model,
    save_model,
    spec_by_index,
    train,
)
from .util import dump_json, load_json, sha256_file

WORKERS_ENV = "SURROPT_WORKERS"

# stream tags keeping derived seed families disjoint
_ROLE_DATA = 101
_ROLE_SPLIT = 102
_ROLE_TRAIN = 103
_ROLE_RUN = 104


@dataclass
class ExperimentConfig:
    """Defaults for the full campaign; any subset can be overridden."""

    base_seed: int = 0
    # data generation
    sample_count: int = 2000
    dim: int = 36
    coupling_count: int = 24
    noise_stddev: float = 0.0
    train_fraction: float = 0.8
    # surrogate training
    spec_indices: tuple[int, ...] = (3,)
    max_epochs: int = 500
    batch_size: int = 32
    learning_rate: float = 1e-3
    early_stop_patience: int = 50
    weight_decay: float = 3e-3
    # optimization campaign
    variants: tuple[str, ...] = tuple(v.value for v in ALL_VARIANTS)
    scenario_ids: tuple[int, ...] = (1, 2)
    runs_per_variant: int = 10
    pop_size: int = 10
    crossover_prob: float = 0.5
    scale_factor: float = 0.7
    budget: int = 1000
    variant_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.runs_per_variant < 1:
            raise ValueError(f"runs_per_variant must be >= 1, got {self.runs_per_variant}")
        for v in self.variants:
            VariantId(v)
        for s in self.scenario_ids:
            if s not in (1, 2):
                raise ValueError(f"scenario ids must be 1 or 2, got {s}")

    @classmethod
    def from_json(cls, path: Path | str) -> "ExperimentConfig":
        raw = load_json(path)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("spec_indices", "variants", "scenario_ids"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(**raw)

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            out[name] = list(value) if isinstance(value, tuple) else value
        return out

    def oracle_config(self) -> SyntheticOracleConfig:
        return SyntheticOracleConfig(
            seed=derive_seed(self.base_seed, _ROLE_DATA),
            coupling_count=self.coupling_count,
            noise_stddev=self.noise_stddev,
            dim=self.dim,
        )

    def training_config(self, seed: int) -> TrainingConfig:
        return TrainingConfig(
            max_epochs=self.max_epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            seed=seed,
            early_stop_patience=self.early_stop_patience,
            weight_decay=self.weight_decay,
        )

    def de_config(self, seed: int) -> DEConfig:
        return DEConfig(
            pop_size=self.pop_size,
            crossover_prob=self.crossover_prob,
            scale_factor=self.scale_factor,
            max_evals=self.budget,
            seed=seed,
            variant_params=dict(self.variant_params),
        )


def derive_seed(base_seed: int, *components: int) -> int:
    """Collision-free 64-bit stream seed for (base_seed, components...)."""
    ss = np.random.SeedSequence([int(base_seed), *[int(c) for c in components]])
    return int(ss.generate_state(1, np.uint64)[0])


def run_seed(cfg: ExperimentConfig, variant: VariantId, scenario: int, run_index: int) -> int:
    ordinal = list(ALL_VARIANTS).index(VariantId(variant))
    return derive_seed(cfg.base_seed, _ROLE_RUN, ordinal, scenario, run_index)


class Manifest:
    """Per-command record of written files, seeds, versions and wall times."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.path = self.root / "manifest.json"
        self.doc = load_json(self.path) if self.path.exists() else {"version": __version__, "commands": {}}

    def record(self, command: str, files: list[Path], seeds: dict, wall_time: float) -> None:
        self.doc["version"] = __version__
        self.doc["commands"][command] = {
            "seeds": seeds,
            "wall_time_seconds": wall_time,
            "files": {
                str(Path(f).resolve().relative_to(self.root.resolve())): sha256_file(f)
                for f in sorted(files, key=str)
            },
        }
        dump_json(self.doc, self.path)


def _model_filename(spec_index: int, metric: str) -> str:
    return f"model_spec{spec_index}_{metric}.json"


def generate_data(cfg: ExperimentConfig, out_csv: Path | str) -> list[Path]:
    """Write the labeled dataset plus its sidecar metadata; returns written files."""
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    oracle_cfg = cfg.oracle_config()
    records = gen_dataset(cfg.sample_count, oracle_cfg)
    write_csv(records, out_csv)
    meta_path = out_csv.with_suffix(".meta.json")
    dump_json(
        {
            "format": "surropt-dataset-meta",
            "version": 1,
            "count": cfg.sample_count,
            "oracle": {
                "seed": oracle_cfg.seed,
                "coupling_count": oracle_cfg.coupling_count,
                "noise_stddev": oracle_cfg.noise_stddev,
                "dim": oracle_cfg.dim,
            },
        },
        meta_path,
    )
    return [out_csv, meta_path]


@dataclass
class TrainOutcome:
    spec_index: int
    metric: str
    status: str  # "ok" | "diverged"
    test_mse: float | None
    wall_time_seconds: float
    epochs: int
    mse_history: list[tuple[float, float]]


def _train_one(records_split: DataSplit, stats: NormalizationStats, spec_index: int,
               metric: str, cfg: ExperimentConfig) -> tuple[TrainOutcome, SurrogateModel | None]:
    spec = spec_by_index(spec_index)
    seed = derive_seed(cfg.base_seed, _ROLE_TRAIN, spec_index, METRICS.index(metric))
    x_train, y_train = metric_arrays(records_split.train, metric)
    x_test, y_test = metric_arrays(records_split.test, metric)
    data = RegressionSplit(
        train=LabeledData(x_train, stats.zscore(y_train, metric)),
        test=LabeledData(x_test, stats.zscore(y_test, metric)),
    )
    net = build_network(spec, input_dim=x_train.shape[1], seed=seed)
    try:
        report = train(net, data, cfg.training_config(seed))
    except TrainingDivergedError as err:
        outcome = TrainOutcome(spec_index, metric, "diverged", None, 0.0, err.epoch, [])
        return outcome, None
    i = METRICS.index(metric)
    model = SurrogateModel(
        metric=metric,
        network=net,
        x_min=stats.x_min,
        x_max=stats.x_max,
        y_mean=float(stats.f_mean[i]),
        y_std=float(stats.f_std[i]),
        y_constant=bool(stats.f_constant[i]),
        test_mse=report.final_test_mse,
    )
    outcome = TrainOutcome(
        spec_index, metric, "ok", report.final_test_mse, report.wall_time_seconds,
        report.stopped_epoch, report.mse_history,
    )
    return outcome, model


def _train_task(args):
    return _train_one(*args)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def train_surrogates(cfg: ExperimentConfig, data_path: Path | str, out_dir: Path | str) -> list[Path]:
    """Train surrogates for every requested spec and metric; write models and tables."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = load_csv(data_path)
    records_split = split(records, cfg.train_fraction, derive_seed(cfg.base_seed, _ROLE_SPLIT))
    stats = NormalizationStats.from_records(records_split.train)

    tasks = [
        (records_split, stats, spec_index, metric, cfg)
        for spec_index in cfg.spec_indices
        for metric in METRICS
    ]
    n_workers = worker_count()
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_train_task, tasks))
    else:
        results = [_train_one(*task) for task in tasks]

    written: list[Path] = []
    outcomes: dict[tuple[int, str], TrainOutcome] = {}
    for outcome, model in results:
        outcomes[(outcome.spec_index, outcome.metric)] = outcome
        if model is not None:
            model_path = out_dir / _model_filename(outcome.spec_index, outcome.metric)
            save_model(model, model_path)
            written.append(model_path)

    # per-metric argmin of test MSE over the successfully trained specs
    best: dict[str, int | None] = {}
    for metric in METRICS:
        candidates = [
            (outcomes[(s, metric)].test_mse, s)
            for s in cfg.spec_indices
            if outcomes[(s, metric)].status == "ok"
        ]
        best[metric] = min(candidates)[1] if candidates else None

    mse_path = out_dir / "mse_table.csv"
    with mse_path.open("w", encoding="utf-8") as fh:
        fh.write("spec_index,status," + ",".join(METRICS) + ","
                 + ",".join(f"{m}_best" for m in METRICS) + "\n")
        for s in cfg.spec_indices:
            row_status = "ok" if all(outcomes[(s, m)].status == "ok" for m in METRICS) else "diverged"
            mses = [outcomes[(s, m)].test_mse for m in METRICS]
            cells = [repr(v) if v is not None else "nan" for v in mses]
            flags = ["1" if best[m] == s else "0" for m in METRICS]
            fh.write(f"{s},{row_status}," + ",".join(cells) + "," + ",".join(flags) + "\n")
    written.append(mse_path)

    times_path = out_dir / "training_times.csv"
    with times_path.open("w", encoding="utf-8") as fh:
        fh.write("spec_index,metric,status,wall_time_seconds,epochs\n")
        for s in cfg.spec_indices:
            for m in METRICS:
                o = outcomes[(s, m)]
                fh.write(f"{s},{m},{o.status},{o.wall_time_seconds:.6f},{o.epochs}\n")
    written.append(times_path)

    curves_path = out_dir / "learning_curves.csv"
    with curves_path.open("w", encoding="utf-8") as fh:
        fh.write("spec_index,metric,epoch,train_mse,test_mse\n")
        for s in cfg.spec_indices:
            for m in METRICS:
                for epoch, (tr, te) in enumerate(outcomes[(s, m)].mse_history, start=1):
                    fh.write(f"{s},{m},{epoch},{repr(tr)},{repr(te)}\n")
    written.append(curves_path)

    # held-out predictions of the per-metric best models (prediction-quality data)
    for metric in METRICS:
        if best[metric] is None:
            continue
        model = load_model(out_dir / _model_filename(best[metric], metric))
        x_test, y_test = metric_arrays(records_split.test, metric)
        pred_path = out_dir / f"predictions_{metric}.csv"
        with pred_path.open("w", encoding="utf-8") as fh:
            fh.write("actual,predicted\n")
            for xi, yi in zip(x_test, y_test):
                fh.write(f"{repr(float(yi))},{repr(model.predict(xi))}\n")
        written.append(pred_path)

    best_path = out_dir / "best_specs.json"
    dump_json(
        {
            "best_spec_index": best,
            "model_files": {
                m: _model_filename(best[m], m) if best[m] is not None else None for m in METRICS
            },
        },
        best_path,
    )
    written.append(best_path)
    return written


class MissingModelError(FileNotFoundError):
    def __init__(self, metric: str):
        super().__init__(f"no trained model available for metric {metric!r}")
        self.metric = metric


def load_best_models(models_dir: Path | str) -> dict[str, SurrogateModel]:
    models_dir = Path(models_dir)
    best_path = models_dir / "best_specs.json"
    if not best_path.exists():
        raise FileNotFoundError(f"{best_path} not found; run the train command first")
    mapping = load_json(best_path)["model_files"]
    models = {}
    for metric in METRICS:
        name = mapping.get(metric)
        if name is None or not (models_dir / name).exists():
            raise MissingModelError(metric)
        models[metric] = load_model(models_dir / name)
    return models


def _trace_filename(variant: VariantId, scenario: int, seed: int) -> str:
    return f"{variant.value}_{scenario}_{seed}.csv"


_WORKER_MODELS: dict[str, SurrogateModel] | None = None


def _campaign_worker_init(models_dir: str) -> None:
    global _WORKER_MODELS
    _WORKER_MODELS = load_best_models(models_dir)


def _run_one_setting(models: dict[str, SurrogateModel], cfg: ExperimentConfig,
                     variant: VariantId, scenario: int, run_index: int) -> RunTrace:
    space = SearchSpace.unit(models["f1"].network.input_dim)
    objective = ScalarizedObjective(
        weights=scenario_weights(scenario),
        surrogates=(models["f1"].network, models["f2"].network, models["f3"].network),
        space=space,
    )
    seed = run_seed(cfg, variant, scenario, run_index)
    trace = run(variant, objective, cfg.de_config(seed))
    if objective.eval_counter != len(trace.best_so_far):
        raise RuntimeError(
            f"budget accounting broken: {objective.eval_counter} evaluations vs "
            f"{len(trace.best_so_far)} trace entries"
        )
    return trace


def _campaign_task(args) -> tuple[str, int, int, RunTrace]:
    cfg_dict, variant_value, scenario, run_index = args
    cfg = ExperimentConfig(**cfg_dict)
    trace = _run_one_setting(_WORKER_MODELS, cfg, VariantId(variant_value), scenario, run_index)
    return variant_value, scenario, run_index, trace


def optimize_campaign(cfg: ExperimentConfig, models_dir: Path | str, out_dir: Path | str) -> list[Path]:
    """Run the variant x scenario x seed grid; write traces, aggregates, best layouts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "aggregates").mkdir(exist_ok=True)
    models = load_best_models(models_dir)

    settings = [
        (VariantId(v), scenario, r)
        for v in cfg.variants
        for scenario in cfg.scenario_ids
        for r in range(cfg.runs_per_variant)
    ]
    traces: dict[tuple[str, int, int], RunTrace] = {}
    n_workers = worker_count()
    if n_workers > 1:
        cfg_dict = cfg.to_dict()
        cfg_dict["spec_indices"] = tuple(cfg_dict["spec_indices"])
        cfg_dict["variants"] = tuple(cfg_dict["variants"])
        cfg_dict["scenario_ids"] = tuple(cfg_dict["scenario_ids"])
        tasks = [(cfg_dict, v.value, s, r) for v, s, r in settings]
        with ProcessPoolExecutor(
            max_workers=n_workers, initializer=_campaign_worker_init, initargs=(str(models_dir),)
        ) as pool:
            for v_value, scenario, run_index, trace in pool.map(_campaign_task, tasks):
                traces[(v_value, scenario, run_index)] = trace
    else:
        for variant, scenario, run_index in settings:
            traces[(variant.value, scenario, run_index)] = _run_one_setting(
                models, cfg, variant, scenario, run_index
            )

    written: list[Path] = []
    for (v_value, scenario, _run_index), trace in sorted(traces.items()):
        path = out_dir / _trace_filename(VariantId(v_value), scenario, trace.seed)
        write_trace_csv(trace, path)
        written.append(path)

    dim = models["f1"].network.input_dim
    for scenario in cfg.scenario_ids:
        best_path = out_dir / f"best_layouts_scenario{scenario}.csv"
        with best_path.open("w", encoding="utf-8") as fh:
            fh.write("variant,seed,best_f," + ",".join(f"x{i}" for i in range(1, dim + 1)) + "\n")
            for v in cfg.variants:
                for r in range(cfg.runs_per_variant):
                    trace = traces[(v, scenario, r)]
                    coords = ",".join(repr(float(c)) for c in trace.best_x)
                    fh.write(f"{v},{trace.seed},{repr(trace.final_best)},{coords}\n")
        written.append(best_path)

        for v in cfg.variants:
            runset = RunSet(
                variant=VariantId(v),
                scenario=scenario,
                traces=[traces[(v, scenario, r)] for r in range(cfg.runs_per_variant)],
            )
            curves = aggregate(runset)
            agg_path = out_dir / "aggregates" / f"{v}_scenario{scenario}.csv"
            with agg_path.open("w", encoding="utf-8") as fh:
                fh.write("eval_index,mean,std,min\n")
                for i in range(len(curves.mean)):
                    fh.write(
                        f"{i + 1},{repr(float(curves.mean[i]))},"
                        f"{repr(float(curves.std[i]))},{repr(float(curves.min[i]))}\n"
                    )
            written.append(agg_path)
    return written


def load_runsets(traces_dir: Path | str) -> dict[int, list[RunSet]]:
    """Group the trace files of a campaign directory by scenario."""
    traces_dir = Path(traces_dir)
    known = {v.value for v in VariantId}
    grouped: dict[tuple[int, str], list[RunTrace]] = {}
    bad: list[str] = []
    for path in sorted(traces_dir.glob("*_*_*.csv")):
        stem_parts = path.stem.split("_")
        if len(stem_parts) != 3 or stem_parts[0] not in known:
            continue  # aggregates, layout tables etc. live alongside the traces
        name, scenario_str, seed_str = stem_parts
        try:
            scenario = int(scenario_str)
            seed = int(seed_str)
            values = read_trace_csv(path)
        except ValueError:
            bad.append(str(path))
            continue
        grouped.setdefault((scenario, name), []).append(
            RunTrace(values, best_x=np.empty(0), variant=VariantId(name), seed=seed)
        )
    if bad:
        raise ValueError("unparsable trace files: " + ", ".join(bad))
    scenarios: dict[int, list[RunSet]] = {}
    for (scenario, v_value), trace_list in sorted(grouped.items()):
        scenarios.setdefault(scenario, []).append(
            RunSet(variant=VariantId(v_value), scenario=scenario,
                   traces=sorted(trace_list, key=lambda t: t.seed))
        )
    return scenarios


def compare_campaign(traces_dir: Path | str, out_dir: Path | str) -> list[Path]:
    """Pairwise significance matrices and a never-outperformed summary per scenario."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenarios = load_runsets(traces_dir)
    if not scenarios:
        raise FileNotFoundError(f"no trace files found in {traces_dir}")

    written: list[Path] = []
    summary = {}
    for scenario, runsets in sorted(scenarios.items()):
        if len(runsets) < 2:
            raise ValueError(f"scenario {scenario}: need at least 2 run sets to compare")
        matrix = pairwise_comparison_matrix(runsets)
        names = [rs.variant.value for rs in runsets]

        p_path = out_dir / f"pvalues_scenario{scenario}.csv"
        with p_path.open("w", encoding="utf-8") as fh:
            fh.write("variant," + ",".join(names) + "\n")
            for name, row in zip(names, matrix.results):
                fh.write(name + "," + ",".join(repr(r.p_value) for r in row) + "\n")
        written.append(p_path)

        mask_path = out_dir / f"significance_scenario{scenario}.csv"
        with mask_path.open("w", encoding="utf-8") as fh:
            fh.write("variant," + ",".join(names) + "\n")
            for name, row in zip(names, matrix.results):
                fh.write(name + "," + ",".join(str(int(r.significant_at_5pct)) for r in row) + "\n")
        written.append(mask_path)

        counts = outperformance_counts(matrix, runsets)
        finals = {rs.variant.value: float(np.mean(rs.final_values())) for rs in runsets}
        summary[str(scenario)] = {
            "outperformed_by_count": counts,
            "never_significantly_outperformed": sorted(
                [v for v, c in counts.items() if c == 0], key=lambda v: finals[v]
            ),
            "mean_final_best": finals,
        }

    summary_path = out_dir / "summary.json"
    dump_json(summary, summary_path)
    written.append(summary_path)
    return written
