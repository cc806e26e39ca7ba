"""The four comparison experiments, each writing a CSV and a metadata sidecar."""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import evaluation as ev
from . import nfsc
from .config import dump_kv, parse_kv
from .dataset import Dataset, Domain, GenerationConfig, Split, generate_dataset, generate_paired
from .errors import ConfigError
from .nn import TrainConfig, spec_by_name, train
from .nn.checkpoint import to_float32

log = logging.getLogger(__name__)

EXPERIMENTS = ("accuracy-vs-snr", "cnn-vs-nfsc", "time-vs-freq", "original-vs-reduced")
DEFAULT_LR = {"original": 1e-4, "reduced": 1e-3}


@dataclass
class ExperimentConfig:
    train_per_cell: int = 40
    val_per_cell: int = 20
    snr_min: float = -20.0
    snr_max: float = 20.0
    snr_step: float = 2.0
    n_cnn: int = 3
    seed: int = 0
    train_seed: int = 0
    network: str = "reduced"
    epochs: int = 200
    lr: float = 0.0  # 0 picks the per-network default
    batch: int = 1024
    patience: int = 20
    workers: int = 1

    def __post_init__(self):
        if self.network not in DEFAULT_LR:
            raise ConfigError(f"unknown network {self.network!r}")
        if self.train_per_cell < 1 or self.val_per_cell < 1:
            raise ConfigError("per-cell counts must be positive")

    def learning_rate(self, network: str | None = None) -> float:
        return self.lr or DEFAULT_LR[network or self.network]

    def generation(self, per_cell: int, domain: Domain = Domain.FREQUENCY) -> GenerationConfig:
        return GenerationConfig(tuple(range(15)), self.snr_min, self.snr_max, self.snr_step, per_cell,
                                domain, self.n_cnn, self.seed)

    def training(self, network: str | None = None) -> TrainConfig:
        return TrainConfig(lr=self.learning_rate(network), epochs=self.epochs, batch=self.batch,
                           seed=self.train_seed, patience=self.patience or None)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        kv = parse_kv(text)
        types = {f.name: f.type for f in fields(cls)}
        unknown = set(kv) - set(types)
        if unknown:
            raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")
        kwargs = {}
        try:
            for key, value in kv.items():
                t = types[key]
                kwargs[key] = value if t == "str" else int(value) if t == "int" else float(value)
        except ValueError as exc:
            raise ConfigError(f"bad experiment value: {exc}") from None
        return cls(**kwargs)

    def to_text(self) -> str:
        return dump_kv({f.name: getattr(self, f.name) for f in fields(self)})


@dataclass
class TrainedModel:
    spec: object
    params: object
    epochs_run: int
    best_epoch: int | None


def fit(cfg: ExperimentConfig, train_set: Dataset, val_set: Dataset, network: str | None = None) -> TrainedModel:
    """Train the configured network with early stopping on validation accuracy."""
    network = network or cfg.network
    spec = spec_by_name(network)
    result = train(spec, train_set.inputs, train_set.labels, cfg.training(network),
                   val_set.inputs, val_set.labels)
    # Stored checkpoints are float32, so evaluate exactly what would be saved.
    return TrainedModel(spec, to_float32(result.params), len(result.history), result.best_epoch)


def datasets(cfg: ExperimentConfig, domain: Domain = Domain.FREQUENCY) -> tuple[Dataset, Dataset]:
    tr = generate_dataset(cfg.generation(cfg.train_per_cell, domain), Split.TRAIN, cfg.workers)
    va = generate_dataset(cfg.generation(cfg.val_per_cell, domain), Split.VALIDATION, cfg.workers)
    return tr, va


def paired_datasets(cfg: ExperimentConfig) -> tuple[dict, dict]:
    return (generate_paired(cfg.generation(cfg.train_per_cell), Split.TRAIN, cfg.workers),
            generate_paired(cfg.generation(cfg.val_per_cell), Split.VALIDATION, cfg.workers))


def _model_meta(prefix: str, m: TrainedModel) -> dict:
    return {f"{prefix}.network": m.spec.name, f"{prefix}.epochs_run": m.epochs_run,
            f"{prefix}.best_epoch": m.best_epoch if m.best_epoch is not None else "none"}


def _comparison_meta(c: ev.ComparisonMetrics) -> dict:
    return {"mean_accuracy_gain_pct": ev.fmt(c.mean_accuracy_gain), "snr_gain_db": ev.fmt(c.snr_gain_db),
            "snr_gain_levels_used": c.levels_used, "snr_gain_levels_skipped": c.levels_skipped}


@dataclass
class ExperimentOutput:
    csv: str
    metadata: dict


def accuracy_vs_snr(cfg: ExperimentConfig) -> ExperimentOutput:
    tr, va = datasets(cfg)
    model = fit(cfg, tr, va)
    report = ev.evaluate((model.spec, model.params), va)
    return ExperimentOutput(ev.report_csv(report), _model_meta("cnn", model))


def cnn_vs_nfsc(cfg: ExperimentConfig) -> ExperimentOutput:
    tr, va = datasets(cfg)
    model = fit(cfg, tr, va)
    subset = ev.non_80211_classes()
    va12 = va.subset(np.isin(va.labels, subset))
    cnn = ev.evaluate((model.spec, model.params), va12)
    fuzzy = ev.evaluate(nfsc.default_class_defs(), va12)
    a, b = cnn.mean_accuracy(subset), fuzzy.mean_accuracy(subset)
    meta = _model_meta("cnn", model) | _comparison_meta(ev.compare(cnn, fuzzy, subset))
    meta["nfsc_no_class"] = "counted as error"
    meta["classes"] = "802.15.1 and 802.15.4 only"
    return ExperimentOutput(ev.csv_text(["snr_db", "cnn_mean", "nfsc_mean"], [va12.snr_grid, a, b]), meta)


def time_vs_freq(cfg: ExperimentConfig) -> ExperimentOutput:
    trs, vas = paired_datasets(cfg)
    curves, meta = {}, {}
    for d in (Domain.TIME, Domain.FREQUENCY):
        model = fit(cfg, trs[d], vas[d])
        curves[d] = ev.evaluate((model.spec, model.params), vas[d]).mean_accuracy()
        meta |= _model_meta(d.name.lower(), model)
    grid = vas[Domain.FREQUENCY].snr_grid
    meta |= _comparison_meta(ev.compare_curves(grid, curves[Domain.FREQUENCY], curves[Domain.TIME]))
    text = ev.csv_text(["snr_db", "time_mean", "freq_mean"], [grid, curves[Domain.TIME], curves[Domain.FREQUENCY]])
    return ExperimentOutput(text, meta)


def original_vs_reduced(cfg: ExperimentConfig) -> ExperimentOutput:
    tr, va = datasets(cfg)
    curves, meta = {}, {}
    for name in ("original", "reduced"):
        model = fit(cfg, tr, va, network=name)
        curves[name] = ev.evaluate((model.spec, model.params), va).mean_accuracy()
        meta |= _model_meta(name, model)
        meta[f"{name}.lr"] = cfg.learning_rate(name)
    meta |= _comparison_meta(ev.compare_curves(va.snr_grid, curves["original"], curves["reduced"]))
    text = ev.csv_text(["snr_db", "original_mean", "reduced_mean"],
                       [va.snr_grid, curves["original"], curves["reduced"]])
    return ExperimentOutput(text, meta)


RUNNERS = {
    "accuracy-vs-snr": accuracy_vs_snr,
    "cnn-vs-nfsc": cnn_vs_nfsc,
    "time-vs-freq": time_vs_freq,
    "original-vs-reduced": original_vs_reduced,
}


def run_experiment(name: str, cfg: ExperimentConfig, out_dir) -> tuple[Path, Path]:
    """Run ``name`` and write ``<name>.csv`` plus ``<name>.meta.txt`` into ``out_dir``."""
    if name not in RUNNERS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    out = RUNNERS[name](cfg)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    meta_path = out_dir / f"{name}.meta.txt"
    csv_path.write_text(out.csv, encoding="utf-8")
    meta = {"experiment": name} | parse_kv(cfg.to_text()) | {k: str(v) for k, v in out.metadata.items()}
    meta_path.write_text(dump_kv(meta), encoding="utf-8")
    return csv_path, meta_path


def small_config(**overrides) -> ExperimentConfig:
    """A seconds-scale configuration for smoke runs."""
    return replace(ExperimentConfig(train_per_cell=2, val_per_cell=1, epochs=2, patience=0), **overrides)
