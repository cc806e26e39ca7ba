"""Accuracy grids, confusion matrices and two-curve comparisons."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import nfsc
from .channels import class_set
from .dataset import Dataset
from .errors import ConfigError
from .nn.model import NetworkParams, NetworkSpec, predict
from .waveforms.common import Technology

N_CLASSES = 15
NO_CLASS_COLUMN = N_CLASSES  # confusion column for "no decision"
GAIN_LEVELS = np.round(np.arange(0.2, 0.9 + 1e-9, 0.05), 10)


def non_80211_classes() -> list[int]:
    return [i for i, lab in enumerate(class_set()) if lab.technology != Technology.IEEE80211]


@dataclass
class EvalReport:
    """Per-(class, SNR) accuracy plus a ``[15, 16]`` confusion matrix (last column: no-class)."""

    snr_grid: np.ndarray
    correct: np.ndarray  # [15, n_snr]
    total: np.ndarray  # [15, n_snr]
    confusion: np.ndarray  # [15, 16]
    metadata: dict[str, str] = field(default_factory=dict)

    @property
    def accuracy(self) -> np.ndarray:
        """``[15, n_snr]``; NaN where a cell has no examples."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.total > 0, self.correct / np.maximum(self.total, 1), np.nan)

    def mean_accuracy(self, classes=None) -> np.ndarray:
        """Per-SNR arithmetic mean of the per-class accuracies over ``classes`` present in the data."""
        acc = self.accuracy
        rows = list(range(N_CLASSES)) if classes is None else list(classes)
        sub = acc[rows]
        sub = sub[~np.all(np.isnan(sub), axis=1)]
        if sub.size == 0:
            raise ConfigError("no examples for the requested classes")
        return np.nanmean(sub, axis=0)

    def class_mean(self, classes, min_snr: float = -np.inf) -> float:
        cols = self.snr_grid >= min_snr
        return float(np.nanmean(self.accuracy[np.ix_(list(classes), cols)]))


def predictions_cnn(spec: NetworkSpec, params: NetworkParams, data: Dataset) -> np.ndarray:
    return np.argmax(predict(spec, params, data.inputs), axis=1)


def predictions_nfsc(defs: list, data: Dataset) -> np.ndarray:
    return nfsc.predict_indices(data.inputs, data.domain, defs)


def evaluate_predictions(pred: np.ndarray, data: Dataset, metadata: dict | None = None) -> EvalReport:
    if len(data) == 0:
        raise ConfigError("cannot evaluate on an empty dataset")
    grid = np.asarray(data.snr_grid, dtype=np.float64)
    col = np.searchsorted(grid, data.snr_db)
    if np.any(col >= grid.size) or np.any(grid[np.minimum(col, grid.size - 1)] != data.snr_db):
        raise ConfigError("dataset SNRs fall outside its declared grid")
    ok = pred == data.labels
    correct = np.zeros((N_CLASSES, grid.size))
    total = np.zeros((N_CLASSES, grid.size))
    np.add.at(total, (data.labels, col), 1)
    np.add.at(correct, (data.labels, col), ok)
    confusion = np.zeros((N_CLASSES, N_CLASSES + 1), dtype=np.int64)
    np.add.at(confusion, (data.labels, np.where(pred < 0, NO_CLASS_COLUMN, pred)), 1)
    meta = dict(data.metadata)
    meta.update(metadata or {})
    return EvalReport(grid, correct, total, confusion, meta)


def evaluate(model, data: Dataset) -> EvalReport:
    """Evaluate a ``(spec, params)`` CNN or a list of NFSC class definitions."""
    if len(data) == 0:
        raise ConfigError("cannot evaluate on an empty dataset")
    if isinstance(model, tuple) and len(model) == 2 and isinstance(model[0], NetworkSpec):
        spec, params = model
        meta = {"model": spec.name, "init_seed": str(params.seed)}
        return evaluate_predictions(predictions_cnn(spec, params, data), data, meta)
    defs = list(model)
    meta = {"model": "nfsc", "nfsc_no_class": "counted as error"}
    return evaluate_predictions(predictions_nfsc(defs, data), data, meta)


# --- comparison ------------------------------------------------------------

@dataclass
class ComparisonMetrics:
    mean_accuracy_gain: float  # percentage points
    snr_gain_db: float  # NaN when no accuracy level is invertible on both curves
    levels_used: int
    levels_skipped: int

    @property
    def snr_gain_defined(self) -> bool:
        return bool(np.isfinite(self.snr_gain_db))


def invert_curve(snr: np.ndarray, acc: np.ndarray, level: float) -> float | None:
    """SNR at which the piecewise-linear curve reaches ``level``, if it crosses it exactly once upward."""
    d = np.asarray(acc, dtype=np.float64) - level
    up = np.flatnonzero((d[:-1] < 0) & (d[1:] >= 0))
    down = np.flatnonzero((d[:-1] >= 0) & (d[1:] < 0))
    if up.size != 1 or down.size != 0:
        return None
    i = up[0]
    return float(snr[i] + (level - acc[i]) / (acc[i + 1] - acc[i]) * (snr[i + 1] - snr[i]))


def compare_curves(snr: np.ndarray, acc_a: np.ndarray, acc_b: np.ndarray,
                   levels: np.ndarray = GAIN_LEVELS) -> ComparisonMetrics:
    snr, acc_a, acc_b = (np.asarray(v, dtype=np.float64) for v in (snr, acc_a, acc_b))
    if not snr.shape == acc_a.shape == acc_b.shape:
        raise ConfigError("curves must share one SNR grid")
    gain = float(np.mean(acc_a - acc_b) * 100.0)
    shifts = []
    for level in levels:
        sa, sb = invert_curve(snr, acc_a, level), invert_curve(snr, acc_b, level)
        if sa is not None and sb is not None:
            shifts.append(sb - sa)
    snr_gain = float(np.mean(shifts)) if shifts else float("nan")
    return ComparisonMetrics(gain, snr_gain, len(shifts), len(levels) - len(shifts))


def compare(a: EvalReport, b: EvalReport, classes=None) -> ComparisonMetrics:
    """How much better ``a`` is than ``b`` on the class subset (all classes by default)."""
    if not np.array_equal(a.snr_grid, b.snr_grid):
        raise ConfigError("reports use different SNR grids")
    if classes is not None and len(list(classes)) == 0:
        raise ConfigError("class subset is empty")
    return compare_curves(a.snr_grid, a.mean_accuracy(classes), b.mean_accuracy(classes))


# --- CSV -------------------------------------------------------------------

def fmt(x: float) -> str:
    return "nan" if not np.isfinite(x) else f"{x:.6f}"


def csv_text(header: list[str], columns: list[np.ndarray]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([fmt(float(v)) for v in row])
    return buf.getvalue()


def report_csv(report: EvalReport) -> str:
    """``snr_db`` then one accuracy column per class."""
    header = ["snr_db"] + [str(lab) for lab in class_set()]
    return csv_text(header, [report.snr_grid, *report.accuracy])


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty CSV")
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def report_from_csv(path) -> EvalReport:
    """Rebuild an accuracy-only report (one example per cell) from :func:`report_csv` output."""
    header, data = read_csv(path)
    if header[0] != "snr_db" or len(header) != N_CLASSES + 1:
        raise ConfigError(f"{path}: not a per-class accuracy CSV")
    acc = data[:, 1:].T
    total = np.where(np.isnan(acc), 0.0, 1.0)
    return EvalReport(data[:, 0], np.nan_to_num(acc), total, np.zeros((N_CLASSES, N_CLASSES + 1), np.int64))
