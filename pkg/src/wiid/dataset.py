"""Labelled snapshot sets: generation over the SNR sweep and the WIIDS1 file format.

File layout (little-endian)::

    magic      6 bytes  b"WIIDS1"
    header    16 bytes  version u16, domain u8, split u8, count u32,
                        snr-grid length u16, reserved u16, metadata length u32
    metadata            UTF-8 ``key = value`` lines
    snr grid            int16 centi-dB per grid point
    records             count x (tech u8, rch u8, snr int16 centi-dB, 128 x 2 float32)
"""

from __future__ import annotations

import enum
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import acquisition as acq
from .channels import N_CNN_RANGE, ChannelMap, ClassLabel, class_set, label_offset_hz
from .config import dump_kv, parse_kv
from .errors import ConfigError, DatasetFormatError, DatasetTruncatedError
from .waveforms import Technology, synthesize_packet, variants_for

MAGIC = b"WIIDS1"
VERSION = 1
_HEADER = struct.Struct("<HBBIHHI")
RECORD_DTYPE = np.dtype([("tech", "u1"), ("rch", "u1"), ("snr", "<i2"), ("x", "<f4", (128, 2))])

Domain = acq.Domain


class Split(enum.IntEnum):
    TRAIN = 0
    VALIDATION = 1


@dataclass
class GenerationConfig:
    classes: tuple[int, ...] = tuple(range(15))
    snr_min: float = -20.0
    snr_max: float = 20.0
    snr_step: float = 2.0
    per_cell: int = 40
    domain: Domain = Domain.FREQUENCY
    n_cnn: int = 3
    seed: int = 0

    def __post_init__(self):
        self.classes = tuple(int(c) for c in self.classes)
        self.domain = Domain(self.domain)
        if not self.classes or any(not 0 <= c < 15 for c in self.classes):
            raise ConfigError(f"classes must be a non-empty subset of 0..14, got {self.classes}")
        if self.per_cell <= 0:
            raise ConfigError("per_cell must be positive")
        if self.snr_step <= 0 or self.snr_max < self.snr_min:
            raise ConfigError("SNR grid is empty")
        if self.n_cnn not in N_CNN_RANGE:
            raise ConfigError(f"n_cnn must be in 1..8, got {self.n_cnn}")

    @property
    def snr_grid(self) -> np.ndarray:
        n = int(round((self.snr_max - self.snr_min) / self.snr_step)) + 1
        return self.snr_min + self.snr_step * np.arange(n)

    @property
    def size(self) -> int:
        return len(self.classes) * self.snr_grid.size * self.per_cell

    @classmethod
    def from_text(cls, text: str) -> "GenerationConfig":
        kv = parse_kv(text)
        known = {f.name for f in fields(cls)}
        unknown = set(kv) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict = {}
        try:
            for key, value in kv.items():
                if key == "classes":
                    kwargs[key] = tuple(range(15)) if value == "all" else tuple(
                        int(v) for v in value.replace(",", " ").split())
                elif key == "domain":
                    kwargs[key] = Domain[value.upper()]
                elif key in ("per_cell", "n_cnn", "seed"):
                    kwargs[key] = int(value)
                else:
                    kwargs[key] = float(value)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"bad value in config: {exc}") from None
        return cls(**kwargs)

    def to_text(self) -> str:
        classes = "all" if self.classes == tuple(range(15)) else ",".join(map(str, self.classes))
        return dump_kv({
            "classes": classes, "snr_min": _fmt(self.snr_min), "snr_max": _fmt(self.snr_max),
            "snr_step": _fmt(self.snr_step), "per_cell": self.per_cell,
            "domain": self.domain.name.lower(), "n_cnn": self.n_cnn, "seed": self.seed,
        })


def _fmt(x: float) -> str:
    return f"{x:g}"


# Full-scale cell counts: 15 * 21 * 480 = 151,200 and 15 * 21 * 235 = 74,025.
FULL_TRAIN_PER_CELL = 480
FULL_VALIDATION_PER_CELL = 235


@dataclass(eq=False)
class Dataset:
    """Input matrices with their class index and SNR.

    ``inputs`` is float32 ``[n, 128, 2]`` so the file round trip is exact.
    """

    inputs: np.ndarray
    labels: np.ndarray
    snr_db: np.ndarray
    domain: Domain = Domain.FREQUENCY
    split: Split = Split.TRAIN
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float32).reshape(-1, 128, 2)
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        self.snr_db = np.asarray(self.snr_db, dtype=np.float64).ravel()
        if not len(self.inputs) == len(self.labels) == len(self.snr_db):
            raise ValueError("inputs, labels and snr_db differ in length")
        self.domain = Domain(self.domain)
        self.split = Split(self.split)

    def __len__(self):
        return len(self.labels)

    @property
    def snr_grid(self) -> np.ndarray:
        if "snr_grid" in self.metadata:
            return np.array([float(v) for v in self.metadata["snr_grid"].split(",")])
        return np.unique(self.snr_db)

    def class_labels(self) -> list[ClassLabel]:
        classes = class_set()
        return [classes[i] for i in self.labels]

    def subset(self, mask) -> "Dataset":
        mask = np.asarray(mask)
        return Dataset(self.inputs[mask], self.labels[mask], self.snr_db[mask], self.domain,
                       self.split, dict(self.metadata))

    def cell_counts(self) -> dict[tuple[int, float], int]:
        keys, counts = np.unique(np.stack([self.labels, self.snr_db], axis=1), axis=0, return_counts=True)
        return {(int(k[0]), float(k[1])): int(c) for k, c in zip(keys, counts)}

    def equals(self, other: "Dataset") -> bool:
        return (self.domain == other.domain and self.split == other.split
                and self.metadata == other.metadata
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.snr_db, other.snr_db)
                and self.inputs.tobytes() == other.inputs.tobytes())


# --- generation ------------------------------------------------------------

def example_rng(seed: int, split: Split, index: int) -> np.random.Generator:
    """Independent stream per example; train and validation never share a stream."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(split), int(index)]))


def synthesize_snapshot(label: ClassLabel, snr_db: float, rng: np.random.Generator,
                        channel_map: ChannelMap = ChannelMap()) -> acq.Snapshot:
    """One single-emitter time-domain snapshot of ``label`` at ``snr_db``."""
    candidates = variants_for(label.technology)
    variant = candidates[int(rng.integers(len(candidates)))]
    packet = synthesize_packet(variant, rng)
    scale = acq.SENSING_RATE_HZ / packet.sample_rate_hz
    lo = int(np.ceil(packet.body[0] * scale))
    hi = int(np.floor(packet.body[1] * scale)) - acq.SNAPSHOT_LEN
    start = int(rng.integers(lo, hi + 1))
    # The emitter sits at +offset from the band centre, so -offset is what lands on DC.
    window = acq.channelize_window(packet, -label_offset_hz(label, channel_map), start, acq.SNAPSHOT_LEN)
    noisy = acq.add_awgn(window, snr_db, rng)
    return acq.extract_snapshot(noisy, 0, label, snr_db)


def snapshot_to_input(snapshot: acq.Snapshot, domain: Domain) -> np.ndarray:
    s = acq.to_frequency_domain(snapshot) if domain == Domain.FREQUENCY else snapshot
    return acq.normalize_input(acq.to_input_matrix(s))


def _plan_examples(cfg: GenerationConfig) -> list[tuple[int, float]]:
    return [(c, float(snr)) for c in cfg.classes for snr in cfg.snr_grid for _ in range(cfg.per_cell)]


def _generate_chunk(args) -> np.ndarray:
    cfg_text, split, start, plan = args
    cfg = GenerationConfig.from_text(cfg_text)
    cmap = ChannelMap(cfg.n_cnn)
    classes = class_set(cmap)
    out = np.empty((len(plan), 128), dtype=np.complex128)
    for k, (cls, snr) in enumerate(plan):
        rng = example_rng(cfg.seed, split, start + k)
        out[k] = synthesize_snapshot(classes[cls], snr, rng, cmap).values
    return out


def generate_snapshots(cfg: GenerationConfig, split: Split = Split.TRAIN, workers: int = 1,
                       chunk: int = 256) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Time-domain snapshots ``[n, 128]`` with class indices and SNRs, cell by cell."""
    plan = _plan_examples(cfg)
    jobs = [(cfg.to_text(), Split(split), i, plan[i:i + chunk]) for i in range(0, len(plan), chunk)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_generate_chunk, jobs))
    else:
        parts = [_generate_chunk(job) for job in jobs]
    snaps = np.concatenate(parts) if parts else np.empty((0, 128), dtype=np.complex128)
    labels = np.array([c for c, _ in plan], dtype=np.int64)
    snrs = np.array([s for _, s in plan], dtype=np.float64)
    return snaps, labels, snrs


def _metadata(cfg: GenerationConfig, split: Split, domain: Domain) -> dict[str, str]:
    meta = parse_kv(cfg.to_text())
    meta["domain"] = domain.name.lower()
    meta["split"] = split.name.lower()
    meta["snr_grid"] = ",".join(_fmt(s) for s in cfg.snr_grid)
    return meta


def _assemble(snaps, labels, snrs, cfg, split, domain) -> Dataset:
    inputs = np.empty((len(snaps), 128, 2), dtype=np.float32)
    for k, values in enumerate(snaps):
        inputs[k] = snapshot_to_input(acq.Snapshot(values), domain)
    return Dataset(inputs, labels, snrs, domain, split, _metadata(cfg, split, domain))


def generate_dataset(cfg: GenerationConfig, split: Split = Split.TRAIN, workers: int = 1) -> Dataset:
    """Balanced dataset: ``per_cell`` examples for every (class, SNR) cell."""
    snaps, labels, snrs = generate_snapshots(cfg, split, workers)
    return _assemble(snaps, labels, snrs, cfg, Split(split), cfg.domain)


def generate_paired(cfg: GenerationConfig, split: Split = Split.TRAIN, workers: int = 1) -> dict[Domain, Dataset]:
    """Time- and frequency-domain datasets built from the very same snapshots."""
    snaps, labels, snrs = generate_snapshots(cfg, split, workers)
    return {d: _assemble(snaps, labels, snrs, cfg, Split(split), d) for d in Domain}


# --- persistence -----------------------------------------------------------

def save_dataset(d: Dataset, path) -> None:
    meta = dump_kv(dict(sorted(d.metadata.items()))).encode("utf-8")
    grid = np.round(d.snr_grid * 100).astype("<i2")
    classes = class_set()
    rec = np.empty(len(d), dtype=RECORD_DTYPE)
    rec["tech"] = [int(classes[i].technology) for i in d.labels]
    rec["rch"] = [classes[i].relative_channel for i in d.labels]
    rec["snr"] = np.round(d.snr_db * 100).astype(np.int16)
    rec["x"] = d.inputs
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(VERSION, int(d.domain), int(d.split), len(d), grid.size, 0, len(meta)))
        fh.write(meta)
        fh.write(grid.tobytes())
        fh.write(rec.tobytes())


def load_dataset(path) -> Dataset:
    raw = Path(path).read_bytes()
    if raw[:len(MAGIC)] != MAGIC:
        raise DatasetFormatError(f"{path}: not a dataset file (bad magic)")
    pos = len(MAGIC)
    if len(raw) < pos + _HEADER.size:
        raise DatasetTruncatedError(f"{path}: header truncated")
    version, domain, split, count, grid_len, _, meta_len = _HEADER.unpack_from(raw, pos)
    if version != VERSION:
        raise DatasetFormatError(f"{path}: unsupported version {version}")
    pos += _HEADER.size
    body = meta_len + 2 * grid_len + count * RECORD_DTYPE.itemsize
    if len(raw) - pos < body:
        raise DatasetTruncatedError(f"{path}: expected {body} bytes after header, found {len(raw) - pos}")
    if len(raw) - pos > body:
        raise DatasetFormatError(f"{path}: trailing bytes after the last record")
    try:
        metadata = parse_kv(raw[pos:pos + meta_len].decode("utf-8"))
        domain, split = Domain(domain), Split(split)
    except (UnicodeDecodeError, ValueError) as exc:
        raise DatasetFormatError(f"{path}: corrupt header: {exc}") from None
    pos += meta_len + 2 * grid_len
    rec = np.frombuffer(raw, dtype=RECORD_DTYPE, count=count, offset=pos)
    index = {(int(lab.technology), lab.relative_channel): i for i, lab in enumerate(class_set())}
    try:
        labels = np.array([index[(int(t), int(r))] for t, r in zip(rec["tech"], rec["rch"])], dtype=np.int64)
    except KeyError as exc:
        raise DatasetFormatError(f"{path}: unknown label {exc}") from None
    return Dataset(rec["x"].copy(), labels, rec["snr"].astype(np.float64) / 100, domain, split, metadata)


__all__ = [
    "Dataset", "Domain", "GenerationConfig", "Split", "generate_dataset", "generate_paired",
    "generate_snapshots", "load_dataset", "save_dataset", "synthesize_snapshot", "Technology",
]
