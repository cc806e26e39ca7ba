"""Template-matching spectral classifier used as the non-learned baseline.

A snapshot's PSD is fuzzified into [0, 1] memberships, masked by a per-class
rectangular filter, and compared against a per-class reference rectangle with
a min/max overlap score.  The best class above threshold wins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import acquisition as acq
from .acquisition import Domain, Snapshot
from .channels import ChannelMap, ClassLabel, class_set, label_offset_hz
from .config import dump_kv, parse_kv
from .errors import ConfigError, DegenerateInputError, DomainError
from .waveforms.common import Technology

N_BINS = acq.SNAPSHOT_LEN
BIN_HZ = acq.SENSING_RATE_HZ / N_BINS  # 78.125 kHz
CENTER_BIN = N_BINS // 2
PSD_FLOOR = 1e-20
NO_CLASS = -1

# Reference widths equal the channel bandwidth; filters are twice as wide.
REFERENCE_BINS = {Technology.IEEE802151: 13, Technology.IEEE802154: 26, Technology.IEEE80211: 282}
FILTER_FACTOR = 2
DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class SpectralShape:
    """A rectangle of ones over ``width_bins`` bins centred on ``center_bin`` (clipped to the grid)."""

    center_bin: int
    width_bins: int

    def __post_init__(self):
        if self.width_bins < 1:
            raise DomainError("shape width must be at least one bin")

    @property
    def start(self) -> int:
        return self.center_bin - self.width_bins // 2

    def weights(self, n: int = N_BINS) -> np.ndarray:
        w = np.zeros(n)
        w[max(self.start, 0):max(min(self.start + self.width_bins, n), 0)] = 1.0
        return w


@dataclass(frozen=True)
class NfscClassDef:
    label: ClassLabel
    reference: SpectralShape
    filter: SpectralShape
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise DomainError(f"threshold must lie in (0, 1), got {self.threshold}")
        if not self.reference.weights().any():
            raise DomainError(f"reference shape of {self.label} lies outside the band")


def hz_to_bin(offset_hz: float) -> int:
    return CENTER_BIN + int(round(offset_hz / BIN_HZ))


def class_def(label: ClassLabel, channel_map: ChannelMap = ChannelMap(),
              reference_bins: int | None = None, threshold: float = DEFAULT_THRESHOLD) -> NfscClassDef:
    width = reference_bins or REFERENCE_BINS[label.technology]
    center = hz_to_bin(label_offset_hz(label, channel_map))
    return NfscClassDef(label, SpectralShape(center, width), SpectralShape(center, FILTER_FACTOR * width),
                        threshold)


def default_class_defs(channel_map: ChannelMap = ChannelMap(), include_80211: bool = False) -> list[NfscClassDef]:
    """Definitions for the 802.15.1 and 802.15.4 classes (802.11 on request), in class-index order."""
    return [class_def(lab, channel_map) for lab in class_set(channel_map)
            if include_80211 or lab.technology != Technology.IEEE80211]


# --- layers ----------------------------------------------------------------

def psd(s) -> np.ndarray:
    """128-bin PSD in dB of a time-domain snapshot, ordered like the acquisition FFT."""
    values = s.values if isinstance(s, Snapshot) else np.asarray(s, dtype=np.complex128)
    if isinstance(s, Snapshot) and s.domain != Domain.TIME:
        return _db(np.abs(values) ** 2 / N_BINS)
    if not np.any(values):
        raise DegenerateInputError("all-zero snapshot has no spectrum")
    spectrum = np.fft.fftshift(np.fft.fft(values))
    return _db(np.abs(spectrum) ** 2 / values.size)


def _db(power: np.ndarray) -> np.ndarray:
    if not np.any(power):
        raise DegenerateInputError("all-zero spectrum")
    return 10.0 * np.log10(power + PSD_FLOOR)


def psd_from_input(matrix: np.ndarray, domain: Domain) -> np.ndarray:
    """PSD of a stored ``128 x 2`` input matrix in either domain (up to a constant dB shift)."""
    values = acq.from_input_matrix(matrix).astype(np.complex128)
    return psd(Snapshot(values, domain))


def fuzzify(p: np.ndarray) -> np.ndarray:
    """Map dB values linearly onto [0, 1]: the minimum goes to 0, the maximum to 1."""
    p = np.asarray(p, dtype=np.float64)
    lo, hi = p.min(), p.max()
    if not hi > lo:
        raise DegenerateInputError("flat PSD cannot be fuzzified")
    return np.abs((lo - p) / (lo - hi))


def apply_filter(mu: np.ndarray, filt: SpectralShape | np.ndarray) -> np.ndarray:
    w = filt.weights(len(mu)) if isinstance(filt, SpectralShape) else np.asarray(filt, dtype=np.float64)
    return np.asarray(mu, dtype=np.float64) * w


def similarity(reference: SpectralShape | np.ndarray, s: np.ndarray) -> float:
    """Sum of elementwise minima over the larger of the two sums."""
    s = np.asarray(s, dtype=np.float64)
    r = reference.weights(len(s)) if isinstance(reference, SpectralShape) else np.asarray(reference, dtype=np.float64)
    denom = max(r.sum(), s.sum())
    if not r.sum() > 0:
        raise DomainError("reference shape has zero area")
    return float(np.minimum(r, s).sum() / denom)


@dataclass
class NfscResult:
    scores: np.ndarray  # one similarity per definition
    decision: int  # position in the definition list, or NO_CLASS
    label: ClassLabel | None


def classify_psd(p: np.ndarray, defs: list[NfscClassDef]) -> NfscResult:
    if not defs:
        raise ConfigError("no class definitions")
    try:
        mu = fuzzify(p)
    except DegenerateInputError:
        return NfscResult(np.zeros(len(defs)), NO_CLASS, None)
    scores = np.array([similarity(d.reference, apply_filter(mu, d.filter)) for d in defs])
    passing = scores >= np.array([d.threshold for d in defs])
    if not passing.any():
        return NfscResult(scores, NO_CLASS, None)
    # argmax returns the first maximum, so ties go to the lower index.
    k = int(np.argmax(np.where(passing, scores, -np.inf)))
    return NfscResult(scores, k, defs[k].label)


def classify(s, defs: list[NfscClassDef]) -> NfscResult:
    """Score every definition and return the thresholded best match (total on finite input)."""
    try:
        p = psd(s)
    except DegenerateInputError:
        return NfscResult(np.zeros(len(defs)), NO_CLASS, None)
    return classify_psd(p, defs)


def predict_indices(inputs: np.ndarray, domain: Domain, defs: list[NfscClassDef]) -> np.ndarray:
    """Class-set indices decided for a batch of input matrices; ``NO_CLASS`` where nothing passes."""
    classes = class_set()
    out = np.full(len(inputs), NO_CLASS, dtype=np.int64)
    for i, m in enumerate(inputs):
        r = classify_psd(psd_from_input(m, domain), defs)
        if r.label is not None:
            out[i] = classes.index(r.label)
    return out


# --- config ----------------------------------------------------------------

def defs_to_text(defs: list[NfscClassDef], channel_map: ChannelMap = ChannelMap()) -> str:
    """``<tech>/RCH<k>.center_mhz``, ``.reference_mhz`` and ``.threshold`` keys per class."""
    items = {"n_cnn": channel_map.n_cnn}
    for d in defs:
        key = f"{d.label.technology.name}.{d.label.relative_channel}"
        items[f"{key}.center_mhz"] = repr((d.reference.center_bin - CENTER_BIN) * BIN_HZ / 1e6)
        items[f"{key}.reference_mhz"] = repr(d.reference.width_bins * BIN_HZ / 1e6)
        items[f"{key}.threshold"] = repr(d.threshold)
    return dump_kv(items)


def defs_from_text(text: str) -> list[NfscClassDef]:
    kv = parse_kv(text)
    kv.pop("n_cnn", None)
    groups: dict[tuple[str, int], dict[str, str]] = {}
    for key, value in kv.items():
        try:
            tech, rch, field_ = key.split(".")
            groups.setdefault((tech, int(rch)), {})[field_] = value
        except ValueError:
            raise ConfigError(f"unexpected key {key!r}") from None
    defs = []
    for (tech, rch), f in groups.items():
        try:
            label = ClassLabel(Technology[tech], rch)
            center = hz_to_bin(float(f["center_mhz"]) * 1e6)
            width = int(round(float(f["reference_mhz"]) * 1e6 / BIN_HZ))
            threshold = float(f.get("threshold", DEFAULT_THRESHOLD))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad definition for {tech}.{rch}: {exc}") from None
        defs.append(NfscClassDef(label, SpectralShape(center, width),
                                 SpectralShape(center, FILTER_FACTOR * width), threshold))
    return sorted(defs, key=lambda d: d.label)
