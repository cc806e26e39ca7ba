"""Shared types and helpers for baseband packet synthesis."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

RAMP_SECONDS = 2e-6


class Technology(enum.IntEnum):
    IEEE802151 = 0  # Bluetooth basic rate
    IEEE802154 = 1
    IEEE80211 = 2

    @property
    def label(self) -> str:
        return {0: "802.15.1", 1: "802.15.4", 2: "802.11"}[int(self)]


@dataclass(frozen=True)
class WaveformVariant:
    technology: Technology
    mode: str
    symbol_rate_hz: float
    # Longest bit sequence the packet type carries on air.
    max_payload_bits: int

    @property
    def symbol_duration_s(self) -> float:
        return 1.0 / self.symbol_rate_hz


@dataclass(eq=False)
class IqStream:
    """Complex baseband samples at a fixed sample rate.

    ``body`` is the half-open sample range that excludes transmitter ramps;
    snapshots are only taken from inside it.
    """

    samples: np.ndarray
    sample_rate_hz: float
    body: tuple[int, int] | None = field(default=None)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("IqStream needs a non-empty 1-D sample array")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.body is None:
            self.body = (0, self.samples.size)
        lo, hi = self.body
        if not 0 <= lo <= hi <= self.samples.size:
            raise ValueError(f"body {self.body} outside stream of {self.samples.size} samples")

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


def raised_cosine_ramp(n: int) -> np.ndarray:
    """Rising raised-cosine amplitude ramp of ``n`` samples, excluding both 0 and 1."""
    k = np.arange(1, n + 1)
    return 0.5 - 0.5 * np.cos(np.pi * k / (n + 1))


def apply_edge_ramps(x: np.ndarray, n_ramp: int) -> np.ndarray:
    """Taper the first and last ``n_ramp`` samples of ``x`` in place and return it."""
    if n_ramp == 0:
        return x
    ramp = raised_cosine_ramp(n_ramp)
    x[:n_ramp] *= ramp
    x[-n_ramp:] *= ramp[::-1]
    return x


def ramp_samples(sample_rate_hz: float) -> int:
    return int(round(RAMP_SECONDS * sample_rate_hz))


def occupied_bandwidth_hz(stream: IqStream, level_db: float = -20.0, nperseg: int = 1024) -> float:
    """Width of the band where the Welch PSD stays within ``level_db`` of its peak.

    Measured between the outermost frequencies above the threshold.
    """
    x = stream.samples
    nperseg = min(nperseg, x.size)
    f, p = signal.welch(x, fs=stream.sample_rate_hz, nperseg=nperseg,
                        return_onesided=False, detrend=False, scaling="density")
    order = np.argsort(f)
    f, p = f[order], p[order]
    p_db = 10 * np.log10(p / p.max())
    above = np.flatnonzero(p_db >= level_db)
    df = stream.sample_rate_hz / nperseg
    return float(f[above[-1]] - f[above[0]] + df)


def bits_from_bytes(data: bytes) -> np.ndarray:
    """LSB-first bit expansion, the on-air order for all three standards."""
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")


def check_bits(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.uint8).ravel()
    if b.size and b.max() > 1:
        raise ValueError("bit sequences may only contain 0 and 1")
    return b
