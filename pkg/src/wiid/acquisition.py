"""The 10 MHz acquisition front end: channelization, noise, snapshots, FFT."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import signal

from .channels import ClassLabel
from .errors import BoundsError, DegenerateInputError, DomainError
from .waveforms.common import IqStream

SNAPSHOT_LEN = 128
SENSING_RATE_HZ = 10e6

# Anti-alias filter edges relative to the output rate (4.5 / 4.7 MHz at 10 MHz).
PASS_EDGE = 0.45
STOP_EDGE = 0.47
STOP_ATTEN_DB = 65.0


class Domain(enum.IntEnum):
    TIME = 0
    FREQUENCY = 1


@dataclass(eq=False)
class Snapshot:
    values: np.ndarray
    domain: Domain = Domain.TIME
    label: ClassLabel | None = None
    snr_db: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (SNAPSHOT_LEN,):
            raise ValueError(f"a snapshot holds exactly {SNAPSHOT_LEN} values, got {self.values.shape}")
        self.domain = Domain(self.domain)


@lru_cache(maxsize=None)
def antialias_filter(design_rate_hz: float, out_rate_hz: float) -> np.ndarray:
    """Linear-phase Kaiser low-pass: flat to 0.45 * out_rate, >= 60 dB from 0.47 * out_rate."""
    nyq = design_rate_hz / 2
    f_pass = PASS_EDGE * out_rate_hz
    # A stream already at the output rate has no room beyond Nyquist.
    f_stop = min(STOP_EDGE * out_rate_hz, nyq)
    numtaps, beta = signal.kaiserord(STOP_ATTEN_DB, (f_stop - f_pass) / nyq)
    numtaps |= 1
    cutoff = 0.5 * (f_pass + f_stop)
    return signal.firwin(numtaps, cutoff, window=("kaiser", beta), fs=design_rate_hz)


def _plan(fs: float, freq_offset_hz: float, out_rate_hz: float) -> tuple[int, int, int]:
    """Integer upsampling factor before mixing, then the rational output resampling p/q."""
    if not abs(freq_offset_hz) < fs / 2:
        raise DomainError(f"offset {freq_offset_hz / 1e6:g} MHz beyond Nyquist of {fs / 1e6:g} MHz stream")
    if out_rate_hz > fs:
        raise DomainError("output rate may not exceed the stream rate")
    # Room for the shifted band so nothing wraps into the passband.
    up = max(1, math.ceil((2 * abs(freq_offset_hz) + fs) / fs - 1e-9))
    ratio = Fraction(out_rate_hz / (fs * up)).limit_denominator(10_000)
    return up, ratio.numerator, ratio.denominator


def _mix_filter_resample(x: np.ndarray, fs: float, up: int, p: int, q: int, freq_offset_hz: float,
                         out_rate_hz: float, first_index: int = 0) -> np.ndarray:
    if up > 1:
        x = signal.resample_poly(x, up, 1)
    fs_w = fs * up
    n = first_index * up + np.arange(x.size)
    x = x * np.exp(-2j * np.pi * (freq_offset_hz / fs_w) * n)
    h = antialias_filter(fs_w * p, out_rate_hz)
    if p == q == 1:
        return signal.convolve(x, h, mode="same")
    return signal.resample_poly(x, p, q, window=h)


def channelize(stream: IqStream, freq_offset_hz: float, out_rate_hz: float = SENSING_RATE_HZ) -> IqStream:
    """Shift ``freq_offset_hz`` to DC, low-pass and resample to ``out_rate_hz``."""
    fs = stream.sample_rate_hz
    up, p, q = _plan(fs, freq_offset_hz, out_rate_hz)
    y = _mix_filter_resample(stream.samples, fs, up, p, q, freq_offset_hz, out_rate_hz)
    scale = out_rate_hz / fs
    lo, hi = stream.body
    body = (min(math.ceil(lo * scale), y.size), min(math.floor(hi * scale), y.size))
    return IqStream(y, out_rate_hz, body=body)


def channelize_window(stream: IqStream, freq_offset_hz: float, start: int, length: int,
                      out_rate_hz: float = SENSING_RATE_HZ) -> IqStream:
    """Samples ``[start, start + length)`` of ``channelize(stream, ...)`` without processing the rest.

    Only the input span feeding those outputs (plus filter margins) is
    processed, which keeps long 802.11 packets cheap.
    """
    fs = stream.sample_rate_hz
    decim = fs / out_rate_hz
    if decim != int(decim):
        return _crop(channelize(stream, freq_offset_hz, out_rate_hz), start, length)
    decim = int(decim)
    up, p, q = _plan(fs, freq_offset_hz, out_rate_hz)
    h = antialias_filter(fs * up * p, out_rate_hz)
    margin_out = h.size // (up * p * decim) + 16
    a_out = max(0, start - margin_out)
    b_out = start + length + margin_out
    x = stream.samples[a_out * decim:b_out * decim]
    y = _mix_filter_resample(x, fs, up, p, q, freq_offset_hz, out_rate_hz, first_index=a_out * decim)
    off = start - a_out
    out = y[off:off + length]
    if out.size != length:
        raise BoundsError(f"window [{start}, {start + length}) exceeds the channelized stream")
    return IqStream(out, out_rate_hz)


def _crop(stream: IqStream, start: int, length: int) -> IqStream:
    if start < 0 or start + length > len(stream):
        raise BoundsError(f"window [{start}, {start + length}) exceeds stream of {len(stream)}")
    return IqStream(stream.samples[start:start + length], stream.sample_rate_hz)


def normalize_power(stream: IqStream) -> IqStream:
    p = stream.mean_power()
    if not p > 0 or not np.isfinite(p):
        raise DegenerateInputError("stream has zero or non-finite power")
    return IqStream(stream.samples / np.sqrt(p), stream.sample_rate_hz, body=stream.body)


def add_awgn(stream: IqStream, snr_db: float, rng: np.random.Generator) -> IqStream:
    """Scale to unit mean power, then add circular Gaussian noise of variance 10^(-snr/10).

    ``snr_db = math.inf`` returns the normalized stream untouched.
    """
    clean = normalize_power(stream)
    if math.isinf(snr_db) and snr_db > 0:
        return clean
    sigma2 = 10.0 ** (-snr_db / 10.0)
    n = len(clean)
    noise = rng.standard_normal((2, n)) * np.sqrt(sigma2 / 2)
    return IqStream(clean.samples + noise[0] + 1j * noise[1], clean.sample_rate_hz, body=clean.body)


def extract_snapshot(stream: IqStream, start_index: int, label: ClassLabel | None = None,
                     snr_db: float | None = None) -> Snapshot:
    """Copy 128 consecutive samples (12.8 us at 10 MHz) from inside the packet body."""
    if start_index < 0 or start_index + SNAPSHOT_LEN > len(stream):
        raise BoundsError(f"snapshot at {start_index} exceeds stream of {len(stream)} samples")
    lo, hi = stream.body
    if start_index < lo or start_index + SNAPSHOT_LEN > hi:
        raise BoundsError(f"snapshot at {start_index} leaves the packet body {stream.body}")
    return Snapshot(stream.samples[start_index:start_index + SNAPSHOT_LEN].copy(), Domain.TIME, label, snr_db)


def to_frequency_domain(s: Snapshot) -> Snapshot:
    """Unnormalized 128-point DFT with bins ordered from -5 MHz to +5 MHz."""
    if s.domain != Domain.TIME:
        raise ValueError("snapshot is already in the frequency domain")
    return Snapshot(np.fft.fftshift(np.fft.fft(s.values)), Domain.FREQUENCY, s.label, s.snr_db)


def to_input_matrix(s: Snapshot | np.ndarray) -> np.ndarray:
    """128 x 2 real matrix: column 0 real parts, column 1 imaginary parts."""
    v = s.values if isinstance(s, Snapshot) else np.asarray(s)
    return np.column_stack([v.real, v.imag]).astype(np.float64)


def from_input_matrix(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    return m[..., 0] + 1j * m[..., 1]


def normalize_input(m: np.ndarray) -> np.ndarray:
    """Scale to unit Frobenius norm."""
    m = np.asarray(m, dtype=np.float64)
    norm = np.linalg.norm(m)
    if norm == 0 or not np.isfinite(norm):
        raise DegenerateInputError("cannot normalize an all-zero input matrix")
    return m / norm
