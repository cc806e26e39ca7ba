"""IEEE 802.11 b/g PHY approximations: DSSS, CCK, PBCC and OFDM.

All modes are emitted at 40 MHz so the 20-22 MHz wide spectra survive until
channelization.  Bit-exact FEC and interleaving are not reproduced; spectra,
rates and framing are.
"""

from __future__ import annotations

import numpy as np
from scipy import signal

from ..errors import PayloadLengthError, VariantError
from .common import (IqStream, Technology, WaveformVariant, apply_edge_ramps, bits_from_bytes,
                     check_bits, ramp_samples)

SAMPLE_RATE_HZ = 40e6
CHIP_RATE_HZ = 11e6
OFDM_RATE_HZ = 20e6
MAX_PSDU_OCTETS = 2312
MAX_PAYLOAD_BITS = 8 * MAX_PSDU_OCTETS

BARKER11 = np.array([1, -1, 1, 1, -1, 1, 1, 1, -1, -1, -1], dtype=float)

DSSS_MODES = ("DSSS-1M", "DSSS-2M", "CCK-5.5M", "CCK-11M", "PBCC-5.5M", "PBCC-11M", "PBCC-22M")
# mode: (modulation, coding rate, data bits per OFDM symbol)
OFDM_MODES = {
    "OFDM-6M": ("bpsk", "1/2", 24),
    "OFDM-12M": ("qpsk", "1/2", 48),
    "OFDM-24M": ("16qam", "1/2", 96),
    "OFDM-48M": ("64qam", "2/3", 192),
    "OFDM-54M": ("64qam", "3/4", 216),
}
_RATE_FIELD = {"OFDM-6M": 0b1101, "OFDM-12M": 0b0101, "OFDM-24M": 0b1001,
               "OFDM-48M": 0b1000, "OFDM-54M": 0b1100}


# --- bit-level helpers -----------------------------------------------------

def scrambler_sequence(n: int, state: int = 0x5D) -> np.ndarray:
    """First ``n`` bits of the x^7 + x^4 + 1 generator from a non-zero 7-bit state."""
    reg = [(state >> k) & 1 for k in range(7)]
    period = np.empty(127, dtype=np.uint8)
    for k in range(127):
        fb = reg[3] ^ reg[6]
        period[k] = fb
        reg = [fb] + reg[:6]
    return np.resize(period, n)


def scramble(bits: np.ndarray, state: int = 0x5D) -> np.ndarray:
    """Additive (frame-synchronous) scrambling; applying it twice restores ``bits``."""
    return bits ^ scrambler_sequence(bits.size, state)


def conv_encode(bits: np.ndarray, puncture: str = "1/2") -> np.ndarray:
    """Rate-1/2 K=7 convolutional code (133, 171 octal) with optional puncturing."""
    g0 = np.array([int(c) for c in format(0o133, "07b")], dtype=np.uint8)
    g1 = np.array([int(c) for c in format(0o171, "07b")], dtype=np.uint8)
    padded = np.concatenate([np.zeros(6, dtype=np.uint8), bits])
    a = np.convolve(padded, g0[::-1])[6:6 + bits.size] % 2
    b = np.convolve(padded, g1[::-1])[6:6 + bits.size] % 2
    coded = np.stack([a, b], axis=1).ravel().astype(np.uint8)
    if puncture == "1/2":
        return coded
    keep = {"2/3": [1, 1, 1, 0], "3/4": [1, 1, 1, 0, 0, 1]}[puncture]
    mask = np.resize(np.array(keep, dtype=bool), coded.size)
    return coded[mask]


# --- DSSS / CCK / PBCC -----------------------------------------------------

def _dqpsk_index(d0: np.ndarray, d1: np.ndarray) -> np.ndarray:
    # 00 -> 0, 01 -> pi/2, 11 -> pi, 10 -> 3pi/2 with (d0, d1) in transmit order
    return np.select([(d0 == 0) & (d1 == 0), (d0 == 0) & (d1 == 1), (d0 == 1) & (d1 == 1)],
                     [0.0, np.pi / 2, np.pi], 3 * np.pi / 2)


def barker_chips(bits: np.ndarray, rate_mbps: int, phi0: float = 0.0) -> tuple[np.ndarray, float]:
    """DBPSK (1 Mb/s) or DQPSK (2 Mb/s) spread by Barker-11.

    Returns the chips and the carrier phase after the last symbol.
    """
    if rate_mbps == 1:
        phases = phi0 + np.cumsum(np.pi * bits)
    else:
        if bits.size % 2:
            bits = np.append(bits, 0)
        phases = phi0 + np.cumsum(_dqpsk_index(bits[0::2], bits[1::2]))
    chips = (np.exp(1j * phases)[:, None] * BARKER11[None, :]).ravel()
    last = float(phases[-1]) if phases.size else phi0
    return chips, last


def cck_chips(bits: np.ndarray, rate: str, phi0: float = 0.0) -> np.ndarray:
    """Complementary code keying, 8 chips per symbol."""
    per = 4 if rate == "5.5" else 8
    if bits.size % per:
        bits = np.concatenate([bits, np.zeros(per - bits.size % per, dtype=bits.dtype)])
    d = bits.reshape(-1, per)
    phi1 = phi0 + np.cumsum(_dqpsk_index(d[:, 0], d[:, 1]))
    if per == 4:
        phi2 = d[:, 2] * np.pi + np.pi / 2
        phi3 = np.zeros_like(phi2)
        phi4 = d[:, 3] * np.pi
    else:
        # same Gray map as phi1, applied non-differentially
        phi2 = _dqpsk_index(d[:, 2], d[:, 3])
        phi3 = _dqpsk_index(d[:, 4], d[:, 5])
        phi4 = _dqpsk_index(d[:, 6], d[:, 7])
    p = np.stack([phi1 + phi2 + phi3 + phi4, phi1 + phi3 + phi4, phi1 + phi2 + phi4,
                  phi1 + phi4 + np.pi, phi1 + phi2 + phi3, phi1 + phi3,
                  phi1 + phi2 + np.pi, phi1], axis=1)
    return np.exp(1j * p).ravel()


def pbcc_chips(bits: np.ndarray, rate: str) -> np.ndarray:
    """Convolutionally coded BPSK / QPSK / 8-PSK at 11 Msym/s."""
    if rate == "5.5":
        coded = conv_encode(bits)
        return 1.0 - 2.0 * coded
    if rate == "11":
        coded = conv_encode(bits)
        return np.exp(1j * np.pi / 2 * (coded[0::2] + 2 * coded[1::2]) + 1j * np.pi / 4)
    coded = conv_encode(bits, "2/3")
    coded = coded[:coded.size - coded.size % 3].reshape(-1, 3)
    return np.exp(1j * np.pi / 4 * (coded @ np.array([1, 2, 4])))


def _chip_shaping_filter(up: int = 40, cutoff_hz: float = 8.5e6) -> np.ndarray:
    fs = CHIP_RATE_HZ * up
    lp = signal.firwin(301, cutoff_hz, fs=fs, window=("kaiser", 6.0))
    return np.convolve(np.ones(up) / up, lp)


_CHIP_FILTER = _chip_shaping_filter()


def chips_to_samples(chips: np.ndarray) -> np.ndarray:
    """Rectangular chips at 11 Mchip/s, band-limited and resampled to 40 MHz."""
    return signal.resample_poly(chips.astype(np.complex128), 40, 11, window=_CHIP_FILTER)


def plcp_long_header_bits(mode: str, psdu_bits: int) -> np.ndarray:
    """SYNC, SFD and PLCP header of the long preamble (sent at 1 Mb/s)."""
    sync = np.ones(128, dtype=np.uint8)
    sfd = bits_from_bytes((0xF3A0).to_bytes(2, "little"))
    rate = {"DSSS-1M": 10, "DSSS-2M": 20, "CCK-5.5M": 55, "CCK-11M": 110,
            "PBCC-5.5M": 55, "PBCC-11M": 110, "PBCC-22M": 220}[mode]
    length_us = int(np.ceil(psdu_bits / (rate / 10)))
    service = 0x08 if mode.startswith("PBCC") else 0x00
    header = bytes([rate & 0xFF, service]) + (length_us & 0xFFFF).to_bytes(2, "little")
    crc = _crc16_ccitt(header)
    return np.concatenate([sync, sfd, bits_from_bytes(header + crc.to_bytes(2, "little"))])


def _crc16_ccitt(data: bytes) -> int:
    crc = 0xFFFF
    for byte in data:
        for k in range(8):
            bit = ((byte >> k) & 1) ^ (crc >> 15)
            crc = ((crc << 1) & 0xFFFF) ^ (0x1021 if bit else 0)
    return crc ^ 0xFFFF


def _dsss_family_chips(bits: np.ndarray, mode: str) -> np.ndarray:
    if mode == "DSSS-1M":
        return barker_chips(bits, 1)[0]
    if mode == "DSSS-2M":
        return barker_chips(bits, 2)[0]
    rate = mode.split("-")[1].rstrip("M")
    if mode.startswith("CCK"):
        return cck_chips(bits, rate)
    return pbcc_chips(bits, rate)


def _synth_dsss(bits: np.ndarray, mode: str, plcp: bool, scrambler_state: int) -> IqStream:
    guard_bits = 2  # 2 us of extra preamble under each ramp
    if plcp:
        head = plcp_long_header_bits(mode, bits.size)
        pre = scramble(np.concatenate([np.ones(guard_bits, dtype=np.uint8), head, bits]), scrambler_state)
        n_head = guard_bits + head.size
        head_chips, phase = barker_chips(pre[:n_head], 1)
        payload = pre[n_head:]
    else:
        head_chips, phase = barker_chips(np.zeros(guard_bits, dtype=np.uint8), 1)
        payload = bits
    body_chips = _dsss_family_chips(payload, mode) * np.exp(1j * phase)
    tail_chips, _ = barker_chips(np.zeros(guard_bits, dtype=np.uint8), 1, phi0=phase)
    chips = np.concatenate([head_chips, body_chips, tail_chips])
    x = chips_to_samples(chips)
    n_ramp = ramp_samples(SAMPLE_RATE_HZ)
    x = apply_edge_ramps(x, n_ramp)
    return IqStream(x, SAMPLE_RATE_HZ, body=(n_ramp, x.size - n_ramp))


# --- OFDM ------------------------------------------------------------------

DATA_SUBCARRIERS = np.array([k for k in range(-26, 27) if k not in (0, -21, -7, 7, 21)])
PILOT_SUBCARRIERS = np.array([-21, -7, 7, 21])
PILOT_VALUES = np.array([1.0, 1.0, 1.0, -1.0])

_LTF = np.array([1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1,
                 0, 1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1,
                 1, 1, 1], dtype=float)
_STF = np.sqrt(13 / 6) * np.array(
    [0, 0, 1 + 1j, 0, 0, 0, -1 - 1j, 0, 0, 0, 1 + 1j, 0, 0, 0, -1 - 1j, 0, 0, 0, -1 - 1j, 0, 0, 0,
     1 + 1j, 0, 0, 0, 0, 0, 0, 0, -1 - 1j, 0, 0, 0, -1 - 1j, 0, 0, 0, 1 + 1j, 0, 0, 0, 1 + 1j, 0,
     0, 0, 1 + 1j, 0, 0, 0, 1 + 1j, 0, 0])

_GRAY_LEVELS = {
    1: np.array([-1.0, 1.0]),
    2: np.array([-3.0, -1.0, 3.0, 1.0]),
    3: np.array([-7.0, -5.0, -1.0, -3.0, 7.0, 5.0, 1.0, 3.0]),
}
_BITS_PER_AXIS = {"bpsk": 1, "qpsk": 1, "16qam": 2, "64qam": 3}
_QAM_SCALE = {"bpsk": 1.0, "qpsk": 1 / np.sqrt(2), "16qam": 1 / np.sqrt(10), "64qam": 1 / np.sqrt(42)}


def qam_map(bits: np.ndarray, modulation: str) -> np.ndarray:
    """Gray-coded constellation mapping with unit average symbol energy."""
    m = _BITS_PER_AXIS[modulation]
    weights = 1 << np.arange(m)[::-1]
    if modulation == "bpsk":
        return _GRAY_LEVELS[1][bits].astype(complex)
    groups = bits.reshape(-1, 2 * m)
    i = _GRAY_LEVELS[m][groups[:, :m] @ weights]
    q = _GRAY_LEVELS[m][groups[:, m:] @ weights]
    return (i + 1j * q) * _QAM_SCALE[modulation]


def _subcarriers_to_time(values: np.ndarray, ks: np.ndarray) -> np.ndarray:
    spec = np.zeros(64, dtype=complex)
    spec[np.mod(ks, 64)] = values
    return np.fft.ifft(spec) * 64 / np.sqrt(52)


def pilot_polarity(n: int) -> np.ndarray:
    return 1.0 - 2.0 * scrambler_sequence(n, 0x7F)


def ofdm_symbols(coded_bits: np.ndarray, modulation: str, first_index: int = 1) -> np.ndarray:
    """Assemble 80-sample OFDM symbols (16-sample cyclic prefix) at 20 MHz."""
    per_axis = _BITS_PER_AXIS[modulation]
    bits_per_sc = 1 if modulation == "bpsk" else 2 * per_axis
    n_cbps = 48 * bits_per_sc
    n_sym = coded_bits.size // n_cbps
    data = qam_map(coded_bits[:n_sym * n_cbps], modulation).reshape(n_sym, 48)
    polarity = pilot_polarity(first_index + n_sym)[first_index:]
    spec = np.zeros((n_sym, 64), dtype=complex)
    spec[:, np.mod(DATA_SUBCARRIERS, 64)] = data
    spec[:, np.mod(PILOT_SUBCARRIERS, 64)] = polarity[:, None] * PILOT_VALUES[None, :]
    t = np.fft.ifft(spec, axis=1) * 64 / np.sqrt(52)
    return np.concatenate([t[:, -16:], t], axis=1)


def _synth_ofdm(bits: np.ndarray, mode: str, scrambler_state: int) -> IqStream:
    modulation, code_rate, n_dbps = OFDM_MODES[mode]
    n_ramp20 = ramp_samples(OFDM_RATE_HZ)

    ks = np.arange(-26, 27)
    stf_period = _subcarriers_to_time(_STF, ks)[:16]
    stf = np.resize(stf_period, n_ramp20 + 160)
    ltf_sym = _subcarriers_to_time(_LTF, ks)
    ltf = np.concatenate([ltf_sym[-32:], ltf_sym, ltf_sym])

    length = bits.size // 8
    sig_bits = np.array([(_RATE_FIELD[mode] >> (3 - k)) & 1 for k in range(4)] + [0]
                        + [(length >> k) & 1 for k in range(12)], dtype=np.uint8)
    sig_bits = np.concatenate([sig_bits, [sig_bits.sum() % 2], np.zeros(6, dtype=np.uint8)])
    signal_sym = ofdm_symbols(conv_encode(sig_bits), "bpsk", first_index=0)

    n_sym = int(np.ceil((16 + bits.size + 6) / n_dbps))
    data = np.zeros(n_sym * n_dbps, dtype=np.uint8)
    data[16:16 + bits.size] = bits
    data = scramble(data, scrambler_state)
    data[16 + bits.size:16 + bits.size + 6] = 0
    data_syms = ofdm_symbols(conv_encode(data, code_rate), modulation, first_index=1)

    tail = data_syms[-1, 16:16 + n_ramp20]
    x20 = np.concatenate([stf, ltf, signal_sym.ravel(), data_syms.ravel(), tail])
    x = signal.resample_poly(x20, 2, 1)
    n_ramp = 2 * n_ramp20
    x = apply_edge_ramps(x, n_ramp)
    return IqStream(x, SAMPLE_RATE_HZ, body=(n_ramp, x.size - n_ramp))


def synth_wifi(payload_bits, variant: WaveformVariant, rng: np.random.Generator | None = None,
               plcp: bool = True) -> IqStream:
    """Synthesize one 802.11 b/g packet at 40 MHz.

    With ``plcp`` the DSSS-family packets carry the long preamble and header at
    1 Mb/s and the whole PPDU is scrambled; OFDM packets always carry their
    training fields and SIGNAL symbol.  ``rng`` picks the scrambler seed.
    """
    if variant.technology is not Technology.IEEE80211:
        raise VariantError(f"{variant.mode} is not an 802.11 variant")
    if variant.mode not in DSSS_MODES and variant.mode not in OFDM_MODES:
        raise VariantError(f"unknown 802.11 mode {variant.mode!r}")
    bits = check_bits(payload_bits)
    if bits.size == 0:
        raise PayloadLengthError("empty payload")
    if bits.size > variant.max_payload_bits:
        raise PayloadLengthError(f"{bits.size} bits exceed {variant.max_payload_bits}")
    state = int(rng.integers(1, 128)) if rng is not None else 0x5D
    if variant.mode in OFDM_MODES:
        return _synth_ofdm(bits, variant.mode, state)
    return _synth_dsss(bits, variant.mode, plcp, state)
