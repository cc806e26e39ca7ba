"""IEEE 802.15.1 basic-rate GFSK packets."""

from __future__ import annotations

import numpy as np

from ..errors import PayloadLengthError, VariantError
from .common import IqStream, Technology, WaveformVariant, apply_edge_ramps, check_bits, ramp_samples

SYMBOL_RATE_HZ = 1e6
SAMPLE_RATE_HZ = 10e6
BT_PRODUCT = 0.5
MOD_INDEX = 0.32

ACCESS_CODE_BITS = 72
HEADER_BITS = 54  # 18 header bits under rate-1/3 repetition


def _payload_field_bits(user_bytes: int, header_bytes: int, crc: bool, fec13: bool = False) -> int:
    n = 8 * (header_bytes + user_bytes) + (16 if crc else 0)
    return 3 * n if fec13 else n


# Packet layouts: (payload header bytes, max user bytes, CRC, rate-1/3 FEC)
PACKET_TYPES = {
    "ACL-DH1": (1, 27, True, False),
    "ACL-DH3": (2, 183, True, False),
    "ACL-DH5": (2, 339, True, False),
    "SCO-HV1": (0, 10, False, True),
    "SCO-HV3": (0, 30, False, False),
    "eSCO-EV3": (0, 30, True, False),
}


def packet_bits_max(mode: str) -> int:
    hdr, user, crc, fec = PACKET_TYPES[mode]
    return ACCESS_CODE_BITS + HEADER_BITS + _payload_field_bits(user, hdr, crc, fec)


def gaussian_taps(bt: float = BT_PRODUCT, sps: int = 10, span: int = 3) -> np.ndarray:
    """Gaussian pulse-shaping filter normalised to unit DC gain."""
    t = np.arange(-span * sps // 2, span * sps // 2 + 1) / sps  # in symbol periods
    alpha = np.sqrt(np.log(2) / 2) / bt
    h = np.sqrt(np.pi) / alpha * np.exp(-((np.pi * t / alpha) ** 2))
    return h / h.sum()


def gfsk_modulate(bits: np.ndarray, sps: int, h: float = MOD_INDEX, bt: float = BT_PRODUCT,
                  pad_symbols: int = 0) -> np.ndarray:
    """Continuous-phase GFSK. Bit 0 deviates to negative frequency.

    The first and last bits are repeated ``pad_symbols`` times so the filter
    transient sits outside the returned body.
    """
    nrz = 2.0 * bits.astype(float) - 1.0
    if pad_symbols:
        nrz = np.pad(nrz, pad_symbols, mode="edge")
    taps = gaussian_taps(bt, sps)
    up = np.repeat(nrz, sps)
    half = taps.size // 2
    shaped = np.convolve(np.pad(up, half, mode="edge"), taps, mode="valid")
    # Instantaneous frequency in cycles per sample is (h/2) * shaped / sps.
    phase = np.pi * h / sps * np.cumsum(shaped)
    return np.exp(1j * phase)


def synth_bluetooth(payload_bits, variant: WaveformVariant, rng: np.random.Generator | None = None) -> IqStream:
    """GFSK packet at 1 Msym/s sampled at 10 MHz with 2 us ramps at both ends.

    ``payload_bits`` are the on-air bits (access code, header and payload field)
    and are modulated as given.  ``rng`` draws the random initial carrier phase.
    """
    if variant.technology is not Technology.IEEE802151:
        raise VariantError(f"{variant.mode} is not an 802.15.1 variant")
    bits = check_bits(payload_bits)
    if bits.size == 0:
        raise PayloadLengthError("empty payload")
    if bits.size > variant.max_payload_bits:
        raise PayloadLengthError(
            f"{bits.size} bits exceed the {variant.max_payload_bits}-bit limit of {variant.mode}")
    sps = int(SAMPLE_RATE_HZ // SYMBOL_RATE_HZ)
    n_ramp = ramp_samples(SAMPLE_RATE_HZ)
    pad = -(-n_ramp // sps)
    x = gfsk_modulate(bits, sps, pad_symbols=pad)
    cut = pad * sps - n_ramp
    x = x[cut:x.size - cut] if cut else x
    if rng is not None:
        x = x * np.exp(2j * np.pi * rng.random())
    x = apply_edge_ramps(x.copy(), n_ramp)
    return IqStream(x, SAMPLE_RATE_HZ, body=(n_ramp, x.size - n_ramp))


def random_packet_bits(variant: WaveformVariant, rng: np.random.Generator) -> np.ndarray:
    """Maximum-length packet with random access code, header and payload."""
    if variant.technology is not Technology.IEEE802151:
        raise VariantError(f"{variant.mode} is not an 802.15.1 variant")
    hdr, user, crc, fec = PACKET_TYPES[variant.mode]
    field = rng.integers(0, 2, size=8 * (hdr + user) + (16 if crc else 0), dtype=np.uint8)
    if fec:
        field = np.repeat(field, 3)
    header = np.repeat(rng.integers(0, 2, size=HEADER_BITS // 3, dtype=np.uint8), 3)
    access = rng.integers(0, 2, size=ACCESS_CODE_BITS, dtype=np.uint8)
    return np.concatenate([access, header, field])
