"""IEEE 802.15.4 2.4 GHz O-QPSK PHY (half-sine chips, 2 Mchip/s)."""

from __future__ import annotations

import numpy as np

from ..errors import PayloadLengthError
from .common import IqStream, apply_edge_ramps, bits_from_bytes, check_bits, ramp_samples

CHIP_RATE_HZ = 2e6
SAMPLE_RATE_HZ = 10e6
SAMPLES_PER_CHIP = 5

# Chip sequence of data symbol 0, transmitted left to right.
_SYMBOL0 = np.array([int(c) for c in "11011001110000110101001000101110"], dtype=np.uint8)


def _chip_table() -> np.ndarray:
    table = np.empty((16, 32), dtype=np.uint8)
    for k in range(8):
        table[k] = np.roll(_SYMBOL0, 4 * k)
    odd = np.zeros(32, dtype=np.uint8)
    odd[1::2] = 1
    table[8:] = table[:8] ^ odd
    return table


CHIP_TABLE = _chip_table()

PREAMBLE = bytes(4)
SFD = 0xA7
ACK_MPDU_OCTETS = 5
ACK_PPDU_BITS = 8 * (len(PREAMBLE) + 2 + ACK_MPDU_OCTETS)


def crc16_kermit(data: bytes) -> int:
    """ITU-T CRC-16 with reflected bit order, as used for the 802.15.4 FCS."""
    crc = 0
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ 0x8408 if crc & 1 else crc >> 1
    return crc


def ack_frame_bits(seq: int) -> np.ndarray:
    """PPDU bits of an acknowledgment frame: preamble, SFD, PHR and 5-octet MPDU."""
    mac = bytes([0x02, 0x00, seq & 0xFF])
    fcs = crc16_kermit(mac)
    mpdu = mac + bytes([fcs & 0xFF, fcs >> 8])
    return bits_from_bytes(PREAMBLE + bytes([SFD, len(mpdu)]) + mpdu)


def bits_to_chips(bits: np.ndarray) -> np.ndarray:
    """Map each 4-bit symbol (LSB first) to its 32-chip sequence."""
    if bits.size % 4:
        raise PayloadLengthError("802.15.4 bit count must be a multiple of 4")
    symbols = bits.reshape(-1, 4) @ np.array([1, 2, 4, 8])
    return CHIP_TABLE[symbols].ravel()


def oqpsk_half_sine(chips: np.ndarray, spc: int = SAMPLES_PER_CHIP) -> np.ndarray:
    """Even chips on I, odd chips on Q delayed one chip; each pulse spans two chips."""
    if chips.size % 2:
        raise ValueError("chip count must be even")
    levels = 2.0 * chips.astype(float) - 1.0
    pulse = np.sin(np.pi * np.arange(2 * spc) / (2 * spc))
    m = chips.size * spc
    i_up = np.zeros(m)
    i_up[::2 * spc] = levels[0::2]
    q_up = np.zeros(m)
    q_up[::2 * spc] = levels[1::2]
    i = np.zeros(m + spc)
    q = np.zeros(m + spc)
    i[:m] = np.convolve(i_up, pulse)[:m]
    q[spc:] = np.convolve(q_up, pulse)[:m]
    return i + 1j * q


def synth_zigbee(payload_bits) -> IqStream:
    """O-QPSK waveform at 10 MHz with 2 us ramps.

    ``payload_bits`` are the full PPDU bits (see :func:`ack_frame_bits`).
    The ramps ride on extra preamble chips so the body keeps a constant envelope.
    """
    bits = check_bits(payload_bits)
    if bits.size == 0:
        raise PayloadLengthError("empty payload")
    if bits.size > ACK_PPDU_BITS:
        raise PayloadLengthError(f"{bits.size} bits exceed an ACK PPDU ({ACK_PPDU_BITS} bits)")
    n_ramp = ramp_samples(SAMPLE_RATE_HZ)
    pad_chips = 2 * -(-n_ramp // (2 * SAMPLES_PER_CHIP))
    guard = CHIP_TABLE[0][:pad_chips]
    chips = np.concatenate([guard, bits_to_chips(bits), guard])
    x = oqpsk_half_sine(chips)
    # Drop the I-only lead-in and Q-only tail so both ramps are exactly n_ramp long.
    lead = pad_chips * SAMPLES_PER_CHIP - n_ramp
    x = x[lead:x.size - SAMPLES_PER_CHIP - lead] if lead else x[:x.size - SAMPLES_PER_CHIP]
    x = apply_edge_ramps(x.astype(np.complex128), n_ramp)
    return IqStream(x, SAMPLE_RATE_HZ, body=(n_ramp, x.size - n_ramp))
