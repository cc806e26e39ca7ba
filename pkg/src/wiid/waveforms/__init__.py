"""Baseband packet synthesis for the three 2.4 GHz technologies."""

from __future__ import annotations

import numpy as np

from ..errors import VariantError
from . import bluetooth, wifi, zigbee
from .bluetooth import synth_bluetooth
from .common import IqStream, Technology, WaveformVariant, occupied_bandwidth_hz
from .wifi import synth_wifi
from .zigbee import ack_frame_bits, synth_zigbee

__all__ = [
    "IqStream", "Technology", "WaveformVariant", "variant_catalog", "variants_for",
    "synth_bluetooth", "synth_zigbee", "synth_wifi", "synthesize_packet",
    "ack_frame_bits", "occupied_bandwidth_hz",
]


def _build_catalog() -> tuple[WaveformVariant, ...]:
    T = Technology
    rows = []
    wifi_rates = {"DSSS-1M": 1e6, "DSSS-2M": 1e6, "CCK-5.5M": 1.375e6, "CCK-11M": 1.375e6,
                  "PBCC-5.5M": 11e6, "PBCC-11M": 11e6, "PBCC-22M": 11e6}
    for mode, rate in wifi_rates.items():
        rows.append(WaveformVariant(T.IEEE80211, mode, rate, wifi.MAX_PAYLOAD_BITS))
    for mode in wifi.OFDM_MODES:
        # 4 us OFDM symbols (3.2 us + 0.8 us guard)
        rows.append(WaveformVariant(T.IEEE80211, mode, 250e3, wifi.MAX_PAYLOAD_BITS))
    for mode in bluetooth.PACKET_TYPES:
        rows.append(WaveformVariant(T.IEEE802151, mode, bluetooth.SYMBOL_RATE_HZ,
                                    bluetooth.packet_bits_max(mode)))
    rows.append(WaveformVariant(T.IEEE802154, "ACK", zigbee.CHIP_RATE_HZ, zigbee.ACK_PPDU_BITS))
    return tuple(rows)


_CATALOG = _build_catalog()


def variant_catalog() -> list[WaveformVariant]:
    """All 19 modulation/rate variants: 12 for 802.11, 6 for 802.15.1, 1 for 802.15.4."""
    return list(_CATALOG)


def variants_for(technology: Technology) -> list[WaveformVariant]:
    return [v for v in _CATALOG if v.technology == technology]


def synthesize_packet(variant: WaveformVariant, rng: np.random.Generator) -> IqStream:
    """Maximum-payload packet with uniformly random payload bits."""
    tech = variant.technology
    if tech == Technology.IEEE802151:
        return synth_bluetooth(bluetooth.random_packet_bits(variant, rng), variant, rng)
    if tech == Technology.IEEE802154:
        return synth_zigbee(ack_frame_bits(int(rng.integers(0, 256))))
    if tech == Technology.IEEE80211:
        bits = rng.integers(0, 2, size=variant.max_payload_bits, dtype=np.uint8)
        return synth_wifi(bits, variant, rng)
    raise VariantError(f"unknown technology {tech!r}")
