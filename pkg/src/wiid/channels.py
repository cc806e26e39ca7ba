"""Class labels and the relative/absolute channel mapping of the sensing bands."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .waveforms.common import Technology

SENSING_BANDWIDTH_HZ = 10e6
N_CNN_RANGE = range(1, 9)

# Technology -> (absolute channel numbers, relative channel count, absolute offset, relative offset)
CHANNEL_TABLE = {
    Technology.IEEE802151: (range(1, 80), 10, 1, 10),
    Technology.IEEE802154: (range(1, 16), 2, 1, 2),
    Technology.IEEE80211: (range(1, 14), 3, 1, 2),
}


@dataclass(frozen=True, order=True)
class ClassLabel:
    technology: Technology
    relative_channel: int

    def __post_init__(self):
        n = CHANNEL_TABLE[Technology(self.technology)][1]
        if not 0 <= self.relative_channel < n:
            raise DomainError(f"relative channel {self.relative_channel} invalid for {self.technology.label}")
        object.__setattr__(self, "technology", Technology(self.technology))

    def __str__(self):
        return f"{self.technology.label}/RCH{self.relative_channel}"


@dataclass(frozen=True)
class ChannelMap:
    """Which of the eight 10 MHz sensing bands a classifier watches."""

    n_cnn: int = 3

    def __post_init__(self):
        if self.n_cnn not in N_CNN_RANGE:
            raise DomainError(f"n_cnn must be in 1..8, got {self.n_cnn}")

    @staticmethod
    def absolute_offset(tech: Technology) -> int:
        return CHANNEL_TABLE[tech][2]

    @staticmethod
    def relative_offset(tech: Technology) -> int:
        return CHANNEL_TABLE[tech][3]

    @property
    def center_frequency_mhz(self) -> float:
        """Band centre, e.g. 2426.5 MHz for the third classifier."""
        return 2406.5 + 10.0 * (self.n_cnn - 1)


def absolute_channel(tech: Technology, rch: int, channel_map: ChannelMap = ChannelMap()) -> int:
    """ACH = RCH + RO * (n_cnn - 1) + AO."""
    tech = Technology(tech)
    absolute, n_rel, ao, ro = CHANNEL_TABLE[tech]
    if not 0 <= rch < n_rel:
        raise DomainError(f"relative channel {rch} invalid for {tech.label}")
    ach = rch + ro * (channel_map.n_cnn - 1) + ao
    if ach not in absolute:
        raise DomainError(f"{tech.label} channel {ach} is outside the tabulated range")
    return ach


def center_frequency_mhz(tech: Technology, ach: int) -> float:
    tech = Technology(tech)
    if ach not in CHANNEL_TABLE[tech][0]:
        raise DomainError(f"{tech.label} has no absolute channel {ach}")
    if tech == Technology.IEEE802151:
        return 2402.0 + (ach - 1)
    if tech == Technology.IEEE802154:
        return 2405.0 + 5.0 * (ach - 1)
    return 2407.0 + 5.0 * ach


def class_set(channel_map: ChannelMap = ChannelMap()) -> list[ClassLabel]:
    """The 15 labels in output-index order: 802.15.1 RCH 0-9, 802.15.4 RCH 0-1, 802.11 RCH 0-2."""
    labels = []
    for tech in (Technology.IEEE802151, Technology.IEEE802154, Technology.IEEE80211):
        labels.extend(ClassLabel(tech, r) for r in range(CHANNEL_TABLE[tech][1]))
    return labels


def class_index(label: ClassLabel) -> int:
    return class_set().index(label)


def label_offset_hz(label: ClassLabel, channel_map: ChannelMap = ChannelMap()) -> float:
    """Carrier of ``label`` relative to the sensing-band centre."""
    ach = absolute_channel(label.technology, label.relative_channel, channel_map)
    return (center_frequency_mhz(label.technology, ach) - channel_map.center_frequency_mhz) * 1e6
