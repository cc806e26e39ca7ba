import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import signal

from wiid.acquisition import normalize_power
from wiid.errors import PayloadLengthError, VariantError
from wiid.waveforms import (IqStream, Technology, WaveformVariant, ack_frame_bits, occupied_bandwidth_hz,
                            synth_bluetooth, synth_wifi, synth_zigbee, synthesize_packet, variant_catalog,
                            variants_for)
from wiid.waveforms import bluetooth, wifi, zigbee
from wiid.waveforms.common import raised_cosine_ramp

CATALOG = {v.mode: v for v in variant_catalog()}
BT_MODES = ["ACL-DH1", "ACL-DH3", "ACL-DH5", "SCO-HV1", "SCO-HV3", "eSCO-EV3"]
WIFI_MODES = ["DSSS-1M", "DSSS-2M", "CCK-5.5M", "CCK-11M", "PBCC-5.5M", "PBCC-11M", "PBCC-22M",
              "OFDM-6M", "OFDM-12M", "OFDM-24M", "OFDM-48M", "OFDM-54M"]


# --- catalog ---------------------------------------------------------------

def test_catalog_has_19_variants():
    cat = variant_catalog()
    assert len(cat) == 19
    assert {v.technology for v in cat} == set(Technology)


def test_catalog_modes_per_technology():
    assert [v.mode for v in variants_for(Technology.IEEE80211)] == WIFI_MODES
    assert [v.mode for v in variants_for(Technology.IEEE802151)] == BT_MODES
    assert [v.mode for v in variants_for(Technology.IEEE802154)] == ["ACK"]


def test_every_symbol_fits_a_snapshot():
    # At least one full symbol inside 128 samples at 10 MHz.
    for v in variant_catalog():
        assert v.symbol_duration_s <= 12.8e-6
    # The shortest symbol in the catalog is 1 us (or shorter).
    assert min(v.symbol_duration_s for v in variant_catalog()) <= 1e-6


# --- Bluetooth -------------------------------------------------------------

def _inst_freq(x, fs):
    return np.diff(np.unwrap(np.angle(x))) * fs / (2 * np.pi)


def test_bt_all_zero_payload_is_negative_deviation_tone():
    v = CATALOG["ACL-DH5"]
    s = synth_bluetooth(np.zeros(400, dtype=np.uint8), v)
    lo, hi = s.body
    f = _inst_freq(s.samples[lo + 50:hi - 50], s.sample_rate_hz)
    expected = -bluetooth.MOD_INDEX / 2 * bluetooth.SYMBOL_RATE_HZ
    np.testing.assert_allclose(f, expected, rtol=1e-6)


def test_bt_alternating_bits_spectrum_symmetric():
    bits = np.tile([1, 0], 5000).astype(np.uint8)
    x = bluetooth.gfsk_modulate(bits, 10, pad_symbols=0)
    f, p = signal.periodogram(x, fs=10e6, return_onesided=False, window="hann")
    order = np.argsort(f)
    f, p = f[order], p[order]
    p_db = 10 * np.log10(p / p.max())
    # Compare every bin within 30 dB of the peak with its mirror image.
    mirror = np.interp(-f, f, p_db)
    strong = (p_db > -30) & (np.abs(f) < 4e6)
    assert np.max(np.abs(p_db[strong] - mirror[strong])) < 0.5


def test_bt_296_bit_acl_seed_7_length_and_determinism():
    v = CATALOG["ACL-DH1"]
    bits = np.random.default_rng(7).integers(0, 2, 296, dtype=np.uint8)
    a = synth_bluetooth(bits, v, np.random.default_rng(7))
    b = synth_bluetooth(bits, v, np.random.default_rng(7))
    assert len(a) == 2960 + 2 * 20
    assert a.sample_rate_hz == 10e6
    assert np.array_equal(a.samples, b.samples)


def test_bt_payload_too_long():
    v = CATALOG["ACL-DH1"]
    with pytest.raises(PayloadLengthError):
        synth_bluetooth(np.zeros(v.max_payload_bits + 1, dtype=np.uint8), v)


def test_bt_rejects_foreign_variant():
    with pytest.raises(VariantError):
        synth_bluetooth(np.zeros(8, dtype=np.uint8), CATALOG["CCK-11M"])


@pytest.mark.parametrize("mode", BT_MODES)
def test_bt_bandwidth(mode, rng):
    s = synthesize_packet(CATALOG[mode], rng)
    assert occupied_bandwidth_hz(s) <= 1.5e6


# --- 802.15.4 --------------------------------------------------------------

def test_zigbee_chip_table_structure():
    t = zigbee.CHIP_TABLE
    assert t.shape == (16, 32)
    assert "".join(map(str, t[0])) == "11011001110000110101001000101110"
    for k in range(1, 8):
        assert np.array_equal(t[k], np.roll(t[0], 4 * k))
    odd = np.zeros(32, dtype=bool)
    odd[1::2] = True
    for k in range(8, 16):
        assert np.array_equal(t[k], np.where(odd, 1 - t[k - 8], t[k - 8]))


def test_zigbee_constant_envelope_at_chip_instants():
    s = synth_zigbee(ack_frame_bits(0x42))
    lo, hi = s.body
    env = np.abs(s.samples[lo:hi])
    # Sample in the middle of every chip interval.
    chip_mid = env[zigbee.SAMPLES_PER_CHIP // 2::zigbee.SAMPLES_PER_CHIP]
    assert np.max(np.abs(chip_mid / chip_mid.mean() - 1)) < 0.01


def test_zigbee_deterministic():
    a = synth_zigbee(ack_frame_bits(0x42))
    b = synth_zigbee(ack_frame_bits(0x42))
    assert np.array_equal(a.samples, b.samples)


def test_zigbee_bandwidth():
    bits = np.random.default_rng(1).integers(0, 2, 20_000 // 8 * 2, dtype=np.uint8)
    # 10^4 chips: 2500 bits of random symbols through the same modulator.
    chips = zigbee.bits_to_chips(bits[:1252])
    x = zigbee.oqpsk_half_sine(chips)
    bw = occupied_bandwidth_hz(IqStream(x, 10e6))
    assert 2.0e6 <= bw <= 3.5e6


def test_zigbee_ack_frame_layout():
    bits = ack_frame_bits(0x42)
    assert bits.size == zigbee.ACK_PPDU_BITS == 88
    assert not bits[:32].any()  # preamble
    data = np.packbits(bits, bitorder="little").tobytes()
    assert data[4] == 0xA7 and data[5] == 5
    mpdu = data[6:]
    assert mpdu[2] == 0x42
    assert zigbee.crc16_kermit(mpdu[:3]) == int.from_bytes(mpdu[3:5], "little")


def test_crc16_kermit_check_value():
    assert zigbee.crc16_kermit(b"123456789") == 0x2189


def test_zigbee_payload_too_long():
    with pytest.raises(PayloadLengthError):
        synth_zigbee(np.zeros(zigbee.ACK_PPDU_BITS + 1, dtype=np.uint8))


# --- 802.11 ----------------------------------------------------------------

def test_barker_spreading_of_single_zero_bit():
    chips, _ = wifi.barker_chips(np.array([0], dtype=np.uint8), 1)
    np.testing.assert_array_equal(chips, wifi.BARKER11.astype(complex))
    assert list(wifi.BARKER11) == [1, -1, 1, 1, -1, 1, 1, 1, -1, -1, -1]


def test_dsss_1m_stream_starts_with_barker_chips():
    v = CATALOG["DSSS-1M"]
    s = synth_wifi(np.array([0], dtype=np.uint8), v, plcp=False)
    assert s.sample_rate_hz == 40e6
    # Undo the chip shaping by matched resampling back to 11 MHz and reading chip centres.
    ref, _ = wifi.barker_chips(np.zeros(3, dtype=np.uint8), 1)
    ref_wave = wifi.chips_to_samples(ref)
    corr = np.abs(np.correlate(s.samples, ref_wave[:ref_wave.size // 3], mode="valid"))
    assert corr.max() > 0.9 * np.sum(np.abs(ref_wave[:ref_wave.size // 3]) ** 2)


def test_ofdm_symbol_power_stable():
    v = CATALOG["OFDM-6M"]
    bits = np.random.default_rng(3).integers(0, 2, 24 * 50, dtype=np.uint8)
    coded = wifi.conv_encode(bits)
    syms = wifi.ofdm_symbols(coded, "bpsk")
    assert syms.shape[0] == 50 and syms.shape[1] == 80
    p = np.mean(np.abs(syms) ** 2, axis=1)
    assert np.max(np.abs(p / p.mean() - 1)) < 0.2
    assert len(synth_wifi(bits, v)) > 0


def test_ofdm_qpsk_symbol_power_stable():
    bits = np.random.default_rng(4).integers(0, 2, 96 * 50, dtype=np.uint8)
    p = np.mean(np.abs(wifi.ofdm_symbols(bits, "qpsk")) ** 2, axis=1)
    assert np.max(np.abs(p / p.mean() - 1)) < 0.2


@pytest.mark.parametrize("modulation,bps", [("16qam", 4), ("64qam", 6)])
def test_ofdm_qam_symbol_power_follows_constellation_energy(modulation, bps):
    # Per-symbol power of non-constant-modulus QAM depends on the data; the
    # time-domain power must equal the subcarrier energy with no extra scaling.
    bits = np.random.default_rng(4).integers(0, 2, 48 * bps * 50, dtype=np.uint8)
    syms = wifi.ofdm_symbols(bits, modulation)
    data = wifi.qam_map(bits, modulation).reshape(50, 48)
    expected = (np.sum(np.abs(data) ** 2, axis=1) + 4) / 52
    body = np.mean(np.abs(syms[:, 16:]) ** 2, axis=1)
    np.testing.assert_allclose(body, expected, rtol=1e-12)


def test_cck_11m_bandwidth(rng):
    s = synthesize_packet(CATALOG["CCK-11M"], rng)
    assert 11e6 <= occupied_bandwidth_hz(s) <= 22e6


def test_qam_unit_average_energy():
    for mod, bps in [("bpsk", 1), ("qpsk", 2), ("16qam", 4), ("64qam", 6)]:
        n = 2 ** bps
        bits = np.array([[(k >> j) & 1 for j in range(bps)] for k in range(n)], dtype=np.uint8).ravel()
        pts = wifi.qam_map(bits, mod)
        assert len(set(np.round(pts, 9))) == n
        assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0)


def test_scrambler_period_127():
    s = wifi.scrambler_sequence(254, 0x7F)
    assert np.array_equal(s[:127], s[127:])
    assert s[:127].sum() == 64


def test_scramble_is_involution():
    bits = np.random.default_rng(0).integers(0, 2, 500, dtype=np.uint8)
    assert np.array_equal(wifi.scramble(wifi.scramble(bits, 0x33), 0x33), bits)


def test_conv_encode_rates():
    bits = np.zeros(72, dtype=np.uint8)
    assert wifi.conv_encode(bits).size == 144
    assert wifi.conv_encode(bits, "2/3").size == 108
    assert wifi.conv_encode(bits, "3/4").size == 96


def test_wifi_errors():
    with pytest.raises(VariantError):
        synth_wifi(np.zeros(8, dtype=np.uint8), CATALOG["ACL-DH1"])
    bogus = WaveformVariant(Technology.IEEE80211, "HT-MCS7", 1e6, 100)
    with pytest.raises(VariantError):
        synth_wifi(np.zeros(8, dtype=np.uint8), bogus)
    with pytest.raises(PayloadLengthError):
        synth_wifi(np.zeros(wifi.MAX_PAYLOAD_BITS + 1, dtype=np.uint8), CATALOG["DSSS-1M"])


# --- invariants ------------------------------------------------------------

@pytest.mark.parametrize("variant", variant_catalog(), ids=lambda v: v.mode)
def test_every_variant_synthesizes_with_unit_normalized_power(variant):
    s = synthesize_packet(variant, np.random.default_rng(5))
    assert np.isfinite(s.mean_power()) and s.mean_power() > 0
    assert normalize_power(s).mean_power() == pytest.approx(1.0, abs=1e-9)
    lo, hi = s.body
    assert (hi - lo) * 10e6 / s.sample_rate_hz >= 128


def test_bandwidth_ordering():
    rng = np.random.default_rng(11)
    bt = occupied_bandwidth_hz(synthesize_packet(CATALOG["ACL-DH5"], rng))
    zb = occupied_bandwidth_hz(synthesize_packet(CATALOG["ACK"], rng))
    wf = occupied_bandwidth_hz(synthesize_packet(CATALOG["CCK-11M"], rng))
    assert bt < zb < wf


@given(seed=st.integers(0, 2**32 - 1), idx=st.integers(0, 18))
def test_synthesis_deterministic(seed, idx):
    v = variant_catalog()[idx]
    a = synthesize_packet(v, np.random.default_rng(seed))
    b = synthesize_packet(v, np.random.default_rng(seed))
    assert np.array_equal(a.samples, b.samples) and a.body == b.body


@given(st.integers(1, 400))
def test_raised_cosine_ramp_is_monotone_inside_unit_interval(n):
    r = raised_cosine_ramp(n)
    assert np.all((r > 0) & (r < 1)) and np.all(np.diff(r) > 0)
    np.testing.assert_allclose(r + r[::-1], 1.0, atol=1e-12)
