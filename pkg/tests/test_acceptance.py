"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The desk-scale fixture generates paired 15 x 21 x 40 / 15 x 21 x 20 datasets and
trains the reduced network on both domains, which takes roughly 20 minutes.
"""

import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from wiid import acquisition as acq
from wiid import evaluation as ev
from wiid import nfsc
from wiid.acquisition import Domain, IqStream
from wiid.channels import CHANNEL_TABLE, N_CNN_RANGE, ChannelMap, absolute_channel, center_frequency_mhz
from wiid.dataset import GenerationConfig, Split, generate_dataset, load_dataset, save_dataset
from wiid.errors import DomainError, ShapeError
from wiid.experiments import ExperimentConfig, fit, paired_datasets, run_experiment, small_config
from wiid.nn import NetworkSpec, forward, init_params, original_spec, param_count, reduced_spec, toy_spec
from wiid.nn import ops
from wiid.nn.model import ForwardCache, backward
from wiid.waveforms import Technology

BT, ZB, WF = Technology.IEEE802151, Technology.IEEE802154, Technology.IEEE80211
BT_CLASSES = list(range(0, 10))
ZB_CLASSES = [10, 11]
WF_CLASSES = [12, 13, 14]

RESULTS: list[str] = []


def verdict(n: int, ok: bool, detail: str):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="session")
def desk():
    cfg = ExperimentConfig()  # 40 / 20 per cell, SNR -20..20 step 2, seed 0
    t0 = time.perf_counter()
    train_sets, val_sets = paired_datasets(cfg)
    models = {d: fit(cfg, train_sets[d], val_sets[d]) for d in (Domain.FREQUENCY, Domain.TIME)}
    reports = {d: ev.evaluate((m.spec, m.params), val_sets[d]) for d, m in models.items()}
    return {"cfg": cfg, "val": val_sets, "models": models, "reports": reports,
            "seconds": time.perf_counter() - t0}


# --- 1 ---------------------------------------------------------------------

def test_c1_parameter_counts():
    orig, red = param_count(original_spec()), param_count(reduced_spec())
    ratio = 1 - red / orig
    rel = red / 151_200 - 1
    # The stated exact figures do not follow from the layer shapes (see notes);
    # the honest counts are 16,649,487 and 128,831, so this part fails.
    exact = orig == 16_649_615 and red == 130_367
    verdict(1, exact and ratio > 0.99 and abs(rel) <= 0.15,
            f"original={orig:,} (stated 16,649,615) reduced={red:,} (stated 130,367) "
            f"reduction={ratio:.2%} reduced/151,200={rel:+.1%}")


# --- 2 ---------------------------------------------------------------------

def test_c2_flatten_size_asserted():
    ok = True
    for spec, size in ((original_spec(), 126_976), (reduced_spec(), 1_984)):
        ok &= spec.flatten_size == size and spec.shape_chain()[3] == (size,)
        wrong = NetworkSpec(spec.name, spec.layers, flatten_size=size + 1)
        p = init_params(NetworkSpec(spec.name, spec.layers), 0) if spec.name == "reduced" else None
        if p is not None:
            forward(spec, p, np.zeros((128, 2)))
            try:
                forward(wrong, p, np.zeros((128, 2)))
                ok = False
            except ShapeError:
                pass
    # The original network is too large to instantiate cheaply twice; check its
    # flatten guard on a spec sharing the same conv stack with a tiny dense head.
    head = original_spec().layers[:2] + (reduced_spec().layers[3],)
    big = NetworkSpec("orig-head", head, flatten_size=126_976 + 1)
    try:
        forward(big, init_params(NetworkSpec("orig-head", head), 0), np.zeros((128, 2)))
        ok = False
    except ShapeError:
        pass
    verdict(2, ok, "flatten sizes 126,976 / 1,984 enforced at run time")


# --- 3 ---------------------------------------------------------------------

def _loss(spec, p, x, y):
    c = ForwardCache()
    forward(spec, p, x, cache=c)
    return backward(spec, p, c, y)


def _relerr(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-7)


def _central(f, t, i, h=1e-5):
    old = t[i]
    t[i] = old + h
    fp = f()
    t[i] = old - h
    fm = f()
    t[i] = old
    return (fp - fm) / (2 * h)


def test_c3_gradient_check():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    spec = toy_spec(16, 4)
    p = init_params(spec, 7)
    for k in p.tensors:
        if k.endswith("bias"):
            p.tensors[k] = 0.1 * rng.standard_normal(p.tensors[k].shape)
    x = rng.standard_normal((4, 16, 2))
    y = np.array([0, 1, 2, 3])
    _, grads = _loss(spec, p, x, y)
    full = 0.0
    for name, t in p.tensors.items():
        for flat in rng.choice(t.size, min(8, t.size), replace=False):
            i = np.unravel_index(flat, t.shape)
            full = max(full, _relerr(_central(lambda: _loss(spec, p, x, y)[0], t, i), grads[name][i]))

    # Per layer: conv and dense backward against a fixed random projection.
    layer = 0.0
    xc, k, b = rng.standard_normal((2, 6, 3)), rng.standard_normal((3, 2, 3, 2)), rng.standard_normal(3)
    proj = rng.standard_normal((3, 4, 2))
    dx, dk, db = ops.conv2d_valid_backward(xc, k, proj)
    f = lambda: float(np.sum(ops.conv2d_valid(xc, k, b) * proj))
    for t, g in ((xc, dx), (k, dk), (b, db)):
        for i in np.ndindex(t.shape):
            layer = max(layer, _relerr(_central(f, t, i), g[i]))
    xd, w, bd = rng.standard_normal(6), rng.standard_normal((4, 6)), rng.standard_normal(4)
    pd = rng.standard_normal(4)
    dx, dw, dbd = ops.dense_backward(xd, w, pd)
    f = lambda: float(ops.dense(xd, w, bd) @ pd)
    for t, g in ((xd, dx), (w, dw), (bd, dbd)):
        for i in np.ndindex(t.shape):
            layer = max(layer, _relerr(_central(f, t, i), g[i]))
    secs = time.perf_counter() - t0
    verdict(3, full < 1e-3 and layer < 1e-4 and secs < 60,
            f"full-network max rel err {full:.2e}, per-layer {layer:.2e}, {secs:.1f}s")


# --- 4 ---------------------------------------------------------------------

def test_c4_desk_scale_accuracy(desk):
    r = desk["reports"][Domain.FREQUENCY]
    acc, g = r.mean_accuracy(), r.snr_grid
    lo, hi = acc[g >= -4].mean(), acc[g >= 6].mean()
    m = desk["models"][Domain.FREQUENCY]
    verdict(4, lo >= 0.85 and hi >= 0.92 and desk["seconds"] < 45 * 60,
            f"SNR>=-4: {lo:.3f} (>=0.85), SNR>=+6: {hi:.3f} (>=0.92), "
            f"best epoch {m.best_epoch}/{m.epochs_run}, fixture {desk['seconds'] / 60:.1f} min")


# --- 5 ---------------------------------------------------------------------

def test_c5_cnn_beats_nfsc(desk):
    val = desk["val"][Domain.FREQUENCY]
    m = desk["models"][Domain.FREQUENCY]
    cls = ev.non_80211_classes()
    sub = val.subset(np.isin(val.labels, cls))
    cnn = ev.evaluate((m.spec, m.params), sub)
    fuzzy = ev.evaluate(nfsc.default_class_defs(), sub)
    a, b, g = cnn.mean_accuracy(cls), fuzzy.mean_accuracy(cls), cnn.snr_grid
    window = (g >= -10) & (g <= 10)
    worst = float(np.min(a[window] - b[window]))
    c = ev.compare(cnn, fuzzy, cls)
    verdict(5, worst >= 0 and c.mean_accuracy_gain > 0,
            f"min CNN-NFSC margin over -10..+10 dB {worst:+.3f}, mean gain {c.mean_accuracy_gain:.2f} pct, "
            f"SNR gain {c.snr_gain_db:.2f} dB")


# --- 6 ---------------------------------------------------------------------

def test_c6_frequency_beats_time(desk):
    f = desk["reports"][Domain.FREQUENCY].mean_accuracy().mean()
    t = desk["reports"][Domain.TIME].mean_accuracy().mean()
    verdict(6, f - t > 0, f"grid mean frequency {f:.3f} - time {t:.3f} = {f - t:+.3f}")


# --- 7 ---------------------------------------------------------------------

def test_c7_class_difficulty(desk):
    r = desk["reports"][Domain.FREQUENCY]
    tech = {name: r.class_mean(c, min_snr=0) for name, c in
            (("bt", BT_CLASSES), ("zb", ZB_CLASSES), ("wifi", WF_CLASSES))}
    shared = r.class_mean([3, 8], min_snr=0)
    clear = r.class_mean([1, 2, 4, 5, 6, 7], min_snr=0)
    ok = tech["wifi"] < min(tech["bt"], tech["zb"]) and shared <= clear + 0.02
    verdict(7, ok, f"SNR>=0 means bt {tech['bt']:.3f} 802.15.4 {tech['zb']:.3f} 802.11 {tech['wifi']:.3f}; "
                   f"BT RCH 3/8 {shared:.3f} vs others {clear:.3f}")


# --- 8 ---------------------------------------------------------------------

def test_c8_channel_map_oracle():
    n3 = ChannelMap(3)
    ok = True
    for (bt, zb), f in (((3, 0), 2425), ((8, 1), 2430)):
        ok &= center_frequency_mhz(BT, absolute_channel(BT, bt, n3)) == f
        ok &= center_frequency_mhz(ZB, absolute_channel(ZB, zb, n3)) == f
    ok &= [CHANNEL_TABLE[t][1:] for t in (BT, ZB, WF)] == [(10, 1, 10), (2, 1, 2), (3, 1, 2)]
    for t in (BT, ZB, WF):
        table, n_rch, ao, ro = CHANNEL_TABLE[t]
        for n in N_CNN_RANGE:
            for rch in range(n_rch):
                expected = rch + ro * (n - 1) + ao
                if expected not in table:  # e.g. BT RCH 9 in the top band would be channel 80
                    try:
                        absolute_channel(t, rch, ChannelMap(n))
                        ok = False
                    except DomainError:
                        pass
                    continue
                ach = absolute_channel(t, rch, ChannelMap(n))
                ok &= ach == expected and ach - ro * (n - 1) - ao == rch
    verdict(8, ok, "BT RCH 3/8 coincide with 802.15.4 RCH 0/1 at 2425/2430 MHz; table round-trips")


# --- 9 ---------------------------------------------------------------------

class _Failures:
    def __init__(self):
        self.items = []

    def check(self, ok, what):
        if not ok:
            self.items.append(what)


def test_c9_numeric_properties(tmp_path):
    t0 = time.perf_counter()
    fails = _Failures()

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.complex128, 128, elements=st.complex_numbers(max_magnitude=1e3, allow_nan=False,
                                                                   allow_infinity=False)))
    def parseval(x):
        s = acq.Snapshot(x, Domain.TIME)
        f = acq.to_frequency_domain(s).values
        e = np.sum(np.abs(x) ** 2)
        fails.check(abs(np.sum(np.abs(f) ** 2) / 128 - e) <= 1e-9 * max(e, 1), "parseval")

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, 15, elements=st.floats(-500, 500)))
    def softmax(t):
        fails.check(abs(ops.softmax(t).sum() - 1) < 1e-6, "softmax")

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, 128, elements=st.floats(-150, 50)), st.floats(-100, 100))
    def fuzzify(p, c):
        if p.max() - p.min() < 1e-3:
            return
        mu = nfsc.fuzzify(p)
        fails.check(mu[np.argmin(p)] == 0 and mu[np.argmax(p)] == 1, "fuzzify endpoints")
        q = p + np.float64(c)
        if np.all(q - q.min() == p - p.min()):  # shift exactly representable
            fails.check(np.array_equal(nfsc.fuzzify(q), mu), "fuzzify shift")

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 127), st.integers(1, 60))
    def self_similarity(c, w):
        shape = nfsc.SpectralShape(c, w)
        fails.check(nfsc.similarity(shape, shape.weights()) == 1.0, "SM(R,R)")

    parseval()
    softmax()
    fuzzify()
    self_similarity()
    fails.check(np.allclose(nfsc.fuzzify(np.array([-80.0, -50.0, -20.0])), [0, 0.5, 1]), "fuzzify example")
    half = np.zeros(128)
    half[63:65] = 1
    fails.check(nfsc.similarity(nfsc.SpectralShape(64, 4), half) == 0.5, "similarity 0.5 example")

    for snr in range(-20, 21, 2):
        rng = np.random.default_rng(snr + 100)
        x = np.exp(2j * np.pi * rng.random(100_000)) * 4.0
        out = acq.add_awgn(IqStream(x, 10e6), float(snr), rng)
        measured = 10 * np.log10(1.0 / np.mean(np.abs(out.samples - x / 4.0) ** 2))
        fails.check(abs(measured - snr) <= 0.3, f"awgn {snr} dB")

    cfg = GenerationConfig(classes=(0, 10, 12), snr_min=-4, snr_max=4, snr_step=4, per_cell=2, seed=3)
    d = generate_dataset(cfg, Split.TRAIN)
    save_dataset(d, tmp_path / "a.wiids")
    back = load_dataset(tmp_path / "a.wiids")
    save_dataset(back, tmp_path / "b.wiids")
    fails.check(back.equals(d) and (tmp_path / "a.wiids").read_bytes() == (tmp_path / "b.wiids").read_bytes(),
                "dataset round-trip")
    secs = time.perf_counter() - t0
    verdict(9, not fails.items and secs < 300, f"failures {fails.items or 'none'}, {secs:.1f}s")


# --- 10 --------------------------------------------------------------------

def test_c10_determinism(tmp_path):
    cfg = small_config()
    a, _ = run_experiment("accuracy-vs-snr", cfg, tmp_path / "a")
    b, _ = run_experiment("accuracy-vs-snr", cfg, tmp_path / "b")
    verdict(10, a.read_bytes() == b.read_bytes(), f"two runs, {len(a.read_bytes())} bytes each, identical")
