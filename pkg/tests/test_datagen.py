import gzip
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qadetect.datagen import (
    DetectorConfig,
    EventImage,
    GunConfig,
    Label,
    generate_event,
    generate_events,
    image_to_features,
    load_dataset,
    load_digits,
    pool_mean,
    pool_sum,
    read_idx,
    render_synthetic_digits,
    save_dataset,
    write_idx,
    write_synthetic_idx,
)
from qadetect.datagen.detector import boost, generate_hits, layer_crossings, rambo
from qadetect.datagen.digits import downsample_digit
from qadetect.datagen.idx import parse_idx
from qadetect.errors import ConfigurationError, DataError, FormatError

# -- IDX ----------------------------------------------------------------------


def _idx_bytes(arr: np.ndarray) -> bytes:
    header = struct.pack(">BBBB", 0, 0, 0x08, arr.ndim) + struct.pack(f">{arr.ndim}I", *arr.shape)
    return header + arr.astype(np.uint8).tobytes()


def test_parse_hand_built_idx():
    arr = np.arange(24, dtype=np.uint8).reshape(2, 3, 4)
    np.testing.assert_array_equal(parse_idx(_idx_bytes(arr)), arr)


@pytest.mark.parametrize("raw", [b"\x01\x00\x08\x01\x00\x00\x00\x01\x00", b"\x00\x00\x08\x02\x00\x00\x00\x02", b"\x00\x00\x08\x01\x00\x00\x00\x05ab"])
def test_bad_idx(raw):
    with pytest.raises(FormatError):
        parse_idx(raw)


@pytest.mark.parametrize("dtype", [np.uint8, np.int8, np.int16, np.int32, np.float32, np.float64])
def test_idx_round_trip(tmp_path, dtype):
    arr = (np.arange(30).reshape(5, 6) - 10).astype(dtype)
    if dtype == np.uint8:
        arr = np.arange(30, dtype=np.uint8).reshape(5, 6)
    for name in ("a.idx", "a.idx.gz"):
        write_idx(tmp_path / name, arr)
        back = read_idx(tmp_path / name)
        assert back.dtype == arr.dtype
        np.testing.assert_array_equal(back, arr)
    assert gzip.open(tmp_path / "a.idx.gz").read()[:2] == b"\x00\x00"


# -- pooling and digits -------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(img=arrays(np.float64, (28, 28), elements=st.floats(0, 255)))
def test_downsample_conserves_mean_intensity(img):
    small = downsample_digit(img)
    assert small.shape == (8, 8)
    assert abs(small.sum() - img.mean() / 255 * 64) < 1e-6


def test_downsample_extremes():
    assert np.all(downsample_digit(np.zeros((28, 28))) == 0)
    np.testing.assert_allclose(downsample_digit(np.full((28, 28), 255.0)), 1.0)


@settings(max_examples=40, deadline=None)
@given(
    rows=st.integers(1, 25),
    cols=st.integers(1, 40),
    data=st.data(),
)
def test_pool_sum_conserves_total(rows, cols, data):
    out_r = data.draw(st.integers(1, rows))
    out_c = data.draw(st.integers(1, cols))
    img = np.random.default_rng(rows * 100 + cols).random((rows, cols))
    assert abs(pool_sum(img, (out_r, out_c)).sum() - img.sum()) < 1e-9


def test_pool_mean_of_constant_is_constant():
    np.testing.assert_allclose(pool_mean(np.full((20, 333), 2.5), (20, 100)), 2.5)


def _write_digit_files(tmp_path, images, labels):
    write_idx(tmp_path / "img", np.asarray(images, dtype=np.uint8))
    write_idx(tmp_path / "lbl", np.asarray(labels, dtype=np.uint8))
    return tmp_path / "img", tmp_path / "lbl"


def test_load_digits_selects_and_labels(tmp_path):
    imgs = np.zeros((4, 28, 28), dtype=np.uint8)
    imgs[1] = 255
    paths = _write_digit_files(tmp_path, imgs, [7, 0, 1, 0])
    digits = load_digits(*paths, normal_digit=0, anomalous_digit=1)
    assert [d.label for d in digits] == [Label.NORMAL, Label.ANOMALOUS, Label.NORMAL]
    assert [d.source_id for d in digits] == ["digit_00001", "digit_00002", "digit_00003"]
    np.testing.assert_allclose(digits[0].pixels, 1.0)
    with pytest.raises(DataError):
        image_to_features(digits[1], 6)


def test_load_digits_dim_mismatch(tmp_path):
    paths = _write_digit_files(tmp_path, np.zeros((3, 28, 28)), [0, 1])
    with pytest.raises(FormatError):
        load_digits(*paths)


def test_synthetic_digits_are_deterministic_and_valid(tmp_path):
    a_img, a_lbl = render_synthetic_digits(10, seed=3)
    b_img, b_lbl = render_synthetic_digits(10, seed=3)
    assert np.array_equal(a_img, b_img) and np.array_equal(a_lbl, b_lbl)
    assert a_img.shape == (20, 28, 28) and a_img.dtype == np.uint8
    assert list(a_lbl[:4]) == [0, 1, 0, 1]
    assert np.all(a_img.reshape(20, -1).max(axis=1) > 100)
    # zeros cover more pixels than ones
    ink = a_img.reshape(20, -1).astype(float).sum(axis=1)
    assert ink[a_lbl == 0].mean() > ink[a_lbl == 1].mean()
    paths = write_synthetic_idx(tmp_path, 5, seed=1)
    assert len(load_digits(*paths)) == 10


# -- features -----------------------------------------------------------------


def test_digit_features_need_no_padding():
    img = EventImage(np.random.default_rng(0).random((8, 8)), Label.NORMAL)
    fv = image_to_features(img, 6)
    assert fv.values.size == 64
    assert np.linalg.norm(fv.values) == pytest.approx(1.0)


def test_detector_features_padded_to_2048():
    img = EventImage(np.random.default_rng(0).random((20, 100)), Label.NORMAL)
    fv = image_to_features(img, 11)
    assert fv.values.size == 2048
    assert np.all(fv.values[2000:] == 0)
    np.testing.assert_allclose(fv.values[:2000], img.pixels.ravel() / np.linalg.norm(img.pixels))


def test_one_hot_image_is_basis_state():
    px = np.zeros((8, 8))
    px[2, 5] = 0.7
    fv = image_to_features(EventImage(px, Label.NORMAL), 6)
    expect = np.zeros(64)
    expect[2 * 8 + 5] = 1
    np.testing.assert_array_equal(fv.values, expect)


@pytest.mark.parametrize("bad", [-1.0, np.nan, np.inf])
def test_invalid_pixels_rejected(bad):
    with pytest.raises(DataError):
        EventImage(np.full((2, 2), bad), Label.NORMAL)


# -- detector -----------------------------------------------------------------


def test_rambo_momentum_conservation():
    rng = np.random.default_rng(0)
    for n in (2, 5, 10):
        p = rambo(n, 3.0, rng)
        np.testing.assert_allclose(p[:, 0], np.linalg.norm(p[:, 1:], axis=1), rtol=1e-12)
        np.testing.assert_allclose(p.sum(axis=0), [3.0, 0, 0, 0], atol=1e-12)


def test_boost_gives_parent_momentum():
    rng = np.random.default_rng(1)
    mass, mom = 2.0, 30.0
    direction = np.array([0.6, 0.8, 0.0])
    muons = boost(rambo(4, mass, rng), direction * mom / np.hypot(mom, mass))
    total = muons.sum(axis=0)
    np.testing.assert_allclose(total[1:], direction * mom, atol=1e-9)
    assert total[0] == pytest.approx(np.hypot(mom, mass))


def test_straight_line_crossings():
    radii = np.array([1.0, 2.0, 3.0])
    pts = layer_crossings(np.zeros(2), 0.3, 0.0, radii)
    np.testing.assert_allclose(np.hypot(pts[:, 0], pts[:, 1]), radii, atol=1e-9)
    np.testing.assert_allclose(np.arctan2(pts[:, 1], pts[:, 0]), 0.3, atol=1e-9)


def test_tight_curl_never_reaches_outer_layers():
    pts = layer_crossings(np.zeros(2), 0.0, 2.0, np.array([0.5, 5.0]))
    assert not np.isnan(pts[0, 0])
    assert np.isnan(pts[1, 0])


@pytest.mark.parametrize("label, lo, hi", [(Label.NORMAL, 0, 20), (Label.ANOMALOUS, 250, 450)])
def test_generator_ranges(label, lo, hi):
    for ev in generate_events(label, 30, DetectorConfig(), GunConfig(), seed=4):
        assert lo <= ev.meta["decay_radius_cm"] <= hi
        assert 2 <= ev.meta["n_muons"] <= 10
        assert 0.5 <= ev.meta["mass_gev"] <= 5
        assert ev.pixels.shape == (20, 100)
        assert np.all(ev.pixels >= 0)


def test_clean_straight_tracks():
    det = DetectorConfig(occupancy=0.0, bending=0.0, smear_sigma=0.0)
    gun = GunConfig(n_muons_range=(2, 2))
    for seed in range(20):
        grid, meta = generate_hits(Label.NORMAL, det, gun, np.random.default_rng(seed))
        assert np.all(grid.sum(axis=1) <= 2)
        assert grid.sum() == meta["n_signal_hits"]


def test_pooling_conserves_hit_count():
    for seed in range(10):
        ev = generate_event(Label.ANOMALOUS, DetectorConfig(), GunConfig(), seed)
        assert abs(ev.pixels.sum() - ev.meta["n_hits"]) < 1e-9


def test_generation_is_deterministic():
    a = generate_events(Label.NORMAL, 5, DetectorConfig(), GunConfig(), seed=9)
    b = generate_events(Label.NORMAL, 5, DetectorConfig(), GunConfig(), seed=9)
    for x, y in zip(a, b):
        assert np.array_equal(x.pixels, y.pixels) and x.meta == y.meta


def test_normal_hits_spread_wider_in_inner_layers():
    det = DetectorConfig(occupancy=0.0, smear_sigma=0.0)
    gun = GunConfig()

    def spread(label):
        out = []
        for i in range(500):
            grid, _ = generate_hits(label, det, gun, np.random.default_rng([i, label is Label.NORMAL]))
            cols = np.flatnonzero(grid[:3].any(axis=0))
            if cols.size:
                out.append(cols.max() - cols.min())
        return np.mean(out)

    assert spread(Label.NORMAL) > spread(Label.ANOMALOUS)


@pytest.mark.parametrize(
    "kwargs",
    [dict(layer_radii=(3.0, 2.0)), dict(n_layers=3), dict(occupancy=1.0), dict(output_cols=400)],
)
def test_detector_validation(kwargs):
    if "layer_radii" in kwargs:
        kwargs = kwargs | {"n_layers": 2}
    with pytest.raises(ConfigurationError):
        DetectorConfig(**kwargs)


@pytest.mark.parametrize(
    "kwargs",
    [dict(mass_range=(5.0, 0.5)), dict(n_muons_range=(0, 3)), dict(normal_radius_cm=(-1.0, 3.0)), dict(direction_spread=2.0)],
)
def test_gun_validation(kwargs):
    with pytest.raises(ConfigurationError):
        GunConfig(**kwargs)


def test_dataset_round_trip(tmp_path):
    evs = generate_events(Label.NORMAL, 3, DetectorConfig(), GunConfig(), seed=1)
    save_dataset(tmp_path, {"train": evs}, {"kind": "detector"})
    splits, meta = load_dataset(tmp_path)
    assert meta == {"kind": "detector"}
    for a, b in zip(evs, splits["train"]):
        assert a.source_id == b.source_id and a.label is b.label
        assert np.array_equal(a.pixels, b.pixels)
    with pytest.raises(FormatError):
        load_dataset(tmp_path / "missing")
