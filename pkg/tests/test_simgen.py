import math
import struct

import numpy as np
import pytest

from hgmodes.dataset import DatasetManifest, load_png, quantize
from hgmodes.errors import InfeasibleBounds
from hgmodes.physics import (
    CLASSES,
    BeamSpec,
    ModePair,
    ScalarField,
    SensorGeometry,
    aperture_moments,
    field2d,
    intensity,
)
from hgmodes.presets import desk_gen_config
from hgmodes.simgen import (
    GenConfig,
    SampleParams,
    add_noise,
    centroid_bounds,
    generate_dataset,
    image_seed,
    max_input_radius,
    min_input_radius,
    params_from_record,
    projected_radii,
    quantize_save,
    render,
    sample_params,
    synthesize,
)


def test_min_input_radius():
    assert min_input_radius(0, 1.0) == pytest.approx(3 * math.sqrt(2))
    assert min_input_radius(5, 1.0) == pytest.approx(18.3848, abs=1e-4)
    assert all(min_input_radius(n + 1, 0.7) > min_input_radius(n, 0.7) for n in range(30))


def test_max_input_radius():
    assert max_input_radius(0, 3.0) == pytest.approx(1.0, abs=1e-9)
    assert max_input_radius(3, 3.0) == pytest.approx(1 / math.sqrt(7), abs=1e-6)
    s_l = 224.0
    assert max_input_radius(5, s_l) > min_input_radius(5, s_l / 224)


def test_projected_radii():
    assert projected_radii(3.0, 4.0, 0.0) == pytest.approx((3.0, 4.0))
    assert projected_radii(3.0, 4.0, math.pi / 2) == pytest.approx((4.0, 3.0))
    assert projected_radii(3.0, 4.0, math.pi / 4) == pytest.approx((math.sqrt(12.5),) * 2)


def test_centroid_bounds():
    (xl, xh), (yl, yh) = centroid_bounds(6.0, 1.0, 1.0, 1.5)
    assert (xl, xh) == pytest.approx((-1.5, 1.5))
    (xl, xh), _ = centroid_bounds(6.0, 2.0, 1.0, 1.5)
    assert (xl, xh) == (0.0, 0.0)
    for w in (0.5, 1.7, 2.5, 9.0):
        (xl, xh), (yl, yh) = centroid_bounds(6.0, w, w / 2, 1.2)
        assert xl == -xh and yl == -yh


def test_image_seed_is_deterministic_and_distinct():
    a = image_seed(42, "train", 3, 7)
    assert a == image_seed(42, "train", 3, 7)
    others = {image_seed(42, "val", 3, 7), image_seed(42, "train", 4, 7),
              image_seed(42, "train", 3, 8), image_seed(43, "train", 3, 7)}
    assert a not in others and len(others) == 4
    assert 0 <= a < 2**64


def test_sample_params_respects_bounds():
    cfg = GenConfig(out_px=224, seed=5)
    mode = ModePair(5, 5)
    lo, hi = cfg.radius_range(5)
    s_l = cfg.geom.s_l
    for i in range(10_000):
        p = sample_params(mode, cfg, i)
        s = p.spec
        assert lo <= s.w0x <= hi and lo <= s.w0y <= hi
        wa, wb = p.target_radii()
        wx, wy = projected_radii(wa, wb, s.theta)
        (_, bx), (_, by) = centroid_bounds(s_l, wx, wy, cfg.alpha)
        assert abs(s.x0) <= bx and abs(s.y0) <= by
        assert 0 <= s.theta < 2 * math.pi


def test_noise_sigma_is_half_normal():
    cfg = GenConfig(out_px=64, resolution_px=224, seed=11)
    sig = np.array([sample_params(CLASSES[i % 21], cfg, i).noise_sigma for i in range(100_000)])
    assert np.all(sig >= 0)
    assert sig.mean() == pytest.approx(0.02 * math.sqrt(2 / math.pi), rel=0.02)


def test_sample_params_is_deterministic():
    cfg = GenConfig(out_px=64, resolution_px=224, seed=99)
    assert sample_params(ModePair(1, 4), cfg, 17, "val") == sample_params(ModePair(1, 4), cfg, 17, "val")


def test_infeasible_bounds():
    with pytest.raises(InfeasibleBounds):
        sample_params(ModePair(5, 5), GenConfig(out_px=64, seed=0), 0)


def test_render_normalises_peak():
    cfg = desk_gen_config(seed=3)
    for i, mode in enumerate(CLASSES):
        img = render(sample_params(mode, cfg, i), cfg.geom)
        assert img.values.max() == 1.0


def test_fundamental_peak_at_centre():
    geom = SensorGeometry(64)
    img = render(SampleParams(BeamSpec(ModePair(0, 0), 8.0, 8.0), 0.0, 0), geom)
    r, c = np.unravel_index(np.argmax(img.values), img.values.shape)
    assert r in (31, 32) and c in (31, 32)


def test_power_on_sensor():
    cfg = desk_gen_config(seed=8)
    geom = cfg.geom
    big = SensorGeometry(4 * geom.n_px, geom.p_w)
    lo = (big.n_px - geom.n_px) // 2
    rng = np.random.default_rng(0)
    fractions = []
    for i in range(1000):
        mode = CLASSES[rng.integers(21)]
        spec = sample_params(mode, cfg, i).spec
        I = intensity(field2d(spec, big)).values
        fractions.append(I[lo:lo + geom.n_px, lo:lo + geom.n_px].sum() / I.sum())
    assert min(fractions) >= 0.98


def test_add_noise_contract():
    geom = SensorGeometry(224)
    rng = np.random.default_rng(1)
    img = ScalarField(rng.uniform(0, 1, (224, 224)), geom)
    assert np.array_equal(add_noise(img, 0.0, rng).values, img.values)
    noisy = add_noise(img, 0.3, rng).values
    assert noisy.min() >= 0 and noisy.max() <= 1
    gray = ScalarField(np.full((224, 224), 0.5), geom)
    diff = add_noise(gray, 0.02, np.random.default_rng(2)).values - 0.5
    assert diff.std() == pytest.approx(0.02, rel=0.05)


def test_quantize_endpoints_and_rounding():
    assert quantize([0.0, 1.0]).tolist() == [0, 255]
    assert quantize([0.5 / 255, 0.49 / 255]).tolist() == [1, 0]


def test_png_roundtrip_and_header(tmp_path):
    rng = np.random.default_rng(4)
    v = rng.uniform(0, 1, (224, 224))
    path = tmp_path / "x.png"
    quantize_save(ScalarField(v, SensorGeometry(224)), path)
    back = load_png(path)
    assert np.abs(back - v).max() <= 1 / 510 + 1e-7
    raw = path.read_bytes()
    assert raw[:8] == b"\x89PNG\r\n\x1a\n"
    width, height, depth, colour, _, _, interlace = struct.unpack(">IIBBBBB", raw[16:29])
    assert (width, height, depth, colour, interlace) == (224, 224, 8, 0, 0)


def test_default_counts():
    cfg = GenConfig()
    assert (cfg.n_train, cfg.n_val, len(cfg.classes), cfg.out_px) == (300, 200, 21, 224)
    assert len(cfg.classes) * (cfg.n_train + cfg.n_val) == 21 * 300 + 21 * 200


def small_cfg(seed=21):
    return GenConfig(out_px=64, resolution_px=224, n_train=4, n_val=2,
                     classes=[ModePair(0, 0), ModePair(1, 3), ModePair(5, 5)], seed=seed)


def test_generate_dataset_layout_and_balance(tmp_path):
    train, val = generate_dataset(small_cfg(), tmp_path)
    assert len(train) == 12 and len(val) == 6
    for man, per in ((train, 4), (val, 2)):
        counts = np.bincount([r.class_id for r in man.records], minlength=21)
        assert set(counts[counts > 0]) == {per}
        assert len({r.path for r in man.records}) == len(man)
    loaded = DatasetManifest.load(tmp_path / "train.json")
    assert loaded.records == train.records
    assert loaded.stats["std"] > 0
    imgs, labels = loaded.load_images()
    assert imgs.shape == (12, 64, 64)
    assert imgs.mean() == pytest.approx(loaded.stats["mean"], abs=1e-6)


def test_generate_dataset_is_byte_identical(tmp_path):
    generate_dataset(small_cfg(), tmp_path / "a")
    generate_dataset(small_cfg(), tmp_path / "b")
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert len(files) == 20
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_records_replay_byte_exactly(tmp_path):
    train, _ = generate_dataset(small_cfg(seed=5), tmp_path)
    for rec in train.records:
        stored = np.asarray(load_png(train.resolve(rec)) * 255 + 0.5, dtype=np.uint8)
        assert np.array_equal(synthesize(params_from_record(rec), train.geometry), stored)


def test_measured_radii_match_targets(tmp_path):
    train, _ = generate_dataset(small_cfg(seed=6), tmp_path)
    for rec in train.records:
        img = ScalarField(load_png(train.resolve(rec)).astype(float), train.geometry)
        mom = aperture_moments(img)
        lo, hi = sorted(params_from_record(rec).target_radii())
        assert 0.8 <= mom.w_sx / lo <= 1.2 and 0.8 <= mom.w_sy / hi <= 1.2


def test_centred_render_is_flip_symmetric():
    geom = SensorGeometry(64)
    p = SampleParams(BeamSpec(ModePair(2, 3), 4.0, 5.0), 0.0, 0)
    u8 = quantize(render(p, geom).values)
    assert np.array_equal(u8, u8[::-1]) and np.array_equal(u8, u8[:, ::-1])
