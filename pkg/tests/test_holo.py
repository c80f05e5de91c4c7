import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import j1 as scipy_j1

from hgmodes.errors import ConfigError, GeometryMismatch, WindowOutOfBounds, ZeroVariance
from hgmodes.holo import (
    J1_ARGMAX,
    J1_MAX,
    Hologram,
    OpticalTrainConfig,
    cam_encode,
    correlation,
    encode_target,
    extract_first_order,
    first_order_capture,
    gen_pseudo_experimental,
    hologram_target,
    illumination,
    inverse_j1,
    j1,
    params_from_pexp_record,
    pexp_radius_range,
    phase_map_u8,
    propagate_far_field,
    sample_pexp_params,
    simulate_capture,
    synthesize_pexp,
    visualization_hologram,
)
from hgmodes.physics import CLASSES, ModePair, ScalarField, SensorGeometry, second_moment_radius
from hgmodes.dataset import load_png
from hgmodes.simgen import render

SMALL = dict(holo_px=256, dft_px=512, window_half=16, carrier=(0.25, 0.0), out_px=32)


def small_cfg(**kw):
    return OpticalTrainConfig(**{**SMALL, **kw})


# -- Bessel J1 and its inverse ----------------------------------------------------

def test_j1_series_matches_scipy():
    x = np.linspace(0, 2, 401)
    ref = scipy_j1(x)
    rel = np.abs(j1(x) - ref) / np.maximum(np.abs(ref), 1e-300)
    assert rel[1:].max() < 1e-12
    assert j1(0.0) == 0.0


def test_j1_maximum():
    # first zero of J1' and the maximum value, from the standard tables
    assert J1_ARGMAX == pytest.approx(1.8411837813406593, abs=1e-10)
    assert J1_MAX == pytest.approx(0.5818652242815963, abs=1e-12)


def test_inverse_j1_endpoints():
    assert inverse_j1(0.0) == 0.0
    assert inverse_j1(1.0) == pytest.approx(1.84118, abs=1e-4)


def test_inverse_j1_round_trip():
    a = np.random.default_rng(3).uniform(0, 1, 100)
    f = inverse_j1(a)
    assert np.all((f >= 0) & (f <= J1_ARGMAX + 1e-12))
    assert np.abs(scipy_j1(f) / J1_MAX - a).max() < 1e-8


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1))
def test_inverse_j1_is_monotone(a, b):
    fa, fb = inverse_j1(a), inverse_j1(b)
    if a < b:
        assert fa <= fb


# -- CAM encoding -------------------------------------------------------------------

def _uniform(geom, value):
    return ScalarField(np.full((geom.n_px, geom.n_px), float(value)), geom)


def test_zero_amplitude_gives_flat_hologram():
    g = SensorGeometry(64, 1.0)
    h = cam_encode(_uniform(g, 0), _uniform(g, 0.3), (0.25, 0))
    assert np.all(h.phase == 0)


def test_unit_amplitude_is_sinusoidal_grating():
    g = SensorGeometry(64, 1.0)
    h = cam_encode(_uniform(g, 1), _uniform(g, 0), (0.125, 0))
    X, _ = g.grid()
    expected = np.mod(inverse_j1(1.0) * np.sin(2 * math.pi * 0.125 * X), 2 * math.pi)
    assert np.allclose(h.phase, expected, atol=1e-6)
    wrapped = np.angle(np.exp(1j * h.phase))
    assert np.abs(wrapped).max() <= inverse_j1(1.0) + 1e-9


def test_cam_encode_geometry_mismatch():
    with pytest.raises(GeometryMismatch):
        cam_encode(_uniform(SensorGeometry(32, 1.0), 1), _uniform(SensorGeometry(32, 2.0), 0))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_transmittance_is_unit_modulus(seed):
    rng = np.random.default_rng(seed)
    g = SensorGeometry(32, 1.0)
    h = cam_encode(ScalarField(rng.uniform(0, 1, (32, 32)), g),
                   ScalarField(rng.uniform(-10, 10, (32, 32)), g), tuple(rng.uniform(-0.5, 0.5, 2)))
    assert np.all((h.phase >= 0) & (h.phase < 2 * math.pi))
    assert np.abs(np.abs(h.transmittance()) - 1).max() < 1e-12


# -- optical train --------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        OpticalTrainConfig(dft_px=1000)
    with pytest.raises(ConfigError):
        OpticalTrainConfig(dft_px=256)
    with pytest.raises(ConfigError):
        OpticalTrainConfig(holo_px=1024, dft_px=512)


def test_default_window_clearance():
    cfg = OpticalTrainConfig()
    cfg.check_window()
    cx, _ = cfg.first_order_offset()
    assert cx == 448
    assert cx >= 3 * 2 * cfg.window_half
    assert cfg.dft_px / 2 - cx >= 3 * 2 * cfg.window_half


@pytest.mark.parametrize("carrier", [(0.05, 0.0), (0.49, 0.0), (0.21875, 0.49)])
def test_infeasible_carrier(carrier):
    with pytest.raises(WindowOutOfBounds):
        OpticalTrainConfig(carrier=carrier).check_window()


def test_zero_phase_gives_dc_spot():
    cfg = small_cfg()
    h = Hologram(np.zeros((256, 256)), cfg.holo_geometry, (0, 0))
    I = np.abs(propagate_far_field(h, cfg).values) ** 2
    r, c = np.unravel_index(np.argmax(I), I.shape)
    assert (r, c) == (256, 256)
    # a Gaussian stays a Gaussian: symmetric about DC
    assert np.allclose(I[256, 250], I[256, 262], rtol=1e-9)


def test_parseval():
    cfg = small_cfg()
    rng = np.random.default_rng(0)
    h = Hologram(rng.uniform(0, 2 * math.pi, (256, 256)), cfg.holo_geometry, (0, 0))
    far = propagate_far_field(h, cfg).values
    p_in = np.sum(illumination(cfg) ** 2)
    assert abs(np.sum(np.abs(far) ** 2) / p_in - 1) < 1e-9


def _order_centroid(cfg, carrier, expect):
    g = cfg.holo_geometry
    h = cam_encode(_uniform(g, 1), _uniform(g, 0), carrier)
    I = np.abs(propagate_far_field(h, cfg).values) ** 2
    N = cfg.dft_px
    lo, hi = N // 2 + int(expect) - 24, N // 2 + int(expect) + 25
    win = I[N // 2 - 24:N // 2 + 25, lo:hi]
    cols = np.arange(lo, hi) - N // 2
    return float((win.sum(axis=0) @ cols) / win.sum())


def test_carrier_doubling_doubles_offset():
    cfg = small_cfg(holo_px=512, dft_px=1024)
    c1 = _order_centroid(cfg, (0.0625, 0), 64)
    c2 = _order_centroid(cfg, (0.125, 0), 128)
    assert abs(c1 - 64) < 1
    assert abs(c2 - 2 * c1) < 1


def test_carrier_only_hologram_focuses_to_window_centre():
    cfg = small_cfg()
    g = cfg.holo_geometry
    h = cam_encode(_uniform(g, 1), _uniform(g, 0), cfg.carrier)
    img = extract_first_order(propagate_far_field(h, cfg), cfg)
    r, c = np.unravel_index(np.argmax(img.values), img.values.shape)
    assert abs(r - 15.5) <= 1 and abs(c - 15.5) <= 1
    assert img.values.max() == 1.0


def test_windowed_capture_matches_full_transform():
    cfg = small_cfg()
    p = sample_pexp_params(ModePair(1, 2), cfg, 0, 0)
    holo = encode_target(hologram_target(p, cfg), cfg)
    full = extract_first_order(propagate_far_field(holo, cfg), cfg)
    fast = first_order_capture(holo, cfg)
    assert np.abs(full.values - fast.values).max() < 1e-10


def test_window_out_of_bounds_on_extract():
    cfg = small_cfg(carrier=(0.49, 0.0))
    h = Hologram(np.zeros((256, 256)), cfg.holo_geometry, cfg.carrier)
    with pytest.raises(WindowOutOfBounds):
        extract_first_order(propagate_far_field(h, cfg), cfg)


def test_fundamental_reconstruction():
    cfg = OpticalTrainConfig()
    p = sample_pexp_params(ModePair(0, 0), cfg, 0, 0)
    assert correlation(simulate_capture(p, cfg), render(p, cfg.camera_geometry)) >= 0.99


def test_hg21_shows_lobe_pattern():
    cfg = OpticalTrainConfig(out_px=128)
    p = sample_pexp_params(ModePair(1, 2), cfg, 0, 3)
    img = simulate_capture(p, cfg)
    assert correlation(img, render(p, cfg.camera_geometry)) > 0.97
    mom = second_moment_radius(img)
    wx, wy = p.target_radii()
    assert sorted([mom.w_sx, mom.w_sy]) == pytest.approx(sorted([wx, wy]), rel=0.1)


def test_fidelity_degrades_as_carrier_nears_signal_band():
    # a broad first order (small hologram-plane beam) starts to overlap the
    # zero order once the carrier shrinks towards its bandwidth
    cfg0 = OpticalTrainConfig(out_px=64)
    p = sample_pexp_params(ModePair(2, 3), cfg0, 0, 1)
    scores = []
    for bins in (448, 160, 96):
        cfg = OpticalTrainConfig(out_px=64, carrier=(bins / 2048, 0.0))
        holo = encode_target(hologram_target(p, cfg), cfg)
        scores.append(correlation(first_order_capture(holo, cfg), render(p, cfg.camera_geometry)))
    assert scores[0] >= scores[1] >= scores[2]
    assert scores[0] > 0.99


# -- correlation ----------------------------------------------------------------------

def test_correlation_examples():
    g = SensorGeometry(16, 1.0)
    x = ScalarField(np.random.default_rng(1).uniform(0, 1, (16, 16)), g)
    assert correlation(x, x) == pytest.approx(1.0, abs=1e-12)
    assert correlation(x, ScalarField(3.0 - x.values, g)) == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(ZeroVariance):
        correlation(x, _uniform(g, 2))


def test_independent_noise_is_uncorrelated():
    g = SensorGeometry(256, 1.0)
    rng = np.random.default_rng(11)
    a, b = ScalarField(rng.normal(size=(256, 256)), g), ScalarField(rng.normal(size=(256, 256)), g)
    assert abs(correlation(a, b)) < 0.02


# -- pseudo-experimental data -----------------------------------------------------------

def test_pexp_radius_ranges_feasible_for_all_orders():
    for px in (256, 73):
        cfg = OpticalTrainConfig(out_px=px)
        for n in range(6):
            lo, hi = pexp_radius_range(n, cfg)
            assert 0 < lo < hi


def test_sample_pexp_params_contract():
    cfg = OpticalTrainConfig(out_px=73)
    for k, mode in enumerate(CLASSES):
        p = sample_pexp_params(mode, cfg, 5, k)
        s = p.spec
        assert (s.x0, s.y0) == (0.0, 0.0)
        assert 0 <= s.theta < 2 * math.pi
        assert pexp_radius_range(mode.n, cfg)[0] <= s.w0x <= pexp_radius_range(mode.n, cfg)[1]
        assert pexp_radius_range(mode.m, cfg)[0] <= s.w0y <= pexp_radius_range(mode.m, cfg)[1]
        assert p.noise_sigma >= 0
    assert sample_pexp_params(CLASSES[4], cfg, 5, 2) == sample_pexp_params(CLASSES[4], cfg, 5, 2)


def test_gen_pseudo_experimental_layout_and_determinism(tmp_path):
    cfg = OpticalTrainConfig(out_px=48)
    classes = [ModePair(0, 0), ModePair(1, 3)]
    a = gen_pseudo_experimental(cfg, 2, seed=4, out_dir=tmp_path / "a", classes=classes)
    b = gen_pseudo_experimental(cfg, 2, seed=4, out_dir=tmp_path / "b", classes=classes)
    assert len(a) == 4 and a.split == "pexp" and b.records == a.records
    assert (tmp_path / "a" / "pexp.json").read_bytes() == (tmp_path / "b" / "pexp.json").read_bytes()
    for ra in a.records:
        img = load_png(tmp_path / "a" / ra.path)
        assert img.shape == (48, 48)
        assert (tmp_path / "a" / ra.path).read_bytes() == (tmp_path / "b" / ra.path).read_bytes()
        replay = synthesize_pexp(params_from_pexp_record(ra, cfg), cfg)
        assert np.array_equal(replay, np.rint(img * 255).astype(np.uint8))


def test_phase_map_export_levels():
    g = SensorGeometry(8, 1.0)
    h = Hologram(np.array([[0, math.pi, 2 * math.pi - 1e-9, 0.5 * 2 * math.pi / 255] * 2] * 8), g, (0, 0))
    u8 = phase_map_u8(h)
    assert u8[0, :4].tolist() == [0, 128, 255, 1]


def test_visualization_hologram_reduces_carrier():
    cfg = small_cfg()
    p = sample_pexp_params(ModePair(0, 1), cfg, 0, 0)
    viz = visualization_hologram(p, cfg, 0.8)
    assert viz.carrier == pytest.approx((0.05, 0.0))
    assert viz.phase.shape == (256, 256)
