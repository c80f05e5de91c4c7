"""Complex-amplitude-modulation holograms and a simulated Fourier-plane
camera, used to build the pseudo-experimental test set.

The hologram is the sinusoidal-phase CAM variant: a phase-only pattern
``H = f(a) sin(phi + 2 pi (fx x + fy y))`` with ``J1(f(a)) = a * max(J1)``.
By the Jacobi-Anger expansion its first diffraction order carries a field
proportional to ``a exp(i phi)``. A thin lens maps the hologram plane onto
its Fourier plane, which is modelled as one centred DFT; the first order is
cropped there and resampled onto the camera grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.ndimage import map_coordinates

from .dataset import DatasetManifest, quantize, save_png
from .errors import ConfigError, GeometryMismatch, InfeasibleBounds, WindowOutOfBounds, ZeroVariance
from .physics import (
    CLASSES,
    BeamSpec,
    ComplexField,
    ModePair,
    ScalarField,
    SensorGeometry,
    beta,
    field2d,
    phase,
)
from .simgen import (
    SampleParams,
    add_noise,
    image_seed,
    min_input_radius,
    noise_rng,
    param_rng,
    record_for,
)

log = logging.getLogger(__name__)


# -- Bessel J1 ------------------------------------------------------------------

def j1(x):
    """Bessel J1 from its ascending series; relative error < 1e-12 on [0, 2]."""
    x = np.asarray(x, dtype=float)
    h = x / 2.0
    term = h.copy()
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = -term * h * h / (k * (k + 1))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total if total.ndim else float(total)


def _j1_derivative(x: float) -> float:
    # d/dx sum c_k (x/2)^(2k+1) = sum c_k (2k+1)/2 (x/2)^(2k)
    h = x / 2.0
    c = 1.0
    total = 0.5
    k = 0
    while True:
        k += 1
        c = -c * h * h / (k * (k + 1))
        t = c * (2 * k + 1) / 2.0
        total += t
        if abs(t) <= 1e-17 * abs(total):
            return total


def _bisect(f, lo, hi, tol=1e-14):
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


J1_ARGMAX = _bisect(_j1_derivative, 1.0, 2.5)
J1_MAX = j1(J1_ARGMAX)


def inverse_j1(a, tol: float = 1e-10):
    """Solve ``J1(f) = a * J1_MAX`` for ``f`` in ``[0, J1_ARGMAX]`` by bisection."""
    a = np.asarray(a, dtype=float)
    if np.any((a < 0) | (a > 1)):
        raise ValueError("a must lie in [0, 1]")
    target = a * J1_MAX
    lo = np.zeros_like(a)
    hi = np.full_like(a, J1_ARGMAX)
    while np.max(hi - lo, initial=0.0) > tol:
        mid = 0.5 * (lo + hi)
        below = j1(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    # the endpoints are known exactly
    out = np.where(a == 0, 0.0, np.where(a == 1, J1_ARGMAX, out))
    return out if out.ndim else float(out)


@lru_cache(maxsize=1)
def _depth_table(size: int = 16385):
    a = np.linspace(0.0, 1.0, size)
    return a, inverse_j1(a)


def encoding_depth(a) -> np.ndarray:
    """Tabulated :func:`inverse_j1` for whole images (linear interpolation)."""
    grid, table = _depth_table()
    return np.interp(np.clip(a, 0.0, 1.0), grid, table)


# -- holograms ----------------------------------------------------------------------

@dataclass
class Hologram:
    phase: np.ndarray
    geometry: SensorGeometry
    carrier: tuple[float, float]

    def transmittance(self) -> np.ndarray:
        return np.exp(1j * self.phase)


def cam_encode(amplitude: ScalarField, phase_map: ScalarField, carrier=(0.21875, 0.0)) -> Hologram:
    """CAM hologram for a target ``amplitude * exp(i * phase)``; amplitude in ``[0, 1]``."""
    if amplitude.geometry != phase_map.geometry or amplitude.values.shape != phase_map.values.shape:
        raise GeometryMismatch("amplitude and phase must share one geometry")
    geom = amplitude.geometry
    X, Y = geom.grid()
    fx, fy = carrier
    depth = encoding_depth(amplitude.values)
    H = depth * np.sin(phase_map.values + 2 * math.pi * (fx * X + fy * Y))
    return Hologram(np.mod(H, 2 * math.pi), geom, (float(fx), float(fy)))


@dataclass
class OpticalTrainConfig:
    """Simulated SLM, lens and camera.

    Frequencies are in cycles per unit length of the hologram plane; the
    Fourier plane is sampled in bins of ``1 / (dft_px * pixel_width)``.
    """

    holo_px: int = 1024
    pixel_width: float = 1.0
    dft_px: int = 2048
    window_half: int = 64
    out_px: int = 256
    # 448 bins from DC on the default 2048 grid
    carrier: tuple[float, float] = (0.21875, 0.0)
    illumination_waist: float | None = None
    noise_scale: float = 0.02
    resolution_px: int = 224
    wavelength: float = 0.675

    def __post_init__(self):
        self.carrier = (float(self.carrier[0]), float(self.carrier[1]))
        n = self.dft_px
        if n < 512 or n & (n - 1):
            raise ConfigError(f"dft_px must be a power of two >= 512, got {n}")
        if n < self.holo_px:
            raise ConfigError("dft_px must be at least holo_px")
        if self.out_px < 16 or self.window_half < 4:
            raise ConfigError("out_px must be >= 16 and window_half >= 4")

    @property
    def holo_geometry(self) -> SensorGeometry:
        return SensorGeometry(self.holo_px, self.pixel_width)

    @property
    def camera_geometry(self) -> SensorGeometry:
        return SensorGeometry(self.out_px, 1.0)

    @property
    def input_beam(self) -> BeamSpec:
        w = self.illumination_waist or self.holo_px * self.pixel_width / 4
        return BeamSpec(ModePair(0, 0), w, w, wavelength=self.wavelength)

    @property
    def bin_width(self) -> float:
        return 1.0 / (self.dft_px * self.pixel_width)

    def first_order_offset(self) -> tuple[float, float]:
        """First-order position relative to the zero order, in Fourier-plane bins."""
        fx, fy = self.carrier
        return fx / self.bin_width, fy / self.bin_width

    @property
    def camera_scale(self) -> float:
        """Camera pixels per Fourier-plane bin."""
        return self.out_px / (2.0 * self.window_half)

    def check_window(self) -> None:
        """First order must sit three window widths clear of the zero order
        and of the aliasing boundary on each axis."""
        cx, cy = self.first_order_offset()
        clear = 3 * 2 * self.window_half
        nyq = self.dft_px / 2
        if math.hypot(cx, cy) < clear:
            raise WindowOutOfBounds(f"first order at ({cx:.1f}, {cy:.1f}) bins is within {clear} bins of the zero order")
        if nyq - abs(cx) < clear or nyq - abs(cy) < clear:
            raise WindowOutOfBounds(f"first order at ({cx:.1f}, {cy:.1f}) bins is within {clear} bins of the aliasing boundary")

    def to_dict(self):
        d = asdict(self)
        d["carrier"] = list(self.carrier)
        return d


def illumination(cfg: OpticalTrainConfig) -> np.ndarray:
    """Real amplitude of the illuminating Gaussian on the hologram grid (unit peak)."""
    return _illumination(cfg.input_beam, cfg.holo_geometry)


@lru_cache(maxsize=4)
def _illumination(beam: BeamSpec, geom: SensorGeometry) -> np.ndarray:
    a = np.abs(field2d(beam, geom).values)
    a /= a.max()
    a.flags.writeable = False
    return a


def propagate_far_field(holo: Hologram, cfg: OpticalTrainConfig) -> ComplexField:
    """Fourier-plane field of the illuminated hologram (unitary centred DFT)."""
    n, N = holo.geometry.n_px, cfg.dft_px
    if N < n:
        raise ConfigError("DFT grid smaller than the hologram")
    if holo.geometry != cfg.holo_geometry:
        raise GeometryMismatch("hologram geometry differs from the optical train")
    padded = np.zeros((N, N), dtype=complex)
    o = (N - n) // 2
    padded[o:o + n, o:o + n] = illumination(cfg) * holo.transmittance()
    far = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(padded), norm="ortho"))
    return ComplexField(far, SensorGeometry(N, cfg.bin_width))


def _window_bounds(N: int, cfg: OpticalTrainConfig):
    cx, cy = cfg.first_order_offset()
    W = cfg.window_half
    col0, row0 = N / 2 + cx, N / 2 + cy
    if min(col0, row0) - W < 0 or max(col0, row0) + W > N - 1:
        raise WindowOutOfBounds(f"first-order window around ({col0:.1f}, {row0:.1f}) leaves the {N} px grid")
    return row0, col0


def _resample(I: np.ndarray, row0: float, col0: float, cfg: OpticalTrainConfig) -> ScalarField:
    W = cfg.window_half
    t = (np.arange(cfg.out_px) + 0.5) * (2.0 * W / cfg.out_px) - W
    rows, cols = np.meshgrid(row0 + t, col0 + t, indexing="ij")
    img = map_coordinates(I, [rows, cols], order=1, mode="constant")
    peak = img.max()
    return ScalarField(img / peak if peak > 0 else img, cfg.camera_geometry)


def extract_first_order(far: ComplexField, cfg: OpticalTrainConfig) -> ScalarField:
    """Crop the first order, resample it bilinearly to the camera grid, unit peak."""
    row0, col0 = _window_bounds(far.values.shape[0], cfg)
    return _resample(far.values.real**2 + far.values.imag**2, row0, col0, cfg)


def _dft_matrix(bins: np.ndarray, n: int, N: int) -> np.ndarray:
    # rows of the centred length-N DFT for a length-n signal zero-padded at offset (N - n) // 2
    j = np.arange(n) + (N - n) // 2 - N // 2
    return np.exp(-2j * math.pi * np.outer(bins - N // 2, j) / N)


def first_order_capture(holo: Hologram, cfg: OpticalTrainConfig) -> ScalarField:
    """Same image as ``extract_first_order(propagate_far_field(holo, cfg), cfg)``.

    Only the Fourier-plane bins under the window are evaluated, as two
    matrix products, which is much cheaper than the full padded transform.
    """
    N, n = cfg.dft_px, holo.geometry.n_px
    if holo.geometry != cfg.holo_geometry:
        raise GeometryMismatch("hologram geometry differs from the optical train")
    row0, col0 = _window_bounds(N, cfg)
    W = cfg.window_half
    r_lo, c_lo = int(math.floor(row0 - W)), int(math.floor(col0 - W))
    r_bins = np.arange(r_lo, int(math.ceil(row0 + W)) + 2)
    c_bins = np.arange(c_lo, int(math.ceil(col0 + W)) + 2)
    field = illumination(cfg) * holo.transmittance()
    win = _dft_matrix(r_bins, n, N) @ field @ _dft_matrix(c_bins, n, N).T / N
    # bins beyond the grid edge are zero in the full transform
    win[(r_bins < 0) | (r_bins > N - 1)] = 0
    win[:, (c_bins < 0) | (c_bins > N - 1)] = 0
    return _resample(win.real**2 + win.imag**2, row0 - r_lo, col0 - c_lo, cfg)


def correlation(a: ScalarField, b: ScalarField) -> float:
    """Pearson correlation of two images' pixel values."""
    x = np.asarray(a.values, dtype=float).ravel()
    y = np.asarray(b.values, dtype=float).ravel()
    if x.shape != y.shape:
        raise GeometryMismatch("images differ in shape")
    x = x - x.mean()
    y = y - y.mean()
    nx, ny = np.sqrt(x @ x), np.sqrt(y @ y)
    if nx == 0 or ny == 0:
        raise ZeroVariance("correlation needs images with non-zero variance")
    return float(np.clip((x @ y) / (nx * ny), -1.0, 1.0))


# -- pseudo-experimental images ------------------------------------------------------

def pexp_radius_range(order: int, cfg: OpticalTrainConfig) -> tuple[float, float]:
    """Camera-plane input-radius bounds for one axis of order ``order``.

    Upper bound: measured radius within a third of the camera frame.
    Lower bound: the larger of the lobe-resolution bound and the bound that
    keeps the conjugate hologram-plane beam inside a third of the SLM, with
    its input radius inside the illumination waist so the pre-compensated
    amplitude stays bounded.
    """
    b = beta(order)
    hi = cfg.out_px * b / 3.0
    lo_res = min_input_radius(order, cfg.out_px / cfg.resolution_px)
    # hologram input radius is dft_px * p / (pi * r_bins)
    w_holo = min(cfg.input_beam.w0x, cfg.holo_geometry.s_l * b / 3.0)
    r_bins = cfg.dft_px * cfg.pixel_width / (math.pi * w_holo)
    lo = max(lo_res, r_bins * cfg.camera_scale)
    if lo > hi:
        raise InfeasibleBounds(f"order {order}: camera radius bounds [{lo:.4g}, {hi:.4g}] are empty")
    return lo, hi


def sample_pexp_params(mode: ModePair, cfg: OpticalTrainConfig, seed: int, index: int) -> SampleParams:
    """Random radii and orientation, centroid fixed at the frame centre (camera pixels)."""
    seed_ = image_seed(seed, "pexp", mode.class_id, index)
    rng = param_rng(seed_)
    lo_x, hi_x = pexp_radius_range(mode.n, cfg)
    lo_y, hi_y = pexp_radius_range(mode.m, cfg)
    theta = rng.uniform(0.0, 2 * math.pi)
    w0x = rng.uniform(lo_x, hi_x)
    w0y = rng.uniform(lo_y, hi_y)
    sigma = abs(rng.normal(0.0, cfg.noise_scale)) if cfg.noise_scale > 0 else 0.0
    spec = BeamSpec(mode, w0x, w0y, 0.0, 0.0, theta, cfg.wavelength, 0.0)
    return SampleParams(spec, sigma, seed_)


def hologram_target(params: SampleParams, cfg: OpticalTrainConfig) -> ComplexField:
    """Hologram-plane field whose Fourier transform images to ``params`` on the camera."""
    s = params.spec
    to_holo = cfg.dft_px * cfg.pixel_width * cfg.camera_scale / math.pi
    spec = BeamSpec(s.mode, to_holo / s.w0x, to_holo / s.w0y, 0.0, 0.0, s.theta, cfg.wavelength, 0.0)
    return field2d(spec, cfg.holo_geometry)


def encode_target(target: ComplexField, cfg: OpticalTrainConfig) -> Hologram:
    """CAM hologram for ``target``, pre-compensated for the illumination profile."""
    amp = np.abs(target.values) / illumination(cfg)
    amp /= amp.max()
    return cam_encode(ScalarField(amp, target.geometry), phase(target), cfg.carrier)


def simulate_capture(params: SampleParams, cfg: OpticalTrainConfig) -> ScalarField:
    """Noiseless camera frame for one pseudo-experimental beam."""
    return first_order_capture(encode_target(hologram_target(params, cfg), cfg), cfg)


def synthesize_pexp(params: SampleParams, cfg: OpticalTrainConfig) -> np.ndarray:
    clean = simulate_capture(params, cfg)
    return quantize(add_noise(clean, params.noise_sigma, noise_rng(params.rng_seed)).values)


def gen_pseudo_experimental(cfg: OpticalTrainConfig, per_class: int = 118, seed: int = 0,
                            out_dir=".", classes=CLASSES) -> DatasetManifest:
    """Write ``pexp/`` PNGs and ``pexp.json`` for every class."""
    cfg.check_window()
    for mode in classes:
        pexp_radius_range(mode.n, cfg)
        pexp_radius_range(mode.m, cfg)
    out_dir = Path(out_dir)
    records = []
    for mode in classes:
        for idx in range(per_class):
            params = sample_pexp_params(mode, cfg, seed, idx)
            rel = f"pexp/c{mode.class_id:02d}_{mode.n}{mode.m}_{idx:05d}.png"
            save_png(synthesize_pexp(params, cfg), out_dir / rel)
            records.append(record_for(params, rel))
        log.info("pseudo-experimental class %s done", mode)
    manifest = DatasetManifest(cfg.camera_geometry, records, seed, split="pexp",
                               generator={"kind": "holo", "optics": cfg.to_dict()}, root=out_dir)
    manifest.save(out_dir / "pexp.json")
    return manifest


def params_from_pexp_record(rec, cfg: OpticalTrainConfig) -> SampleParams:
    spec = BeamSpec(ModePair(rec.n, rec.m), rec.w0x, rec.w0y, rec.x0, rec.y0, rec.theta, cfg.wavelength, 0.0)
    return SampleParams(spec, rec.noise_sigma, rec.seed)


# -- phase-map export -------------------------------------------------------------------

def phase_map_u8(holo: Hologram) -> np.ndarray:
    """8-bit phase levels ``phase * 255 / 2pi``, rounded half up."""
    return np.floor(np.mod(holo.phase, 2 * math.pi) * 255.0 / (2 * math.pi) + 0.5).astype(np.uint8)


def save_phase_png(holo: Hologram, path) -> None:
    save_png(phase_map_u8(holo), path)


def visualization_hologram(params: SampleParams, cfg: OpticalTrainConfig, decimation: float = 0.8) -> Hologram:
    """Hologram with the grating frequency reduced by ``decimation`` so the fringes are visible."""
    fx, fy = cfg.carrier
    target = hologram_target(params, cfg)
    amp = np.abs(target.values) / illumination(cfg)
    amp /= amp.max()
    return cam_encode(ScalarField(amp, target.geometry), phase(target),
                      (fx * (1 - decimation), fy * (1 - decimation)))
