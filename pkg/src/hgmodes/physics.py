"""Closed-form Hermite-Gaussian beam mathematics.

Coordinates follow one fixed convention shared by the dataset generator and
the hologram code:

* a field is sampled at pixel centres ``(i + 0.5) * p_w - s_l / 2``;
  ``values[row, col]`` holds the sample at ``(X=c[col], Y=c[row])``;
* the beam frame is obtained by rotating the image frame by ``theta``
  counter-clockwise, so the beam's ``m`` axis (its local ``y``) sits at angle
  ``theta`` from the image ``+Y`` axis and its ``n`` axis at ``theta`` from
  ``+X``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import UnsupportedOrder, ZeroPower

MAX_ORDER = 30
MAX_CLASS_ORDER = 5


@dataclass(frozen=True, order=True)
class ModePair:
    """Mode indices ``(n, m)``; ``n`` runs along the beam x axis, ``m`` along y.

    Any ordering may be rendered; the classification label is the unordered
    pair, available through :meth:`canonical` and :attr:`class_id`.
    """

    n: int
    m: int

    def __post_init__(self):
        if self.n < 0 or self.m < 0:
            raise ValueError(f"mode indices must be non-negative, got {self.n, self.m}")

    def canonical(self) -> "ModePair":
        return ModePair(min(self.n, self.m), max(self.n, self.m))

    @property
    def class_id(self) -> int:
        return CLASS_INDEX[self.canonical()]

    @classmethod
    def from_class_id(cls, class_id: int) -> "ModePair":
        return CLASSES[class_id]

    def __str__(self):
        return f"HG{self.n}{self.m}"


def _class_list(max_order=MAX_CLASS_ORDER):
    pairs = [ModePair(n, m) for n in range(max_order + 1) for m in range(n, max_order + 1)]
    return tuple(sorted(pairs, key=lambda p: (p.n + p.m, p.n)))


CLASSES: tuple[ModePair, ...] = _class_list()
CLASS_INDEX = {p: i for i, p in enumerate(CLASSES)}


@dataclass(frozen=True)
class SensorGeometry:
    n_px: int
    p_w: float = 1.0

    def __post_init__(self):
        if self.n_px < 8:
            raise ValueError(f"n_px must be >= 8, got {self.n_px}")
        if not self.p_w > 0:
            raise ValueError(f"p_w must be positive, got {self.p_w}")

    @property
    def s_l(self) -> float:
        return self.n_px * self.p_w

    def centers(self) -> np.ndarray:
        """1D pixel-centre coordinates, symmetric about zero."""
        return (np.arange(self.n_px) + 0.5) * self.p_w - self.s_l / 2

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        c = self.centers()
        return np.meshgrid(c, c, indexing="xy")

    def to_dict(self):
        return {"n_px": self.n_px, "p_w": self.p_w}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["n_px"]), float(d["p_w"]))


@dataclass(frozen=True)
class BeamSpec:
    mode: ModePair
    w0x: float
    w0y: float
    x0: float = 0.0
    y0: float = 0.0
    theta: float = 0.0
    wavelength: float = 0.675
    z: float = 0.0

    def __post_init__(self):
        if not (self.w0x > 0 and self.w0y > 0):
            raise ValueError(f"waist radii must be positive, got {self.w0x}, {self.w0y}")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if not 0.0 <= self.theta < 2 * math.pi:
            raise ValueError(f"theta must lie in [0, 2pi), got {self.theta}")


@dataclass
class ComplexField:
    values: np.ndarray
    geometry: SensorGeometry


@dataclass
class ScalarField:
    values: np.ndarray
    geometry: SensorGeometry


class BeamGeometry(NamedTuple):
    w: float
    psi: float
    R: float
    zR: float


class BeamMoments(NamedTuple):
    """Second-moment (D4-sigma) beam parameters.

    ``w_sy`` is the major radius, ``w_sx`` the minor one; ``theta_hat`` is the
    angle of the major axis from the image +Y axis, in ``[0, pi)``.
    """

    w_sx: float
    w_sy: float
    theta_hat: float
    centroid: tuple[float, float]


def hermite(n: int, x):
    """Physicists' Hermite polynomial by the three-term recurrence."""
    if n < 0:
        raise ValueError("n must be non-negative")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * x
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def beam_geometry(w0: float, z: float, wavelength: float) -> BeamGeometry:
    zR = math.pi * w0**2 / wavelength
    w = w0 * math.sqrt(1.0 + (z / zR) ** 2)
    psi = math.atan(z / zR)
    inv_R = z / (z * z + zR * zR)  # curvature; stays finite for tiny z where zR**2 / z would overflow
    R = math.inf if inv_R == 0 else 1.0 / inv_R
    return BeamGeometry(w, psi, R, zR)


def _check_order(n):
    if not 0 <= n <= MAX_ORDER:
        raise UnsupportedOrder(f"mode order {n} outside supported range 0..{MAX_ORDER}")


def u1d(n: int, x, z: float, w0: float, wavelength: float):
    """One-dimensional HG field ``u_n(x, z)`` (unit power in x)."""
    _check_order(n)
    x = np.asarray(x, dtype=float)
    w, psi, R, _ = beam_geometry(w0, z, wavelength)
    # 1/sqrt(2^n n! w) in log space; n! overflows the float range long before n = 30 matters
    log_norm = -0.5 * (n * math.log(2.0) + math.lgamma(n + 1) + math.log(w))
    prefactor = (2.0 / math.pi) ** 0.25 * math.exp(log_norm) * np.exp(-0.5j * (2 * n + 1) * psi)
    arg = -(x**2) / w**2
    if math.isfinite(R):
        k = 2 * math.pi / wavelength
        arg = arg - 1j * k * x**2 / (2 * R)
    out = prefactor * hermite(n, math.sqrt(2.0) * x / w) * np.exp(arg)
    return out if np.ndim(out) else complex(out)


def beam_frame(spec: BeamSpec, X, Y):
    """Rotate/translate image coordinates into the beam frame."""
    dx, dy = X - spec.x0, Y - spec.y0
    c, s = math.cos(spec.theta), math.sin(spec.theta)
    return dx * c + dy * s, -dx * s + dy * c


def field2d(spec: BeamSpec, geom: SensorGeometry) -> ComplexField:
    X, Y = geom.grid()
    xb, yb = beam_frame(spec, X, Y)
    ux = u1d(spec.mode.n, xb, spec.z, spec.w0x, spec.wavelength)
    uy = u1d(spec.mode.m, yb, spec.z, spec.w0y, spec.wavelength)
    return ComplexField(ux * uy, geom)


def intensity(f: ComplexField) -> ScalarField:
    v = f.values
    return ScalarField(v.real**2 + v.imag**2, f.geometry)


def phase(f: ComplexField) -> ScalarField:
    return ScalarField(np.angle(f.values), f.geometry)


def second_moment_radius(img: ScalarField) -> BeamMoments:
    """D4-sigma radii, orientation and centroid of an intensity image."""
    I = np.asarray(img.values, dtype=float)
    total = I.sum()
    if not total > 0:
        raise ZeroPower("image carries no power")
    c = img.geometry.centers()
    # separable first/second moments keep this O(n_px^2)
    row_sum = I.sum(axis=1)
    col_sum = I.sum(axis=0)
    xc = col_sum @ c / total
    yc = row_sum @ c / total
    dx = c - xc
    dy = c - yc
    sxx = col_sum @ dx**2 / total
    syy = row_sum @ dy**2 / total
    sxy = dy @ I @ dx / total
    evals, evecs = np.linalg.eigh(np.array([[sxx, sxy], [sxy, syy]]))
    lo, hi = np.maximum(evals, 0.0)
    vx, vy = evecs[:, 1]
    theta_hat = math.atan2(-vx, vy) % math.pi
    return BeamMoments(2.0 * math.sqrt(lo), 2.0 * math.sqrt(hi), theta_hat, (float(xc), float(yc)))


def quadrature_grid(n_max: int, w0: float = 1.0, step_frac: float = 1 / 200):
    """Uniform grid covering ``12 * w0 * sqrt(2 n_max + 1)`` with step ``w0 * step_frac``."""
    half = 6.0 * w0 * math.sqrt(2 * n_max + 1)
    n_pts = max(4001, int(math.ceil(2 * half / (w0 * step_frac))) + 1)
    return np.linspace(-half, half, n_pts)


@lru_cache(maxsize=None)
def beta(n: int) -> float:
    """Input-radius scaling factor: ``w0 = beta(n) * w_target`` gives D4-sigma radius ``w_target``."""
    _check_order(n)
    x = quadrature_grid(n)
    I = np.abs(u1d(n, x, 0.0, 1.0, 1.0)) ** 2
    power = np.trapezoid(I, x)
    var = np.trapezoid(I * x**2, x) / power
    return 1.0 / (2.0 * math.sqrt(var))


def measured_radius(n: int, w0: float) -> float:
    """D4-sigma radius of a 1D HG_n profile with input radius ``w0``."""
    return w0 / beta(n)


def background_level(img: ScalarField, frame: int | None = None) -> tuple[float, float]:
    """Baseline offset and noise level estimated from a border frame.

    The offset is the frame mean. The noise level comes from excursions above
    the frame median, which stays unbiased when the sensor clipped the
    negative half of the noise at zero.
    """
    v = np.asarray(img.values, dtype=float)
    f = frame if frame is not None else max(2, v.shape[0] // 16)
    border = np.concatenate([v[:f].ravel(), v[-f:].ravel(), v[f:-f, :f].ravel(), v[f:-f, -f:].ravel()])
    floor = np.median(border)
    noise = math.sqrt(2.0 * np.mean(np.maximum(border - floor, 0.0) ** 2))
    return float(border.mean()), noise


def clean_background(img: ScalarField, frame: int | None = None, k: float = 3.0) -> ScalarField:
    """Subtract the baseline and zero every pixel below ``k`` noise levels."""
    base, noise = background_level(img, frame)
    v = np.asarray(img.values, dtype=float)
    return ScalarField(np.where(v > base + k * noise, v - base, 0.0), img.geometry)


def aperture_moments(img: ScalarField, k: float = 3.0, max_iter: int = 30) -> BeamMoments:
    """Second moments of a noisy image, ISO 11146 style.

    After :func:`clean_background`, moments are re-evaluated inside an
    elliptical aperture of three times the current radii about the current
    centroid until the radii settle.
    """
    cleaned = clean_background(img, k=k)
    v = cleaned.values
    X, Y = img.geometry.grid()
    mom = second_moment_radius(cleaned)
    floor = 1.5 * img.geometry.p_w
    for _ in range(max_iter):
        xc, yc = mom.centroid
        a = max(3.0 * mom.w_sx, floor)
        b = max(3.0 * mom.w_sy, floor)
        c, s = math.cos(mom.theta_hat), math.sin(mom.theta_hat)
        # aperture frame: u along the minor axis, w along the major axis
        u = (X - xc) * c + (Y - yc) * s
        w = -(X - xc) * s + (Y - yc) * c
        inside = (u / a) ** 2 + (w / b) ** 2 <= 1.0
        try:
            new = second_moment_radius(ScalarField(np.where(inside, v, 0.0), img.geometry))
        except ZeroPower:
            break
        done = abs(new.w_sx - mom.w_sx) <= 1e-4 * mom.w_sx and abs(new.w_sy - mom.w_sy) <= 1e-4 * mom.w_sy
        mom = new
        if done:
            break
    return mom
