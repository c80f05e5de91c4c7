"""A non-learned reference classifier.

The image's second moments fix the beam size and orientation; every
candidate class is then rendered with matching radii (both axis
assignments) and scored by the normalised overlap of the field amplitudes,
``<sqrt(I_model), sqrt(I_image)>^2 / (|I_model| |I_image|)``.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ZeroPower
from ..physics import (
    CLASSES,
    BeamSpec,
    ModePair,
    ScalarField,
    aperture_moments,
    beta,
    clean_background,
    field2d,
    intensity,
    second_moment_radius,
)

ISOTROPY_TOL = 0.08
N_ANGLES = 36


def overlap(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.sqrt((a * a).sum()), np.sqrt((b * b).sum())
    if na == 0 or nb == 0:
        return 0.0
    return float((a * b).sum() / (na * nb)) ** 2


def _candidate_amplitude(nx, ny, w_minor, w_major, theta, centroid, geom):
    spec = BeamSpec(ModePair(nx, ny), beta(nx) * w_minor, beta(ny) * w_major,
                    centroid[0], centroid[1], theta % (2 * math.pi))
    return np.sqrt(intensity(field2d(spec, geom)).values)


def class_scores(img: ScalarField, classes=CLASSES, noisy: bool = False) -> np.ndarray:
    """Best overlap per class over both axis assignments (and angles when round)."""
    mom = aperture_moments(img) if noisy else second_moment_radius(img)
    v = clean_background(img).values if noisy else np.clip(np.asarray(img.values, dtype=float), 0, None)
    amp = np.sqrt(v)
    round_beam = mom.w_sy <= (1 + ISOTROPY_TOL) * mom.w_sx
    angles = [mom.theta_hat] if not round_beam else mom.theta_hat + np.arange(N_ANGLES) * (math.pi / N_ANGLES)
    scores = np.zeros(len(classes))
    for k, mode in enumerate(classes):
        best = 0.0
        for nx, ny in {(mode.n, mode.m), (mode.m, mode.n)}:
            for th in angles:
                cand = _candidate_amplitude(nx, ny, mom.w_sx, mom.w_sy, th, mom.centroid, img.geometry)
                best = max(best, overlap(cand, amp))
        scores[k] = best
    return scores


def classify_overlap(img: ScalarField, classes=CLASSES, noisy: bool = False) -> int:
    """Class id (index into ``classes``) with the largest overlap score."""
    try:
        return int(np.argmax(class_scores(img, classes, noisy)))
    except ZeroPower:
        return -1


def adjacent_confusion(cm, classes=CLASSES) -> dict:
    """Share of misclassifications whose class is one step away in n or m."""
    cm = np.asarray(cm)
    off = cm.sum() - np.trace(cm)
    adjacent = 0
    for i, a in enumerate(classes):
        for j, b in enumerate(classes):
            if i != j and abs(a.n - b.n) + abs(a.m - b.m) == 1:
                adjacent += int(cm[i, j])
    return {"errors": int(off), "adjacent": adjacent,
            "adjacent_fraction": float(adjacent / off) if off else 1.0}
