import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import hermite as nph

from hgmodes.errors import UnsupportedOrder, ZeroPower
from hgmodes.physics import (
    CLASSES,
    BeamSpec,
    ModePair,
    ScalarField,
    SensorGeometry,
    beam_geometry,
    beta,
    field2d,
    hermite,
    intensity,
    phase,
    quadrature_grid,
    second_moment_radius,
    u1d,
)


# -- mode pairs ---------------------------------------------------------------

def test_class_set_has_21_canonical_pairs():
    assert len(CLASSES) == 21
    assert all(0 <= p.n <= p.m <= 5 for p in CLASSES)
    keys = [(p.n + p.m, p.n) for p in CLASSES]
    assert keys == sorted(keys)
    assert [p.class_id for p in CLASSES] == list(range(21))


def test_class_id_ignores_ordering():
    assert ModePair(3, 2).class_id == ModePair(2, 3).class_id == CLASSES.index(ModePair(2, 3))
    assert ModePair.from_class_id(0) == ModePair(0, 0)
    assert ModePair.from_class_id(20) == ModePair(5, 5)


# -- hermite -------------------------------------------------------------------

@pytest.mark.parametrize("n,x,expected", [(0, 1.7, 1.0), (1, 2.0, 4.0), (3, 1.0, -4.0)])
def test_hermite_examples(n, x, expected):
    assert hermite(n, x) == pytest.approx(expected, abs=1e-15)


def test_hermite_matches_polynomial_expansion():
    rng = np.random.default_rng(7)
    x = rng.uniform(-3, 3, 20)
    for n in range(7):
        coeffs = np.zeros(n + 1)
        coeffs[n] = 1.0
        direct = nph.hermval(x, coeffs)
        rel = np.abs(hermite(n, x) - direct) / np.maximum(np.abs(direct), 1e-300)
        assert rel.max() < 1e-12


# -- beam geometry -------------------------------------------------------------

def test_beam_geometry_waist_plane():
    g = beam_geometry(1.0, 0.0, 1.0)
    assert g.w == 1.0 and g.psi == 0.0 and g.R == math.inf
    assert g.zR == pytest.approx(math.pi)


def test_beam_geometry_at_rayleigh_length():
    zR = math.pi
    g = beam_geometry(1.0, zR, 1.0)
    assert g.w == pytest.approx(math.sqrt(2))
    assert g.psi == pytest.approx(math.pi / 4)
    assert g.R == pytest.approx(2 * zR)


def test_beam_geometry_general_point():
    # high-precision evaluation, frozen
    g = beam_geometry(2.0, 5.0, 0.5)
    assert g.zR == pytest.approx(25.1327412287183459, rel=1e-14)
    assert g.w == pytest.approx(2.03919453447706964, rel=1e-14)
    assert g.psi == pytest.approx(0.196379660431665872, rel=1e-14)
    assert g.R == pytest.approx(131.330936333943790, rel=1e-13)


# -- 1D field ------------------------------------------------------------------

def test_u1d_peak_and_node():
    assert u1d(0, 0.0, 0.0, 1.0, 1.0) == pytest.approx((2 / math.pi) ** 0.25)
    assert abs(u1d(1, 0.0, 0.0, 1.0, 1.0)) == 0.0


def test_u1d_rejects_large_orders():
    with pytest.raises(UnsupportedOrder):
        u1d(31, 0.0, 0.0, 1.0, 1.0)


def test_u1d_high_order_stays_finite():
    x = quadrature_grid(30)
    v = u1d(30, x, 0.0, 1.0, 1.0)
    assert np.all(np.isfinite(v))
    assert np.trapezoid(np.abs(v) ** 2, x) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("n", range(6))
def test_u1d_unit_power(n):
    x = quadrature_grid(n)
    assert np.trapezoid(np.abs(u1d(n, x, 0.0, 1.0, 1.0)) ** 2, x) == pytest.approx(1.0, abs=1e-9)


def test_gram_matrix_is_identity():
    x = quadrature_grid(5)
    U = np.array([u1d(n, x, 0.0, 1.0, 1.0) for n in range(6)])
    gram = np.trapezoid(U[:, None, :] * U[None, :, :].conj(), x, axis=-1)
    assert np.abs(gram - np.eye(6)).max() < 1e-6


def test_unit_power_away_from_waist():
    w0, lam = 1.0, 0.5
    zR = math.pi * w0**2 / lam
    x = quadrature_grid(4, w0=w0 * math.sqrt(10))
    for z in (0.0, zR, 3 * zR):
        p = np.trapezoid(np.abs(u1d(4, x, z, w0, lam)) ** 2, x)
        assert p == pytest.approx(1.0, abs=1e-9)


# -- 2D field ------------------------------------------------------------------

GEOM = SensorGeometry(128, 1.0)


def test_fundamental_is_circular():
    f = intensity(field2d(BeamSpec(ModePair(0, 0), 10.0, 10.0, theta=1.234), GEOM)).values
    X, Y = GEOM.grid()
    expected = np.exp(-2 * (X**2 + Y**2) / 100.0)
    assert np.allclose(f / f.max(), expected / expected.max(), atol=1e-12)


def test_hg01_has_nodal_row():
    # odd pixel count puts row 64 exactly on the nodal line Y=0
    geom = SensorGeometry(129, 1.0)
    I = intensity(field2d(BeamSpec(ModePair(0, 1), 12.0, 12.0), geom)).values
    assert np.all(I[64, :] < 1e-30)
    assert I[:64].sum() == pytest.approx(I[65:].sum(), rel=1e-12)
    # lobes separated along Y, not X
    assert I[64 - 8, 64] > 100 * I[64, 64 - 8]


def test_transpose_swaps_mode_orders():
    a = intensity(field2d(BeamSpec(ModePair(2, 3), 9.0, 9.0), GEOM)).values
    b = intensity(field2d(BeamSpec(ModePair(3, 2), 9.0, 9.0), GEOM)).values
    np.testing.assert_allclose(a.T, b, rtol=1e-12, atol=1e-300)


def test_intensity_symmetric_for_centred_beam():
    I = intensity(field2d(BeamSpec(ModePair(3, 4), 7.0, 11.0), GEOM)).values
    assert np.array_equal(I, I[::-1, :])
    assert np.array_equal(I, I[:, ::-1])


def test_phase_of_waist_fields():
    f = field2d(BeamSpec(ModePair(0, 0), 10.0, 10.0), GEOM)
    I = intensity(f).values
    ph = phase(f).values
    assert np.ptp(ph[I > 1e-12 * I.max()]) < 1e-12
    f10 = field2d(BeamSpec(ModePair(1, 0), 10.0, 10.0), GEOM)
    ph10 = phase(f10).values
    row = ph10[64]
    assert abs(abs(row[70] - row[57]) - math.pi) < 1e-12
    assert np.all((ph10 > -math.pi) & (ph10 <= math.pi))


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(0, 5), m=st.integers(0, 5),
    wx=st.floats(2.0, 6.0), wy=st.floats(2.0, 6.0),
    theta=st.floats(0.0, 6.28), z=st.floats(-20.0, 20.0),
)
def test_intensity_is_nonnegative(n, m, wx, wy, theta, z):
    f = field2d(BeamSpec(ModePair(n, m), wx, wy, theta=theta, z=z, wavelength=0.5), SensorGeometry(48, 1.0))
    assert np.all(intensity(f).values >= 0)
    assert np.all(np.isfinite(f.values))


def test_power_conserved_under_propagation():
    w0, lam = 4.0, 0.5
    zR = math.pi * w0**2 / lam
    powers = []
    for z in (0.0, zR, 3 * zR):
        w = beam_geometry(w0, z, lam).w
        p_w = w / 12.0  # keep ~12 px per waist and the same containment
        geom = SensorGeometry(256, p_w)
        I = intensity(field2d(BeamSpec(ModePair(2, 1), w0, w0, z=z, wavelength=lam), geom)).values
        powers.append(I.sum() * p_w**2)
    assert max(powers) / min(powers) - 1 < 1e-3
    assert powers[0] == pytest.approx(1.0, rel=1e-3)


# -- second moments ------------------------------------------------------------

def test_d4sigma_of_fundamental_equals_waist():
    geom = SensorGeometry(256, 0.5)
    I = intensity(field2d(BeamSpec(ModePair(0, 0), 10.0, 10.0), geom))
    mom = second_moment_radius(I)
    assert mom.w_sx == pytest.approx(10.0, rel=5e-3)
    assert mom.w_sy == pytest.approx(10.0, rel=5e-3)
    assert mom.centroid == pytest.approx((0.0, 0.0), abs=1e-9)


def test_d4sigma_of_hg3_scales_with_sqrt7():
    # 1D quadrature oracle for the analytic sqrt(2n+1) law
    x = quadrature_grid(3)
    I1 = np.abs(u1d(3, x, 0.0, 1.0, 1.0)) ** 2
    assert 2 * math.sqrt(np.trapezoid(I1 * x**2, x)) == pytest.approx(math.sqrt(7), rel=1e-9)
    geom = SensorGeometry(256, 0.5)
    I = intensity(field2d(BeamSpec(ModePair(0, 3), 6.0, 6.0), geom))
    mom = second_moment_radius(I)
    assert mom.w_sy == pytest.approx(6.0 * math.sqrt(7), rel=5e-3)
    assert mom.w_sx == pytest.approx(6.0, rel=5e-3)


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.2, 2.0, 3.5, 5.9])
def test_orientation_is_recovered(theta):
    geom = SensorGeometry(256, 0.5)
    I = intensity(field2d(BeamSpec(ModePair(1, 2), 6.0, 8.0, x0=3.0, y0=-2.0, theta=theta), geom))
    mom = second_moment_radius(I)
    diff = (mom.theta_hat - theta) % math.pi
    assert min(diff, math.pi - diff) < 0.01
    assert mom.centroid == pytest.approx((3.0, -2.0), abs=1e-6)


def test_zero_power_raises():
    with pytest.raises(ZeroPower):
        second_moment_radius(ScalarField(np.zeros((16, 16)), SensorGeometry(16)))


# -- beta ----------------------------------------------------------------------

def test_beta_examples():
    assert beta(0) == pytest.approx(1.0, abs=1e-3)
    assert beta(5) == pytest.approx(0.30151, abs=1e-3)


@pytest.mark.parametrize("n", range(11))
def test_beta_law(n):
    assert abs(beta(n) * math.sqrt(2 * n + 1) - 1) < 1e-3


def test_beta_rejects_unsupported_order():
    with pytest.raises(UnsupportedOrder):
        beta(31)


@pytest.mark.parametrize("n", [0, 1, 3, 5])
def test_beta_consistency_in_2d(n):
    w_t = 30.0
    geom = SensorGeometry(256, 1.0)
    w0 = beta(n) * w_t
    I = intensity(field2d(BeamSpec(ModePair(n, n), w0, w0, theta=0.4), geom))
    mom = second_moment_radius(I)
    assert mom.w_sx == pytest.approx(w_t, rel=1e-2)
    assert mom.w_sy == pytest.approx(w_t, rel=1e-2)


@pytest.mark.parametrize("z", [3e-179, 5e-324, -1e-300])
def test_tiny_propagation_distance_stays_finite(z):
    g = beam_geometry(4.0, z, 0.5)
    assert g.w == 4.0 and abs(g.psi) < 1e-170
    assert math.isinf(g.R) or abs(g.R) > 1e170
    assert np.all(np.isfinite(u1d(3, np.linspace(-10, 10, 21), z, 4.0, 0.5)))
