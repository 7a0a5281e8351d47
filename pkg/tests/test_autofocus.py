import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cryoholo import (
    ComplexField,
    DomainError,
    OpticsParams,
    PhantomSpec,
    RealImage,
    SweepConfig,
    back_propagate,
    gradient_magnitude,
    make_hologram,
    make_phantom,
    record_intensity,
    sweep_focus,
    tamura_coefficient,
)

from .conftest import KLH_PITCH, KLH_WAVELENGTH


def klh(dz=3e-6):
    return OpticsParams(KLH_WAVELENGTH, dz, 2e-3, KLH_PITCH)


def test_back_propagate_at_zero_is_identity():
    rng = np.random.default_rng(0)
    roi = RealImage(rng.random((16, 20)), KLH_PITCH)
    params = OpticsParams(KLH_WAVELENGTH, 0.0, 0.0, KLH_PITCH)
    q = back_propagate(roi, params, 0.0)
    np.testing.assert_allclose(q.data.real, roi.data, atol=1e-12)
    assert np.abs(q.data.imag).max() < 1e-12


def test_back_propagate_featureless_hologram():
    params = klh()
    holo = record_intensity(ComplexField(np.ones((32, 32)), KLH_PITCH), params)
    q = back_propagate(holo, params, 3e-6)
    np.testing.assert_allclose(q.data, 1.0, atol=1e-10)


@pytest.mark.parametrize("dz", [2.2e-6, 3.0e-6, 3.8e-6])
def test_back_propagation_refocuses_phase(dz):
    # the in-focus real image iθ carries the most phase signal at z = dz
    params = klh(dz)
    g, theta = make_phantom(PhantomSpec(kind="disk", radii=(15.0, 0.05)))
    holo = make_hologram(g, params)

    def projection(z):
        q = back_propagate(holo, params, z)
        return np.vdot(theta, q.data.imag) / np.vdot(theta, theta)

    at_focus = projection(dz)
    assert abs(projection(0.0)) < 1e-2
    assert at_focus > 0.25
    assert at_focus > projection(0.5 * dz)
    assert at_focus > projection(1.5 * dz)


def test_gradient_magnitude_constant_and_ramp():
    assert np.all(gradient_magnitude(ComplexField(np.full((5, 6), 2 + 1j), 1.0)).data == 0)
    ramp = np.tile(np.arange(6.0), (4, 1))
    u = gradient_magnitude(ComplexField(ramp, 1.0)).data
    expected = np.ones((4, 6))
    expected[:, -1] = 0
    np.testing.assert_array_equal(u, expected)
    np.testing.assert_array_equal(gradient_magnitude(ComplexField(1j * ramp, 1.0)).data, expected)


def test_gradient_magnitude_uses_complex_differences():
    q = np.array([[0, 1j], [1, 1 + 1j]])
    u = gradient_magnitude(ComplexField(q, 1.0)).data
    # row 0: d/dx = 1j, d/dy = 1 -> sqrt(2); last column: only d/dy = 1
    np.testing.assert_allclose(u, [[np.sqrt(2), 1], [1, 0]])


def test_tamura_examples():
    assert tamura_coefficient(RealImage(np.full((4, 4), 3.0), 1.0)) == 0
    assert tamura_coefficient(RealImage(np.zeros((4, 4)), 1.0)) == 0
    two_point = np.array([[0.0, 2.0], [0.0, 2.0]])
    assert tamura_coefficient(RealImage(two_point, 1.0)) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        tamura_coefficient(RealImage(-np.ones((2, 2)), 1.0))


def test_sweep_config_validation():
    p = klh()
    with pytest.raises(DomainError):
        SweepConfig(4e-6, 2e-6, 5e-9, p)
    with pytest.raises(DomainError):
        SweepConfig(2e-6, 4e-6, 0.0, p)
    with pytest.raises(DomainError):
        SweepConfig(2e-6, 4e-6, 3e-6, p)
    assert SweepConfig(base_params=p).z_values().size == 401


def test_sweep_minimum_is_two_points():
    # z_step <= z_max - z_min always leaves at least the two end points
    roi = RealImage(np.ones((8, 8)), KLH_PITCH)
    curve = sweep_focus(roi, SweepConfig(2e-6, 2.5e-6, 0.5e-6, klh()))
    assert curve.z_values.tolist() == pytest.approx([2e-6, 2.5e-6])


def test_sweep_constant_roi_is_flat():
    roi = RealImage(np.full((32, 32), 1.7), KLH_PITCH)
    curve = sweep_focus(roi, SweepConfig(2e-6, 2.2e-6, 20e-9, klh()))
    assert np.ptp(curve.merit) <= 1e-10
    assert curve.peak_index == 0 and curve.peak_z == 2e-6


@pytest.fixture(scope="module")
def small_hologram():
    params = klh(2.5e-6)
    g, _ = make_phantom(PhantomSpec(kind="disk", radii=(8.0, 0.05), height=64, width=64))
    return make_hologram(g, params), params


def test_sweep_matches_per_z_back_propagation(small_hologram):
    holo, params = small_hologram
    cfg = SweepConfig(2e-6, 3e-6, 0.1e-6, params)
    curve = sweep_focus(holo, cfg)
    for z, m in zip(curve.z_values, curve.merit):
        u = gradient_magnitude(back_propagate(holo, params, z))
        assert m == pytest.approx(tamura_coefficient(u), rel=1e-10)
    assert curve.merit[curve.peak_index] == curve.merit.max()
    assert np.all(np.isfinite(curve.merit)) and np.all(curve.merit >= 0)


def test_sweep_independent_of_workers(small_hologram):
    holo, params = small_hologram
    cfg = SweepConfig(2e-6, 3e-6, 50e-9, params)
    serial = sweep_focus(holo, cfg, workers=1)
    parallel = sweep_focus(holo, cfg, workers=4)
    np.testing.assert_array_equal(serial.merit, parallel.merit)


@settings(max_examples=10, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_merit_scale_invariance(c):
    rng = np.random.default_rng(7)
    roi = RealImage(rng.random((16, 16)) + 0.5, KLH_PITCH)
    cfg = SweepConfig(2e-6, 2.5e-6, 0.1e-6, klh())
    base = sweep_focus(roi, cfg).merit
    scaled = sweep_focus(RealImage(c * roi.data, KLH_PITCH), cfg).merit
    np.testing.assert_allclose(scaled, base, rtol=1e-10, atol=1e-12)


def test_merit_curve_text():
    roi = RealImage(np.ones((8, 8)), KLH_PITCH)
    curve = sweep_focus(roi, SweepConfig(2e-6, 2.01e-6, 5e-9, klh()))
    lines = curve.to_text().splitlines()
    assert lines[0].startswith("#")
    assert [float(line.split()[0]) for line in lines[1:]] == pytest.approx([2.0, 2.005, 2.01])


def test_back_propagate_rejects_negative():
    with pytest.raises(DomainError):
        back_propagate(RealImage(-np.ones((4, 4)), KLH_PITCH), klh(), 1e-6)
