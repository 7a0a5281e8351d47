import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cryoholo import ComplexField, DomainError, OpticsParams, RealImage, make_frequency_grid, wavelength_from_voltage

from .conftest import electron_wavelength


@pytest.mark.parametrize("volts, table_pm", [(120e3, 3.349), (300e3, 1.969)])
def test_wavelength_matches_oracle_and_table(volts, table_pm):
    lam = wavelength_from_voltage(volts)
    assert lam == pytest.approx(electron_wavelength(volts), rel=1e-12)
    assert lam * 1e12 == pytest.approx(table_pm, abs=5e-4)


def test_wavelength_decreases_with_voltage():
    assert wavelength_from_voltage(300e3) < wavelength_from_voltage(120e3)


@pytest.mark.parametrize("volts", [0, -120e3])
def test_wavelength_rejects_nonpositive(volts):
    with pytest.raises(DomainError):
        wavelength_from_voltage(volts)


def test_frequency_grid_n4():
    grid = make_frequency_grid(4, 4, 1.0)
    np.testing.assert_array_equal(grid.fx[0], [0, 0.25, -0.5, -0.25])
    np.testing.assert_array_equal(grid.fy[:, 0], [0, 0.25, -0.5, -0.25])


def test_frequency_grid_n2():
    grid = make_frequency_grid(2, 2, 1.0)
    np.testing.assert_array_equal(grid.fx, [[0, -0.5], [0, -0.5]])


def test_frequency_grid_nyquist():
    grid = make_frequency_grid(256, 256, 2.2e-10)
    assert np.abs(grid.fx).max() == pytest.approx(1 / 4.4e-10)
    assert np.abs(grid.fx).max() * 1e-9 == pytest.approx(2.2727, abs=1e-4)


@pytest.mark.parametrize("h, w, pitch", [(0, 4, 1.0), (4, 1, 1.0), (4, 4, 0.0), (4, 4, -1.0)])
def test_frequency_grid_rejects_bad_input(h, w, pitch):
    with pytest.raises(DomainError):
        make_frequency_grid(h, w, pitch)


@given(st.integers(2, 40), st.integers(2, 40), st.floats(1e-11, 1e-6))
def test_frequency_grid_conjugate_pairing(h, w, pitch):
    grid = make_frequency_grid(h, w, pitch)
    assert grid.fx[0, 0] == 0 and grid.fy[0, 0] == 0
    fx = grid.fx[0]
    # f(k) = -f(N-k), except the unpaired Nyquist bin of an even grid
    for k in range(1, w):
        if 2 * k != w:
            assert fx[k] == pytest.approx(-fx[w - k])
    steps = fx * w * pitch
    np.testing.assert_allclose(steps, np.round(steps), atol=1e-9)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(wavelength=0.0),
        dict(wavelength=-1e-12),
        dict(wavelength=3e-12, pixel_pitch=0.0),
        dict(wavelength=3e-12, cs=-1e-3),
        dict(wavelength=3e-12, amplitude_contrast=1.0),
        dict(wavelength=3e-12, amplitude_contrast=-0.1),
        dict(wavelength=float("nan")),
    ],
)
def test_optics_params_rejects_invalid(kwargs):
    with pytest.raises(DomainError):
        OpticsParams(**kwargs)


@given(
    st.floats(1e-13, 1e-10),
    st.floats(-1e-5, 1e-5),
    st.floats(0, 1e-2),
    st.floats(1e-11, 1e-8),
    st.floats(0, 0.99),
)
def test_optics_params_roundtrip(lam, dz, cs, pitch, w):
    p = OpticsParams(lam, dz, cs, pitch, w)
    back = OpticsParams.from_dict(json.loads(json.dumps(p.to_dict())))
    assert back == p


def test_grid_types_validate_and_freeze():
    with pytest.raises(DomainError):
        RealImage(np.array([[1.0, np.nan], [0, 0]]), 1.0)
    with pytest.raises(DomainError):
        ComplexField(np.zeros((1, 4)), 1.0)
    img = RealImage(np.ones((2, 2)), 1.0)
    with pytest.raises(ValueError):
        img.data[0, 0] = 5
    with pytest.raises(DomainError):
        RealImage(-np.ones((2, 2)), 1.0).require_nonnegative()
