import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from cryoholo import DefocusEstimator, OpticsParams, PhantomSpec, PhaseRetriever, make_hologram, make_phantom
from cryoholo.estimators import check_roi_stack

from .conftest import KLH_PITCH, KLH_WAVELENGTH


@pytest.fixture(scope="module")
def stack():
    g, _ = make_phantom(PhantomSpec(kind="disk", radii=(8.0, 0.05), height=64, width=64))
    holos = [make_hologram(g, OpticsParams(KLH_WAVELENGTH, dz, 2e-3, KLH_PITCH)).data for dz in (1.0e-6, 1.2e-6)]
    return np.stack(holos)


def test_check_roi_stack():
    assert check_roi_stack(np.ones((4, 6))).shape == (1, 4, 6)
    for bad in (np.ones(4), np.ones((1, 3, 4)), np.ones((0, 4, 4)), -np.ones((4, 4)), np.full((4, 4), np.nan)):
        with pytest.raises(ValueError):
            check_roi_stack(bad)


def test_params_and_clone():
    est = DefocusEstimator(z_step=1e-8)
    assert est.get_params()["z_step"] == 1e-8
    twin = clone(est.set_params(cs=1e-3))
    assert twin.get_params() == est.get_params()
    ret = PhaseRetriever(max_iters=3)
    assert clone(ret).get_params()["max_iters"] == 3


def test_defocus_estimator_fit_predict(stack):
    est = DefocusEstimator(wavelength=KLH_WAVELENGTH, z_min=0.8e-6, z_max=1.4e-6, z_step=20e-9)
    with pytest.raises(NotFittedError):
        est.predict(stack)
    dz = est.fit_predict(stack)
    assert dz.shape == (2,) and len(est.merit_curves_) == 2
    np.testing.assert_allclose(dz, [1.0e-6, 1.2e-6], atol=40e-9)
    np.testing.assert_array_equal(est.predict(stack), dz)


def test_defocus_estimator_rejects_bad_sweep(stack):
    with pytest.raises(ValueError):
        DefocusEstimator(z_min=3e-6, z_max=2e-6).fit(stack)


def test_phase_retriever_outputs(stack):
    ret = PhaseRetriever(wavelength=KLH_WAVELENGTH, max_iters=4, defocus=[1.0e-6, 1.2e-6]).fit(stack)
    phase = ret.transform(stack)
    assert phase.shape == stack.shape and phase.dtype == np.float64
    assert [r.iterations for r in ret.results_] == [4, 4]
    waves = ret.set_params(output="exit_wave").transform(stack)
    np.testing.assert_allclose(np.angle(waves), phase)
    amps = ret.set_params(output="amplitude").transform(stack[:1], defocus=1.0e-6)
    assert amps.shape == (1, 64, 64)
    assert -1 <= ret.set_params(defocus=1.0e-6).score(stack[:1]) < 0


def test_phase_retriever_validation(stack):
    with pytest.raises(NotFittedError):
        PhaseRetriever().transform(stack)
    with pytest.raises(ValueError):
        PhaseRetriever(output="magic").fit()
    with pytest.raises(ValueError):
        PhaseRetriever(tau=-1.0).fit()
    with pytest.raises(ValueError):
        PhaseRetriever(max_iters=2).fit().transform(stack, defocus=[1e-6, 2e-6, 3e-6])
