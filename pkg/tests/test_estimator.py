import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from pasflab import FrameTransformer
from pasflab.frames import parseval_residual
from pasflab.sip import make_rng


@pytest.fixture
def tau():
    return make_rng(5).uniform(-1, 1, (6, 3))


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_roundtrip(tau, p):
    est = FrameTransformer(p=p).fit(tau)
    X = make_rng(6).uniform(-1, 1, (20, 3))
    C = est.transform(X)
    assert C.shape == (20, 6)
    np.testing.assert_allclose(est.inverse_transform(C), X, atol=1e-10)
    assert est.n_features_in_ == 3 and est.n_components_ == 6


def test_complex_roundtrip():
    rng = make_rng(7)
    tau = rng.uniform(-1, 1, (5, 2)) + 1j * rng.uniform(-1, 1, (5, 2))
    est = FrameTransformer(p=3.0, field="complex").fit(tau)
    X = rng.uniform(-1, 1, (4, 2)) + 1j * rng.uniform(-1, 1, (4, 2))
    np.testing.assert_allclose(est.inverse_transform(est.transform(X)), X, atol=1e-10)


def test_separate_omega(tau):
    omega = make_rng(8).uniform(-1, 1, (6, 3))
    est = FrameTransformer(p=3.0, omega=omega).fit(tau)
    np.testing.assert_array_equal(est.frame_.omega, omega)
    X = make_rng(9).uniform(-1, 1, (5, 3))
    np.testing.assert_allclose(est.inverse_transform(est.transform(X)), X, atol=1e-10)


def test_parseval_option(tau):
    est = FrameTransformer(p=3.0, parseval=True).fit(tau)
    assert parseval_residual(est.frame_) <= 1e-9
    X = make_rng(10).uniform(-1, 1, (5, 3))
    np.testing.assert_allclose(est.synthesize(est.transform(X)), X, atol=1e-9)


def test_bounds_recorded(tau):
    est = FrameTransformer(p=2.0).fit(tau)
    assert est.analysis_bound_ == pytest.approx(np.linalg.svd(tau, compute_uv=False)[0], rel=1e-6)
    assert est.report_.a_estimate <= est.report_.b_estimate


def test_params_and_clone():
    est = FrameTransformer(p=3.0, restarts=2)
    params = est.get_params()
    assert params["p"] == 3.0 and params["restarts"] == 2
    c = clone(est)
    assert c.get_params() == params and c is not est
    est.set_params(p=1.5)
    assert est.p == 1.5


def test_pipeline(tau):
    pipe = make_pipeline(FunctionTransformer(), FrameTransformer(p=3.0))
    X = make_rng(11).uniform(-1, 1, (4, 3))
    C = pipe.fit(tau).transform(X)
    assert C.shape == (4, 6)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        FrameTransformer().transform(np.ones((1, 2)))


def test_validation(tau):
    with pytest.raises(ValueError):
        FrameTransformer(p=1.0).fit(tau)
    with pytest.raises(ValueError):
        FrameTransformer().fit(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        FrameTransformer(omega=np.ones((2, 3))).fit(tau)
    with pytest.raises(ValueError):
        FrameTransformer().fit(np.array([[1.0, np.nan]]))
    est = FrameTransformer().fit(tau)
    with pytest.raises(ValueError):
        est.transform(np.ones((2, 4)))
    with pytest.raises(ValueError):
        est.inverse_transform(np.ones((2, 5)))
