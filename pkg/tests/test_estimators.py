import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fracnehari import ConfigurationError, NehariMinimizer, SuperlinearSolver, TwoSolutionSolver
from fracnehari.estimators import check_points

FAST = dict(K=32, panels=8, degree=16, n_starts=2, n_lambda0_samples=4)


def test_params_and_clone():
    est = NehariMinimizer(lambda_factor=0.3, **FAST)
    params = est.get_params()
    assert params["lambda_factor"] == 0.3 and params["K"] == 32
    twin = clone(est).set_params(seed=4)
    assert twin.seed == 4 and est.seed == 0
    assert set(TwoSolutionSolver().get_params()) > set(params)


def test_minimizer_fit_predict():
    est = NehariMinimizer(**FAST).fit()
    assert est.converged_ and est.energy_ < 0
    assert est.lambda_ == pytest.approx(0.5 * est.lambda0_.lambda0_hat)
    x = np.linspace(-1, 1, 7)
    pred = est.predict(x)
    assert pred.shape == (7, 2)
    assert np.allclose(pred[[0, -1]], 0, atol=1e-12)
    # predict agrees with the traces at the quadrature nodes
    nodes = est.basis_.nodes[:5]
    assert np.allclose(est.predict(nodes).T, est.basis_.synthesize(est.coef_)[:, :5], atol=1e-12)


def test_two_solution_solver():
    est = TwoSolutionSolver(**FAST).fit()
    assert est.first_.converged and est.second_.converged
    assert est.gap_ > 1e-2
    assert est.first_.energy <= est.level_
    pred = est.predict(np.array([[0.0], [0.5]]))
    assert pred.shape == (2, 4)
    assert np.all(pred[:, 2:] >= pred[:, :2] - 1e-8)


def test_superlinear_solver():
    est = SuperlinearSolver(K=32, panels=8, degree=16).fit()
    assert est.below_threshold_ and est.level_ > est.rim_ > 0
    assert est.predict([0.0]).shape == (1, 2)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        NehariMinimizer().predict([0.0])


def test_point_validation():
    assert check_points([0.0, 1.0]).shape == (2,)
    with pytest.raises(ValueError):
        check_points([2.0])
    with pytest.raises(ValueError):
        check_points(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        check_points([np.nan])


def test_invalid_hyperparameters():
    with pytest.raises(ConfigurationError):
        NehariMinimizer(lambda_factor=-1.0, **FAST).fit()
    with pytest.raises(ConfigurationError):
        NehariMinimizer(lam=0.0, **FAST).fit()
