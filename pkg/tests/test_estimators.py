import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import E1
from orthant_rbm.estimators import ExponentialAbsorption, MonteCarloAbsorption
from orthant_rbm.montecarlo import estimate_absorption
from orthant_rbm.simulator import SimConfig


def test_exponential_params_roundtrip():
    est = ExponentialAbsorption(normalization="paper", facet=(1, 2))
    assert est.get_params() == {"normalization": "paper", "facet": (1, 2)}
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    est.set_params(normalization="harmonic")
    assert est.normalization == "harmonic"


def test_exponential_fit_predict(e1):
    est = ExponentialAbsorption().fit(e1)
    np.testing.assert_allclose(est.a_, [-2, -2])
    p = est.predict_proba([[0.5, 0.5], [0, 0], [5, 5]])
    np.testing.assert_allclose(p, [math.exp(-2), 1.0, math.exp(-20)])


def test_exponential_accepts_dict_and_facet(facet_model):
    spec, _ = facet_model
    est = ExponentialAbsorption(facet=[1, 2]).fit(spec)
    assert est.predict_proba([0.5, 0.5, 9.0])[0] == pytest.approx(math.exp(-2))
    assert ExponentialAbsorption().fit(E1).predict_proba([[0.5, 0.5]])[0] == \
        pytest.approx(math.exp(-2))


def test_exponential_not_fitted():
    with pytest.raises(NotFittedError):
        ExponentialAbsorption().predict_proba([[0.5, 0.5]])


def test_exponential_rejects_non_singular(e1):
    with pytest.raises(ValueError):
        ExponentialAbsorption().fit(e1.replace(reflection=[[1, -2], [-2, 1]]))


def test_input_validation(e1):
    est = ExponentialAbsorption().fit(e1)
    with pytest.raises(ValueError):
        est.predict_proba([[0.5, 0.5, 0.5]])
    with pytest.raises(ValueError):
        est.predict_proba([[-0.5, 0.5]])
    with pytest.raises(ValueError):
        est.predict_proba([[np.nan, 0.5]])


def test_monte_carlo_matches_function(e1):
    est = MonteCarloAbsorption(n_trajectories=500, escape_radius=5.0, seed=2).fit(e1)
    p = est.predict_proba([[0.5, 0.5], [0.2, 0.2]])
    ref = estimate_absorption(e1, [0.2, 0.2], 500, SimConfig(escape_radius=5.0), seed=2)
    assert p[1] == ref.p_hat
    assert est.reports_[1] == ref
    ci = est.predict_interval([[0.2, 0.2]])
    np.testing.assert_allclose(ci, [[ref.ci_low, ref.ci_high]])


def test_monte_carlo_clone_and_workers(e1):
    est = MonteCarloAbsorption(n_trajectories=300, escape_radius=5.0)
    twin = clone(est).set_params(workers=4)
    a = est.fit(e1).predict_proba([[0.5, 0.5]])
    b = twin.fit(e1).predict_proba([[0.5, 0.5]])
    np.testing.assert_array_equal(a, b)
