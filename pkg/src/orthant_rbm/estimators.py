"""scikit-learn style estimators of the absorption probability.

Both estimators are fitted on a model (a ``ModelSpec`` or a model dict)
rather than on data, and ``predict_proba`` maps an ``(n_points, d)`` array
of starting points to absorption probabilities.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .decay import Normalization, Verdict, classify, compute_decay_vector
from .model import FacetSpec, ModelSpec, model_from_dict
from .montecarlo import estimate_absorption
from .simulator import SimConfig

__all__ = [
    "ExponentialAbsorption",
    "MonteCarloAbsorption",
    "check_model",
    "check_facet",
    "check_starts",
]


def check_model(model):
    """Accept a ``ModelSpec`` or a model dict; return a validated spec."""
    if isinstance(model, dict):
        model, _ = model_from_dict(model)
    if not isinstance(model, ModelSpec):
        raise TypeError(f"expected a ModelSpec or model dict, got {type(model).__name__}")
    model.require_valid()
    return model


def check_facet(facet, dimension):
    if facet is None:
        return None
    if not isinstance(facet, FacetSpec):
        facet = FacetSpec(tuple(int(i) for i in facet))
    return facet.check(dimension)


def check_starts(X, dimension):
    """Validate a stack of starting points in the closed orthant."""
    X = check_array(X, ensure_2d=False, dtype=np.float64)
    X = np.atleast_2d(X)
    if X.shape[1] != dimension:
        raise ValueError(f"starting points must have {dimension} coordinates, got {X.shape[1]}")
    if np.any(X < 0):
        raise ValueError("starting points must lie in the orthant")
    return X


class ExponentialAbsorption(BaseEstimator):
    """Closed-form absorption probability ``exp(a.x)``.

    Fitting classifies the model and computes the decay vector; it fails for
    models that are not dual skew symmetric.

    Attributes set by ``fit``: ``spec_``, ``facet_``, ``classification_``,
    ``decay_`` and ``a_``.
    """

    def __init__(self, normalization="harmonic", facet=None):
        self.normalization = normalization
        self.facet = facet

    def fit(self, model, y=None):
        spec = check_model(model)
        facet = check_facet(self.facet, spec.dimension)
        cls = classify(spec, facet)
        if cls.verdict is not Verdict.DUAL_SKEW_SYMMETRIC:
            raise ValueError(f"model is {cls.verdict.value}, not DualSkewSymmetric")
        self.spec_ = spec
        self.facet_ = facet
        self.classification_ = cls
        self.decay_ = compute_decay_vector(spec, facet, Normalization.parse(self.normalization))
        self.a_ = self.decay_.a
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "decay_")
        X = check_starts(X, self.spec_.dimension)
        return np.exp(self.decay_.coordinates(X) @ self.a_)


class MonteCarloAbsorption(BaseEstimator):
    """Monte Carlo absorption probability with Wilson intervals.

    Each starting point is estimated from trajectories ``0 .. n-1`` of the
    same seed, so predictions are reproducible and independent of
    ``workers``. The full reports of the last prediction are kept in
    ``reports_``.
    """

    def __init__(self, n_trajectories=10_000, dt=1e-3, eps_abs=None,
                 escape_radius=None, max_time=100.0, seed=0, workers=1,
                 facet=None, allow_degenerate=False):
        self.n_trajectories = n_trajectories
        self.dt = dt
        self.eps_abs = eps_abs
        self.escape_radius = escape_radius
        self.max_time = max_time
        self.seed = seed
        self.workers = workers
        self.facet = facet
        self.allow_degenerate = allow_degenerate

    def fit(self, model, y=None):
        spec = check_model(model)
        self.spec_ = spec
        self.facet_ = check_facet(self.facet, spec.dimension)
        self.config_ = SimConfig(dt=self.dt, eps_abs=self.eps_abs,
                                 escape_radius=self.escape_radius,
                                 max_time=self.max_time)
        if int(self.n_trajectories) < 1:
            raise ValueError("n_trajectories must be positive")
        return self

    def _estimate(self, X):
        check_is_fitted(self, "spec_")
        X = check_starts(X, self.spec_.dimension)
        self.reports_ = [
            estimate_absorption(self.spec_, x, int(self.n_trajectories), self.config_,
                                self.seed, self.facet_, self.workers,
                                self.allow_degenerate)
            for x in X]
        return self.reports_

    def predict_proba(self, X):
        return np.array([r.p_hat for r in self._estimate(X)])

    def predict_interval(self, X):
        """Wilson 95% intervals, shape ``(n_points, 2)``."""
        return np.array([[r.ci_low, r.ci_high] for r in self._estimate(X)])
