"""Classification of exponential absorption and the decay vector.

Also hosts the classical skew-symmetry analytics (product-form stationary
rates and the dual boundary matrix) used for the recurrent contrast.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .matrix import AssumptionReport, check_assumptions, lemma2_certificate, matrix_rank
from .model import FacetSpec, facet_restrict

__all__ = [
    "SINGULAR_TOL",
    "Verdict",
    "Normalization",
    "Classification",
    "DecayVector",
    "StationaryRates",
    "SingularMatrixError",
    "classify",
    "reflection_block",
    "compute_decay_vector",
    "decay_from_kernel",
    "predicted_absorption",
    "check_skew_symmetry",
    "stationary_rates",
    "dual_boundary_matrix",
]

SINGULAR_TOL = 1e-9


class Verdict(str, enum.Enum):
    DUAL_SKEW_SYMMETRIC = "DualSkewSymmetric"
    NO_EXPONENTIAL_FORM = "NoExponentialForm"
    ASSUMPTIONS_VIOLATED = "AssumptionsViolated"


class Normalization(str, enum.Enum):
    """How the left kernel is scaled into the decay vector.

    ``HARMONIC`` solves ``a.R = 0`` and ``a Sigma a / 2 + a.mu = 0`` (the
    generator of the Brownian part carries the factor 1/2); ``PAPER_LITERAL``
    drops the 1/2 and is kept for comparison only.
    """

    HARMONIC = "harmonic"
    PAPER_LITERAL = "paper"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        value = str(value).lower()
        aliases = {"harmonic": cls.HARMONIC, "paper": cls.PAPER_LITERAL,
                   "paperliteral": cls.PAPER_LITERAL, "paper_literal": cls.PAPER_LITERAL}
        try:
            return aliases[value]
        except KeyError:
            raise ValueError(f"unknown normalization {value!r}") from None


class SingularMatrixError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    det_r: float
    smallest_singular_value: float
    largest_singular_value: float
    assumption_report: AssumptionReport

    def to_dict(self):
        return {
            "verdict": self.verdict.value,
            "det_r": self.det_r,
            "smallest_singular_value": self.smallest_singular_value,
            "largest_singular_value": self.largest_singular_value,
            "assumptions": self.assumption_report.to_dict(),
        }


def reflection_block(spec, facet=None):
    """(sigma, mu, R) of the model, or their facet sub-blocks."""
    if facet is None or facet.is_full(spec.dimension):
        return spec.sigma, spec.mu, spec.reflection
    return facet_restrict(spec, facet)


def classify(spec, facet=None):
    """Apply the det R = 0 criterion, on the facet block when one is given."""
    report = check_assumptions(spec, facet)
    _, _, R = reflection_block(spec, facet)
    s = np.linalg.svd(R, compute_uv=False)
    det = float(np.linalg.det(R))
    if not report.all_hold:
        verdict = Verdict.ASSUMPTIONS_VIOLATED
    elif s[-1] <= SINGULAR_TOL * s[0]:
        verdict = Verdict.DUAL_SKEW_SYMMETRIC
    else:
        verdict = Verdict.NO_EXPONENTIAL_FORM
    return Classification(verdict, det, float(s[-1]), float(s[0]), report)


@dataclass(frozen=True)
class DecayVector:
    """Exponent ``a`` of the absorption probability ``exp(a.x)``.

    In facet mode ``a`` has one entry per facet coordinate, in facet order.
    """

    a: np.ndarray
    normalization: Normalization
    a_prime: np.ndarray
    quad: float
    facet: FacetSpec = None

    def coordinates(self, x):
        x = np.asarray(x, dtype=float)
        if self.facet is None:
            return x
        return x[..., self.facet.zero_based]

    def to_dict(self):
        return {
            "a": self.a.tolist(),
            "normalization": self.normalization.value,
            "a_prime": self.a_prime.tolist(),
            "quad": self.quad,
            "facet": None if self.facet is None else list(self.facet.indices),
        }


def decay_from_kernel(a_prime, sigma, mu, normalization=Normalization.HARMONIC):
    """Scale a positive left-kernel vector into the decay vector."""
    norm = Normalization.parse(normalization)
    a_prime = np.asarray(a_prime, dtype=float)
    quad = float(a_prime @ sigma @ a_prime)
    if not quad > 0:
        raise ArithmeticError(f"quadratic form a' Sigma a' = {quad} is not positive")
    factor = 2.0 if norm is Normalization.HARMONIC else 1.0
    a = -factor * float(a_prime @ mu) / quad * a_prime
    return a, quad


def compute_decay_vector(spec, facet=None, normalization=Normalization.HARMONIC):
    """Decay vector of a dual skew symmetric model (apex or facet)."""
    norm = Normalization.parse(normalization)
    cls = classify(spec, facet)
    if cls.verdict is not Verdict.DUAL_SKEW_SYMMETRIC:
        raise ValueError(f"model is {cls.verdict.value}, not DualSkewSymmetric")
    sigma, mu, R = reflection_block(spec, facet)
    cert = lemma2_certificate(R)
    a, quad = decay_from_kernel(cert.a_prime, sigma, mu, norm)
    if facet is not None and facet.is_full(spec.dimension):
        facet = None
    return DecayVector(a=a, normalization=norm, a_prime=cert.a_prime,
                       quad=quad, facet=facet)


def predicted_absorption(decay, x):
    """``exp(a.x)``; accepts a single point or a stack of points."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("starting point must lie in the orthant")
    return np.exp(decay.coordinates(x) @ decay.a)


def check_skew_symmetry(sigma, R, rel_tol=1e-10):
    """Test ``2 Sigma = R diag(Sigma) + diag(Sigma) R^T``; returns (ok, residual)."""
    sigma = np.asarray(sigma, dtype=float)
    R = np.asarray(R, dtype=float)
    D = np.diag(np.diag(sigma))
    lhs, rd = 2.0 * sigma, R @ D
    residual = float(np.max(np.abs(lhs - rd - rd.T)))
    scale = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rd))))
    return residual <= rel_tol * scale, residual


@dataclass(frozen=True)
class StationaryRates:
    """Rates ``c`` of the product-form density ``prod c_i exp(-c.x)``.

    Meaningful only for skew symmetric, positive recurrent models; no
    recurrence check is made here.
    """

    c: np.ndarray

    def to_dict(self):
        return {"c": self.c.tolist()}


def _check_invertible(R):
    rank, s = matrix_rank(R, rel_tol=1e-12)
    if rank < R.shape[0]:
        raise SingularMatrixError(
            f"reflection matrix is singular (smallest singular value {s[-1]:.3g})")


def stationary_rates(sigma, R, mu):
    """``c = -2 diag(Sigma)^{-1} R^{-1} mu``."""
    sigma = np.asarray(sigma, dtype=float)
    R = np.asarray(R, dtype=float)
    _check_invertible(R)
    c = -2.0 * np.linalg.solve(R, np.asarray(mu, dtype=float)) / np.diag(sigma)
    return StationaryRates(c)


def dual_boundary_matrix(sigma, R):
    """``R* = 2 Sigma - R diag(Sigma)``; column ``i`` acts on the face ``x_i = 0``."""
    sigma = np.asarray(sigma, dtype=float)
    R = np.asarray(R, dtype=float)
    return 2.0 * sigma - R @ np.diag(np.diag(sigma))
