"""Model data: covariance, drift, reflection matrix and facet selection."""

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelError",
    "ModelSpec",
    "FacetSpec",
    "WedgeAngles",
    "Violation",
    "ValidationReport",
    "validate_model",
    "facet_restrict",
    "compute_alpha",
    "load_model",
    "model_from_dict",
    "model_to_dict",
]

SYMMETRY_TOL = 1e-12
PIVOT_TOL = 1e-12


class ModelError(ValueError):
    """Raised for malformed or invalid model input."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def _frozen(a, ndim):
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise ModelError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """The triple (sigma, mu, reflection) of an orthant RBM.

    Column ``j`` of ``reflection`` is the push direction on the face
    ``x_j = 0``. Shapes are coerced but not validated here; use
    :func:`validate_model` or :meth:`require_valid`.
    """

    dimension: int
    sigma: np.ndarray
    mu: np.ndarray
    reflection: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dimension", int(self.dimension))
        object.__setattr__(self, "sigma", _frozen(self.sigma, 2))
        object.__setattr__(self, "mu", _frozen(self.mu, 1))
        object.__setattr__(self, "reflection", _frozen(self.reflection, 2))

    @classmethod
    def from_arrays(cls, sigma, mu, reflection):
        mu = np.asarray(mu, dtype=float)
        return cls(mu.shape[0], sigma, mu, reflection)

    def replace(self, **changes):
        fields = dict(dimension=self.dimension, sigma=self.sigma, mu=self.mu,
                      reflection=self.reflection)
        fields.update(changes)
        if "mu" in changes and "dimension" not in changes:
            fields["dimension"] = len(changes["mu"])
        return ModelSpec(**fields)

    def require_valid(self):
        report = validate_model(self)
        if not report.valid:
            raise ModelError("invalid model: " + "; ".join(
                v.message for v in report.violations), report)
        return self

    def __eq__(self, other):
        if not isinstance(other, ModelSpec):
            return NotImplemented
        return (self.dimension == other.dimension
                and np.array_equal(self.sigma, other.sigma)
                and np.array_equal(self.mu, other.mu)
                and np.array_equal(self.reflection, other.reflection))

    __hash__ = None


@dataclass(frozen=True)
class FacetSpec:
    """Facet ``x_{i1} = ... = x_{ik} = 0`` given by 1-based coordinate indices."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise ModelError("facet must contain at least one index")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ModelError(f"facet indices must be strictly increasing: {idx}")
        if idx[0] < 1:
            raise ModelError(f"facet indices are 1-based, got {idx[0]}")
        object.__setattr__(self, "indices", idx)

    @property
    def zero_based(self):
        return np.array(self.indices, dtype=np.intp) - 1

    def check(self, dimension):
        if self.indices[-1] > dimension:
            raise ModelError(
                f"facet index {self.indices[-1]} out of range for d={dimension}")
        return self

    def is_full(self, dimension):
        return self.indices == tuple(range(1, dimension + 1))

    def mask(self, dimension):
        self.check(dimension)
        m = np.zeros(dimension, dtype=np.bool_)
        m[self.zero_based] = True
        return m

    @classmethod
    def full(cls, dimension):
        return cls(tuple(range(1, dimension + 1)))


@dataclass(frozen=True)
class WedgeAngles:
    """Opening ``beta`` of a planar wedge and reflection angles, in radians."""

    beta: float
    delta: float
    epsilon: float

    def __post_init__(self):
        for name in ("beta", "delta", "epsilon"):
            v = getattr(self, name)
            if not 0.0 < v < math.pi:
                raise ModelError(f"{name}={v} must lie in (0, pi)")


def compute_alpha(angles):
    """Return ``(delta + epsilon - pi) / beta`` for a wedge."""
    return (angles.delta + angles.epsilon - math.pi) / angles.beta


@dataclass(frozen=True)
class Violation:
    invariant: str
    message: str
    witness: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    violations: tuple = ()

    def failed(self, invariant):
        return any(v.invariant == invariant for v in self.violations)

    def violation(self, invariant):
        """First violation of ``invariant``, or None."""
        return next((v for v in self.violations if v.invariant == invariant), None)

    def to_dict(self):
        return {
            "valid": self.valid,
            "violations": [
                {"invariant": v.invariant, "message": v.message,
                 "witness": v.witness}
                for v in self.violations
            ],
        }


def _leading_minor_failure(sigma):
    """Attempt a Cholesky factorization; return None or (k, minor value).

    ``k`` is the 1-based order of the first leading principal minor whose
    pivot falls below ``PIVOT_TOL * max(diag)``.
    """
    n = sigma.shape[0]
    scale = max(float(np.max(np.diag(sigma))), 0.0)
    tol = PIVOT_TOL * scale
    low = np.zeros_like(sigma)
    minor = 1.0
    for k in range(n):
        pivot = sigma[k, k] - low[k, :k] @ low[k, :k]
        minor *= pivot
        if not pivot > tol:
            return k + 1, float(minor)
        low[k, k] = math.sqrt(pivot)
        for i in range(k + 1, n):
            low[i, k] = (sigma[i, k] - low[i, :k] @ low[k, :k]) / low[k, k]
    return None


def validate_model(spec):
    """Check every ModelSpec invariant and collect the violations.

    Each violation names the invariant (``dimension``, ``finite``,
    ``symmetric``, ``positive_definite``, ``unit_diagonal``) and carries a
    witness: offending indices (1-based) or the failing minor.
    """
    out = []
    d = spec.dimension
    shapes = {"sigma": spec.sigma.shape, "mu": spec.mu.shape,
              "reflection": spec.reflection.shape}
    expect = {"sigma": (d, d), "mu": (d,), "reflection": (d, d)}
    if d < 1:
        out.append(Violation("dimension", f"dimension must be positive, got {d}",
                             {"dimension": d}))
    for name, shape in shapes.items():
        if shape != expect[name]:
            out.append(Violation(
                "dimension", f"{name} has shape {shape}, expected {expect[name]}",
                {"field": name, "shape": list(shape)}))
    if out:
        return ValidationReport(False, tuple(out))

    for name in ("sigma", "mu", "reflection"):
        arr = getattr(spec, name)
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0] + 1
            out.append(Violation("finite", f"{name} has a non-finite entry",
                                 {"field": name, "entry": bad.tolist()}))
    if out:
        return ValidationReport(False, tuple(out))

    sigma = spec.sigma
    asym = np.abs(sigma - sigma.T)
    tol = SYMMETRY_TOL * max(1.0, float(np.max(np.abs(sigma))))
    if np.max(asym) > tol:
        i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
        out.append(Violation(
            "symmetric",
            f"sigma not symmetric at ({i + 1},{j + 1}): |diff|={asym[i, j]:.3g}",
            {"entry": [int(i) + 1, int(j) + 1], "difference": float(asym[i, j])}))
    else:
        fail = _leading_minor_failure(0.5 * (sigma + sigma.T))
        if fail is not None:
            k, minor = fail
            out.append(Violation(
                "positive_definite",
                f"sigma not positive definite: leading minor {k} = {minor:.6g}",
                {"order": k, "minor": minor}))

    diag = np.diag(spec.reflection)
    bad = np.flatnonzero(diag != 1.0)
    if bad.size:
        i = int(bad[0])
        out.append(Violation(
            "unit_diagonal",
            f"reflection diagonal entry ({i + 1},{i + 1}) = {diag[i]} != 1",
            {"entry": [i + 1, i + 1], "value": float(diag[i])}))
    return ValidationReport(not out, tuple(out))


def facet_restrict(spec, facet):
    """Principal sub-blocks (sigma, mu, reflection) indexed by the facet."""
    facet.check(spec.dimension)
    idx = facet.zero_based
    return (spec.sigma[np.ix_(idx, idx)].copy(), spec.mu[idx].copy(),
            spec.reflection[np.ix_(idx, idx)].copy())


def model_from_dict(data):
    """Build ``(ModelSpec, FacetSpec | None)`` from the model JSON schema."""
    if not isinstance(data, dict):
        raise ModelError("model JSON must be an object")
    missing = [k for k in ("dimension", "sigma", "mu", "reflection") if k not in data]
    if missing:
        raise ModelError(f"model JSON missing keys: {', '.join(missing)}")
    try:
        spec = ModelSpec(data["dimension"], data["sigma"], data["mu"],
                         data["reflection"])
    except (TypeError, ValueError) as exc:
        raise ModelError(f"malformed model arrays: {exc}") from exc
    facet = data.get("facet")
    if facet is not None:
        facet = FacetSpec(tuple(facet)).check(spec.dimension)
    return spec, facet


def model_to_dict(spec, facet=None):
    out = {
        "dimension": spec.dimension,
        "sigma": spec.sigma.tolist(),
        "mu": spec.mu.tolist(),
        "reflection": spec.reflection.tolist(),
    }
    if facet is not None:
        out["facet"] = list(facet.indices)
    return out


def load_model(path):
    """Read a model JSON file; raises ModelError on parse or schema errors."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    except OSError as exc:
        raise ModelError(f"{path}: {exc.strerror}") from exc
    return model_from_dict(data)
