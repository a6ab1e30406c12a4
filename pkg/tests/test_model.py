import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import E1
from orthant_rbm.model import (
    FacetSpec,
    ModelError,
    ModelSpec,
    WedgeAngles,
    compute_alpha,
    facet_restrict,
    load_model,
    model_from_dict,
    model_to_dict,
    validate_model,
)


def test_valid_identity_model(e1):
    report = validate_model(e1)
    assert report.valid
    assert report.violations == ()


def test_indefinite_sigma_names_minor():
    spec = ModelSpec(2, [[1, 2], [2, 1]], [1, 1], [[1, -1], [-1, 1]])
    report = validate_model(spec)
    assert not report.valid
    v = report.violation("positive_definite")
    assert v.witness["order"] == 2
    assert v.witness["minor"] == pytest.approx(-3.0)


def test_non_unit_diagonal():
    spec = ModelSpec(2, np.eye(2), [1, 1], [[2, 0], [0, 1]])
    v = validate_model(spec).violation("unit_diagonal")
    assert v.witness["entry"] == [1, 1]
    # no tolerance: 1 + 1e-15 is rejected too
    spec = ModelSpec(2, np.eye(2), [1, 1], [[1 + 1e-15, 0], [0, 1]])
    assert not validate_model(spec).valid


def test_asymmetric_sigma():
    spec = ModelSpec(2, [[1, 0.1], [0.0, 1]], [1, 1], np.eye(2))
    v = validate_model(spec).violation("symmetric")
    assert v.witness["entry"] in ([1, 2], [2, 1])


def test_dimension_mismatch():
    spec = ModelSpec(3, np.eye(2), [1, 1], np.eye(2))
    report = validate_model(spec)
    assert not report.valid
    assert all(v.invariant == "dimension" for v in report.violations)


def test_non_finite_entry():
    spec = ModelSpec(2, np.eye(2), [1, np.nan], np.eye(2))
    assert validate_model(spec).failed("finite")


def test_arrays_are_read_only(e1):
    with pytest.raises(ValueError):
        e1.sigma[0, 0] = 5.0


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_validation_agrees_with_eigenvalues(d, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d))
    sigma = A @ A.T + rng.uniform(-1.0, 1.0) * np.eye(d)
    spec = ModelSpec(d, sigma, np.ones(d), np.eye(d))
    eig = np.linalg.eigvalsh(sigma)
    if eig.min() > 1e-9 * eig.max():
        assert validate_model(spec).valid
    elif eig.min() < -1e-9:
        assert validate_model(spec).failed("positive_definite")


def test_facet_restrict_blocks(facet_model):
    spec, facet = facet_model
    sig, mu, R = facet_restrict(spec, facet)
    np.testing.assert_array_equal(sig, np.eye(2))
    np.testing.assert_array_equal(R, [[1, -1], [-1, 1]])
    np.testing.assert_array_equal(mu, [1, 1])


def test_facet_restrict_full_set(facet_model):
    spec, _ = facet_model
    sig, mu, R = facet_restrict(spec, FacetSpec((1, 2, 3)))
    np.testing.assert_array_equal(sig, spec.sigma)
    np.testing.assert_array_equal(mu, spec.mu)
    np.testing.assert_array_equal(R, spec.reflection)


@pytest.mark.parametrize("indices", [(), (2, 1), (1, 1), (0, 1)])
def test_bad_facets(indices):
    with pytest.raises(ModelError):
        FacetSpec(indices)


def test_facet_out_of_range(e1):
    with pytest.raises(ModelError):
        facet_restrict(e1, FacetSpec((1, 3)))


@pytest.mark.parametrize("angles,alpha", [
    ((math.pi / 2, math.pi / 2, math.pi / 2), 0.0),
    ((math.pi / 2, 3 * math.pi / 4, 3 * math.pi / 4), 1.0),
    ((math.pi / 2, math.pi / 4, math.pi / 4), -1.0),
])
def test_compute_alpha(angles, alpha):
    assert compute_alpha(WedgeAngles(*angles)) == pytest.approx(alpha, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(beta=st.floats(0.1, 1.5), delta=st.floats(0.1, 3.0), eps=st.floats(0.1, 3.0),
       c=st.floats(0.2, 2.0))
def test_alpha_homogeneity(beta, delta, eps, c):
    # rescale the excess delta+eps-pi by c while keeping the angles admissible
    excess = c * (delta + eps - math.pi)
    d2 = e2 = (excess + math.pi) / 2
    if not (0 < d2 < math.pi and c * beta < math.pi):
        return
    a = compute_alpha(WedgeAngles(beta, delta, eps))
    b = compute_alpha(WedgeAngles(c * beta, d2, e2))
    assert b == pytest.approx(a, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("bad", [0.0, math.pi, -0.1])
def test_wedge_angles_range(bad):
    with pytest.raises(ModelError):
        WedgeAngles(bad, 1.0, 1.0)


def test_json_round_trip(e1, model_file):
    spec, facet = load_model(model_file(dict(E1, facet=[1, 2])))
    assert spec == e1
    assert facet.indices == (1, 2)
    again, _ = model_from_dict(model_to_dict(spec, facet))
    assert again == spec


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"dimension": 2, "sigma": [[1,0]')
    with pytest.raises(ModelError, match="line 1 column"):
        load_model(str(path))


def test_missing_keys():
    with pytest.raises(ModelError, match="reflection"):
        model_from_dict({"dimension": 2, "sigma": [[1]], "mu": [1]})
