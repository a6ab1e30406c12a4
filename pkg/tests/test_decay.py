import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_singular_reflection
from orthant_rbm.decay import (
    Normalization,
    SingularMatrixError,
    Verdict,
    check_skew_symmetry,
    classify,
    compute_decay_vector,
    decay_from_kernel,
    dual_boundary_matrix,
    predicted_absorption,
    stationary_rates,
)
from orthant_rbm.matrix import check_assumptions
from orthant_rbm.model import ModelSpec


def test_classify_examples(e1):
    assert classify(e1).verdict is Verdict.DUAL_SKEW_SYMMETRIC
    # det = 0.5, but this R is S (x = (1, 0.6) gives Rx = (0.4, 0.1) > 0)
    c = classify(e1.replace(reflection=[[1, -1], [-0.5, 1]]))
    assert c.det_r == pytest.approx(0.5)
    assert c.verdict is Verdict.ASSUMPTIONS_VIOLATED
    x = c.assumption_report.a1_certificate.primal
    assert np.min(np.array([[1, -1], [-0.5, 1]]) @ x) > 0
    # not S, strict blocks S, det = -3
    c = classify(e1.replace(reflection=[[1, -2], [-2, 1]]))
    assert c.verdict is Verdict.NO_EXPONENTIAL_FORM
    assert c.det_r == pytest.approx(-3.0)
    assert classify(e1.replace(reflection=np.eye(2))).verdict is Verdict.ASSUMPTIONS_VIOLATED


def test_decay_e1(e1):
    dv = compute_decay_vector(e1)
    np.testing.assert_allclose(dv.a, [-2, -2], rtol=1e-13)
    lit = compute_decay_vector(e1, normalization="paper")
    np.testing.assert_allclose(lit.a, [-1, -1], rtol=1e-13)
    assert lit.normalization is Normalization.PAPER_LITERAL


def test_decay_e3(e3):
    dv = compute_decay_vector(e3)
    np.testing.assert_allclose(dv.a, [-8 / 7, -16 / 7], rtol=1e-13)
    ap = dv.a_prime / dv.a_prime[0]
    np.testing.assert_allclose(ap, [1, 2], rtol=1e-12)


def test_decay_e2(e2):
    np.testing.assert_allclose(compute_decay_vector(e2).a, [-2, -2, -2], rtol=1e-13)


def test_facet_decay(facet_model):
    spec, facet = facet_model
    assert classify(spec, facet).verdict is Verdict.DUAL_SKEW_SYMMETRIC
    dv = compute_decay_vector(spec, facet)
    np.testing.assert_allclose(dv.a, [-2, -2], rtol=1e-13)
    # only facet coordinates matter
    assert predicted_absorption(dv, [0.5, 0.5, 1.0]) == pytest.approx(math.exp(-2))
    assert predicted_absorption(dv, [0.5, 0.5, 7.0]) == pytest.approx(math.exp(-2))


def test_decay_refuses_non_singular(e1):
    with pytest.raises(ValueError):
        compute_decay_vector(e1.replace(reflection=[[1, -1], [-0.5, 1]]))


def test_predicted_absorption(e1):
    dv = compute_decay_vector(e1)
    assert predicted_absorption(dv, [0, 0]) == 1.0
    assert predicted_absorption(dv, [0.5, 0.5]) == pytest.approx(0.1353352832366127, rel=1e-14)
    assert predicted_absorption(dv, [5, 5]) == pytest.approx(2.061153622438558e-09, rel=1e-12)
    with pytest.raises(ValueError):
        predicted_absorption(dv, [-1, 0])


@pytest.mark.parametrize("lam", [0.5, 3.0])
def test_kernel_scale_invariance(e3, lam):
    base, _ = decay_from_kernel([1.0, 2.0], e3.sigma, e3.mu)
    scaled, _ = decay_from_kernel(lam * np.array([1.0, 2.0]), e3.sigma, e3.mu)
    np.testing.assert_allclose(scaled, base, rtol=1e-14)


def _random_dss(seed, d):
    rng = np.random.default_rng(seed)
    R, a_prime = random_singular_reflection(rng, d)
    A = rng.normal(size=(d, d))
    sigma = A @ A.T + 0.5 * np.eye(d)
    spec = ModelSpec(d, sigma, rng.uniform(0.1, 3.0, d), R)
    return spec, a_prime


def _angle(u, v):
    # chord form stays accurate for nearly parallel vectors, unlike acos
    u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
    return 2 * math.asin(min(1.0, np.linalg.norm(u - v) / 2))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_random_factory_properties(d, seed):
    spec, a_prime = _random_dss(seed, d)
    if not check_assumptions(spec).all_hold:
        return
    assert classify(spec).verdict is Verdict.DUAL_SKEW_SYMMETRIC
    for norm, factor in ((Normalization.HARMONIC, 0.5), (Normalization.PAPER_LITERAL, 1.0)):
        dv = compute_decay_vector(spec, normalization=norm)
        a = dv.a
        assert np.all(a < 0)
        scale = np.linalg.norm(a) ** 2 * np.linalg.norm(spec.sigma, 2) \
            + np.linalg.norm(a) * np.linalg.norm(spec.mu)
        assert abs(factor * a @ spec.sigma @ a + a @ spec.mu) <= 1e-12 * scale
        assert np.max(np.abs(a @ spec.reflection)) <= \
            1e-10 * np.linalg.norm(a) * np.linalg.norm(spec.reflection, np.inf)
    # uniqueness: an independent null-space solve is parallel to a'
    _, _, vt = np.linalg.svd(spec.reflection.T)
    assert _angle(np.abs(vt[-1]), dv.a_prime) < 1e-8
    assert _angle(a_prime, dv.a_prime) < 1e-8


def test_skew_symmetry_examples():
    assert check_skew_symmetry(np.eye(2), np.eye(2)) == (True, 0.0)
    ok, res = check_skew_symmetry(np.eye(2), [[1, -1], [-1, 1]])
    assert not ok and res == pytest.approx(2.0)
    ok, _ = check_skew_symmetry([[1, 0.5], [0.5, 1]], [[1, 0.5], [0.5, 1]])
    assert ok


@pytest.mark.parametrize("sigma,mu,c", [
    (np.eye(2), [-1, -1], [2, 2]),
    (np.eye(2), [0, 0], [0, 0]),
    (np.diag([4.0, 1.0]), [-2, -1], [1, 2]),
])
def test_stationary_rates(sigma, mu, c):
    rates = stationary_rates(sigma, np.eye(2), mu).c
    np.testing.assert_allclose(rates, c, atol=1e-15)
    # re-substitution
    np.testing.assert_allclose(-0.5 * np.eye(2) @ np.diag(np.diag(sigma)) @ rates, mu,
                               atol=1e-12)


def test_stationary_rates_singular():
    with pytest.raises(SingularMatrixError):
        stationary_rates(np.eye(2), [[1, -1], [-1, 1]], [-1, -1])


@pytest.mark.parametrize("sigma,R,expected", [
    (np.eye(2), np.eye(2), np.eye(2)),
    (np.eye(2), [[1, -1], [-1, 1]], [[1, 1], [1, 1]]),
    (2 * np.eye(2), np.eye(2), 2 * np.eye(2)),
])
def test_dual_boundary_matrix(sigma, R, expected):
    np.testing.assert_allclose(dual_boundary_matrix(sigma, R), expected)
