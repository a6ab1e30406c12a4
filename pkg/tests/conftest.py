import json

import numpy as np
import pytest

from orthant_rbm.model import FacetSpec, ModelSpec

E1 = dict(dimension=2, sigma=[[1.0, 0.0], [0.0, 1.0]], mu=[1.0, 1.0],
          reflection=[[1.0, -1.0], [-1.0, 1.0]])
E2 = dict(dimension=3, sigma=np.eye(3).tolist(), mu=[1.0, 1.0, 1.0],
          reflection=[[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [-1.0, 0.0, 1.0]])
E3 = dict(dimension=2, sigma=[[1.0, 0.5], [0.5, 1.0]], mu=[2.0, 1.0],
          reflection=[[1.0, -2.0], [-0.5, 1.0]])
FACET3 = dict(dimension=3, sigma=np.eye(3).tolist(), mu=[1.0, 1.0, 1.0],
              reflection=[[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


def spec_of(d):
    return ModelSpec(d["dimension"], d["sigma"], d["mu"], d["reflection"])


@pytest.fixture
def e1():
    return spec_of(E1)


@pytest.fixture
def e2():
    return spec_of(E2)


@pytest.fixture
def e3():
    return spec_of(E3)


@pytest.fixture
def facet_model():
    return spec_of(FACET3), FacetSpec((1, 2))


@pytest.fixture
def model_file(tmp_path):
    def write(data, name="model.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)
    return write


def random_singular_reflection(rng, d, mix=0.3):
    """Unit-diagonal R with a'R = 0 for a random a' > 0.

    Off-diagonal column entries are a random split of -a'_j, mostly
    non-positive, so strict principal blocks are usually S.
    """
    a_prime = rng.uniform(0.2, 2.0, d)
    R = np.eye(d)
    for j in range(d):
        while True:
            w = rng.uniform(-mix, 1.0, d - 1)
            if w.sum() > 0.1:
                break
        w /= w.sum()
        others = [i for i in range(d) if i != j]
        R[others, j] = -w * a_prime[j] / a_prime[others]
    return R, a_prime


# ---------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary

ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = dict(item.user_properties).get("detail", "")
        ACCEPTANCE[marker.args[0]] = (rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
