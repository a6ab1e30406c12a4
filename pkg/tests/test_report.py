import json
import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from orthant_rbm.decay import Verdict
from orthant_rbm.report import RunManifest, dumps, to_jsonable


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_floats_round_trip(x):
    assert json.loads(dumps({"x": x}))["x"] == x


def test_seventeen_digits():
    text = dumps([0.1])
    assert "0.10000000000000001" in text


def test_numpy_and_enums():
    obj = {"a": np.array([1.0, 2.0]), "b": np.int64(3), "c": np.bool_(True),
           "v": Verdict.DUAL_SKEW_SYMMETRIC}
    assert to_jsonable(obj) == {"a": [1.0, 2.0], "b": 3, "c": True, "v": "DualSkewSymmetric"}
    assert json.loads(dumps(obj))["v"] == "DualSkewSymmetric"


def test_non_finite_become_null():
    assert json.loads(dumps([math.inf, math.nan])) == [None, None]


def test_manifest_wall_time_last():
    m = RunManifest("estimate", "abc", {"dt": 1e-3}, 7, "0.1.0", 1.5)
    assert list(m.to_dict())[-1] == "wall_time"
    assert json.loads(dumps(m))["seed"] == 7
