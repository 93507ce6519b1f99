import json
import math

import numpy as np

from funnel_semiconvex.serialize import csv_text, dumps, fmt_float


def test_floats_use_seventeen_significant_digits():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert float(fmt_float(math.pi)) == math.pi
    assert fmt_float(-0.0) == "0"


def test_non_finite_become_null():
    out = json.loads(dumps({"a": float("nan"), "b": [1.0, float("inf")], "c": np.float64(2.5)}))
    assert out == {"a": None, "b": [1, None], "c": 2.5}


def test_numpy_and_bool_values():
    text = dumps({"flag": np.bool_(True), "n": np.int64(3), "v": np.array([1.5, 2.0])})
    assert json.loads(text) == {"flag": True, "n": 3, "v": [1.5, 2]}


def test_csv_has_header_and_lf_only():
    text = csv_text(["x", "y"], [(1.0, 0.1), (2.0, float("nan"))])
    assert text == "x,y\n1,0.10000000000000001\n2,nan\n"
    assert "\r" not in text
