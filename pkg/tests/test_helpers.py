import json
import logging
import math

import numpy as np

from utils.helpers import configure_logging, ensure_dir, growth_factors, spread, to_jsonable


def test_growth_factors():
    assert growth_factors([1.0, 2.0, 3.0]) == [2.0, 1.5]
    assert growth_factors([0.0, 0.0, 1.0]) == [1.0, math.inf]
    assert growth_factors([5.0]) == []


def test_spread():
    assert spread([]) == 0.0
    assert spread([2.0, 3.0]) == 0.5
    assert spread([0.0, 0.0]) == 0.0
    assert spread([0.0, 1.0]) == math.inf


def test_to_jsonable_converts_numpy_and_non_finite():
    value = {
        "array": np.array([1.0, 2.0]),
        "int": np.int64(3),
        "flag": np.bool_(True),
        "pair": (np.float64(0.5), math.nan),
        1: -math.inf,
    }
    out = to_jsonable(value)
    assert out == {"array": [1.0, 2.0], "int": 3, "flag": True, "pair": [0.5, "nan"], "1": "-inf"}
    json.dumps(out, allow_nan=False)


def test_ensure_dir(tmp_path):
    target = ensure_dir(tmp_path / "a" / "b")
    assert target.is_dir()
    assert ensure_dir(target) == target


def test_configure_logging_levels():
    configure_logging(verbose=True)
    root = logging.getLogger()
    assert root.level == logging.DEBUG
    assert len(root.handlers) == 1
    configure_logging()
    assert root.level == logging.INFO
    assert len(root.handlers) == 1
