import json
from datetime import datetime, timedelta

import numpy as np
import pytest

from toruskam.cohomology import ResonantDivisor
from toruskam.lattice import DomainSpec
from toruskam.runnables import RunnableStatus
from toruskam.utils import JsonEncoder, decode_complex_array, encode_complex_array, format_duration, format_value


@pytest.mark.parametrize(
    "delta, expected",
    [
        (timedelta(milliseconds=250), "250ms"),
        (timedelta(seconds=45), "45.0s"),
        (timedelta(minutes=3), "3.0m"),
        (timedelta(hours=2), "2.0h"),
    ],
)
def test_format_duration(delta, expected):
    start = datetime(2024, 1, 1, 12, 0, 0)
    assert format_duration(start, start + delta) == expected


def test_complex_array_encoding():
    array = np.array([[1 + 2j, -0.5j]])
    encoded = encode_complex_array(array)
    assert encoded == [[[1.0, 2.0], [0.0, -0.5]]]
    assert np.array_equal(decode_complex_array(encoded, ndim=2), array)


def test_decode_real_pairs_with_rank():
    assert decode_complex_array([[1.0, 2.0]], ndim=2).shape == (1, 2)
    assert decode_complex_array([[1.0, 2.0]], ndim=1).tolist() == [1 + 2j]
    with pytest.raises(ValueError):
        decode_complex_array([[1.0, 2.0, 3.0]], ndim=3)
    with pytest.raises(ValueError):
        decode_complex_array([[1.0], [1.0, 2.0]])


def test_json_encoder():
    payload = {
        "status": RunnableStatus.SUCCESS,
        "when": datetime(2024, 1, 1),
        "z": 1 - 1j,
        "values": np.array([1.5, 2.5]),
        "count": np.int64(3),
        "flag": np.bool_(True),
        "domain": DomainSpec(eps=0.1, r=0.5),
    }
    decoded = json.loads(json.dumps(payload, cls=JsonEncoder))
    assert decoded == {
        "status": "success",
        "when": "2024-01-01T00:00:00",
        "z": [1.0, -1.0],
        "values": [1.5, 2.5],
        "count": 3,
        "flag": True,
        "domain": {"eps": 0.1, "r": 0.5},
    }


def test_format_exception_with_details():
    error = ResonantDivisor("divisor vanishes", P=[1], Q=[2], target="v0", value=0.0)
    formatted = format_value(error)
    assert formatted["error_type"] == "ResonantDivisor"
    assert formatted["content"] == "divisor vanishes"
    assert formatted["P"] == [1]
    assert formatted["target"] == "v0"
