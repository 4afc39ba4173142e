import json
from pathlib import Path

import numpy as np

from toruskam.series.series import TaylorLaurentSeries
from toruskam.utils import decode_complex_array, encode_complex_array


def series_to_dict(f: TaylorLaurentSeries) -> dict:
    """Series document with coefficients sorted lexicographically by (Q, P)."""
    return {
        "n": f.n,
        "d": f.d,
        "m": f.m,
        "Q_max": f.q_max,
        "P_max": f.p_max,
        "coeffs": [
            {"Q": [int(q) for q in key[: f.d]], "P": [int(p) for p in key[f.d:]], "c": encode_complex_array(coeff)}
            for key, coeff in zip(f.keys, f.coeffs)
        ],
    }


def series_from_dict(data: dict, strict: bool = True) -> TaylorLaurentSeries:
    """
    Inverse of `series_to_dict`.

    Raises:
        KeyError: If a required field is missing.
        PBandOverflow: If strict and a stored key lies outside the declared band.
    """
    n, d, m = int(data["n"]), int(data["d"]), int(data["m"])
    entries = data.get("coeffs", [])
    keys = np.array([list(entry["Q"]) + list(entry["P"]) for entry in entries], dtype=np.int64).reshape(-1, n + d)
    coeffs = np.array(
        [decode_complex_array(entry["c"], ndim=1) for entry in entries], dtype=complex
    ).reshape(-1, m)
    return TaylorLaurentSeries(n, d, m, int(data["Q_max"]), int(data["P_max"]), keys, coeffs, strict=strict)


def save_series(f: TaylorLaurentSeries, path: str | Path):
    Path(path).write_text(json.dumps(series_to_dict(f), indent=2))


def load_series(path: str | Path) -> TaylorLaurentSeries:
    return series_from_dict(json.loads(Path(path).read_text()))
