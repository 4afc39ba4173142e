from datetime import date, datetime
from enum import Enum
from json import JSONEncoder
from typing import Any
from uuid import UUID, uuid4

import numpy as np
from pydantic import BaseModel


def generate_uuid() -> str:
    """
    Generate a UUID4 string.

    Returns:
        str: A string representation of a UUID4.
    """
    return str(uuid4())


def encode_complex(value: complex) -> list[float]:
    """Encode a complex scalar as ``[re, im]``."""
    value = complex(value)
    return [float(value.real), float(value.imag)]


def encode_complex_array(array: Any) -> list:
    """
    Encode a complex array of any rank as nested lists whose leaves are ``[re, im]`` pairs.

    Args:
        array (Any): Array-like of complex numbers.

    Returns:
        list: Nested lists mirroring the array shape with ``[re, im]`` leaves.
    """
    array = np.asarray(array, dtype=complex)
    stacked = np.stack([array.real, array.imag], axis=-1)
    return stacked.tolist()


def decode_complex_array(data: Any, ndim: int | None = None) -> np.ndarray:
    """
    Decode nested lists with ``[re, im]`` leaves into a complex numpy array.

    Plain real or complex numbers are accepted as leaves too.

    Args:
        data (Any): Nested lists as produced by `encode_complex_array`.
        ndim (int | None): Expected rank of the decoded array; resolves real inputs whose last
            axis happens to have length 2.

    Returns:
        np.ndarray: Complex array.

    Raises:
        ValueError: If the leaves are neither numbers nor ``[re, im]`` pairs.
    """
    if isinstance(data, np.ndarray):
        return data.astype(complex)
    array = np.asarray(data)
    if array.dtype == object:
        raise ValueError("Ragged complex array data")
    if np.iscomplexobj(array):
        return array.astype(complex)
    if ndim is not None:
        if array.ndim == ndim + 1 and array.shape[-1] == 2:
            return array[..., 0].astype(float) + 1j * array[..., 1].astype(float)
        if array.ndim != ndim:
            raise ValueError(f"Expected a rank-{ndim} complex array, got shape {array.shape}")
        return array.astype(complex)
    if array.ndim >= 1 and array.shape[-1] == 2 and _has_pair_leaves(data):
        return array[..., 0].astype(float) + 1j * array[..., 1].astype(float)
    return array.astype(complex)


def _has_pair_leaves(data: Any) -> bool:
    while isinstance(data, (list, tuple)) and data and isinstance(data[0], (list, tuple)):
        data = data[0]
    return isinstance(data, (list, tuple)) and len(data) == 2


class JsonEncoder(JSONEncoder):
    """
    JSON encoder for report documents.

    Handles Enum, UUID, datetime, numpy scalars and arrays, complex numbers and pydantic models.
    """

    def default(self, obj: Any) -> Any:
        if isinstance(obj, Enum):
            return obj.value
        if isinstance(obj, UUID):
            return str(obj)
        if isinstance(obj, (datetime, date)):
            return obj.isoformat()
        if isinstance(obj, complex) or isinstance(obj, np.complexfloating):
            return encode_complex(obj)
        if isinstance(obj, np.ndarray):
            if np.iscomplexobj(obj):
                return encode_complex_array(obj)
            return obj.tolist()
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, (BaseModel, Exception)):
            return format_value(obj)
        return JSONEncoder.default(self, obj)


def format_value(value: Any, **kwargs) -> Any:
    """Format a value for serialization.

    Args:
        value (Any): The value to format.
        **kwargs: Additional keyword arguments.

    Returns:
        Any: Formatted value.
    """
    if isinstance(value, dict):
        return {k: format_value(v, **kwargs) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [format_value(v, **kwargs) for v in value]
    if isinstance(value, BaseModel):
        return value.to_dict() if hasattr(value, "to_dict") else value.model_dump(mode="json")
    if isinstance(value, Exception):
        formatted = {"content": f"{str(value)}", "error_type": type(value).__name__}
        if hasattr(value, "to_dict"):
            formatted.update(value.to_dict())
        return formatted
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return encode_complex_array(value) if np.iscomplexobj(value) else value.tolist()
    if isinstance(value, (complex, np.complexfloating)):
        return encode_complex(value)
    if isinstance(value, np.generic):
        return value.item()
    return value
