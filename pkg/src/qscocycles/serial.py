"""JSON conversion: complex numbers as ``[re, im]``, matrices as row-major nested lists."""
from __future__ import annotations

import numbers

import numpy as np


def encode_complex(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def decode_complex(v) -> complex:
    if isinstance(v, numbers.Number):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(p, numbers.Number) for p in v):
        return complex(v[0], v[1])
    raise ValueError(f"not a complex number: {v!r}")


def encode_matrix(M) -> list:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return [[encode_complex(z) for z in row] for row in M]


def decode_matrix(rows) -> np.ndarray:
    if isinstance(rows, numbers.Number) or (
            isinstance(rows, list) and len(rows) == 2 and all(isinstance(p, numbers.Number) for p in rows)):
        return np.array([[decode_complex(rows)]], dtype=complex)
    return np.array([[decode_complex(z) for z in row] for row in rows], dtype=complex)


def encode_vector(v) -> list:
    return [encode_complex(z) for z in np.atleast_1d(np.asarray(v, dtype=complex))]


def decode_vector(v) -> np.ndarray:
    # a bare [re, im] pair is a vector in C^1
    if isinstance(v, numbers.Number):
        return np.array([complex(v)])
    if len(v) == 2 and all(isinstance(p, numbers.Number) for p in v):
        return np.array([complex(v[0], v[1])])
    return np.array([decode_complex(z) for z in v], dtype=complex)


def to_jsonable(obj):
    """Recursively convert numpy/complex objects into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if obj.ndim == 2:
                return encode_matrix(obj)
            if obj.ndim == 1:
                return encode_vector(obj)
            return [to_jsonable(o) for o in obj]
        return obj.tolist()
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (numbers.Integral, np.integer)):
        return int(obj)
    if isinstance(obj, (numbers.Real, np.floating)):
        return float(obj)
    if isinstance(obj, (numbers.Complex, np.complexfloating)):
        return encode_complex(obj)
    return obj
