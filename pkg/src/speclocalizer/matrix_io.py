"""JSON exchange format for dense complex matrices.

A matrix is stored as ``{"n": int, "re": [[...]], "im": [[...]]}`` in
row-major order. ``im`` may be omitted for real matrices.
"""

import json

import numpy as np

from .errors import ShapeMismatch


def matrix_to_dict(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {a.shape}")
    return {"n": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_dict(obj):
    try:
        n = int(obj["n"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeMismatch(f"malformed matrix object: {exc}") from exc
    if re.shape != (n, n) or im.shape != (n, n):
        raise ShapeMismatch(f"declared n={n} but re/im have shapes {re.shape}/{im.shape}")
    return re + 1j * im


def dump_matrix(a, path):
    with open(path, "w") as fh:
        json.dump(matrix_to_dict(a), fh)


def load_matrix(path):
    with open(path) as fh:
        return matrix_from_dict(json.load(fh))
