"""JSON matrix files, run reports and geodesic CSV output.

A matrix file is ``{"dim": n, "re": [[...]], "im": [[...]]}`` with row-major
real and imaginary parts; ``re`` must be symmetric and ``im`` antisymmetric.
Floats are written with Python's shortest round-trip repr, so reading a file
back reproduces every entry bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, List

import numpy as np

HERMITIAN_TOL = 1e-10


class MalformedInput(ValueError):
    pass


def matrix_to_json(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {
        "dim": int(M.shape[0]),
        "re": [[float(x) for x in row] for row in M.real],
        "im": [[float(x) for x in row] for row in M.imag],
    }


def matrix_from_json(obj: Any) -> np.ndarray:
    try:
        dim = obj["dim"]
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"not a matrix object: {exc}") from exc
    if not isinstance(dim, int) or dim < 1:
        raise MalformedInput("dim must be a positive integer")
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise MalformedInput(f"re/im must be {dim}x{dim} arrays")
    if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
        raise MalformedInput("matrix entries must be finite")
    if np.max(np.abs(re - re.T)) > HERMITIAN_TOL or np.max(np.abs(im + im.T)) > HERMITIAN_TOL:
        raise MalformedInput("matrix is not Hermitian (re symmetric, im antisymmetric)")
    return re + 1j * im


def read_matrix(path) -> np.ndarray:
    try:
        text = Path(path).read_text()
        obj = json.loads(text)
    except OSError as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: invalid JSON ({exc})") from exc
    return matrix_from_json(obj)


def write_matrix(path, M) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(M)) + "\n")


def digest(*chunks: Any) -> str:
    h = hashlib.sha256()
    for c in chunks:
        if isinstance(c, np.ndarray):
            h.update(np.ascontiguousarray(c, dtype=complex).tobytes())
        else:
            h.update(json.dumps(c, sort_keys=True).encode())
    return h.hexdigest()


def dump_report(command: str, inputs: str, results: dict, checks: Iterable) -> str:
    body = {
        "command": command,
        "inputs": inputs,
        "results": results,
        "checks": [c.to_dict() for c in checks],
    }
    return json.dumps(body, indent=2, allow_nan=False, default=_fallback) + "\n"


def _fallback(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def geodesic_csv(rows, n_probes: int, out) -> None:
    """Write ``t, alpha, dalpha_dt, escort_z, omega_1..omega_k`` rows."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t", "alpha", "dalpha_dt", "escort_z"] + [f"omega_{i + 1}" for i in range(n_probes)])
    for r in rows:
        vals: List[float] = [r.t, r.alpha, r.dalpha_dt, r.escort.z, *r.omega]
        w.writerow([format(float(v), ".12e") for v in vals])


def read_csv_columns(text: str) -> dict:
    lines = list(csv.reader(text.strip().splitlines()))
    header, data = lines[0], np.array([[float(x) for x in row] for row in lines[1:]])
    return {h: data[:, i] for i, h in enumerate(header)}
