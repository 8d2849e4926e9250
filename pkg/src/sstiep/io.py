"""JSON documents for problems, phase-type specs, results and reports.

Floats are written with Python's shortest round-trip repr, so a write/read
cycle reproduces every matrix entry bit for bit.  Writes go to a temporary
file in the target directory which is then renamed over the destination.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .errors import FormatError, SstiepError
from .subproblems import ProblemData

PROBLEM_FIELDS = {"n", "lambda", "beta", "initial_A", "strategy", "epsilon", "tol", "max_iters", "seed"}
SPEC_FIELDS = {"n", "lambda", "residues", "renormalize", "strategy", "epsilon", "tol", "max_iters", "seed"}
RESULT_FIELDS = {
    "status", "objective", "iterations", "wall_time", "trace_status", "init",
    "lambda", "beta", "A", "P", "alpha", "kkt", "bounds", "mgf_check", "screen",
}


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_json(path: str | os.PathLike, obj: Any) -> None:
    write_atomic(path, dumps(obj))


def read_json(path: str | os.PathLike) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{exc.msg}", where=f"{path}:{exc.lineno}:{exc.colno}") from exc
    if not isinstance(doc, dict):
        raise FormatError("top level must be an object", where=str(path))
    return doc


def _check_fields(doc: dict, allowed: set[str], required: tuple[str, ...], where: str) -> None:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise FormatError(f"unknown field(s) {', '.join(unknown)}", where=where)
    for name in required:
        if name not in doc:
            raise FormatError(f"missing field '{name}'", where=where)


def _vector(doc: dict, name: str, where: str) -> np.ndarray:
    try:
        v = np.asarray(doc[name], dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"field '{name}' must be an array of numbers", where=where) from exc
    if v.ndim != 1:
        raise FormatError(f"field '{name}' must be a flat array", where=where)
    return v


def _matrix(doc: dict, name: str, n: int, where: str) -> np.ndarray:
    try:
        m = np.asarray(doc[name], dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"field '{name}' must be a nested array of numbers", where=where) from exc
    if m.shape != (n, n):
        raise FormatError(f"field '{name}' must be {n}x{n}, got shape {m.shape}", where=where)
    return m


def _check_n(doc: dict, vectors: list[np.ndarray], where: str) -> None:
    if "n" in doc:
        n = doc["n"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise FormatError("field 'n' must be an integer", where=where)
        for v in vectors:
            if v.size != n:
                raise FormatError(f"n = {n} but an array has {v.size} entries", where=where)


def read_problem(path) -> tuple[ProblemData, dict]:
    """Problem data plus the optional solver settings found in the file."""
    where = str(path)
    doc = read_json(path)
    _check_fields(doc, PROBLEM_FIELDS, ("lambda", "beta"), where)
    lam, beta = _vector(doc, "lambda", where), _vector(doc, "beta", where)
    _check_n(doc, [lam, beta], where)
    try:
        data = ProblemData(lam, beta)
    except SstiepError as exc:
        raise FormatError(str(exc), where=where) from exc
    opts = {k: doc[k] for k in ("strategy", "epsilon", "tol", "max_iters", "seed") if k in doc}
    if "initial_A" in doc:
        opts["initial_A"] = _matrix(doc, "initial_A", data.n, where)
    return data, opts


def read_spec(path):
    from .phasetype import PhaseTypeSpec

    where = str(path)
    doc = read_json(path)
    _check_fields(doc, SPEC_FIELDS, ("lambda", "residues"), where)
    lam, r = _vector(doc, "lambda", where), _vector(doc, "residues", where)
    _check_n(doc, [lam, r], where)
    try:
        spec = PhaseTypeSpec(lam, r)
    except SstiepError as exc:
        raise FormatError(str(exc), where=where) from exc
    opts = {k: doc[k] for k in ("renormalize", "strategy", "epsilon", "tol", "max_iters", "seed") if k in doc}
    return spec, opts


def read_result(path) -> dict:
    where = str(path)
    doc = read_json(path)
    _check_fields(doc, RESULT_FIELDS, ("lambda", "beta", "A", "P", "objective"), where)
    lam, beta = _vector(doc, "lambda", where), _vector(doc, "beta", where)
    n = lam.size
    doc["lambda"], doc["beta"] = lam, beta
    doc["A"] = _matrix(doc, "A", n, where)
    doc["P"] = _matrix(doc, "P", n, where)
    return doc
