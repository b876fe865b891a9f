"""Structured result emission: CSV tables and JSON records.

All files are written atomically (write to a sibling temp file, then
rename) and numeric columns carry at least 15 significant digits so that
emitted data round-trips exactly and reruns with the same seed produce
byte-identical files.
"""
from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .dynamics import PiecewiseControl

__all__ = [
    "fmt",
    "atomic_write_text",
    "write_csv",
    "write_json",
    "read_pulse_csv",
]


def fmt(value) -> str:
    """Render one numeric cell: integers verbatim, floats with 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-emit-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def write_csv(path: str, header, rows) -> None:
    """One-line header, then one formatted row per record."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(cell) for cell in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _jsonable(value):
    if isinstance(value, dict):
        return {key: _jsonable(val) for key, val in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(val) for val in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(val) for val in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"real": float(value.real), "imag": float(value.imag)}
    return value


def write_json(path: str, payload: dict) -> None:
    atomic_write_text(path, json_text(payload))


def json_text(payload: dict) -> str:
    """Deterministic JSON rendering (sorted keys, full float precision)."""
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def read_pulse_csv(path: str) -> PiecewiseControl:
    """Read a pulse table with header ``duration,amplitude``."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.strip() for line in handle if line.strip()]
    if not lines or lines[0].replace(" ", "") != "duration,amplitude":
        raise ValueError(f"{path}: expected header 'duration,amplitude'")
    durations, amplitudes = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected two comma-separated values")
        try:
            durations.append(float(parts[0]))
            amplitudes.append(float(parts[1]))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return PiecewiseControl(np.array(durations), np.array(amplitudes))
