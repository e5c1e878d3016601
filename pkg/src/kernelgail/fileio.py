"""Flat key-value text files, CSV emission, and atomic writes.

All artifacts (MDPs, feature systems, policy checkpoints, configs) share one
structured-text format: `key = token token ...` lines, `#` comments, keys
unique. Numeric tokens round-trip exactly through `repr`, so a file written
twice from the same data is byte-identical.
"""

from __future__ import annotations

import os
import tempfile
from collections.abc import Iterable, Mapping

import numpy as np

from .errors import ConfigError


def atomic_write_text(path: str, text: str) -> None:
    """Write to a temp file in the target directory, then rename over path."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_number(x) -> str:
    """Deterministic shortest round-trip representation of a scalar."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return repr(int(x))
    return repr(float(x))


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, np.ndarray):
        return " ".join(format_number(v) for v in value.reshape(-1))
    if isinstance(value, (list, tuple)):
        return " ".join(format_number(v) for v in value)
    return format_number(value)


def save_kv(path: str, mapping: Mapping[str, object]) -> None:
    lines = [f"{key} = {_format_value(value)}" for key, value in mapping.items()]
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_kv(path: str) -> dict[str, list[str]]:
    """Parse a key-value file into raw token lists; duplicate keys are errors."""
    out: dict[str, list[str]] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            if key in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value.split()
    return out


def take_int(kv: dict[str, list[str]], key: str, path: str = "") -> int:
    tokens = _take(kv, key, path)
    if len(tokens) != 1:
        raise ConfigError(f"{path}: key {key!r} expects one integer, got {len(tokens)} tokens")
    try:
        return int(tokens[0])
    except ValueError as exc:
        raise ConfigError(f"{path}: key {key!r} is not an integer: {tokens[0]!r}") from exc


def take_float(kv: dict[str, list[str]], key: str, path: str = "") -> float:
    tokens = _take(kv, key, path)
    if len(tokens) != 1:
        raise ConfigError(f"{path}: key {key!r} expects one number, got {len(tokens)} tokens")
    try:
        return float(tokens[0])
    except ValueError as exc:
        raise ConfigError(f"{path}: key {key!r} is not a number: {tokens[0]!r}") from exc


def take_array(kv: dict[str, list[str]], key: str, shape: tuple[int, ...], path: str = "") -> np.ndarray:
    tokens = _take(kv, key, path)
    expected = int(np.prod(shape))
    if len(tokens) != expected:
        raise ConfigError(
            f"{path}: key {key!r} expects {expected} numbers for shape {shape}, got {len(tokens)}"
        )
    try:
        flat = np.array([float(t) for t in tokens], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: key {key!r} contains a non-numeric token") from exc
    return flat.reshape(shape)


def take_str(kv: dict[str, list[str]], key: str, path: str = "") -> str:
    tokens = _take(kv, key, path)
    return " ".join(tokens)


def _take(kv: dict[str, list[str]], key: str, path: str) -> list[str]:
    if key not in kv:
        raise ConfigError(f"{path}: missing required key {key!r}")
    return kv.pop(key)


def reject_unknown(kv: dict[str, list[str]], path: str = "") -> None:
    if kv:
        raise ConfigError(f"{path}: unknown keys: {', '.join(sorted(kv))}")


def format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if value is None:
        return "nan"
    if isinstance(value, (int, np.integer)):
        return repr(int(value))
    return repr(float(value))


def write_csv(path: str, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    """Write a CSV with a fixed header and deterministic float formatting."""
    lines = [",".join(header)]
    lines.extend(",".join(format_cell(cell) for cell in row) for row in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")
