"""Utility functions for paths, seeding and report formatting."""

import json
import math
import zlib
from pathlib import Path
from typing import Dict, Iterable, List

import numpy as np


def expand_path(path: str) -> Path:
    """Expand user home directory (~) and return Path object."""
    return Path(path).expanduser()


def derive_rng(seed: int, stream_id: str) -> np.random.Generator:
    """
    Create the random generator owned by one named stream.

    The stream is keyed by the global seed and a CRC32 of the stream id, so
    two streams never share state and a rerun with the same seed replays
    exactly.

    Args:
        seed: Global seed
        stream_id: Name of the consumer (scenario id, test name, ...)

    Returns:
        Seeded numpy Generator
    """
    sequence = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(stream_id.encode("utf-8"))])
    return np.random.default_rng(sequence)


def parse_index_string(text: str) -> List[int]:
    """
    Convert a 1-based digit string into 0-based indices.

    Example:
        "123" -> [0, 1, 2]
        "4567" -> [3, 4, 5, 6]

    Raises:
        ValueError: If the string contains anything but digits 1-9
    """
    if not text or not text.isdigit() or "0" in text:
        raise ValueError(f"Index string '{text}' must contain digits 1-9 only")
    return [int(ch) - 1 for ch in text]


def index_label(indices: Iterable[int]) -> str:
    """Render 0-based indices in the 1-based digit notation ("e^{123}" style)."""
    return "".join(str(i + 1) for i in indices)


def to_plain(value):
    """
    Convert numpy scalars/arrays (and nested containers of them) into JSON-safe values.

    Complex numbers become [re, im] pairs; non-finite floats become strings.
    """
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [to_plain(value.real), to_plain(value.imag)]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if not math.isfinite(value):
            return str(value)
        return value
    return value


def format_record(record: Dict) -> str:
    """
    Format a report record as one line of JSON with sorted keys.

    Args:
        record: Mapping with plain or numpy values

    Returns:
        Single-line JSON text (no trailing newline)
    """
    return json.dumps(to_plain(record), sort_keys=True, separators=(",", ":"))


def format_matrix(matrix: np.ndarray) -> str:
    """
    Format a real matrix as whitespace-separated rows for external audit.

    Args:
        matrix: 2-dimensional array

    Returns:
        Text with one matrix row per line
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    return "\n".join(" ".join(f"{x:.17g}" for x in row) for row in matrix)
