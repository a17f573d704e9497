"""Plain-text formats used by the CLI and experiment files.

Matrices: first line ``rows cols``, then one whitespace-separated row per
line. Vectors are stored as single-column matrices. Floats are written with
``repr`` so every value round-trips bit-exactly. Block structures are a
single line of space-separated block sizes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .blocks import BlockStructure

__all__ = [
    "format_matrix",
    "parse_matrix",
    "format_vector",
    "parse_vector",
    "format_structure",
    "parse_structure",
    "write_text",
    "read_text",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def format_matrix(a: np.ndarray) -> str:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {a.shape}")
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    for row in a:
        lines.append(" ".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"matrix header must be 'rows cols', got {lines[0]!r}")
    rows, cols = int(header[0]), int(header[1])
    if len(lines) - 1 != rows:
        raise ValueError(f"expected {rows} data rows, found {len(lines) - 1}")
    out = np.empty((rows, cols), dtype=float)
    for i, ln in enumerate(lines[1:]):
        vals = ln.split()
        if len(vals) != cols:
            raise ValueError(f"row {i} has {len(vals)} entries, expected {cols}")
        out[i] = [float(v) for v in vals]
    return out


def format_vector(x: np.ndarray) -> str:
    x = np.asarray(x, dtype=float).reshape(-1)
    return format_matrix(x.reshape(-1, 1))


def parse_vector(text: str) -> np.ndarray:
    a = parse_matrix(text)
    if 1 not in a.shape:
        raise ValueError(f"expected a vector, got shape {a.shape}")
    return a.reshape(-1)


def format_structure(structure: BlockStructure) -> str:
    return " ".join(str(d) for d in structure.block_sizes) + "\n"


def parse_structure(text: str) -> BlockStructure:
    sizes = [int(tok) for tok in text.split()]
    return BlockStructure(tuple(sizes))


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def read_text(path: str | Path) -> str:
    return Path(path).read_text(encoding="utf-8")
