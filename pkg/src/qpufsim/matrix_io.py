"""Lossless text format for complex matrices.

Layout::

    # qpufsim complex matrix
    # rows 4 cols 4
    # row-major; each line holds one entry as "real imag" (17 significant digits)
    1 0
    0 0
    ...

Seventeen significant digits round-trip every IEEE double exactly, so
``read_matrix(write_matrix(a))`` reproduces ``a`` bit for bit.  The text is
endianness-free.
"""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .exceptions import ConfigError

_MAGIC = "# qpufsim complex matrix"
_SHAPE = re.compile(r"#\s*rows\s+(\d+)\s+cols\s+(\d+)")


def format_matrix(a) -> str:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ConfigError(f"expected a 2-D matrix, got shape {a.shape}")
    lines = [
        _MAGIC,
        f"# rows {a.shape[0]} cols {a.shape[1]}",
        '# row-major; each line holds one entry as "real imag" (17 significant digits)',
    ]
    lines.extend(f"{z.real:.17g} {z.imag:.17g}" for z in a.ravel())
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = text.splitlines()
    if not lines or lines[0].strip() != _MAGIC:
        raise ConfigError("not a qpufsim matrix file (missing header)")
    shape = None
    values = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _SHAPE.match(line)
            if m:
                shape = (int(m.group(1)), int(m.group(2)))
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"line {lineno}: expected 'real imag', got {line!r}")
        try:
            values.append(complex(float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    if shape is None:
        raise ConfigError("matrix file has no '# rows R cols C' line")
    if len(values) != shape[0] * shape[1]:
        raise ConfigError(f"matrix file declares {shape[0]}x{shape[1]} but holds {len(values)} entries")
    return np.array(values, dtype=complex).reshape(shape)


def write_matrix(path, a) -> None:
    Path(path).write_text(format_matrix(a))


def read_matrix(path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read matrix file {path}: {exc}") from None
    return parse_matrix(text)
