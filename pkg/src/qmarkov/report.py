"""Delimited report output: deterministic CSV with stable float formatting.

All commands emit CSV with a fixed column order and floats printed with 17
significant digits, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import sys

import numpy as np

__all__ = ["format_value", "write_csv", "rows_complex_matrix"]


def format_value(x) -> str:
    """Render one CSV cell deterministically."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if v == 0.0:
            v = 0.0  # canonicalize -0.0
        return f"{v:.17g}"
    if x is None:
        return ""
    return str(x)


def write_csv(header, rows, out_path=None) -> None:
    """Write rows (iterables of cells) to ``out_path`` or stdout."""

    def _emit(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(c) for c in row])

    if out_path is None:
        _emit(sys.stdout)
    else:
        buf = io.StringIO()
        _emit(buf)
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())


def rows_complex_matrix(prefix, M) -> list:
    """Flatten a complex matrix into ``(prefix..., row, col, re, im)`` rows."""
    M = np.asarray(M, dtype=complex)
    out = []
    for i in range(M.shape[0]):
        for j in range(M.shape[1]):
            out.append(tuple(prefix) + (i, j, float(M[i, j].real), float(M[i, j].imag)))
    return out
