"""Deterministic CSV output with the configuration echoed as comments."""

from __future__ import annotations

import csv
import math
import os

import numpy as np


def format_value(v):
    """Exact, platform-independent text for one cell."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def header_lines(config_text, extra=()):
    """'#'-prefixed copy of the configuration plus optional extra lines."""
    lines = ["# " + line if line else "#" for line in config_text.splitlines()]
    lines += ["# " + e for e in extra]
    return lines


def write_csv(path, columns, rows, config_text="", extra=()):
    """Write ``rows`` under ``columns``; complex cells become two columns.

    Complex-valued columns must be named in ``columns`` and are expanded to
    ``name_re`` and ``name_im``.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    rows = [list(r) for r in rows]
    cplx = [any(isinstance(r[j], (complex, np.complexfloating)) for r in rows)
            for j in range(len(columns))]
    names = []
    for name, c in zip(columns, cplx):
        names += [f"{name}_re", f"{name}_im"] if c else [name]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines(config_text, extra):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for r in rows:
            out = []
            for v, c in zip(r, cplx):
                if c:
                    z = complex(v)
                    out += [format_value(z.real), format_value(z.imag)]
                else:
                    out.append(format_value(v))
            w.writerow(out)
    return path


def read_csv(path):
    """Column names and string rows, skipping comment lines."""
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]
