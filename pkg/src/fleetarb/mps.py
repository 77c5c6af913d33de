"""MPS export for built instances.

Writes the classic ROWS/COLUMNS/RHS/BOUNDS sections with INTORG/INTEND
markers around the integer block, using whitespace-aligned fields that
both fixed-format and free-format readers accept.  Export exists so full
scale instances can be cross-checked with external solvers; the embedded
solver never reads these files back.
"""

from __future__ import annotations

from .errors import DataError
from .milp import MilpInstance

_OBJ = "COST"


def _num(v: float) -> str:
    return f"{v:.12g}"


def format_mps(instance: MilpInstance) -> str:
    if instance.n_cols == 0:
        raise DataError("cannot export an instance with no columns")
    names = instance.col_names()
    lines = [f"NAME          {instance.name.upper()}"]
    lines.append("ROWS")
    lines.append(f" N  {_OBJ}")
    for sense, rname in zip(instance.senses, instance.row_names):
        lines.append(f" {sense}  {rname}")

    csc = instance.a.tocsc()
    lines.append("COLUMNS")
    in_int = False
    marker_no = 0
    for j in range(instance.n_cols):
        if instance.is_integer[j] and not in_int:
            lines.append(
                f"    MARKER{marker_no:04d}  'MARKER'                 'INTORG'"
            )
            marker_no += 1
            in_int = True
        elif not instance.is_integer[j] and in_int:
            lines.append(
                f"    MARKER{marker_no:04d}  'MARKER'                 'INTEND'"
            )
            marker_no += 1
            in_int = False
        entries = []
        if instance.obj[j] != 0.0:
            entries.append((_OBJ, instance.obj[j]))
        start, end = csc.indptr[j], csc.indptr[j + 1]
        order = csc.indices[start:end].argsort()
        for k in order:
            i = csc.indices[start + k]
            entries.append((instance.row_names[i], csc.data[start + k]))
        if not entries:
            entries.append((_OBJ, 0.0))
        for rname, v in entries:
            lines.append(f"    {names[j]:<16}  {rname:<16}  {_num(v)}")
    if in_int:
        lines.append(f"    MARKER{marker_no:04d}  'MARKER'                 'INTEND'")

    lines.append("RHS")
    for i, r in enumerate(instance.rhs):
        if r != 0.0:
            lines.append(f"    RHS1  {instance.row_names[i]:<16}  {_num(r)}")

    lines.append("BOUNDS")
    for j in range(instance.n_cols):
        lo, up = instance.lower[j], instance.upper[j]
        if lo == up:
            lines.append(f" FX BND1  {names[j]:<16}  {_num(lo)}")
            continue
        if lo != 0.0:
            lines.append(f" LO BND1  {names[j]:<16}  {_num(lo)}")
        if up != float("inf"):
            lines.append(f" UP BND1  {names[j]:<16}  {_num(up)}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def export_mps(instance: MilpInstance, path) -> None:
    """Write the instance to ``path`` in MPS form (minimization)."""
    text = format_mps(instance)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)
