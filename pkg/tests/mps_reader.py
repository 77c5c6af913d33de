"""Minimal independent MPS reader used only by the test suite.

Deliberately written against the MPS format description, not against the
package's writer, so round-trip tests catch format mistakes.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class ParsedMps:
    def __init__(self):
        self.name = ""
        self.obj_name = None
        self.row_sense: dict[str, str] = {}
        self.row_order: list[str] = []
        self.col_order: list[str] = []
        self.col_entries: dict[str, dict[str, float]] = {}
        self.col_integer: dict[str, bool] = {}
        self.obj: dict[str, float] = {}
        self.rhs: dict[str, float] = {}
        self.lower: dict[str, float] = {}
        self.upper: dict[str, float] = {}

    def arrays(self):
        rows = self.row_order
        cols = self.col_order
        row_pos = {r: i for i, r in enumerate(rows)}
        a = sp.dok_matrix((len(rows), len(cols)))
        for j, cname in enumerate(cols):
            for rname, v in self.col_entries[cname].items():
                a[row_pos[rname], j] = v
        senses = np.array([self.row_sense[r] for r in rows])
        rhs = np.array([self.rhs.get(r, 0.0) for r in rows])
        obj = np.array([self.obj.get(c, 0.0) for c in cols])
        is_int = np.array([self.col_integer.get(c, False) for c in cols])
        lower = np.array([self.lower.get(c, 0.0) for c in cols])
        upper = np.array(
            [self.upper.get(c, 1.0 if self.col_integer.get(c) else np.inf)
             for c in cols]
        )
        return sp.csr_matrix(a), senses, rhs, obj, is_int, lower, upper


def read_mps(path) -> ParsedMps:
    out = ParsedMps()
    section = None
    integer_mode = False
    with open(path, "r", encoding="ascii") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("*"):
                continue
            if not line.startswith(" "):
                head = line.split()
                section = head[0]
                if section == "NAME" and len(head) > 1:
                    out.name = head[1]
                if section == "ENDATA":
                    break
                continue
            fields = line.split()
            if section == "ROWS":
                sense, rname = fields
                if sense == "N":
                    out.obj_name = rname
                else:
                    out.row_sense[rname] = sense
                    out.row_order.append(rname)
            elif section == "COLUMNS":
                if len(fields) >= 3 and fields[1] == "'MARKER'":
                    integer_mode = fields[2] == "'INTORG'"
                    continue
                cname = fields[0]
                if cname not in out.col_entries:
                    out.col_entries[cname] = {}
                    out.col_order.append(cname)
                    out.col_integer[cname] = integer_mode
                pairs = fields[1:]
                for rname, value in zip(pairs[::2], pairs[1::2]):
                    if rname == out.obj_name:
                        out.obj[cname] = float(value)
                    else:
                        out.col_entries[cname][rname] = float(value)
            elif section == "RHS":
                pairs = fields[1:]
                for rname, value in zip(pairs[::2], pairs[1::2]):
                    out.rhs[rname] = float(value)
            elif section == "BOUNDS":
                btype, _, cname, value = fields[0], fields[1], fields[2], fields[3]
                v = float(value)
                if btype == "UP":
                    out.upper[cname] = v
                elif btype == "LO":
                    out.lower[cname] = v
                elif btype == "FX":
                    out.lower[cname] = v
                    out.upper[cname] = v
                elif btype == "BV":
                    out.lower[cname] = 0.0
                    out.upper[cname] = 1.0
                    out.col_integer[cname] = True
                else:
                    raise ValueError(f"unsupported bound type {btype}")
    return out
