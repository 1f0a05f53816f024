"""CSV / JSON emission of evaluation rows."""
from __future__ import annotations

import csv
import io
import json

import numpy as np

from .evaluate import EvalRow

COLUMNS = ("R", "CFNR", "CFPR", "FNR", "FPR", "tau", "sigma", "N", "alpha", "method", "runtime_seconds")
_FIELDS = ("R", "cfnr", "cfpr", "fnr", "fpr", "tau", "sigma", "N", "alpha", "method", "runtime_seconds")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return "%.6g" % v


def _ordered(rows):
    return sorted(rows, key=lambda r: r.R)   # stable: method order kept within an R


def format_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in _ordered(rows):
        w.writerow([_fmt(getattr(r, f)) for f in _FIELDS])
    return buf.getvalue()


def format_json(rows) -> str:
    out = []
    for r in _ordered(rows):
        rec = {}
        for col, f in zip(COLUMNS, _FIELDS):
            v = getattr(r, f)
            if v is None or isinstance(v, str):
                rec[col] = v
            elif isinstance(v, (int, np.integer)):
                rec[col] = int(v)
            else:
                rec[col] = float(_fmt(v))
        out.append(rec)
    return json.dumps(out, indent=2) + "\n"


def emit_results(rows, fmt: str, path) -> None:
    if fmt not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    text = format_csv(rows) if fmt == "csv" else format_json(rows)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _parse_num(s: str):
    if s == "":
        return None
    return float(s)


def read_results(path) -> list[EvalRow]:
    """Parse a CSV or JSON file written by :func:`emit_results`."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("["):
        recs = json.loads(text)
    else:
        recs = []
        for rec in csv.DictReader(io.StringIO(text)):
            recs.append({k: (v or None) if k == "method" else _parse_num(v) for k, v in rec.items()})
    rows = []
    for rec in recs:
        kw = {f: rec.get(col) for col, f in zip(COLUMNS, _FIELDS)}
        if kw["N"] is not None:
            kw["N"] = int(kw["N"])
        rows.append(EvalRow(**kw))
    return rows


def format_for_path(path: str) -> str:
    return "json" if str(path).lower().endswith(".json") else "csv"
