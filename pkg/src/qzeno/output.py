"""CSV and JSON serialisation of sweep results.

Numbers are written with 17 significant digits through Python's own float
formatting, which ignores the process locale; lines end in LF.
"""
from __future__ import annotations

import json

from .analysis import classify_regimes

CSV_COLUMNS = ("model", "kind", "M", "tau", "survival", "gamma_rate")


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def format_csv(curves) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for c in curves:
        head = f"{c.model_id},{c.kind.value},{c.M},"
        lines.extend(head + ",".join(map(_g17, s)) for s in c.samples)
    return "\n".join(lines) + "\n"


def sidecar(config, curves, *, include_samples=False) -> dict:
    """Regime segmentation per curve plus the fully resolved configuration."""
    out = []
    for c in curves:
        entry = {"model": c.model_id, "kind": c.kind.value, "M": c.M,
                 "regimes": classify_regimes(c).to_dict()}
        if include_samples:
            entry["samples"] = [{"tau": t, "survival": s, "gamma_rate": r} for t, s, r in c.samples]
        out.append(entry)
    return {"config": config.to_flat(), "curves": out}


def format_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"
