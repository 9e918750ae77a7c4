"""Verification reports and deterministic serialization."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .jets import Jet


@dataclass
class VerificationReport:
    """Outcome of a sampled or grid check.

    ``passed`` is the verdict of the check itself. Scenarios that exhibit an
    expected failure record that in ``details["verdict"]``.
    """

    passed: bool
    n_samples: int
    worst_margin: float
    witness: Jet | None = None
    seed: int | None = None
    details: dict[str, Any] = field(default_factory=dict)
    inconclusive: bool = False
    rows: list[dict] | None = None

    def __bool__(self) -> bool:
        return bool(self.passed)

    def to_dict(self) -> dict:
        out = {
            "pass": bool(self.passed),
            "n_samples": int(self.n_samples),
            "worst_margin": self.worst_margin,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "seed": self.seed,
        }
        if self.details:
            out["details"] = self.details
        if self.inconclusive:
            out["inconclusive"] = True
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        w = d.get("witness")
        return cls(
            passed=bool(d["pass"]),
            n_samples=int(d["n_samples"]),
            worst_margin=_decode_float(d["worst_margin"]),
            witness=None if w is None else Jet.from_dict(w),
            seed=d.get("seed"),
            details=d.get("details", {}),
            inconclusive=bool(d.get("inconclusive", False)),
        )


def _decode_float(x):
    if isinstance(x, str):
        return float(x)
    return x


def normalize(obj):
    """Convert numpy scalars/arrays to plain Python and fix float formatting."""
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return normalize(obj.tolist())
    if isinstance(obj, Jet):
        return normalize(obj.to_dict())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, floats rounded to 12 significant digits."""
    if isinstance(obj, VerificationReport):
        obj = obj.to_dict()
    return json.dumps(normalize(obj), sort_keys=True, indent=2)


def emit_report(report, fmt: str = "json", path: str | None = None) -> str:
    """Serialize a report as JSON or as a per-point CSV table.

    Returns the text; writes it to ``path`` when given.
    """
    if fmt == "json":
        text = dumps(report) + "\n"
    elif fmt == "csv":
        text = rows_to_csv(report.rows or [])
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def rows_to_csv(rows: list[dict]) -> str:
    """CSV with columns ``x0..x{n-1}, margin, verdict``."""
    import io

    buf = io.StringIO()
    if not rows:
        buf.write("margin,verdict\n")
        return buf.getvalue()
    n = len(rows[0]["x"])
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{i}" for i in range(n)] + ["margin", "verdict"])
    for row in rows:
        writer.writerow([f"{v:.12g}" for v in row["x"]] + [f"{row['margin']:.12g}", row["verdict"]])
    return buf.getvalue()
