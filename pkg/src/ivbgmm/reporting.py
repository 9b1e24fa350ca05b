"""Serialization of estimate reports and Monte Carlo summaries.

Floats are written with Python's shortest round-trip representation, missing
values as ``NA`` in CSV and ``null`` in JSON. JSON is emitted with sorted keys
so that parsing and re-serializing a report reproduces it byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Sequence

from .inference import EstimateReport
from .simulation import McSummary

CSV_COLUMNS = ("method", "bias", "var", "mse", "cp")


def fmt(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    return repr(float(x))


def _num(x: float | None):
    if x is None or math.isnan(x):
        return None
    return float(x)


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def summary_records(summary: McSummary) -> list[dict]:
    return [
        {
            "method": r.method,
            "bias": r.bias,
            "var": r.avg_var,
            "mse": r.mse,
            "cp": r.coverage,
            "n_failed": r.n_failed,
        }
        for r in summary.ordered()
    ]


def summary_to_csv(summary: McSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in summary_records(summary):
        w.writerow([rec["method"]] + [fmt(rec[c]) for c in CSV_COLUMNS[1:]])
    return buf.getvalue()


def summary_to_json(summary: McSummary) -> str:
    spec = summary.spec
    rows = []
    for rec in summary_records(summary):
        rows.append({k: (_num(v) if k not in ("method", "n_failed") else v) for k, v in rec.items()})
    return dumps(
        {
            "model": spec.model,
            "case": spec.case,
            "n": spec.n,
            "beta_true": spec.beta_true,
            "reps": summary.reps,
            "seed": summary.seed,
            "rows": rows,
        }
    )


def summary_to_text(summary: McSummary) -> str:
    spec = summary.spec
    head = f"Model {spec.model}, case ({spec.case}), n = {spec.n}, {summary.reps} replicates, seed {summary.seed}"
    lines = [head, f"{'Method':<20}{'Bias':>9}{'Var':>9}{'MSE':>9}{'95% CP':>9}"]
    for rec in summary_records(summary):
        cells = []
        for c in CSV_COLUMNS[1:]:
            v = rec[c]
            cells.append(f"{'N/A':>9}" if math.isnan(v) else f"{v:>9.4f}")
        note = f"  ({rec['n_failed']} failed)" if rec["n_failed"] else ""
        lines.append(f"{rec['method']:<20}" + "".join(cells) + note)
    return "\n".join(lines) + "\n"


def report_record(
    report: EstimateReport,
    names: Sequence[str] | None = None,
) -> dict:
    """JSON-ready dict for one estimator; Bayes reports carry model weights."""
    rec: dict[str, Any] = {
        "estimate": _num(report.estimate),
        "se": _num(report.se),
        "ci95": None if report.ci95 is None else [_num(report.ci95[0]), _num(report.ci95[1])],
    }
    if report.validity is not None:
        label = (lambda j: names[j]) if names is not None else (lambda j: j)
        rec["acceptable_models"] = [
            {"omega": [label(j) for j in m.omega], "weight": float(w)}
            for m, w in report.models
        ]
        rec["validity_probabilities"] = [float(v) for v in report.validity]
    return rec


def reports_to_csv(reports: Sequence[EstimateReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("method", "estimate", "se", "ci_lo", "ci_hi"))
    for r in reports:
        lo, hi = r.ci95 if r.ci95 is not None else (None, None)
        w.writerow((r.method, fmt(r.estimate), fmt(r.se), fmt(lo), fmt(hi)))
    return buf.getvalue()


def reports_to_text(reports: Sequence[EstimateReport], names: Sequence[str] | None = None) -> str:
    lines = [f"{'Method':<20}{'Estimate':>11}{'SE':>10}{'95% interval':>26}"]
    for r in reports:
        se = "N/A" if r.se is None else f"{r.se:.4f}"
        ci = "N/A" if r.ci95 is None else f"[{r.ci95[0]:.4f}, {r.ci95[1]:.4f}]"
        lines.append(f"{r.method:<20}{r.estimate:>11.4f}{se:>10}{ci:>26}")
    for r in reports:
        if r.validity is None:
            continue
        lines.append("")
        lines.append(f"{r.method}: probability each instrument is valid (%)")
        for j, v in enumerate(r.validity):
            label = names[j] if names is not None else str(j)
            lines.append(f"  {label:<16}{100 * v:6.1f}")
    return "\n".join(lines) + "\n"
