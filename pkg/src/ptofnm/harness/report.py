"""CSV, JSON and SVG output for sweep results."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .sweeps import SweepResult

CSV_COLUMNS = ["experiment", "N", "trial", "risk", "slope", "slopeStdErr", "theoryExponent", "logFlag"]
_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(results: list[SweepResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for res in results:
            for row in res.rows():
                w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])


def read_csv(path) -> list[dict]:
    conv = {"N": int, "trial": int, "risk": float, "slope": float, "slopeStdErr": float,
            "theoryExponent": float, "logFlag": lambda s: s == "true"}
    with open(path, newline="") as fh:
        return [{k: conv.get(k, str)(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def _num(x):
    # JSON has no NaN
    return float(x) if math.isfinite(x) else None


def summary(results: list[SweepResult]) -> dict:
    out = {}
    for res in results:
        out[res.experiment] = {
            "n_grid": [int(n) for n in res.n_grid],
            "median_risk": [float(m) for m in res.medians],
            "slope": _num(res.fit.slope),
            "slope_stderr": _num(res.fit.stderr),
            "fit_from_N": int(res.n_grid[res.fit_from]),
            "theory_exponent": _num(res.theory.exponent),
            "log_factor": res.theory.log_factor,
            "notes": list(res.notes),
        }
    return out


def write_svg(results: list[SweepResult], path, width: int = 640, height: int = 420) -> None:
    """Log-log plot of median risk against N, one polyline per experiment."""
    pad = 50
    pts = [(np.log10(r.n_grid), np.log10(r.medians)) for r in results]
    finite = [(x, y) for x, y in pts if len(x)]
    if finite:
        xs = np.concatenate([x for x, _ in finite])
        ys = np.concatenate([y for _, y in finite])
        x0, x1 = xs.min(), max(xs.max(), xs.min() + 1e-9)
        y0, y1 = ys.min(), max(ys.max(), ys.min() + 1e-9)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle">log10 N</text>',
             f'<text x="14" y="{height / 2}" transform="rotate(-90 14 {height / 2})" '
             'text-anchor="middle">log10 median risk</text>']
    for i, (res, (x, y)) in enumerate(zip(results, pts)):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline data-family="{res.experiment}" fill="none" stroke="{color}" '
                     f'stroke-width="2" points="{coords}"/>')
        slope = res.fit.slope
        label = f"{res.experiment}: slope {slope:.3f}" if math.isfinite(slope) else res.experiment
        parts.append(f'<text x="{width - pad}" y="{pad + 16 * i}" text-anchor="end" fill="{color}">{label}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def emit_report(results: list[SweepResult], out_dir, formats=("csv", "json", "svg"), stem: str = "report"):
    """Write the requested formats into ``out_dir``; returns the written paths."""
    unknown = set(formats) - {"csv", "json", "svg"}
    if unknown:
        raise ValueError(f"unknown report formats {sorted(unknown)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    if "csv" in formats:
        paths["csv"] = out_dir / f"{stem}.csv"
        write_csv(results, paths["csv"])
    if "json" in formats:
        paths["json"] = out_dir / f"{stem}.json"
        paths["json"].write_text(json.dumps(summary(results), indent=2, sort_keys=True) + "\n")
    if "svg" in formats:
        paths["svg"] = out_dir / f"{stem}.svg"
        write_svg(results, paths["svg"])
    return paths


def results_from_rows(rows: list[dict]) -> list[SweepResult]:
    """Rebuild sweep results from parsed CSV rows (fit values are taken as stored)."""
    from ..fitting import SlopeFit
    from ..rates import RateExponent

    by_exp: dict[str, list[dict]] = {}
    for row in rows:
        by_exp.setdefault(row["experiment"], []).append(row)
    out = []
    for name, rs in by_exp.items():
        n_grid = np.array(sorted({r["N"] for r in rs}))
        trials = max(r["trial"] for r in rs) + 1
        risks = np.full((len(n_grid), trials), np.nan)
        for r in rs:
            risks[np.searchsorted(n_grid, r["N"]), r["trial"]] = r["risk"]
        first = rs[0]
        fit = SlopeFit(first["slope"], first["slopeStdErr"], float("nan"), float("nan"))
        theory = RateExponent(first["theoryExponent"], first["logFlag"])
        out.append(SweepResult(name, n_grid, risks, theory, fit, len(n_grid) // 2))
    return out
