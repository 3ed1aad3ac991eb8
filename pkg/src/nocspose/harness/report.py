"""Summaries and SVG plots from a sweep CSV."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ..errors import NocsPoseError
from ..metrics import ar_star_normalized
from .sweep import COLUMNS, STATUS_OK

# Published reference numbers, shown for context only.
REFERENCE_ADD_MEAN = {
    ("Pix2Pix", "wo aug"): 11.49,
    ("Pix2Pix", "w aug"): 10.10,
    ("BBDM", "wo aug"): 12.39,
    ("BBDM", "w aug"): 17.51,
}
REFERENCE_AR = {"Pix2Pix": 30.03, "BBDM": 40.63, "Pix2Pose": 36.30, "DPOD": 16.90}
BASELINE_LABEL = "paper baseline, not reproduced"

SUMMARY_COLUMNS = ("kind", "severity", "n", "n_ok", "add_recall_pct", "mean_mse", "mean_iou", "ar_star")
KIND_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


class ReportError(NocsPoseError, ValueError):
    pass


@dataclass(frozen=True)
class SweepRow:
    sample_id: str
    obj: str
    kind: str
    severity: float
    status: str
    add_mm: float
    add_pass: bool
    mse: float
    iou: float
    mssd_mm: float
    mspd_px: float
    diameter_mm: float
    img_diag_px: float


def read_sweep_csv(path):
    """Parse a sweep CSV; errors name the 1-based file line."""
    path = Path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        lines = list(enumerate(f, start=1))
    body = [(n, line) for n, line in lines if not line.startswith("#") and line.strip()]
    if not body:
        raise ReportError(f"{path}: empty CSV")
    reader = csv.reader([line for _, line in body])
    header = next(reader)
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise ReportError(f"{path}:{body[0][0]}: header lacks columns {missing}")
    col = {c: header.index(c) for c in header}
    for (lineno, _), rec in zip(body[1:], reader):
        if len(rec) != len(header):
            raise ReportError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
        try:
            if rec[col["add_pass"]] not in ("true", "false"):
                raise ValueError(f"add_pass must be true/false, got {rec[col['add_pass']]!r}")
            rows.append(
                SweepRow(
                    sample_id=rec[col["sample_id"]],
                    obj=rec[col["obj"]],
                    kind=rec[col["kind"]],
                    severity=float(rec[col["severity"]]),
                    status=rec[col["status"]],
                    add_mm=float(rec[col["add_mm"]]),
                    add_pass=rec[col["add_pass"]] == "true",
                    mse=float(rec[col["mse"]]),
                    iou=float(rec[col["iou"]]),
                    mssd_mm=float(rec[col["mssd_mm"]]),
                    mspd_px=float(rec[col["mspd_px"]]),
                    diameter_mm=float(rec[col["diameter_mm"]]),
                    img_diag_px=float(rec[col["img_diag_px"]]),
                )
            )
        except ValueError as e:
            raise ReportError(f"{path}:{lineno}: {e}") from e
    return rows


def summarize(rows):
    """One summary dict per (kind, severity), in first-appearance order."""
    groups = {}
    for r in rows:
        groups.setdefault((r.kind, r.severity), []).append(r)
    out = []
    for (kind, sev), rs in groups.items():
        mssd_rel = [r.mssd_mm / r.diameter_mm for r in rs]
        mspd_rel = [r.mspd_px / (r.img_diag_px / 1000.0) for r in rs]
        out.append(
            {
                "kind": kind,
                "severity": sev,
                "n": len(rs),
                "n_ok": sum(r.status == STATUS_OK for r in rs),
                "add_recall_pct": 100.0 * float(np.mean([r.add_pass for r in rs])),
                "mean_mse": float(np.mean([r.mse for r in rs])),
                "mean_iou": float(np.mean([r.iou for r in rs])),
                "ar_star": 100.0 * ar_star_normalized(mssd_rel, mspd_rel),
            }
        )
    return out


def format_summary(summary):
    head = "| kind | severity | n | solved | ADD(-S) recall % | mean MSE | mean IoU | AR* % |"
    lines = [head, "|" + "---|" * 8]
    for s in summary:
        lines.append(
            f"| {s['kind']} | {s['severity']:g} | {s['n']} | {s['n_ok']} | {s['add_recall_pct']:.2f} | "
            f"{s['mean_mse']:.5f} | {s['mean_iou']:.3f} | {s['ar_star']:.2f} |"
        )
    return "\n".join(lines)


def format_baselines():
    lines = [f"Reference values ({BASELINE_LABEL}):", "", "| model | augmentation | mean ADD(-S) % |", "|---|---|---|"]
    for (model, aug), v in REFERENCE_ADD_MEAN.items():
        lines.append(f"| {model} | {aug} | {v:.2f} |")
    lines += ["", "| method | AR % (with VSD) |", "|---|---|"]
    for model, v in REFERENCE_AR.items():
        lines.append(f"| {model} | {v:.2f} |")
    lines += ["", "AR* above omits the VSD term and is not comparable to these AR values."]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# SVG


def _svg_scatter(points, title, xlabel, ylabel, lines=(), width=640, height=420, xlog=False):
    """``points``: (x, y, series) triples, each drawn as one circle of class ``pt``."""
    ml, mr, mt, mb = 70, 150, 40, 55
    pw, ph = width - ml - mr, height - mt - mb
    xs = [p[0] for p in points] + [x for _, pts in lines for x, _ in pts]
    if xlog:
        xs = [math.log10(max(x, 1e-12)) for x in xs]
    finite = [x for x in xs if math.isfinite(x)]
    x0, x1 = (min(finite), max(finite)) if finite else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    y0, y1 = -0.05, 1.05

    def sx(x):
        if xlog:
            x = math.log10(max(x, 1e-12))
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + (1 - (y - y0) / (y1 - y0)) * ph

    series = sorted({p[2] for p in points} | {name for name, _ in lines})
    color = {s: KIND_COLORS[i % len(KIND_COLORS)] for i, s in enumerate(series)}
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
        f'<text x="{ml + pw / 2:.1f}" y="{height - 15}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 18 {mt + ph / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for t in np.linspace(x0, x1, 5):
        label = f"{10 ** t:.2g}" if xlog else f"{t:.3g}"
        out.append(f'<text x="{ml + (t - x0) / (x1 - x0) * pw:.1f}" y="{mt + ph + 16}" '
                   f'text-anchor="middle" font-size="10">{label}</text>')
    for t in (0.0, 0.5, 1.0):
        out.append(f'<text x="{ml - 6}" y="{sy(t) + 4:.1f}" text-anchor="end" font-size="10">{t:g}</text>')
    for name, pts in lines:
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts if math.isfinite(x))
        out.append(f'<polyline class="mean" points="{path}" fill="none" stroke="{color[name]}" stroke-width="2"/>')
    for x, y, s in points:
        if not math.isfinite(x):
            x = x1 if not xlog else 10**x1
        out.append(f'<circle class="pt" cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" '
                   f'fill="{color[s]}" fill-opacity="0.35"/>')
    for i, s in enumerate(series):
        yy = mt + 14 + 16 * i
        out.append(f'<rect x="{ml + pw + 12}" y="{yy - 9}" width="10" height="10" fill="{color[s]}"/>')
        out.append(f'<text x="{ml + pw + 27}" y="{yy}" font-size="11">{escape(s)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_severity_vs_recall(rows, summary):
    pts = [(r.severity, 1.0 if r.add_pass else 0.0, r.kind) for r in rows]
    lines = []
    for kind in dict.fromkeys(s["kind"] for s in summary):
        curve = sorted((s["severity"], s["add_recall_pct"] / 100.0) for s in summary if s["kind"] == kind)
        lines.append((kind, curve))
    return _svg_scatter(pts, "ADD(-S) pass vs. severity", "severity", "ADD(-S) pass / recall", lines)


def plot_mse_vs_recall(rows, summary):
    pts = [(r.mse, 1.0 if r.add_pass else 0.0, r.kind) for r in rows]
    lines = []
    for kind in dict.fromkeys(s["kind"] for s in summary):
        curve = sorted((s["mean_mse"], s["add_recall_pct"] / 100.0) for s in summary if s["kind"] == kind)
        lines.append((kind, [(max(x, 1e-12), y) for x, y in curve]))
    pts = [(max(x, 1e-12), y, s) for x, y, s in pts]
    return _svg_scatter(pts, "ADD(-S) pass vs. map MSE", "MSE (log scale)", "ADD(-S) pass / recall", lines, xlog=True)


def report(csv_path, out_dir=None):
    """Write summary.csv, report.md and two SVG plots next to the CSV; returns the text report."""
    csv_path = Path(csv_path)
    out_dir = Path(out_dir or csv_path.parent)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = read_sweep_csv(csv_path)
    summary = summarize(rows)

    with open(out_dir / "summary.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in summary:
            w.writerow([
                s["kind"], f"{s['severity']:g}", s["n"], s["n_ok"], f"{s['add_recall_pct']:.2f}",
                repr(s["mean_mse"]), repr(s["mean_iou"]), f"{s['ar_star']:.2f}",
            ])
    (out_dir / "severity_vs_recall.svg").write_text(plot_severity_vs_recall(rows, summary), encoding="utf-8")
    (out_dir / "mse_vs_recall.svg").write_text(plot_mse_vs_recall(rows, summary), encoding="utf-8")
    text = "# Sweep summary\n\n" + format_summary(summary) + "\n\n" + format_baselines() + "\n"
    (out_dir / "report.md").write_text(text, encoding="utf-8")
    return text
