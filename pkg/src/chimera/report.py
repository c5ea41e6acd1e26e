"""CSV and SVG artifacts for optimizer runs.

Every figure is emitted twice: the raw trace data as CSV (full float64
precision, so re-parsing reproduces the in-memory arrays exactly) and a
static SVG line or polygon plot for quick viewing. No plotting library
is involved; the SVG is assembled directly.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import FileFormatError, InvalidInputError
from .geometry import DESIGN_VARIABLES, DesignVector, planform_polygon
from .optimize.objective import LIFT_TARGET
from .optimize.run import OptRun

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
            "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _fmt(v) -> str:
    return "%.17g" % float(v)


def write_csv(path, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    columns = [np.asarray(c, dtype=float) for c in columns]
    if len(columns) != len(header):
        raise InvalidInputError("header/column count mismatch")
    n = columns[0].size
    if any(c.size != n for c in columns):
        raise InvalidInputError("columns must share one length")
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(c[i]) for c in columns) + "\n")


def read_csv_columns(path) -> dict:
    """Header-keyed float columns; inverse of write_csv."""
    lines = Path(path).read_text().strip().split("\n")
    if not lines or not lines[0]:
        raise FileFormatError(f"{path}: empty CSV")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    if any(len(r) != len(header) for r in rows):
        raise FileFormatError(f"{path}: ragged CSV rows")
    data = np.array([[float(v) for v in r] for r in rows]) if rows else \
        np.zeros((0, len(header)))
    return {name: data[:, j] for j, name in enumerate(header)}


# -- svg ------------------------------------------------------------------

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 72, 24, 42, 52


def _axis_ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


def _expand(lo: float, hi: float) -> tuple:
    if not np.isfinite(lo) or not np.isfinite(hi):
        return -1.0, 1.0
    if hi <= lo:
        pad = max(abs(lo), 1.0) * 0.1
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def svg_line_plot(path, series: Sequence[tuple], title: str = "",
                  xlabel: str = "", ylabel: str = "",
                  hlines: Sequence[tuple] = ()) -> None:
    """series: (x, y, label) triples; hlines: (value, label) pairs."""
    xs = np.concatenate([np.asarray(s[0], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s[1], dtype=float) for s in series]
                        + [np.array([v for v, _ in hlines], dtype=float)])
    xs, ys = xs[np.isfinite(xs)], ys[np.isfinite(ys)]
    xlo, xhi = _expand(xs.min() if xs.size else 0.0, xs.max() if xs.size else 1.0)
    ylo, yhi = _expand(ys.min() if ys.size else 0.0, ys.max() if ys.size else 1.0)

    def px(x):
        return _ML + (x - xlo) / (xhi - xlo) * (_W - _ML - _MR)

    def py(y):
        return _H - _MB - (y - ylo) / (yhi - ylo) * (_H - _MT - _MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" '
           f'font-family="sans-serif" font-size="15">{title}</text>']
    for t in _axis_ticks(xlo, xhi):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{py(ylo):.2f}" x2="{x:.2f}" '
                   f'y2="{py(yhi):.2f}" stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{x:.2f}" y="{_H - _MB + 18}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{t:.4g}</text>')
    for t in _axis_ticks(ylo, yhi):
        y = py(t)
        out.append(f'<line x1="{px(xlo):.2f}" y1="{y:.2f}" x2="{px(xhi):.2f}" '
                   f'y2="{y:.2f}" stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{_ML - 8}" y="{y + 4:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{t:.4g}</text>')
    out.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
               f'height="{_H - _MT - _MB}" fill="none" stroke="black"/>')
    out.append(f'<text x="{_W / 2:.1f}" y="{_H - 14}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">{xlabel}</text>')
    out.append(f'<text x="18" y="{_H / 2:.1f}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13" '
               f'transform="rotate(-90 18 {_H / 2:.1f})">{ylabel}</text>')

    for value, label in hlines:
        y = py(value)
        out.append(f'<line x1="{px(xlo):.2f}" y1="{y:.2f}" x2="{px(xhi):.2f}" '
                   f'y2="{y:.2f}" stroke="#444444" stroke-width="1.2" '
                   f'stroke-dasharray="6,4"/>')
        out.append(f'<text x="{px(xhi) - 6:.2f}" y="{y - 5:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{label}</text>')

    for k, (sx, sy, label) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        sx = np.asarray(sx, dtype=float)
        sy = np.asarray(sy, dtype=float)
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(sx, sy))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.6"/>')
        if sx.size <= 200:
            for x, y in zip(sx, sy):
                out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.2" '
                           f'fill="{color}"/>')
        out.append(f'<text x="{_W - _MR - 6}" y="{_MT + 16 + 15 * k}" '
                   f'text-anchor="end" font-family="sans-serif" font-size="12" '
                   f'fill="{color}">{label}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def svg_polygon_plot(path, polygons: Sequence[tuple], title: str = "") -> None:
    """Equal-aspect outline overlay; polygons: ((n, 2) points, label)."""
    pts_all = np.vstack([np.asarray(p, dtype=float) for p, _ in polygons])
    xlo, xhi = _expand(pts_all[:, 0].min(), pts_all[:, 0].max())
    ylo, yhi = _expand(pts_all[:, 1].min(), pts_all[:, 1].max())
    scale = min((_W - _ML - _MR) / (xhi - xlo), (_H - _MT - _MB) / (yhi - ylo))
    cx, cy = 0.5 * (xlo + xhi), 0.5 * (ylo + yhi)

    def px(x):
        return _W / 2 + (x - cx) * scale

    def py(y):
        return _H / 2 - (y - cy) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" '
           f'font-family="sans-serif" font-size="15">{title}</text>']
    for k, (poly, label) in enumerate(polygons):
        color = _PALETTE[k % len(_PALETTE)]
        poly = np.asarray(poly, dtype=float)
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in poly)
        out.append(f'<polygon points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.8"/>')
        out.append(f'<text x="{_W - _MR - 6}" y="{_MT + 16 + 15 * k}" '
                   f'text-anchor="end" font-family="sans-serif" font-size="12" '
                   f'fill="{color}">{label}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


# -- per-run artifact bundles ----------------------------------------------

def write_run_artifacts(run: OptRun, out_dir, prefix: Optional[str] = None) -> list:
    """The four figure panels for one run, as CSV + SVG pairs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = prefix or run.method
    if not run.history:
        raise InvalidInputError(f"run {run.method!r} has an empty history")
    written = []

    it = np.array([e.iteration for e in run.history], dtype=float)
    lift = np.array([e.lift for e in run.history])
    drag = np.array([e.drag for e in run.history])
    c_lift = np.array([e.c_lift for e in run.history])
    c_drag = np.array([e.c_drag for e in run.history])
    xs = np.array([e.x for e in run.history])

    # panel 1: planform outline, first incumbent vs optimized
    initial = DesignVector.from_array(run.history[0].x)
    final = DesignVector.from_array(run.x_best)
    poly_i = planform_polygon(initial)
    poly_f = planform_polygon(final)
    p = out_dir / f"{prefix}_planform.csv"
    write_csv(p, ["x_initial", "y_initial", "x_final", "y_final"],
              [poly_i[:, 0], poly_i[:, 1], poly_f[:, 0], poly_f[:, 1]])
    written.append(p)
    p = out_dir / f"{prefix}_planform.svg"
    svg_polygon_plot(p, [(poly_i[:, [1, 0]], "initial"), (poly_f[:, [1, 0]], "optimized")],
                     title=f"{prefix}: planform (span vs chordwise position)")
    written.append(p)

    # panel 2: lift/drag vs iteration with the target-lift line
    target = np.full(it.size, LIFT_TARGET)
    p = out_dir / f"{prefix}_lift_drag.csv"
    write_csv(p, ["iteration", "lift", "drag", "target_lift"], [it, lift, drag, target])
    written.append(p)
    p = out_dir / f"{prefix}_lift_drag.svg"
    svg_line_plot(p, [(it, lift, "lift [N]"), (it, drag, "drag [N]")],
                  title=f"{prefix}: incumbent lift and drag", xlabel="iteration",
                  ylabel="force [N]", hlines=[(LIFT_TARGET, "target lift")])
    written.append(p)

    # panel 3: design-variable traces
    p = out_dir / f"{prefix}_variables.csv"
    write_csv(p, ["iteration"] + list(DESIGN_VARIABLES),
              [it] + [xs[:, j] for j in range(xs.shape[1])])
    written.append(p)
    p = out_dir / f"{prefix}_variables.svg"
    svg_line_plot(p, [(it, xs[:, j], name) for j, name in enumerate(DESIGN_VARIABLES)],
                  title=f"{prefix}: design variables", xlabel="iteration", ylabel="value")
    written.append(p)

    # panel 4: coefficient traces
    p = out_dir / f"{prefix}_coefficients.csv"
    write_csv(p, ["iteration", "c_lift", "c_drag"], [it, c_lift, c_drag])
    written.append(p)
    p = out_dir / f"{prefix}_coefficients.svg"
    svg_line_plot(p, [(it, c_lift, "C_L"), (it, c_drag, "C_D")],
                  title=f"{prefix}: aerodynamic coefficients", xlabel="iteration",
                  ylabel="coefficient")
    written.append(p)

    # design-variable table, initial vs optimized
    p = out_dir / f"{prefix}_design_table.csv"
    with open(p, "w") as fh:
        fh.write("variable,initial,optimized\n")
        for j, name in enumerate(DESIGN_VARIABLES):
            fh.write(f"{name},{_fmt(run.history[0].x[j])},{_fmt(run.x_best[j])}\n")
    written.append(p)
    return written


def write_metrics_table(path, eval_records: Sequence[dict]) -> None:
    """NN-vs-VLM comparison rows, one per evaluated design."""
    cols = ["method", "lift_nn", "lift_vlm", "delta_lift", "c_lift_nn",
            "c_lift_vlm", "pct_dc_lift", "c_drag_nn", "c_drag_vlm",
            "pct_dc_drag", "extrapolated"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for rec in eval_records:
            row = [str(rec.get("method", "?")),
                   _fmt(rec["nn"]["lift"]), _fmt(rec["vlm"]["lift"]),
                   _fmt(rec["delta_lift"]),
                   _fmt(rec["nn"]["c_lift"]), _fmt(rec["vlm"]["c_lift"]),
                   _fmt(rec["pct_dc_lift"]),
                   _fmt(rec["nn"]["c_drag"]), _fmt(rec["vlm"]["c_drag"]),
                   _fmt(rec["pct_dc_drag"]),
                   "1" if rec.get("extrapolated") else "0"]
            fh.write(",".join(row) + "\n")
