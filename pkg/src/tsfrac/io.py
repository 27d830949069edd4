"""CSV and SVG output for solutions on a mesh."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .timescale import Mesh

CSV_HEADER = ("t", "u", "Dalpha_u")


def fmt(x: float) -> str:
    """Shortest round-trip decimal form; independent of locale."""
    return repr(float(x))


def write_csv(path: str | Path, mesh: Mesh, u: np.ndarray, du: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for t, a, b in zip(mesh.nodes, u, du):
            w.writerow((fmt(t), fmt(a), fmt(b)))


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {rows[0]}")
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    return {name: data[:, i] for i, name in enumerate(CSV_HEADER)}


def write_index(path: str | Path, rows: Sequence[dict]) -> None:
    cols = ("solution", "pair", "sign", "energy", "grad_norm", "classification", "file")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow(tuple(fmt(r[c]) if isinstance(r[c], float) else r[c] for c in cols))


def svg_plot(mesh: Mesh, u: np.ndarray, width: int = 640, height: int = 400, title: str = "u(t)") -> str:
    """Self-contained SVG of ``u`` over the mesh.

    Dense runs are polylines; scattered gaps break the line and isolated nodes
    get point markers.  X ticks sit at segment boundaries.
    """
    pad = 50
    t0, t1 = float(mesh.a), float(mesh.b)
    lo, hi = float(np.min(u)), float(np.max(u))
    if hi == lo:
        lo, hi = lo - 1, hi + 1
    margin = 0.05 * (hi - lo)
    lo, hi = lo - margin, hi + margin

    def x(t):
        return pad + (t - t0) / (t1 - t0) * (width - 2 * pad)

    def y(v):
        return height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
    ]
    if lo < 0 < hi:
        parts.append(
            f'<line x1="{pad}" y1="{y(0):.2f}" x2="{width - pad}" y2="{y(0):.2f}" stroke="#bbb" stroke-dasharray="4 3"/>'
        )
    for tb in mesh.segment_boundaries():
        parts.append(f'<line x1="{x(tb):.2f}" y1="{height - pad}" x2="{x(tb):.2f}" y2="{height - pad + 6}" stroke="black"/>')
        parts.append(
            f'<text x="{x(tb):.2f}" y="{height - pad + 20}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">{tb:g}</text>'
        )
    for v in (lo + margin, hi - margin):
        parts.append(
            f'<text x="{pad - 6}" y="{y(v) + 4:.2f}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.3g}</text>'
        )
    run: list[int] = [0]
    runs = []
    for i, scattered in enumerate(mesh.scattered):
        if scattered:
            runs.append(run)
            run = [i + 1]
        else:
            run.append(i + 1)
    runs.append(run)
    for r in runs:
        if len(r) > 1:
            pts = " ".join(f"{x(mesh.nodes[i]):.2f},{y(u[i]):.2f}" for i in r)
            parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>')
    for i in np.flatnonzero(mesh.isolated_mask()):
        parts.append(f'<circle cx="{x(mesh.nodes[i]):.2f}" cy="{y(u[i]):.2f}" r="3.5" fill="#d62728"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path: str | Path, mesh: Mesh, u: np.ndarray, title: str = "u(t)") -> None:
    Path(path).write_text(svg_plot(mesh, u, title=title))
