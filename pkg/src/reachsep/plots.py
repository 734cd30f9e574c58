"""Static SVG rendering of run artifacts.

Reads the CSV/JSON files a pipeline run leaves in its output directory and
writes four vector-graphic files: the initial tube overlay, the final tube
overlay, the control-set ellipses (original and both shrunk sets) and the
separation-versus-time curve.  Output is deterministic: fixed viewport,
six-decimal coordinates, no timestamps.
"""

import json
from pathlib import Path

import numpy as np

from .ellipsoid import psd_sqrt

COLORS = {"A": "#d62728", "B": "#1f77b4", "original": "#bcbd22"}


class MissingArtifactError(FileNotFoundError):
    """A required run artifact is not present in the output directory."""


def _require(out: Path, name: str) -> Path:
    p = out / name
    if not p.exists():
        raise MissingArtifactError(f"missing run artifact '{name}' in {out}")
    return p


class _Canvas:
    """Minimal SVG canvas mapping data coordinates to a fixed viewport."""

    def __init__(self, xlim, ylim, width=640, height=480, margin=50):
        self.width, self.height, self.margin = width, height, margin
        self.xlim, self.ylim = xlim, ylim
        self.parts = []

    def _map(self, x, y):
        sx = (self.width - 2 * self.margin) / max(self.xlim[1] - self.xlim[0], 1e-12)
        sy = (self.height - 2 * self.margin) / max(self.ylim[1] - self.ylim[0], 1e-12)
        return (self.margin + (x - self.xlim[0]) * sx,
                self.height - self.margin - (y - self.ylim[0]) * sy)

    def polyline(self, pts, stroke, width=1.0, opacity=1.0, close=False, fill="none"):
        mapped = " ".join("%.6f,%.6f" % self._map(x, y) for x, y in pts)
        tag = "polygon" if close else "polyline"
        self.parts.append(
            f'<{tag} points="{mapped}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{width:.6f}" stroke-opacity="{opacity:.6f}" fill-opacity="0.08"/>')

    def line(self, p0, p1, stroke, width=1.0, dash=None):
        x0, y0 = self._map(*p0)
        x1, y1 = self._map(*p1)
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<line x1="{x0:.6f}" y1="{y0:.6f}" x2="{x1:.6f}" y2="{y1:.6f}" '
                          f'stroke="{stroke}" stroke-width="{width:.6f}"{d}/>')

    def text(self, x, y, s, size=12, anchor="start"):
        px, py = self._map(x, y)
        self.parts.append(f'<text x="{px:.6f}" y="{py:.6f}" font-size="{size}" '
                          f'font-family="sans-serif" text-anchor="{anchor}">{s}</text>')

    def axes(self, xlabel, ylabel):
        self.line((self.xlim[0], self.ylim[0]), (self.xlim[1], self.ylim[0]), "#000000")
        self.line((self.xlim[0], self.ylim[0]), (self.xlim[0], self.ylim[1]), "#000000")
        self.text(self.xlim[1], self.ylim[0], xlabel, anchor="end")
        self.text(self.xlim[0], self.ylim[1], ylabel)

    def write(self, path: Path):
        body = "\n".join(self.parts)
        path.write_text(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
            f'{body}\n</svg>\n')


def _read_tubes(path: Path):
    """-> {aircraft: {t: [(dir2, value), ...]}} restricted to the plane axes."""
    rows = path.read_text().strip().splitlines()[1:]
    out = {}
    for row in rows:
        aircraft, t_s, j, dx, dy, dz, val = row.split(",")
        out.setdefault(aircraft, {}).setdefault(float(t_s), []).append(
            (np.array([float(dx), float(dy), float(dz)]), float(val)))
    return out


def _silhouette(entries, plane):
    """Polygon vertices of the support-halfspace intersection in the plane."""
    dirs = np.array([e[0][list(plane)] for e in entries])
    vals = np.array([e[1] for e in entries])
    keep = np.linalg.norm(dirs, axis=1) > 1e-9
    dirs, vals = dirs[keep], vals[keep]
    if dirs.shape[0] < 3:
        return None
    order = np.argsort(np.arctan2(dirs[:, 1], dirs[:, 0]))
    dirs, vals = dirs[order], vals[order]
    pts = []
    n = dirs.shape[0]
    for i in range(n):
        a, b = i, (i + 1) % n
        M = np.stack([dirs[a], dirs[b]])
        det = np.linalg.det(M)
        if abs(det) < 1e-12:
            continue
        pts.append(np.linalg.solve(M, [vals[a], vals[b]]))
    return np.array(pts) if len(pts) >= 3 else None


def _tube_svg(tube_path: Path, plane, labels, out_path: Path):
    tubes = _read_tubes(tube_path)
    if not tubes:
        return False
    polys = []
    for aircraft, per_t in tubes.items():
        for t in sorted(per_t):
            poly = _silhouette(per_t[t], plane)
            if poly is not None:
                polys.append((aircraft, poly))
    if not polys:
        return False
    allpts = np.vstack([p for _, p in polys])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    pad = 0.05 * np.maximum(hi - lo, 1e-6)
    c = _Canvas((lo[0] - pad[0], hi[0] + pad[0]), (lo[1] - pad[1], hi[1] + pad[1]))
    for aircraft, poly in polys:
        c.polyline(poly, COLORS.get(aircraft, "#555555"), width=0.8, opacity=0.55, close=True)
    c.axes(*labels)
    c.write(out_path)
    return True


def _ellipse_pts(center, shape, n=64):
    L = psd_sqrt(np.asarray(shape, dtype=float))
    ang = 2.0 * np.pi * np.arange(n) / n
    circ = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return np.asarray(center, dtype=float) + circ @ L.T


def emit_plots(out_dir) -> list:
    """Render SVG figures from run artifacts; returns the written paths.

    Raises MissingArtifactError when a required input file is absent.  If the
    tube CSVs carry no rows (empty direction set) the tube figures are
    skipped with a warning.
    """
    import sys

    out = Path(out_dir)
    scenario = json.loads(_require(out, "scenario.json").read_text())
    solution = json.loads(_require(out, "solution.json").read_text())
    tubes_initial = _require(out, "tubes_initial.csv")
    tubes_final = _require(out, "tubes.csv")
    separation_csv = _require(out, "separation.csv")
    plane = tuple(scenario["plane"])
    axis_names = ["x [m]", "y [m]", "z [m]"]
    labels = (axis_names[plane[0]], axis_names[plane[1]])
    written = []

    for path, name in [(tubes_initial, "initial_tubes.svg"), (tubes_final, "final_tubes.svg")]:
        if _tube_svg(path, plane, labels, out / name):
            written.append(out / name)
        else:
            print(f"warning: no tube silhouettes for {name} (empty direction set)",
                  file=sys.stderr)

    # control-set ellipses in the configured control plane
    cp = tuple(scenario["control_plane"])
    c = None
    groups = []
    for name in ("A", "B"):
        ac = solution["aircraft"][name]
        M = np.array(ac["original_control_shape"])[np.ix_(cp, cp)]
        c0 = np.array(ac["original_control_center"])[list(cp)]
        groups.append(("original", _ellipse_pts(c0, M)))
        Q = np.array(ac["Q"])
        qc = np.array(ac["q"])[list(cp)]
        groups.append((name, _ellipse_pts(qc, (Q @ Q)[np.ix_(cp, cp)])))
    allpts = np.vstack([g[1] for g in groups])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    pad = 0.05 * np.maximum(hi - lo, 1e-9)
    c = _Canvas((lo[0] - pad[0], hi[0] + pad[0]), (lo[1] - pad[1], hi[1] + pad[1]))
    for kind, pts in groups:
        c.polyline(pts, COLORS[kind], width=1.2, opacity=0.9, close=True)
    c.axes(f"u[{cp[0]}]", f"u[{cp[1]}]")
    path = out / "control_sets.svg"
    c.write(path)
    written.append(path)

    # separation curve
    rows = separation_csv.read_text().strip().splitlines()[1:]
    ts = np.array([float(r.split(",")[0]) for r in rows])
    ss = np.array([float(r.split(",")[1]) for r in rows])
    d = float(scenario["required_separation_m"])
    lo_y = min(ss.min(), 0.0)
    hi_y = max(ss.max(), d) * 1.05
    c = _Canvas((ts.min(), ts.max()), (lo_y, hi_y))
    c.polyline(np.stack([ts, ss], axis=1), "#2ca02c", width=1.5)
    c.line((ts.min(), d), (ts.max(), d), "#d62728", width=1.0, dash="6,4")
    c.text(ts.max(), d, "required", anchor="end")
    c.axes("t [s]", "separation [m]")
    path = out / "separation.svg"
    c.write(path)
    written.append(path)
    return written
