"""File output: JSON reports, CSV series, static SVG line charts and run manifests."""

from __future__ import annotations

import hashlib
import json
import platform
import time
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

__all__ = ["to_jsonable", "write_json", "write_csv", "svg_line_plot", "sha256_file", "Manifest"]


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and complex numbers to JSON types."""
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if hasattr(obj, "to_json"):
        return to_jsonable(obj.to_json())
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _fmt(v) -> str:
    if isinstance(v, (str,)):
        return v
    return "%.17g" % float(v)


def write_csv(path, header: Sequence[str], rows) -> Path:
    """Write rows with '.' decimals and 17 significant digits (locale independent)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in r))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]


def svg_line_plot(path, series: Mapping[str, tuple], title: str = "", xlabel: str = "",
                  ylabel: str = "", logx: bool = False, logy: bool = False,
                  size=(640, 400)) -> Path:
    """Static line chart: one ``<path>`` per series, axes box and min/max tick labels."""
    W, H = size
    ml, mr, mt, mb = 70, 20, 30, 45
    tx = (lambda v: np.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: np.log10(v)) if logy else (lambda v: v)
    pts = {}
    for name, (x, y) in series.items():
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        if logy:
            ok &= y > 0
        if ok.any():
            pts[name] = (tx(x[ok]), ty(y[ok]))
    if pts:
        xs = np.concatenate([p[0] for p in pts.values()])
        ys = np.concatenate([p[1] for p in pts.values()])
        x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def X(v):
        return ml + (v - x0) / (x1 - x0) * (W - ml - mr)

    def Y(v):
        return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb)

    def lab(v, log):
        return "%.3g" % (10**v if log else v)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<path d="M{ml},{mt} L{ml},{H - mb} L{W - mr},{H - mb}" fill="none" stroke="black"/>',
           f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="14">{title}</text>',
           f'<text x="{W / 2}" y="{H - 8}" text-anchor="middle" font-size="12">{xlabel}</text>',
           f'<text x="14" y="{H / 2}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 14 {H / 2})">{ylabel}</text>',
           f'<text x="{ml}" y="{H - mb + 16}" font-size="10" text-anchor="middle">{lab(x0, logx)}</text>',
           f'<text x="{W - mr}" y="{H - mb + 16}" font-size="10" text-anchor="middle">{lab(x1, logx)}</text>',
           f'<text x="{ml - 4}" y="{H - mb}" font-size="10" text-anchor="end">{lab(y0, logy)}</text>',
           f'<text x="{ml - 4}" y="{mt + 4}" font-size="10" text-anchor="end">{lab(y1, logy)}</text>']
    for i, (name, (x, y)) in enumerate(pts.items()):
        c = _COLORS[i % len(_COLORS)]
        d = " ".join(f"{'M' if j == 0 else 'L'}{X(a):.2f},{Y(b):.2f}" for j, (a, b) in enumerate(zip(x, y)))
        out.append(f'<path d="{d}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        out.append(f'<text x="{W - mr - 4}" y="{mt + 14 * (i + 1)}" font-size="11" '
                   f'text-anchor="end" fill="{c}">{name}</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    import numba
    import scipy

    from . import __version__

    return {"nlslab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "python": platform.python_version()}


class Manifest:
    """Collects output files of one command and writes ``manifest.json`` next to them."""

    def __init__(self, out_dir, command: str, config: Mapping):
        self.out_dir = Path(out_dir)
        self.command = command
        self.config = to_jsonable(dict(config))
        self.files: list[Path] = []
        self.extra: dict = {}
        self._t0 = time.perf_counter()

    def add(self, path) -> Path:
        path = Path(path)
        self.files.append(path)
        return path

    def config_hash(self) -> str:
        blob = json.dumps(self.config, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def write(self, status: str = "ok") -> Path:
        entries = [{"path": str(p.relative_to(self.out_dir)) if p.is_relative_to(self.out_dir) else str(p),
                    "sha256": sha256_file(p)} for p in self.files if p.exists()]
        doc = {"command": self.command, "status": status, "config": self.config,
               "config_sha256": self.config_hash(), "versions": _versions(),
               "wall_time_s": time.perf_counter() - self._t0, "files": entries,
               **to_jsonable(self.extra)}
        return write_json(self.out_dir / "manifest.json", doc)
