"""Table, chart and manifest writers for cli runs."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy

FORMATS = ("csv", "json", "svg")

SOLUTION_COLUMNS = ("c", "n", "mu", "radius", "kinetic", "coulomb", "total",
                    "virial_res", "mult_res", "boundary_res")
SWEEP_COLUMNS = ("c", "n", "dE", "dKin", "dMu", "dR", "status")
RATE_COLUMNS = ("observable", "exponent", "amplitude", "r2")


def format_value(value: Any) -> str:
    """Shortest round-trip text for floats; plain text for everything else."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def json_value(value: Any) -> Any:
    if isinstance(value, bool):
        return value
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


@dataclass
class Table:
    name: str
    columns: Sequence[str]
    rows: list[dict] = field(default_factory=list)

    def add(self, **row) -> None:
        missing = set(self.columns) - set(row)
        if missing:
            raise KeyError(f"row for {self.name} lacks {sorted(missing)}")
        self.rows.append(row)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_value(row[col]) for col in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "table": self.name,
            "columns": list(self.columns),
            "rows": [{col: json_value(row[col]) for col in self.columns} for row in self.rows],
        }
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def solution_row(sol) -> dict:
    return dict(
        c=sol.params.c,
        n=sol.mass,
        mu=sol.mu,
        radius=sol.radius,
        kinetic=sol.kinetic_energy,
        coulomb=sol.coulomb_energy,
        total=sol.total_energy,
        virial_res=sol.virial_residual,
        mult_res=sol.multiplier_residual,
        boundary_res=sol.boundary_residual,
    )


def rate_row(fit) -> dict:
    return dict(observable=fit.observable, exponent=fit.exponent,
                amplitude=fit.amplitude, r2=fit.r2)


# ---------------------------------------------------------------------------
# SVG


def _ticks(lo: float, hi: float) -> list[float]:
    """Decade ticks in log10 space, or the two endpoints when under a decade."""
    ticks = [float(k) for k in range(math.ceil(lo), math.floor(hi) + 1)]
    return ticks if len(ticks) >= 2 else [lo, hi]


def _num(v: float) -> str:
    return f"{v:.2f}"


def render_chart(fit, width: int = 520, height: int = 380) -> str:
    """Log-log scatter of the fit samples with the fitted line."""
    lx = np.log10(np.asarray(fit.x, dtype=float))
    ly = np.log10(np.asarray(fit.y, dtype=float))
    xline = np.array([lx.min(), lx.max()])
    yline = math.log10(fit.amplitude) + fit.exponent * xline
    xlo, xhi = float(lx.min()), float(lx.max())
    ylo = float(min(ly.min(), yline.min()))
    yhi = float(max(ly.max(), yline.max()))
    padx = 0.05 * (xhi - xlo or 1.0)
    pady = 0.05 * (yhi - ylo or 1.0)
    xlo, xhi, ylo, yhi = xlo - padx, xhi + padx, ylo - pady, yhi + pady
    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(v):
        return left + (v - xlo) / (xhi - xlo) * pw

    def sy(v):
        return top + (yhi - v) / (yhi - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(xlo, xhi):
        x = sx(t)
        out.append(f'<line x1="{_num(x)}" y1="{top + ph}" x2="{_num(x)}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_num(x)}" y="{top + ph + 18}" font-size="11" '
                   f'text-anchor="middle">{t:.2f}</text>')
    for t in _ticks(ylo, yhi):
        y = sy(t)
        out.append(f'<line x1="{left - 5}" y1="{_num(y)}" x2="{left}" y2="{_num(y)}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{_num(y + 4)}" font-size="11" '
                   f'text-anchor="end">{t:.2f}</text>')
    out.append(
        f'<line x1="{_num(sx(xline[0]))}" y1="{_num(sy(yline[0]))}" '
        f'x2="{_num(sx(xline[1]))}" y2="{_num(sy(yline[1]))}" stroke="#1f77b4" stroke-width="1.5"/>'
    )
    for x, y in zip(lx, ly):
        out.append(f'<circle cx="{_num(sx(x))}" cy="{_num(sy(y))}" r="3.5" fill="#d62728"/>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" font-size="12" '
               f'text-anchor="middle">log10 {fit.x_name}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.2f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.2f})">log10 {fit.observable}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="24" font-size="13" text-anchor="middle">'
               f'{fit.observable}: slope = {fit.exponent:.3f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Bundle


def versions() -> dict:
    from . import __version__

    return {
        "starlab": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        moment = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    else:
        moment = _dt.datetime.now(tz=_dt.timezone.utc)
    return moment.isoformat(timespec="seconds")


class ReportBundle:
    """Collects output files under one directory and writes the manifest last."""

    def __init__(self, out_dir, formats=FORMATS):
        self.out_dir = Path(out_dir)
        self.formats = tuple(formats)
        self.files: list[str] = []
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def _write(self, name: str, text: str) -> None:
        path = self.out_dir / name
        path.write_text(text, encoding="utf-8", newline="")
        if name not in self.files:
            self.files.append(name)

    def add_table(self, table: Table) -> None:
        if "csv" in self.formats:
            self._write(f"{table.name}.csv", table.to_csv())
        if "json" in self.formats:
            self._write(f"{table.name}.json", table.to_json())

    def add_chart(self, fit, name: str | None = None) -> None:
        if "svg" in self.formats:
            self._write(f"{name or 'rate_' + fit.observable}.svg", render_chart(fit))

    def add_json(self, name: str, doc) -> None:
        self._write(name, json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")

    def digest(self, name: str) -> str:
        return hashlib.sha256((self.out_dir / name).read_bytes()).hexdigest()

    def write_manifest(self, mode: str, config: dict, status: str, exit_code: int,
                       notes: Sequence[str] = ()) -> dict:
        manifest = {
            "mode": mode,
            "config": config,
            "versions": versions(),
            "created": timestamp(),
            "status": status,
            "exit_code": exit_code,
            "notes": list(notes),
            "files": [{"name": name, "sha256": self.digest(name)} for name in self.files],
        }
        text = json.dumps(manifest, indent=2, allow_nan=False) + "\n"
        (self.out_dir / "manifest.json").write_text(text, encoding="utf-8", newline="")
        return manifest
