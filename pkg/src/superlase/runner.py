"""Sweep orchestration and result emission (CSV, JSON, SVG)."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import TWO_PI, PhysicalParams
from .observables import UndefinedMeasureError, coherence_cbd, power_watts
from .regression import RegressionError, SingularFormulaError, linewidth_analytic, linewidth_regression
from .spectrum import SpectrumError, scan_spectrum
from .steady import N_THRESHOLD, sweep_eta
from .tlm import TlmParams

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_COLUMNS = ("eta_hz", "n_photon", "power_w", "linewidth_hz_regression",
               "linewidth_hz_analytic", "linewidth_hz_filter", "c_bd", "converged",
               "direction")


@dataclass(frozen=True)
class ResultRow:
    """One pump point, frequencies in linear Hz."""

    eta_hz: float
    n_photon: float
    power_w: float
    linewidth_hz_regression: float = math.nan
    linewidth_hz_analytic: float = math.nan
    linewidth_hz_filter: float = math.nan
    c_bd: float = math.nan
    converged: bool = False
    direction: str = "up"

    @property
    def lasing(self) -> bool:
        return self.converged and self.n_photon >= N_THRESHOLD


def _analyse(task) -> ResultRow:
    params, row, with_filter, n_lasing = task
    kw = dict(eta_hz=row.eta / TWO_PI, n_photon=row.n_photon_s, power_w=row.power_w,
              converged=row.converged, direction=row.direction)
    if not row.converged or row.n_photon_s <= 0:
        return ResultRow(**kw)
    p = params.with_(eta=row.eta)
    try:
        kw["linewidth_hz_regression"] = linewidth_regression(p, row.steady).linewidth / TWO_PI
    except RegressionError as exc:
        log.warning("regression failed at eta=%g Hz: %s", kw["eta_hz"], exc)
    if isinstance(p, PhysicalParams):
        try:
            kw["linewidth_hz_analytic"] = linewidth_analytic(p, row.steady) / TWO_PI
        except SingularFormulaError:
            pass
        if p.raman_strength > 0:
            try:
                kw["c_bd"] = coherence_cbd(row.steady, p)
            except UndefinedMeasureError:
                pass
        if with_filter and row.n_photon_s >= n_lasing:
            try:
                kw["linewidth_hz_filter"] = scan_spectrum(p, steady=row.steady).fwhm / TWO_PI
            except SpectrumError as exc:
                log.warning("filter scan failed at eta=%g Hz: %s", kw["eta_hz"], exc)
    return ResultRow(**kw)


def _map(fn, items: list, threads: int) -> list:
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def laser_sweep(params, eta_grid: Sequence[float], direction: str = "up",
                with_filter: bool = False, threads: int = 1,
                n_lasing: float = N_THRESHOLD, mode: str = "march") -> list:
    """Continuation sweep plus per-point linewidths and coherence.

    ``eta_grid`` is ascending in rad/s. The sweep itself is sequential; the
    per-point analysis is independent and runs on ``threads`` workers.
    Rows come back in ascending eta regardless of direction. ``mode`` is
    passed to :func:`sweep_eta`.
    """
    rows = sweep_eta(params, eta_grid, direction, mode=mode)
    rows = sorted(rows, key=lambda r: r.eta)
    return _map(_analyse, [(params, r, with_filter, n_lasing) for r in rows], threads)


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, rows: Iterable, columns: Sequence[str] = CSV_COLUMNS,
              prefix: Optional[dict] = None) -> None:
    """UTF-8 CSV with a header; floats at 17 significant digits, NaN as empty."""
    prefix = prefix or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(prefix) + list(columns))
        for r in rows:
            get = r.get if isinstance(r, dict) else (lambda k, r=r: getattr(r, k))
            w.writerow([format_value(v) for v in prefix.values()]
                       + [format_value(get(c)) for c in columns])


def _json_safe(v):
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (float, np.floating)):
        return None if not math.isfinite(v) else float(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def write_json(path: Path, command: str, payload: dict) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "command": command, **payload}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def row_dict(r: ResultRow) -> dict:
    return {c: getattr(r, c) for c in CSV_COLUMNS}


# --- plotting -------------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "superlase"
    return plt


def save_svg(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    _pyplot().close(fig)


def plot_power_linewidth(series: dict, path: Path, title: str = "") -> None:
    """Log-log power and linewidth versus pump for each labelled row list.

    Linewidths are drawn only inside the lasing region.
    """
    plt = _pyplot()
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(5.5, 6.5))
    for label, rows in series.items():
        ok = [r for r in rows if r.converged and r.power_w > 0]
        ax1.loglog([r.eta_hz for r in ok], [r.power_w for r in ok], label=label)
        las = [r for r in ok if r.lasing and r.linewidth_hz_regression > 0]
        if las:
            ax2.loglog([r.eta_hz for r in las], [r.linewidth_hz_regression for r in las],
                       marker=".", label=label)
    ax1.axhline(1e-10, color="0.6", lw=0.8, ls=":")
    ax2.axhline(1.0, color="0.6", lw=0.8, ls=":")
    ax1.set_ylabel("power (W)")
    ax2.set_ylabel("linewidth (Hz)")
    ax2.set_xlabel("pump rate eta (Hz)")
    ax1.legend(fontsize=7)
    if title:
        ax1.set_title(title, fontsize=9)
    fig.tight_layout()
    save_svg(fig, path)


def plot_xy(series: dict, path: Path, xlabel: str, ylabel: str, logy: bool = True,
            logx: bool = True, title: str = "") -> None:
    """Simple multi-series line plot; ``series`` maps label -> (x, y)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for label, (x, y) in series.items():
        ax.plot(x, y, marker=".", label=label)
    ax.set_xscale("log" if logx else "linear")
    ax.set_yscale("log" if logy else "linear")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=7)
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    save_svg(fig, path)


def plot_map(x, y, z, path: Path, xlabel: str, ylabel: str, zlabel: str,
             mask=None) -> None:
    """log10 colour map of ``z[len(y), len(x)]`` on log axes, optional region contour."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4))
    with np.errstate(divide="ignore", invalid="ignore"):
        img = ax.pcolormesh(x, y, np.log10(z), shading="nearest")
    if mask is not None and np.any(mask) and not np.all(mask):
        ax.contour(x, y, mask.astype(float), levels=[0.5], colors="w", linestyles="--")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.colorbar(img, ax=ax, label=f"log10 {zlabel}")
    fig.tight_layout()
    save_svg(fig, path)
