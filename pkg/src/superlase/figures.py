"""Figure panels: each writes one CSV and one SVG into the output directory.

Panels
------
power_linewidth  power and linewidth versus pump for ratios 1, sqrt(10), 10 at
                 two Raman strengths (the configured one and 10 MHz)
ratio_map        power and linewidth over (pump, Raman ratio)
pulling          pulling coefficients versus ratio (eta = 5 kHz) and versus pump
tlm_comparison   four-level model against the dark and bright three-level models
strong_raman     linewidth and dark/bright coherence for growing Raman strength
"""

from __future__ import annotations

import logging
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig
from .model import TWO_PI, tlm_reduce
from .observables import pulling_report
from .runner import (CSV_COLUMNS, ResultRow, laser_sweep, plot_map, plot_power_linewidth,
                     plot_xy, write_csv)
from .steady import find_steady

log = logging.getLogger(__name__)

SQRT10 = math.sqrt(10.0)


def _grid(cfg: RunConfig) -> np.ndarray:
    return TWO_PI * np.asarray(cfg.eta_grid_hz())


def _with_raman(cfg: RunConfig, strength_hz=None, ratio=None) -> RunConfig:
    kw = {}
    if strength_hz is not None:
        kw["strength"] = strength_hz
    if ratio is not None:
        kw["ratio"] = ratio
    return replace(cfg, raman=replace(cfg.raman, **kw))


def _write_series(path: Path, series: dict) -> None:
    rows = []
    for label, rs in series.items():
        rows.extend(dict({"series": label}, **{c: getattr(r, c) for c in CSV_COLUMNS})
                    for r in rs)
    write_csv(path, rows, ("series",) + CSV_COLUMNS)


def _ok(series: dict) -> bool:
    return all(r.converged for rs in series.values() for r in rs)


def power_linewidth(cfg: RunConfig, out: Path, threads: int) -> bool:
    ok = True
    for ratio, tag in ((1.0, "ratio_1"), (SQRT10, "ratio_sqrt10"), (10.0, "ratio_10")):
        series = {}
        for strength in sorted({cfg.raman.strength, 1e7}):
            p = _with_raman(cfg, strength, ratio).physical()
            series[f"strength {strength:.4g} Hz"] = laser_sweep(p, _grid(cfg), "up",
                                                                threads=threads)
        _write_series(out / f"power_linewidth_{tag}.csv", series)
        plot_power_linewidth(series, out / f"power_linewidth_{tag}.svg",
                             title=f"Raman ratio {ratio:.4g}")
        ok &= _ok(series)
    return ok


def ratio_map(cfg: RunConfig, out: Path, threads: int, ratios=None) -> bool:
    ratios = np.logspace(0, 2, 9) if ratios is None else np.asarray(ratios)
    grid = _grid(cfg)
    series = {}
    for ratio in ratios:
        p = _with_raman(cfg, ratio=float(ratio)).physical()
        series[f"ratio {ratio:.6g}"] = laser_sweep(p, grid, "up", threads=threads)
    _write_series(out / "ratio_map.csv", series)
    eta = grid / TWO_PI
    power = np.array([[r.power_w if r.converged else np.nan for r in rs]
                      for rs in series.values()])
    lw = np.array([[r.linewidth_hz_regression if r.lasing else np.nan for r in rs]
                   for rs in series.values()])
    good = np.array([[r.lasing and r.power_w >= 1e-10 and r.linewidth_hz_regression <= 1.0
                      and r.eta_hz <= 1e4 for r in rs] for rs in series.values()])
    plot_map(eta, ratios, power, out / "ratio_map.svg", "pump rate eta (Hz)",
             "Raman ratio", "power (W)", mask=good)
    plot_map(eta, ratios, lw, out / "ratio_map_linewidth.svg", "pump rate eta (Hz)",
             "Raman ratio", "linewidth (Hz)", mask=good)
    return _ok(series)


def pulling(cfg: RunConfig, out: Path, threads: int) -> bool:
    rows = []
    step = TWO_PI * cfg.pump.pulling_step
    cases = [("vs_ratio", float(r), 5e3) for r in np.logspace(0, 2, 9)]
    cases += [("vs_eta", 10.0, float(e)) for e in np.logspace(3, 4.5, 7)]
    ok = True
    for series, ratio, eta in cases:
        p = _with_raman(cfg, ratio=ratio).physical(eta)
        ss = find_steady(p)
        row = {"series": series, "ratio": ratio, "eta_hz": eta, "n_photon": ss.n_photon,
               "c_p_cavity": math.nan, "c_p_one_photon": math.nan,
               "c_p_two_photon": math.nan, "converged": ss.converged}
        if ss.converged:
            try:
                rep = pulling_report(p, step, ss)
                row.update(c_p_cavity=rep.c_p_cavity, c_p_one_photon=rep.c_p_one_photon,
                           c_p_two_photon=rep.c_p_two_photon)
            except Exception as exc:  # tracking failures are recorded per row
                log.warning("pulling failed at ratio=%g eta=%g: %s", ratio, eta, exc)
                row["converged"] = False
        ok &= row["converged"]
        rows.append(row)
    write_csv(out / "pulling.csv", rows, ("series", "ratio", "eta_hz", "n_photon", "c_p_cavity",
                                          "c_p_one_photon", "c_p_two_photon", "converged"))
    plt_series = {}
    for series, key in (("vs_ratio", "ratio"), ("vs_eta", "eta_hz")):
        sub = [r for r in rows if r["series"] == series]
        for ch in ("c_p_cavity", "c_p_one_photon", "c_p_two_photon"):
            plt_series[f"{ch} {series}"] = ([r[key] for r in sub], [r[ch] for r in sub])
    plot_xy({k: v for k, v in plt_series.items() if k.endswith("vs_ratio")},
            out / "pulling.svg", "Raman ratio (eta = 5 kHz)", "pulling coefficient")
    plot_xy({k: v for k, v in plt_series.items() if k.endswith("vs_eta")},
            out / "pulling_vs_eta.svg", "pump rate eta (Hz), ratio 10", "pulling coefficient")
    return ok


def tlm_comparison(cfg: RunConfig, out: Path, threads: int) -> bool:
    p = cfg.physical()
    grid = _grid(cfg)
    series = {"four-level": laser_sweep(p, grid, "up", threads=threads)}
    for variant in ("dark", "bright"):
        series[f"{variant} TLM"] = laser_sweep(tlm_reduce(p, variant), grid, "down",
                                               threads=threads, mode="branch")
    _write_series(out / "tlm_comparison.csv", series)
    plot_power_linewidth(series, out / "tlm_comparison.svg", title="three-level comparison")
    return _ok(series)


def strong_raman(cfg: RunConfig, out: Path, threads: int) -> bool:
    grid = _grid(cfg)
    series = {}
    for strength in (math.sqrt(10) * 1e6, 1e7, 1e8):
        p = _with_raman(cfg, strength_hz=strength).physical()
        series[f"strength {strength:.4g} Hz"] = laser_sweep(p, grid, "down", threads=threads,
                                                            mode="branch")
    p = cfg.physical()
    series["dark TLM"] = laser_sweep(tlm_reduce(p, "dark"), grid, "down", threads=threads,
                                     mode="branch")
    _write_series(out / "strong_raman.csv", series)
    lw = {k: ([r.eta_hz for r in rs if r.lasing], [r.linewidth_hz_regression for r in rs
                                                    if r.lasing])
          for k, rs in series.items()}
    plot_xy(lw, out / "strong_raman.svg", "pump rate eta (Hz)", "linewidth (Hz)")
    cbd = {k: ([r.eta_hz for r in rs if r.lasing], [r.c_bd for r in rs if r.lasing])
           for k, rs in series.items() if k != "dark TLM"}
    plot_xy(cbd, out / "strong_raman_coherence.svg", "pump rate eta (Hz)", "C_BD")
    return _ok(series)


PANELS = {"power_linewidth": power_linewidth, "ratio_map": ratio_map, "pulling": pulling,
          "tlm_comparison": tlm_comparison, "strong_raman": strong_raman}


def run_panels(cfg: RunConfig, out: Path, threads: int = 1) -> bool:
    names = [s.strip() for s in cfg.output.panels.split(",") if s.strip()]
    unknown = [n for n in names if n not in PANELS]
    if unknown:
        raise ValueError(f"unknown panels: {', '.join(unknown)}")
    ok = True
    for name in names:
        log.info("panel %s", name)
        ok &= PANELS[name](cfg, out, threads)
    return ok
