"""Command-line interface.

Usage::

    superlase <command> --config run.cfg [--out DIR] [--threads N]

Commands: steady, sweep, spectrum, linewidth, pulling, tlm, figures.
Exit codes: 0 success, 1 usage or configuration error, 2 non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import figures
from .config import ConfigError, RunConfig, parse_config
from .model import TWO_PI, tlm_reduce
from .observables import coherence_cbd, power_watts, pulling_report
from .regression import SingularFormulaError, linewidth_analytic, linewidth_regression
from .runner import (CSV_COLUMNS, laser_sweep, plot_power_linewidth, plot_xy, row_dict,
                     write_csv, write_json)
from .spectrum import SpectrumError, scan_spectrum
from .steady import find_steady, hysteresis_intervals

log = logging.getLogger("superlase")

COMMANDS = ("steady", "sweep", "spectrum", "linewidth", "pulling", "tlm", "figures")
EXIT_OK, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="superlase",
                description="Mean-field simulator of a Raman-assisted superradiant laser.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, type=Path, help="sectioned key=value run file")
    p.add_argument("--out", type=Path, default=None,
                   help="output directory (default: [output] path of the config)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for independent points")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _hz(x: float) -> float:
    return x / TWO_PI


def cmd_steady(cfg: RunConfig, out: Path, threads: int) -> int:
    params = cfg.physical()
    ss = find_steady(params)
    state = {k: v for k, v in asdict(ss.state).items()}
    payload = {"eta_hz": cfg.pump.eta, "converged": ss.converged, "method": ss.method,
               "residual_norm": ss.residual_norm, "elapsed_model_time_s": ss.elapsed_model_time,
               "n_photon": ss.n_photon, "state": state}
    if ss.converged:
        payload["power_w"] = power_watts(ss, params)
        if params.raman_strength > 0 and ss.state.p_xx + ss.state.p_pp > 1e-15:
            payload["c_bd"] = coherence_cbd(ss, params)
    write_json(out / "steady.json", "steady", payload)
    return EXIT_OK if ss.converged else EXIT_NOCONV


def _grid(cfg: RunConfig) -> np.ndarray:
    return TWO_PI * np.asarray(cfg.eta_grid_hz())


def _emit_sweep(cfg, out: Path, name: str, params, rows_by_dir: dict) -> None:
    rows = [r for d in rows_by_dir.values() for r in d]
    fmt = cfg.output.format
    if fmt in ("csv", "svg"):
        write_csv(out / f"{name}.csv", rows)
    if fmt == "svg":
        plot_power_linewidth({d: rs for d, rs in rows_by_dir.items()}, out / f"{name}.svg",
                             title=name)
    if fmt == "json":
        write_json(out / f"{name}.json", name, {
            "columns": list(CSV_COLUMNS), "rows": [row_dict(r) for r in rows]})


def cmd_sweep(cfg: RunConfig, out: Path, threads: int) -> int:
    params = cfg.physical()
    grid = _grid(cfg)
    dirs = ("up", "down") if cfg.sweep.direction == "both" else (cfg.sweep.direction,)
    by_dir = {d: laser_sweep(params, grid, d, cfg.sweep.filter, threads, mode=cfg.sweep.mode)
              for d in dirs}
    _emit_sweep(cfg, out, "sweep", params, by_dir)
    summary = {"thresholds_hz": [], "hysteresis_hz": []}
    up = by_dir.get("up")
    if up is not None:
        n = np.array([r.n_photon for r in up])
        summary["thresholds_hz"] = _crossings([r.eta_hz for r in up], n, [r.converged for r in up])
    if len(dirs) == 2:
        summary["hysteresis_hz"] = [list(iv) for iv in _hysteresis(by_dir["up"], by_dir["down"])]
    write_json(out / "sweep_summary.json", "sweep", summary)
    bad = sum(not r.converged for rs in by_dir.values() for r in rs)
    if bad:
        log.error("%d sweep points did not converge", bad)
    return EXIT_OK if not bad else EXIT_NOCONV


def _crossings(eta, n, ok, n_thr: float = 10.0) -> list:
    """Grid-level threshold estimates (geometric midpoint of each bracket)."""
    out = []
    for i in range(len(eta) - 1):
        if ok[i] and ok[i + 1] and (n[i] < n_thr) != (n[i + 1] < n_thr):
            out.append(math.sqrt(eta[i] * eta[i + 1]))
    return out


def _hysteresis(up, down, factor: float = 10.0) -> list:
    class _R:  # adapter onto the steady-module detector
        def __init__(self, r):
            self.eta, self.n_photon_s, self.converged = r.eta_hz, r.n_photon, r.converged

    return hysteresis_intervals([_R(r) for r in up], [_R(r) for r in down], factor)


def cmd_spectrum(cfg: RunConfig, out: Path, threads: int) -> int:
    params = cfg.physical()
    ss = find_steady(params)
    if not ss.converged:
        log.error("steady state did not converge")
        return EXIT_NOCONV
    try:
        res = scan_spectrum(params, cfg.filter_config(), steady=ss)
    except SpectrumError as exc:
        log.error("spectrum scan failed: %s", exc)
        return EXIT_NOCONV
    pts = [{"omega_b_hz": _hz(w), "n_filter": n} for w, n in res.points]
    write_csv(out / "spectrum.csv", pts, ("omega_b_hz", "n_filter"))
    write_json(out / "spectrum.json", "spectrum", {
        "eta_hz": cfg.pump.eta, "peak_offset_hz": _hz(res.peak_omega),
        "fwhm_hz": _hz(res.fwhm), "fit_quality": res.fit_quality,
        "kappa_f_hz": _hz(res.kappa_f), "zeta_hz": _hz(res.zeta)})
    if cfg.output.format == "svg":
        x = [p["omega_b_hz"] for p in pts]
        plot_xy({"filter": (x, [p["n_filter"] for p in pts])}, out / "spectrum.svg",
                "filter offset (Hz)", "<b^dag b>", logy=False, logx=False)
    return EXIT_OK


def cmd_linewidth(cfg: RunConfig, out: Path, threads: int) -> int:
    params = cfg.physical()
    ss = find_steady(params)
    if not ss.converged:
        log.error("steady state did not converge")
        return EXIT_NOCONV
    reg = linewidth_regression(params, ss)
    try:
        ana = _hz(linewidth_analytic(params, ss))
    except SingularFormulaError:
        ana = math.nan
    try:
        filt = _hz(scan_spectrum(params, cfg.filter_config(), steady=ss).fwhm)
    except SpectrumError as exc:
        log.warning("filter scan failed: %s", exc)
        filt = math.nan
    lw = _hz(reg.linewidth)
    write_json(out / "linewidth.json", "linewidth", {
        "eta_hz": cfg.pump.eta, "n_photon": ss.n_photon, "power_w": power_watts(ss, params),
        "linewidth_hz_regression": lw, "linewidth_hz_analytic": ana,
        "linewidth_hz_filter": filt, "lasing_offset_hz": _hz(reg.lasing_offset),
        "rel_diff_analytic": abs(ana - lw) / lw, "rel_diff_filter": abs(filt - lw) / lw})
    return EXIT_OK


def cmd_pulling(cfg: RunConfig, out: Path, threads: int) -> int:
    params = cfg.physical()
    ss = find_steady(params)
    if not ss.converged:
        log.error("steady state did not converge")
        return EXIT_NOCONV
    rep = pulling_report(params, TWO_PI * cfg.pump.pulling_step, ss)
    write_json(out / "pulling.json", "pulling", {
        "eta_hz": cfg.pump.eta, "c_p_cavity": rep.c_p_cavity,
        "c_p_one_photon": rep.c_p_one_photon, "c_p_two_photon": rep.c_p_two_photon,
        "step_used_hz": _hz(rep.step_used), "richardson_error": rep.richardson_error,
        "flagged": [e.which for e in rep.estimates if e.flagged]})
    return EXIT_OK


def cmd_tlm(cfg: RunConfig, out: Path, threads: int) -> int:
    tlm = tlm_reduce(cfg.physical(), cfg.raman.tlm_variant)
    rows = laser_sweep(tlm, _grid(cfg), cfg.sweep.direction if cfg.sweep.direction != "both"
                       else "up", threads=threads, mode=cfg.sweep.mode)
    _emit_sweep(cfg, out, f"tlm_{cfg.raman.tlm_variant}", tlm, {"up": rows})
    return EXIT_OK if all(r.converged for r in rows) else EXIT_NOCONV


def cmd_figures(cfg: RunConfig, out: Path, threads: int) -> int:
    ok = figures.run_panels(cfg, out, threads)
    return EXIT_OK if ok else EXIT_NOCONV


HANDLERS = {"steady": cmd_steady, "sweep": cmd_sweep, "spectrum": cmd_spectrum,
            "linewidth": cmd_linewidth, "pulling": cmd_pulling, "tlm": cmd_tlm,
            "figures": cmd_figures}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"superlase: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("superlase: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = parse_config(args.config.read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"superlase: error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"superlase: error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out if args.out is not None else Path(cfg.output.path)
    out.mkdir(parents=True, exist_ok=True)
    return HANDLERS[args.command](cfg, out, args.threads)


if __name__ == "__main__":
    sys.exit(main())
