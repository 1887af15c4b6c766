"""Run configuration: a sectioned ``key = value`` text format.

Frequencies are linear Hz and accept ``k`` (1e3) or ``M`` (1e6) suffixes::

    [atoms]
    n = 1e5
    [raman]
    strength = 3.16227766M
    ratio = 3.16227766
    [pump]
    eta = 3k

``#`` and ``;`` start comments. Unknown sections or keys are rejected.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

from .model import PhysicalParams
from .spectrum import FilterConfig

_SUFFIX = {"": 1.0, "k": 1e3, "M": 1e6}
_NUMBER = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([A-Za-z]*)$")


class ConfigError(ValueError):
    def __init__(self, msg: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True)
class AtomsConfig:
    n: float = 1e5
    gamma0: float = 7.5e3
    gamma_x: float = 2.6e6
    gamma_p: float = 1.8e6
    coupling: float = 20e3  # single-atom vacuum Rabi frequency Omega_c
    wavelength_nm: float = 689.449


@dataclass(frozen=True)
class CavityConfig:
    kappa: float = 150e3
    delta_c: float = 0.0


@dataclass(frozen=True)
class RamanConfig:
    strength: float = math.sqrt(10) * 1e6
    ratio: float = math.sqrt(10)
    delta_alpha: float = 0.0
    delta_beta: float = 0.0
    tlm_variant: str = "dark"


@dataclass(frozen=True)
class PumpConfig:
    eta: float = 3e3
    pulling_step: float = 10.0


@dataclass(frozen=True)
class SweepConfig:
    eta_min: float = 300.0
    eta_max: float = 1e8
    points_per_decade: int = 15
    direction: str = "up"  # up | down | both
    mode: str = "march"  # march | branch
    filter: bool = False


@dataclass(frozen=True)
class SpectrumConfig:
    mode: str = "auto"  # auto | explicit
    zeta: float = 0.0
    kappa_f: float = 0.0
    grid_min: float = 0.0
    grid_max: float = 0.0
    grid_points: int = 61


@dataclass(frozen=True)
class OutputConfig:
    format: str = "csv"  # csv | json | svg
    path: str = "results"
    panels: str = "power_linewidth,tlm_comparison,strong_raman,pulling,ratio_map"


@dataclass(frozen=True)
class RunConfig:
    atoms: AtomsConfig = field(default_factory=AtomsConfig)
    cavity: CavityConfig = field(default_factory=CavityConfig)
    raman: RamanConfig = field(default_factory=RamanConfig)
    pump: PumpConfig = field(default_factory=PumpConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def physical(self, eta_hz: Optional[float] = None) -> PhysicalParams:
        """Angular-frequency parameters; ``eta_hz`` overrides the pump."""
        a, c, r = self.atoms, self.cavity, self.raman
        eta = self.pump.eta if eta_hz is None else eta_hz
        w = 2 * math.pi
        return PhysicalParams.raman(
            w * r.strength, r.ratio, n_atoms=a.n, kappa=w * c.kappa,
            gamma0=w * a.gamma0, gamma_x=w * a.gamma_x, gamma_p=w * a.gamma_p,
            eta=w * eta, omega_c_rabi=w * a.coupling, delta_c=w * c.delta_c,
            delta_alpha=w * r.delta_alpha, delta_beta=w * r.delta_beta,
            lasing_wavelength=a.wavelength_nm * 1e-9)

    def eta_grid_hz(self) -> list:
        s = self.sweep
        decades = math.log10(s.eta_max / s.eta_min)
        n = max(int(round(s.points_per_decade * decades)) + 1, 2)
        return [s.eta_min * 10 ** (decades * i / (n - 1)) for i in range(n)]

    def filter_config(self) -> Optional[FilterConfig]:
        sp = self.spectrum
        if sp.mode == "auto":
            return None
        grid = ()
        if sp.grid_max > sp.grid_min:
            step = (sp.grid_max - sp.grid_min) / (sp.grid_points - 1)
            grid = tuple(2 * math.pi * (sp.grid_min + i * step) for i in range(sp.grid_points))
        return FilterConfig(2 * math.pi * sp.zeta, 2 * math.pi * sp.kappa_f, grid)


PANEL_NAMES = ("power_linewidth", "ratio_map", "pulling", "tlm_comparison", "strong_raman")

_SECTIONS = {f.name: f.default_factory for f in fields(RunConfig)}
_REQUIRED = {("atoms", "n")}
_CHOICES = {
    ("sweep", "direction"): ("up", "down", "both"),
    ("sweep", "mode"): ("march", "branch"),
    ("spectrum", "mode"): ("auto", "explicit"),
    ("output", "format"): ("csv", "json", "svg"),
    ("raman", "tlm_variant"): ("dark", "bright"),
}


def parse_number(text: str, line: Optional[int] = None) -> float:
    m = _NUMBER.match(text.strip())
    if not m:
        raise ConfigError(f"malformed number {text!r}", line)
    if m.group(2) not in _SUFFIX:
        raise ConfigError(f"unit suffix {m.group(2)!r} not allowed (use none, k or M)", line)
    return float(m.group(1)) * _SUFFIX[m.group(2)]


def _convert(section, key, ftype, raw, line):
    if ftype in (float, "float"):
        return parse_number(raw, line)
    if ftype in (int, "int"):
        v = parse_number(raw, line)
        if v != int(v):
            raise ConfigError(f"{key} must be an integer", line)
        return int(v)
    if ftype in (bool, "bool"):
        low = raw.strip().lower()
        if low not in ("true", "false", "yes", "no", "1", "0"):
            raise ConfigError(f"{key} must be a boolean", line)
        return low in ("true", "yes", "1")
    value = raw.strip()
    allowed = _CHOICES.get((section, key))
    if allowed and value not in allowed:
        raise ConfigError(f"{key} must be one of {', '.join(allowed)}", line)
    return value


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration, filling defaults."""
    values: dict = {s: {} for s in _SECTIONS}
    lines: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = re.split(r"[#;]", raw, maxsplit=1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        key, raw_value = (s.strip() for s in line.split("=", 1))
        types = {f.name: f.type for f in fields(_SECTIONS[section]())}
        if key not in types:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if key in values[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno)
        values[section][key] = _convert(section, key, types[key], raw_value, lineno)
        lines[(section, key)] = lineno
    for sec, key in _REQUIRED:
        if key not in values[sec]:
            raise ConfigError(f"missing required key {key!r} in [{sec}]")
    cfg = RunConfig(**{s: replace(_SECTIONS[s](), **kv) for s, kv in values.items()})
    _validate(cfg, lines)
    return cfg


def _validate(cfg: RunConfig, lines: dict) -> None:
    def fail(sec, key, msg):
        raise ConfigError(msg, lines.get((sec, key)))

    if cfg.atoms.n < 1:
        fail("atoms", "n", "n must be >= 1")
    for key in ("gamma0", "gamma_x", "gamma_p", "coupling", "wavelength_nm"):
        if getattr(cfg.atoms, key) < 0:
            fail("atoms", key, f"{key} must be >= 0")
    if cfg.cavity.kappa <= 0:
        fail("cavity", "kappa", "kappa must be > 0")
    if cfg.raman.strength < 0 or cfg.raman.ratio < 0:
        fail("raman", "strength", "Raman strength and ratio must be >= 0")
    if cfg.pump.eta < 0:
        fail("pump", "eta", "eta must be >= 0")
    if cfg.pump.pulling_step <= 0:
        fail("pump", "pulling_step", "pulling_step must be > 0")
    s = cfg.sweep
    if not 0 < s.eta_min < s.eta_max:
        fail("sweep", "eta_min", "need 0 < eta_min < eta_max")
    if s.points_per_decade < 1:
        fail("sweep", "points_per_decade", "points_per_decade must be >= 1")
    panels = [x.strip() for x in cfg.output.panels.split(",") if x.strip()]
    if not panels or any(x not in PANEL_NAMES for x in panels):
        fail("output", "panels", f"panels must be a comma list drawn from {', '.join(PANEL_NAMES)}")
    sp = cfg.spectrum
    if sp.mode == "explicit":
        if sp.zeta <= 0 or sp.kappa_f <= 0:
            fail("spectrum", "mode", "explicit spectrum needs zeta > 0 and kappa_f > 0")
        if sp.grid_max > sp.grid_min and sp.grid_points < 5:
            fail("spectrum", "grid_points", "grid_points must be >= 5")


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_config(cfg: RunConfig) -> str:
    """Serialise every field; parse_config(emit_config(c)) == c."""
    out = []
    for sec in _SECTIONS:
        out.append(f"[{sec}]")
        for k, v in asdict(getattr(cfg, sec)).items():
            out.append(f"{k} = {_format_value(v)}")
        out.append("")
    return "\n".join(out)
