"""Run configuration: sectioned ``key = value`` text with SI units in key names.

Example::

    [broadening]
    gamma_laser_hz = 2.0e5

    [sd]
    frozen = c0, g_env

Unknown sections or keys are rejected. Every key has a default, so an empty
file (or no file at all) is a valid configuration.
"""

from __future__ import annotations

import configparser
import hashlib
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .fidsim import EnsembleSpec
from .holesim import BroadeningParams
from .levelmodel import FeatureClass, HyperfineModel
from .ratedyn import PumpSchedule, RateParams
from .specdiff import PARAM_NAMES, SdParams

ENV_VAR = "HOLEBURN_CONFIG"

SCHEMA: dict[str, dict[str, Any]] = {
    "hyperfine": {
        "rate_y1_hz_per_t": 25.6e6,
        "rate_x1_hz_per_t": 41.6e6,
        "shf_diff_y1_hz_per_t": 3.05e6,
        "shf_diff_x1_hz_per_t": 2.35e6,
        "selection_rule": "spin_conserving",
    },
    "broadening": {
        "gamma_hom_hz": 273e3,
        "gamma_laser_hz": 2.0e5,
        "gamma_laser_sigma_hz": 5.0e4,
        "rabi_rad_per_s": 0.0,
        "t1_s": 0.85e-3,
    },
    "holes": {
        "baseline_od": 1.0,
        "depth_od": 0.5,
        "tau_central_s": 6.21e-3,
        "tau_inner_s": 0.85e-3,
        "tau_outer_s": 6.21e-3,
        "tau_antihole_s": 6.21e-3,
        "x1_lifetime_s": 0.85e-3,
        "antihole_wait_factor": 1.0,
        "include_antiholes": True,
        "grid_points": 4001,
    },
    "rates": {
        "re0_per_s": 1.0e3,
        "t1_s": 1.0e-3,
        "tb_s": 6.3e-3,
        "beta": 0.5,
        "od": 0.22,
        "pump_bw_hz": 2.0e5,
        "gamma_inh_hz": 1.29e9,
    },
    "sd": {
        "a_d_hz2_per_t5": 0.0,
        "b_f_hz2": 4.2e10,
        "c0_hz2": 0.0,
        "gamma0_hz": 259.8e3,
        "g_env": 4.6,
        "temperature_k": 1.7,
        "frozen": "c0, g_env",
    },
    "protocol": {
        "burn_s": 3.0e-4,
        "wait_s": 1.0e-5,
        "scan_hz": 2.0e8,
        "tau_pump_s": 50e-3,
        "tau_delay_s": 1.0e-5,
        "read_window_s": 1.2e-3,
    },
    "fid": {
        "detuning_cutoff": 50.0,
        "points": 201,
        "span_tau": 5.0,
    },
}


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return n
    return None


def _convert(default, raw: str, where: str):
    if isinstance(default, bool):
        low = raw.strip().lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{where}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {raw!r}") from None
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {raw!r}") from None
    return raw.strip()


@dataclass
class RunConfig:
    values: dict[str, dict[str, Any]] = field(
        default_factory=lambda: {s: dict(v) for s, v in SCHEMA.items()}
    )
    source: str | None = None
    raw: bytes = b""

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.raw).hexdigest()

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.values[section]

    @classmethod
    def from_text(cls, text: str, source: str | None = None) -> "RunConfig":
        parser = configparser.ConfigParser(
            interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
            default_section="\0none",
        )
        parser.optionxform = str
        try:
            parser.read_string(text, source=source or "<config>")
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        cfg = cls(source=source, raw=text.encode())
        label = source or "<config>"
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"{label}:{_line_of(text, section)}: unknown section [{section}]")
            for key, raw in parser.items(section):
                where = f"{label}:{_line_of(text, section, key)}: [{section}] {key}"
                if key not in SCHEMA[section]:
                    raise ConfigError(f"{where}: unknown key")
                cfg.values[section][key] = _convert(SCHEMA[section][key], raw, where)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | os.PathLike | None = None) -> "RunConfig":
        """Read ``path``, else the file named by ``$HOLEBURN_CONFIG``, else defaults."""
        path = path or os.environ.get(ENV_VAR)
        if not path:
            return cls()
        p = Path(path)
        try:
            data = p.read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
        try:
            text = data.decode()
        except UnicodeDecodeError:
            raise ConfigError(f"{p}: not valid UTF-8 text") from None
        cfg = cls.from_text(text, str(p))
        cfg.raw = data
        return cfg

    def validate(self) -> None:
        try:
            self.hyperfine_model()
            self.broadening()
            self.rate_params()
            self.sd_params()
            self.schedule()
            self.frozen()
            EnsembleSpec(self["broadening"]["gamma_hom_hz"], self["broadening"]["gamma_laser_hz"],
                         self["fid"]["detuning_cutoff"])
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{self.source or '<config>'}: {exc}") from None
        if self["holes"]["grid_points"] < 8:
            raise ConfigError("[holes] grid_points must be >= 8")
        if self["protocol"]["scan_hz"] <= 0:
            raise ConfigError("[protocol] scan_hz must be positive")

    # -- typed views -------------------------------------------------------

    def hyperfine_model(self) -> HyperfineModel:
        h = self["hyperfine"]
        return HyperfineModel(h["rate_y1_hz_per_t"], h["rate_x1_hz_per_t"], h["shf_diff_y1_hz_per_t"],
                              h["shf_diff_x1_hz_per_t"], h["selection_rule"])

    def broadening(self, gamma_hom: float | None = None, gamma_laser: float | None = None) -> BroadeningParams:
        b = self["broadening"]
        rabi = b["rabi_rad_per_s"]
        return BroadeningParams(
            gamma_hom=b["gamma_hom_hz"] if gamma_hom is None else gamma_hom,
            gamma_laser=b["gamma_laser_hz"] if gamma_laser is None else gamma_laser,
            rabi=rabi,
            t1=b["t1_s"] if rabi > 0 else None,
        )

    def lifetimes(self) -> dict[FeatureClass, float]:
        h = self["holes"]
        return {
            FeatureClass.CENTRAL: h["tau_central_s"],
            FeatureClass.INNER: h["tau_inner_s"],
            FeatureClass.OUTER: h["tau_outer_s"],
            FeatureClass.ANTIHOLE: h["tau_antihole_s"],
        }

    def rate_params(self) -> RateParams:
        r = self["rates"]
        return RateParams(r["re0_per_s"], r["t1_s"], r["tb_s"], r["beta"], r["od"], r["pump_bw_hz"], r["gamma_inh_hz"])

    def schedule(self) -> PumpSchedule:
        p = self["protocol"]
        return PumpSchedule(p["tau_pump_s"], p["tau_delay_s"], p["read_window_s"])

    def sd_params(self) -> SdParams:
        s = self["sd"]
        return SdParams(s["a_d_hz2_per_t5"], s["b_f_hz2"], s["c0_hz2"], s["gamma0_hz"], s["g_env"])

    def frozen(self) -> tuple[str, ...]:
        names = tuple(n.strip() for n in str(self["sd"]["frozen"]).split(",") if n.strip())
        bad = set(names) - set(PARAM_NAMES)
        if bad:
            raise ConfigError(f"[sd] frozen: unknown parameters {sorted(bad)}; choose from {PARAM_NAMES}")
        return names
