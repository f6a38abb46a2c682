"""Fit reports: ordered ``key = value`` records, written as text and as CSV."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DomainError
from .fidsim import t2_from_fid
from .fitcore import FitResult
from .holesim import t2_from_hole

REPORT_VERSION = 1


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


@dataclass
class Report:
    command: str
    entries: list[tuple[str, str]] = field(default_factory=list)

    def add(self, key: str, value) -> None:
        if any(k == key for k, _ in self.entries):
            raise KeyError(f"duplicate report key {key}")
        self.entries.append((key, _fmt(value)))

    def get(self, key: str) -> str:
        for k, v in self.entries:
            if k == key:
                return v
        raise KeyError(key)

    def as_dict(self) -> dict[str, str]:
        return dict(self.entries)

    def add_fit(self, res: FitResult, units: dict[str, str] | None = None) -> None:
        units = units or {}
        for name, value in res.params.items():
            suffix = f"_{units[name]}" if name in units else ""
            self.add(f"fit.{name}{suffix}", float(value))
            self.add(f"fit.{name}{suffix}.sigma", float(res.sigmas.get(name, math.nan)))
        self.add("fit.converged", bool(res.converged))
        self.add("fit.iterations", int(res.iterations))
        self.add("fit.residual_norm", float(res.residual_norm))

    def to_text(self) -> str:
        lines = [f"# holeburn report v{REPORT_VERSION}", f"command = {self.command}"]
        lines += [f"{k} = {v}" for k, v in self.entries]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerow(["command", self.command])
        w.writerows(self.entries)
        return buf.getvalue()

    def write(self, path) -> tuple[Path, Path]:
        """Write ``<stem>.txt`` style text to ``path`` and the CSV twin beside it."""
        path = Path(path)
        csv_path = path.with_suffix(".csv")
        if csv_path == path:
            path = path.with_suffix(".txt")
        path.write_text(self.to_text())
        csv_path.write_text(self.to_csv())
        return path, csv_path

    @staticmethod
    def parse_text(text: str) -> dict[str, str]:
        out = {}
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            k, _, v = line.partition(" = ")
            out[k] = v
        return out


def _band(func, x: float, gamma_laser: float, sigma_laser: float) -> tuple[float, float]:
    vals = []
    for gl in (max(gamma_laser - sigma_laser, 0.0), gamma_laser + sigma_laser):
        try:
            vals.append(func(x, gl))
        except DomainError:
            vals.append(math.inf)
    return min(vals), max(vals)


def add_hole_t2(report: Report, fwhm: float, fwhm_sigma: float, gamma_laser: float, sigma_laser: float) -> float:
    """Coherence time from a hole width, with fit and laser-linewidth bands."""
    t2 = t2_from_hole(fwhm, gamma_laser)
    lo, hi = _band(t2_from_hole, fwhm, gamma_laser, sigma_laser)
    report.add("derived.gamma_laser_hz", gamma_laser)
    report.add("derived.gamma_laser_sigma_hz", sigma_laser)
    report.add("derived.t2_s", t2)
    # dT2/dgamma = -T2 / (gamma_hole - gamma_laser)
    report.add("derived.t2_fit_sigma_s", t2 * fwhm_sigma / (fwhm - gamma_laser))
    report.add("derived.t2_band_low_s", lo)
    report.add("derived.t2_band_high_s", hi)
    return t2


def add_fid_t2(report: Report, tau: float, tau_sigma: float, gamma_laser: float, sigma_laser: float) -> float:
    t2 = t2_from_fid(tau, gamma_laser)
    lo, hi = _band(t2_from_fid, tau, gamma_laser, sigma_laser)
    report.add("derived.gamma_laser_hz", gamma_laser)
    report.add("derived.gamma_laser_sigma_hz", sigma_laser)
    report.add("derived.t2_s", t2)
    # dT2/dtau = T2^2 / (4 tau^2)
    report.add("derived.t2_fit_sigma_s", t2 * t2 / (4.0 * tau * tau) * tau_sigma)
    report.add("derived.t2_band_low_s", lo)
    report.add("derived.t2_band_high_s", hi)
    return t2
