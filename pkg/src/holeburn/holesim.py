"""Hole-burning spectra: widths, coherence times, synthetic traces and hole fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DomainError, FitError
from .fitcore import LORENTZIAN_DIP, Dataset, FitResult, fit, initial_guess_lorentzian, lorentzian
from .levelmodel import FeatureClass, HolePattern

Y1_LIFETIME = 6.21e-3
X1_LIFETIME = 0.85e-3

# The central-hole lifetime is not measured; the Y1 lifetime stands in for it.
DEFAULT_LIFETIMES: dict[FeatureClass, float] = {
    FeatureClass.CENTRAL: Y1_LIFETIME,
    FeatureClass.INNER: X1_LIFETIME,
    FeatureClass.OUTER: Y1_LIFETIME,
    FeatureClass.ANTIHOLE: Y1_LIFETIME,
}


@dataclass(frozen=True)
class BroadeningParams:
    """Inputs of the power-broadened hole width.

    Linewidths in Hz, ``rabi`` in rad/s, times in s. ``t2`` defaults to
    ``1/(pi*gamma_hom)``; ``t1`` is only needed when ``rabi`` is non-zero.
    """

    gamma_hom: float
    gamma_laser: float = 200e3
    rabi: float = 0.0
    t1: float | None = None
    t2: float | None = None

    def __post_init__(self):
        if not self.gamma_hom > 0:
            raise DomainError(f"gamma_hom must be positive, got {self.gamma_hom}")
        if not self.gamma_laser >= 0:
            raise DomainError(f"gamma_laser must be non-negative, got {self.gamma_laser}")
        if not self.rabi >= 0:
            raise DomainError(f"rabi must be non-negative, got {self.rabi}")
        if self.t2 is None:
            object.__setattr__(self, "t2", 1.0 / (math.pi * self.gamma_hom))
        if self.t1 is not None and not self.t1 > 0:
            raise DomainError(f"t1 must be positive, got {self.t1}")
        if not self.t2 > 0:
            raise DomainError(f"t2 must be positive, got {self.t2}")
        if self.t1 is not None and self.t2 > 2 * self.t1:
            raise DomainError("t2 cannot exceed 2*t1")
        if self.rabi > 0 and self.t1 is None:
            raise DomainError("a non-zero Rabi frequency needs t1")

    @property
    def saturation(self) -> float:
        """chi^2 T1 T2, zero in the weak-burn limit."""
        if self.rabi == 0:
            return 0.0
        return self.rabi**2 * self.t1 * self.t2


def hole_fwhm(p: BroadeningParams) -> float:
    """Hole FWHM in Hz: ``gamma_hom (1 + sqrt(1 + chi^2 T1 T2)) + gamma_laser``."""
    return p.gamma_hom * (1.0 + math.sqrt(1.0 + p.saturation)) + p.gamma_laser


def t2_from_hole(gamma_hole: float, gamma_laser: float = 200e3) -> float:
    """Coherence time from a weak-burn hole width (both in Hz)."""
    if not gamma_hole > gamma_laser:
        raise DomainError(
            f"laser-limited hole, T2 unbounded (gamma_hole={gamma_hole} <= gamma_laser={gamma_laser})"
        )
    return 2.0 / (math.pi * (gamma_hole - gamma_laser))


def gamma_hom_from_hole(gamma_hole: float, gamma_laser: float = 200e3) -> float:
    return 1.0 / (math.pi * t2_from_hole(gamma_hole, gamma_laser))


@dataclass(frozen=True)
class HoleFeature:
    detuning: float
    sign: int
    amplitude: float  # depth at zero wait, optical-depth units
    fwhm: float
    decay_lifetime: float
    feature_class: FeatureClass = FeatureClass.CENTRAL

    def __post_init__(self):
        if not (self.fwhm > 0 and self.amplitude >= 0 and self.decay_lifetime > 0):
            raise DomainError(f"invalid hole feature {self}")

    def depth_at(self, wait: float) -> float:
        return self.amplitude * math.exp(-wait / self.decay_lifetime)

    def area_at(self, wait: float) -> float:
        """Integral of the Lorentzian feature over frequency, in OD*Hz."""
        return self.depth_at(wait) * math.pi * self.fwhm / 2.0


@dataclass
class HoleSpectrum:
    grid: np.ndarray  # Hz from the burn frequency
    od: np.ndarray
    baseline_od: float

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.od = np.asarray(self.od, dtype=float)
        if self.grid.shape != self.od.shape:
            raise ValueError("grid and od differ in shape")


def default_grid(scan_hz: float = 200e6, points: int = 4001) -> np.ndarray:
    """Symmetric scan of total width ``scan_hz`` centred on the burn frequency."""
    return np.linspace(-scan_hz / 2, scan_hz / 2, points)


def hole_features(
    pattern: HolePattern,
    p: BroadeningParams,
    wait: float,
    *,
    lifetimes: Mapping[FeatureClass, float] | None = None,
    depth: float = 0.5,
    antihole_wait_factor: float = 1.0,
    x1_lifetime: float = X1_LIFETIME,
) -> list[HoleFeature]:
    """Turn pattern weights into Lorentzian features for a given wait time.

    ``depth`` is the optical-depth reduction of the central hole at zero
    wait. Anti-holes are kept only when ``wait`` exceeds
    ``antihole_wait_factor * x1_lifetime``.
    """
    if not wait >= 0:
        raise DomainError(f"wait must be >= 0, got {wait}")
    taus = dict(DEFAULT_LIFETIMES)
    if lifetimes:
        taus.update({FeatureClass(k): v for k, v in lifetimes.items()})
    width = hole_fwhm(p)
    show_anti = wait > antihole_wait_factor * x1_lifetime
    out = []
    for f in pattern.features:
        if f.sign < 0 and not show_anti:
            continue
        out.append(HoleFeature(f.detuning, f.sign, depth * f.weight, width, taus[f.feature_class], f.feature_class))
    return out


def spectrum_from_features(
    features: list[HoleFeature],
    grid,
    wait: float,
    baseline_od: float = 1.0,
    *,
    allow_truncation: bool = False,
) -> HoleSpectrum:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing with at least two points")
    outside = [f for f in features if not grid[0] <= f.detuning <= grid[-1]]
    if outside and not allow_truncation:
        listing = ", ".join(f"{f.feature_class.value}@{f.detuning / 1e6:+.3f} MHz" for f in outside)
        raise DomainError(f"grid too narrow, truncated features: {listing}")
    od = np.full(grid.shape, float(baseline_od))
    for f in features:
        od -= f.sign * f.depth_at(wait) * lorentzian(grid, f.detuning, f.fwhm)
    np.clip(od, 0.0, None, out=od)  # passive medium, no gain
    return HoleSpectrum(grid, od, baseline_od)


def synthesize_spectrum(
    pattern: HolePattern,
    p: BroadeningParams,
    wait: float,
    grid,
    *,
    lifetimes: Mapping[FeatureClass, float] | None = None,
    baseline_od: float = 1.0,
    depth: float = 0.5,
    antihole_wait_factor: float = 1.0,
    x1_lifetime: float = X1_LIFETIME,
    allow_truncation: bool = False,
) -> HoleSpectrum:
    """Optical depth on ``grid`` after burning ``pattern`` and waiting ``wait`` s.

    Each feature is a unit-peak Lorentzian of width :func:`hole_fwhm`,
    scaled by its depth and by ``exp(-wait/tau)`` for its class, and
    subtracted from ``baseline_od`` (anti-holes add). The result is clamped
    at zero. Features whose centre falls outside the grid raise
    :class:`DomainError` unless ``allow_truncation`` is set.
    """
    feats = hole_features(
        pattern, p, wait, lifetimes=lifetimes, depth=depth,
        antihole_wait_factor=antihole_wait_factor, x1_lifetime=x1_lifetime,
    )
    return spectrum_from_features(feats, grid, wait, baseline_od, allow_truncation=allow_truncation)


def fit_hole(detuning, od, sigma=None) -> FitResult:
    """Single Lorentzian dip on a constant baseline.

    Returns ``center``, ``fwhm``, ``depth`` and ``baseline`` with 1-sigma
    uncertainties.
    """
    data = Dataset(detuning, od, sigma)
    if len(data) < 8:
        raise FitError(f"need at least 8 points to fit a hole, got {len(data)}")
    guess = initial_guess_lorentzian(data)
    if guess["depth"] < 0:
        raise FitError("trace shows a peak, not a hole")
    span = float(np.ptp(data.x))
    return fit(
        LORENTZIAN_DIP,
        data,
        guess,
        log_params=("fwhm",),
        bounds={"fwhm": (1e-9 * span, 10 * span)},
    )
