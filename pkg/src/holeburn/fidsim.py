"""Free-induction decay of an optically excited ensemble.

After the excitation pulse each ion precesses freely at its detuning and
dephases with T2. The emitted field is the detuning-weighted sum of the
Bloch coherences; with a Lorentzian distribution of width
``gamma_hom + gamma_laser`` the field amplitude decays at
``pi (2 gamma_hom + gamma_laser)`` and the intensity at twice that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, FitError, NumericalError
from .fitcore import EXPONENTIAL, Dataset, FitResult, fit, initial_guess_exponential

DEFAULT_CUTOFF = 50.0
CONVERGENCE_RTOL = 1e-3


@dataclass(frozen=True)
class EnsembleSpec:
    """Ensemble linewidths in Hz; ``detuning_cutoff`` in units of the FWHM of g."""

    gamma_hom: float
    gamma_laser: float = 200e3
    detuning_cutoff: float = DEFAULT_CUTOFF

    def __post_init__(self):
        if not self.gamma_hom > 0:
            raise DomainError(f"gamma_hom must be positive, got {self.gamma_hom}")
        if not self.gamma_laser >= 0:
            raise DomainError(f"gamma_laser must be non-negative, got {self.gamma_laser}")
        if not self.detuning_cutoff >= 20:
            raise DomainError(f"detuning cutoff must be >= 20 linewidths, got {self.detuning_cutoff}")

    @property
    def gamma_g(self) -> float:
        """FWHM of the excited-ion distribution, Hz."""
        return self.gamma_hom + self.gamma_laser

    @property
    def t2(self) -> float:
        return 1.0 / (math.pi * self.gamma_hom)


@dataclass(frozen=True)
class BlochState:
    r1: float
    r2: float
    r3: float = 0.0

    @property
    def norm(self) -> float:
        return math.sqrt(self.r1**2 + self.r2**2 + self.r3**2)


@dataclass
class FidTrace:
    times: np.ndarray
    intensity: np.ndarray
    gamma_hom: float | None = None
    gamma_laser: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.times.shape != self.intensity.shape:
            raise ValueError("times and intensity differ in shape")
        if self.times.size and (self.times[0] < 0 or np.any(np.diff(self.times) <= 0)):
            raise ValueError("times must start at >= 0 and increase strictly")


def bloch_free_evolution(t: float, delta: float, t2: float) -> BlochState:
    """Coherence of one ion ``t`` seconds after the pulse, detuning ``delta`` in rad/s.

    Starts from ``r1 = 0, r2 = 1``.
    """
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if not t2 > 0:
        raise DomainError(f"t2 must be positive, got {t2}")
    decay = math.exp(-t / t2)
    return BlochState(-decay * math.sin(delta * t), decay * math.cos(delta * t))


def tau_fid(gamma_hom: float, gamma_laser: float = 200e3) -> float:
    """1/e intensity decay time, ``1 / (2 pi (2 gamma_hom + gamma_laser))``."""
    total = 2.0 * gamma_hom + gamma_laser
    if total == 0:
        raise DomainError("undamped FID: gamma_hom and gamma_laser are both zero")
    if total < 0:
        raise DomainError("linewidths must be non-negative")
    return 1.0 / (2.0 * math.pi * total)


def t2_from_fid(tau: float, gamma_laser: float = 200e3) -> float:
    """Coherence time from a measured FID decay, ``4 / (1/tau - 2 pi gamma_laser)``."""
    denom = 1.0 / tau - 2.0 * math.pi * gamma_laser
    if not denom > 0:
        raise DomainError(f"laser-limited FID (1/tau - 2 pi gamma_laser = {denom:.6g} <= 0)")
    return 4.0 / denom


def _lorentz_cos_integral(t: float, hwhm: float, cutoff: float) -> float:
    """``int g(d) cos(d t) dd`` over all ``d`` for a normalised Lorentzian g.

    Quadrature covers ``|d| <= cutoff``; beyond it g is replaced by its
    ``hwhm / (pi d^2)`` tail, whose cosine transform is closed-form.
    """
    def g(d):
        return hwhm / (math.pi * (d * d + hwhm * hwhm))

    if t == 0:
        core, _ = integrate.quad(g, 0.0, cutoff, limit=200)
    else:
        core, _ = integrate.quad(g, 0.0, cutoff, weight="cos", wvar=t, limit=2000)
    # int_X^inf cos(d t)/d^2 dd = cos(X t)/X - t (pi/2 - Si(X t))
    si, _ = special.sici(cutoff * t)
    tail = math.cos(cutoff * t) / cutoff - t * (math.pi / 2 - si)
    return 2.0 * (core + hwhm / math.pi * tail)


def ensemble_field(spec: EnsembleSpec, times, cutoff: float | None = None) -> np.ndarray:
    """Relative field amplitude ``e^{-t/T2} int e^{-i d t} g(d) dd``.

    g is symmetric, so the sine part vanishes and only the cosine transform
    is evaluated.
    """
    hwhm = math.pi * spec.gamma_g  # rad/s
    X = (spec.detuning_cutoff if cutoff is None else cutoff) * 2.0 * hwhm
    t = np.asarray(times, dtype=float)
    vals = np.array([_lorentz_cos_integral(float(ti), hwhm, X) for ti in t.ravel()]).reshape(t.shape)
    return np.exp(-t / spec.t2) * vals


def synthesize_fid(spec: EnsembleSpec, times) -> FidTrace:
    """Normalised FID intensity from the numerical ensemble integral.

    The integral is evaluated at the configured cutoff and at twice that;
    disagreement beyond 0.1% raises :class:`NumericalError`.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a non-empty 1-d array")
    e1 = ensemble_field(spec, t)
    e2 = ensemble_field(spec, t, cutoff=2 * spec.detuning_cutoff)
    e0 = ensemble_field(spec, np.array([0.0]))[0]
    scale = max(abs(e0), np.finfo(float).tiny)
    worst = float(np.max(np.abs(e1 - e2))) / scale
    if worst > CONVERGENCE_RTOL:
        raise NumericalError(f"ensemble integral not converged at cutoff {spec.detuning_cutoff}: "
                             f"relative change {worst:.2e} on doubling")
    intensity = (e1 / e0) ** 2
    return FidTrace(t, intensity, spec.gamma_hom, spec.gamma_laser)


def analytic_fid(gamma_hom: float, gamma_laser: float, times) -> np.ndarray:
    """Closed-form normalised intensity ``exp(-t / tau_fid)``."""
    return np.exp(-np.asarray(times, dtype=float) / tau_fid(gamma_hom, gamma_laser))


def fit_fid(times, intensity, sigma=None) -> FitResult:
    """Single-exponential fit of an FID intensity trace.

    The result carries ``tau_fid`` alongside the raw ``amplitude``/``tau``.
    """
    data = Dataset(times, intensity, sigma)
    if len(data) < 6:
        raise FitError(f"need at least 6 points for an FID fit, got {len(data)}")
    guess = initial_guess_exponential(data)
    res = fit(EXPONENTIAL, data, guess, log_params=("tau",))
    res.params["tau_fid"] = res.params["tau"]
    res.sigmas["tau_fid"] = res.sigmas["tau"]
    return res
