"""Spectral-diffusion limited phase memory time and its fit to coherence data.

The diffusion strength ``gamma_SD * R`` (Hz^2) combines phonon-driven spin
flips (``a_d``), spin flip-flops (``b_f``) and a field-independent term
(``c0``), all suppressed by the thermal spin polarisation through
``sech^2(g mu_B B / 2 k T)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import constants

from .errors import DomainError, FitError
from .fitcore import Dataset, FitResult, Model, fit

COTH_SERIES_SWITCH = 1e-3
TM_SERIES_SWITCH = 1e-3


@dataclass(frozen=True)
class PhysConstants:
    mu_b: float = constants.physical_constants["Bohr magneton"][0]
    k_b: float = constants.k


PHYS = PhysConstants()


@dataclass(frozen=True)
class SdParams:
    a_d: float = 0.0  # Hz^2 / T^5
    b_f: float = 4.2e10  # Hz^2
    c0: float = 0.0  # Hz^2
    gamma0: float = 259.8e3  # Hz
    g_env: float = 4.6

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (v >= 0 and math.isfinite(v)):
                raise DomainError(f"{f.name} must be finite and >= 0, got {v}")
        if not self.gamma0 > 0:
            raise DomainError("gamma0 must be positive")

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


PARAM_NAMES = tuple(f.name for f in fields(SdParams))


class Method(str, enum.Enum):
    HOLE_BURNING = "hole_burning"
    FID = "fid"


@dataclass(frozen=True)
class CoherencePoint:
    field: float  # T
    temperature: float  # K
    t2: float  # s
    t2_sigma: float  # s
    method: Method = Method.HOLE_BURNING

    def __post_init__(self):
        if not self.field >= 0:
            raise DomainError(f"field must be >= 0, got {self.field}")
        if not self.temperature > 0:
            raise DomainError(f"temperature must be > 0, got {self.temperature}")
        if not (self.t2 > 0 and self.t2_sigma > 0):
            raise DomainError("t2 and t2_sigma must be positive")
        object.__setattr__(self, "method", Method(self.method))


def _sech(x):
    # 2 e^-|x| / (1 + e^-2|x|) never overflows
    e = np.exp(-np.abs(x))
    return 2.0 * e / (1.0 + e * e)


def _zeeman_arg(B, T, g_env, phys):
    return g_env * phys.mu_b * B / (2.0 * phys.k_b * T)


def gamma_sd_r(field, temperature, p: SdParams, phys: PhysConstants = PHYS):
    """Spectral-diffusion product ``gamma_SD * R`` in Hz^2.

    Accepts scalars or arrays for ``field`` and ``temperature``. Near zero
    field the flip term ``B^5 coth(x)`` is evaluated through its series
    ``B^5/x (1 + x^2/3 - x^4/45 + 2 x^6/945)``, which vanishes as ``B^4``.
    """
    B = np.asarray(field, dtype=float)
    T = np.asarray(temperature, dtype=float)
    if np.any(T <= 0):
        raise DomainError("temperature must be positive")
    if np.any(B < 0):
        raise DomainError("field must be >= 0")
    x = _zeeman_arg(B, T, p.g_env, phys)
    s2 = _sech(x) ** 2
    flip = np.zeros(np.broadcast(B, T).shape)
    if p.a_d != 0:
        B_b, x_b = np.broadcast_arrays(B, x)
        small = np.abs(x_b) < COTH_SERIES_SWITCH
        with np.errstate(divide="ignore", invalid="ignore"):
            exact = B_b**5 / np.tanh(x_b)
        # B^5/x = B^4 * 2 k T / (g mu_B); finite when g_env = 0 too
        T_b = np.broadcast_to(T, B_b.shape)
        if p.g_env > 0:
            b5_over_x = B_b**4 * 2.0 * phys.k_b * T_b / (p.g_env * phys.mu_b)
        else:
            b5_over_x = np.full(B_b.shape, np.inf)
        x2 = x_b * x_b
        series = b5_over_x * (1.0 + x2 / 3.0 - x2 * x2 / 45.0 + 2.0 * x2**3 / 945.0)
        flip = p.a_d * p.g_env**3 * np.where(small, series, exact)
    out = (flip + p.b_f * p.g_env**4 * s2 + p.c0) * s2
    return float(out) if out.ndim == 0 else out


def t_m_from_rate(x, gamma0: float):
    """Phase memory time (s) for diffusion strength ``x = gamma_SD R`` (Hz^2).

    Below ``u = x / (pi gamma0^2) = 1e-3`` a fifth-order series in ``u`` is
    used in place of the closed form.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("diffusion strength must be >= 0")
    u = x / (math.pi * gamma0**2)
    base = 1.0 / (math.pi * gamma0)
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = (2.0 * gamma0 / x) * (-1.0 + np.sqrt(1.0 + u))
    # (sqrt(1+u) - 1) * 2/u = 1 - u/4 + u^2/8 - 5u^3/64 + 7u^4/128 - 21u^5/512
    series = base * (1.0 - u / 4.0 + u**2 / 8.0 - 5.0 * u**3 / 64.0 + 7.0 * u**4 / 128.0 - 21.0 * u**5 / 512.0)
    out = np.where(u < TM_SERIES_SWITCH, series, exact)
    return float(out) if out.ndim == 0 else out


def t_m(field, temperature, p: SdParams, phys: PhysConstants = PHYS):
    """Phase memory time in seconds at ``field`` (T) and ``temperature`` (K)."""
    return t_m_from_rate(gamma_sd_r(field, temperature, p, phys), p.gamma0)


def _coerce_points(data: Iterable[CoherencePoint]) -> list[CoherencePoint]:
    pts = list(data)
    if not pts:
        raise FitError("no coherence data")
    return pts


@dataclass
class SdFit:
    params: SdParams
    result: FitResult
    frozen: tuple[str, ...] = field(default_factory=tuple)


DEFAULT_FROZEN = ("c0", "g_env")


def a_d_scale(data: Sequence[CoherencePoint], p: SdParams, phys: PhysConstants = PHYS) -> float:
    """``a_d`` at which spin flips match flip-flops at the highest field in ``data``.

    Used to seed a free ``a_d`` that starts at zero.
    """
    pt = max(data, key=lambda q: q.field)
    B = max(pt.field, 1e-3)
    x = float(_zeeman_arg(B, pt.temperature, p.g_env, phys))
    flipflop = p.b_f * p.g_env**4 * float(_sech(x)) ** 2
    per_unit = p.g_env**3 * B**5 / math.tanh(x) if x > 0 else 1.0
    return max(flipflop / per_unit, 1e-30)


def fit_sd(
    data: Sequence[CoherencePoint],
    frozen: Iterable[str] = DEFAULT_FROZEN,
    init: SdParams | None = None,
    phys: PhysConstants = PHYS,
) -> SdFit:
    """Weighted least-squares fit of ``t_m`` to measured coherence times.

    ``b_f``, ``gamma0`` and (when free and positive) ``a_d`` are optimised
    on a log scale; ``g_env`` and ``c0`` linearly. Weights are
    ``1 / t2_sigma^2``. ``g_env`` is frozen by default because ``b_f`` and
    ``g_env`` are degenerate at a single temperature.
    """
    pts = _coerce_points(data)
    frozen = tuple(frozen)
    bad = set(frozen) - set(PARAM_NAMES)
    if bad:
        raise FitError(f"unknown parameter names in frozen set: {sorted(bad)}")
    free = [k for k in PARAM_NAMES if k not in frozen]
    if len(free) >= len(pts):
        raise FitError(f"underdetermined: {len(free)} free parameters for {len(pts)} points")
    if len({pt.field for pt in pts}) < 3 or len(pts) < 4:
        raise FitError("need at least 4 points spanning at least 3 distinct fields")

    init = init or SdParams()
    start = init.as_dict()
    log_params = [k for k in ("a_d", "b_f", "gamma0") if k in free]
    if "a_d" in log_params and start["a_d"] <= 0:
        start["a_d"] = a_d_scale(pts, init, phys)

    B = np.array([pt.field for pt in pts])
    T = np.array([pt.temperature for pt in pts])

    def model_func(idx, a_d, b_f, c0, gamma0, g_env):
        i = idx.astype(int)
        try:
            p = SdParams(a_d, b_f, c0, gamma0, g_env)
        except DomainError:
            return np.full(i.shape, np.nan)
        return t_m(B[i], T[i], p, phys)

    model = Model("t_m", PARAM_NAMES, model_func)
    dataset = Dataset(np.arange(len(pts), dtype=float),
                      np.array([pt.t2 for pt in pts]),
                      np.array([pt.t2_sigma for pt in pts]))
    bounds = {"c0": (0.0, np.inf), "g_env": (0.0, np.inf)}
    res = fit(model, dataset, start, frozen=frozen, log_params=log_params, bounds=bounds)
    fitted = replace(init, **res.params)
    return SdFit(fitted, res, frozen)
