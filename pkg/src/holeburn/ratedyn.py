"""Three-manifold rate equations for pump-wait-read hole burning.

States are ordered (g, e, b): ground, optically pumped level and the
long-lived bottleneck. Pumping moves g -> e at rate R_e; e decays with
lifetime T1, a fraction beta into b, the rest back to g; b relaxes to g
with lifetime T_b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, FitError, NumericalError
from .fitcore import BIEXPONENTIAL, EXPONENTIAL, Dataset, FitResult, fit, initial_guess_exponential

OD_SERIES_SWITCH = 1e-6


@dataclass(frozen=True)
class RateParams:
    re0: float  # 1/s, bare excitation rate
    t1: float
    tb: float
    beta: float
    od: float = 0.0
    pump_bw: float = 1.29e9  # Hz
    gamma_inh: float = 1.29e9  # Hz

    def __post_init__(self):
        if not self.re0 >= 0:
            raise DomainError(f"re0 must be >= 0, got {self.re0}")
        if not (self.t1 > 0 and self.tb > 0):
            raise DomainError("t1 and tb must be positive")
        if not 0 <= self.beta <= 1:
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")
        if not self.od >= 0:
            raise DomainError(f"od must be >= 0, got {self.od}")
        if not (self.pump_bw > 0 and self.gamma_inh > 0):
            raise DomainError("pump_bw and gamma_inh must be positive")

    @property
    def rate(self) -> float:
        """Pump rate after optical-depth averaging."""
        return effective_rate(self.re0, self.od)

    @property
    def fraction(self) -> float:
        return addressed_fraction(self.pump_bw, self.gamma_inh)


@dataclass(frozen=True)
class PopulationState:
    n_g: float
    n_e: float
    n_b: float

    def __post_init__(self):
        vals = (self.n_g, self.n_e, self.n_b)
        if any(v < -1e-12 or v > 1 + 1e-12 for v in vals):
            raise DomainError(f"populations must lie in [0, 1], got {vals}")
        if abs(sum(vals) - 1.0) > 1e-9:
            raise DomainError(f"populations must sum to 1, got {sum(vals)!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.n_g, self.n_e, self.n_b])

    @classmethod
    def ground(cls) -> "PopulationState":
        return cls(1.0, 0.0, 0.0)


@dataclass(frozen=True)
class PumpSchedule:
    tau_pump: float = 3e-4
    tau_delay: float = 1e-5
    read_window: float = 1.2e-3

    def __post_init__(self):
        if min(self.tau_pump, self.tau_delay, self.read_window) < 0:
            raise DomainError("schedule durations must be non-negative")

    def segments(self) -> list[tuple[float, float, bool]]:
        """``(start, stop, pump_on)`` for pump, delay and read."""
        t0 = self.tau_pump
        t1 = t0 + self.tau_delay
        return [(0.0, t0, True), (t0, t1, False), (t1, t1 + self.read_window, False)]


@dataclass
class PopulationTrace:
    times: np.ndarray
    populations: np.ndarray  # shape (n, 3): n_g, n_e, n_b

    @property
    def n_g(self) -> np.ndarray:
        return self.populations[:, 0]

    @property
    def n_e(self) -> np.ndarray:
        return self.populations[:, 1]

    @property
    def n_b(self) -> np.ndarray:
        return self.populations[:, 2]

    def final(self) -> PopulationState:
        n = self.populations[-1]
        return PopulationState(*n.tolist())


def effective_rate(re0: float, od: float) -> float:
    """Excitation rate averaged over the sample depth, ``re0 (1 - e^-od)/od``."""
    if not od >= 0:
        raise DomainError(f"optical depth must be >= 0, got {od}")
    if od < OD_SERIES_SWITCH:
        return re0 * (1.0 - od / 2.0 + od * od / 6.0)
    return re0 * (1.0 - math.exp(-od)) / od


def addressed_fraction(pump_bw: float, gamma_inh: float) -> float:
    if not (pump_bw > 0 and gamma_inh > 0):
        raise DomainError("bandwidths must be positive")
    return min(1.0, pump_bw / gamma_inh)


def rate_matrix(p: RateParams, pump_on: bool = True) -> np.ndarray:
    """Generator ``M`` with ``dn/dt = M n``; columns sum to zero."""
    r = p.rate if pump_on else 0.0
    k1 = 1.0 / p.t1
    kb = 1.0 / p.tb
    return np.array([
        [-r, (1.0 - p.beta) * k1, kb],
        [r, -k1, 0.0],
        [0.0, p.beta * k1, -kb],
    ])


def steady_state(p: RateParams) -> PopulationState:
    """Closed-form fixed point of the pumped system."""
    r = p.rate
    denom = 1.0 + r * p.t1 + p.beta * r * p.tb
    n_e = r * p.t1 / denom
    n_b = p.beta * r * p.tb / denom
    return PopulationState(1.0 - n_e - n_b, n_e, n_b)


def _march(M: np.ndarray, n0: np.ndarray, t_out: np.ndarray, *, rtol=1e-10, atol=1e-12, max_step=None) -> np.ndarray:
    """States at the increasing times ``t_out`` (``t_out[0]`` is the start).

    Restarting the solver at every sample avoids the dense-output
    interpolant, whose error exceeds the step tolerance on long steps.
    By default steps are capped at two of the fastest decay times: the
    embedded error estimate is unreliable on steps that span many.
    """
    if max_step is None:
        fastest = float(np.max(np.abs(np.diag(M))))
        max_step = 2.0 / fastest if fastest > 0 else np.inf
    out = np.empty((t_out.size, n0.size))
    out[0] = n = np.asarray(n0, dtype=float)
    for i in range(1, t_out.size):
        a, b = t_out[i - 1], t_out[i]
        if b > a:
            sol = solve_ivp(lambda t, y: M @ y, (a, b), n, method="DOP853", rtol=rtol, atol=atol, max_step=max_step)
            if not sol.success:
                raise NumericalError(f"step control failed at t={sol.t[-1]}: {sol.message}; last state {n.tolist()}")
            n = sol.y[:, -1]
        out[i] = n
    return out


def integrate(
    p: RateParams,
    schedule: PumpSchedule,
    initial: PopulationState | None = None,
    *,
    points_per_segment: int = 200,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_step: float | None = None,
) -> PopulationTrace:
    """Integrate the rate equations through the pump, delay and read segments.

    Uses an adaptive explicit Runge-Kutta pair (DOP853) with the pump rate
    held constant inside a segment. Output is sampled on
    ``points_per_segment`` uniform times per non-empty segment; each sample
    is a step endpoint, not a dense-output interpolation.
    """
    n = (initial or PopulationState.ground()).as_array()
    times = [np.array([0.0])]
    pops = [n[None, :]]
    for start, stop, pump_on in schedule.segments():
        if stop <= start:
            continue
        t_out = np.linspace(start, stop, points_per_segment + 1)
        y = _march(rate_matrix(p, pump_on), n, t_out, rtol=rtol, atol=atol, max_step=max_step)
        times.append(t_out[1:])
        pops.append(y[1:])
        n = y[-1]
    return PopulationTrace(np.concatenate(times), np.vstack(pops))


def propagate_exact(p: RateParams, n0, t, pump_on: bool = True) -> np.ndarray:
    """Matrix-exponential solution ``exp(M t) n0`` via eigendecomposition."""
    M = rate_matrix(p, pump_on)
    w, V = np.linalg.eig(M)
    c = np.linalg.solve(V, np.asarray(n0, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = (V[None, :, :] * (c[None, None, :] * np.exp(np.outer(t, w))[:, None, :])).sum(axis=2)
    return out.real


def population_at(p: RateParams, schedule: PumpSchedule, initial: PopulationState | None = None) -> np.ndarray:
    """State at the start of the read window, starting from ``initial`` (ground by default)."""
    tr = integrate(p, PumpSchedule(schedule.tau_pump, schedule.tau_delay, 0.0), initial, points_per_segment=2)
    return tr.populations[-1]


def hole_area(p: RateParams, schedule: PumpSchedule) -> float:
    """Integrated hole area at read time, in model units.

    Proportional to the addressed fraction times the bottleneck population
    at the end of the delay; the proportionality constant is 1.
    """
    if schedule.tau_pump == 0:
        return 0.0
    return p.fraction * float(population_at(p, schedule)[2])


def hole_area_series(p: RateParams, tau_pump: float, delays) -> np.ndarray:
    """Hole area for each delay after a pump of length ``tau_pump``."""
    delays = np.asarray(delays, dtype=float)
    if delays.size == 0:
        return delays.copy()
    if np.any(delays < 0):
        raise DomainError("delays must be non-negative")
    order = np.argsort(delays)
    after_pump = population_at(p, PumpSchedule(tau_pump, 0.0, 0.0))
    areas = np.empty_like(delays)
    # one march through the sorted delays
    t_out = np.concatenate([[0.0], delays[order]])
    areas[order] = _march(rate_matrix(p, pump_on=False), after_pump, t_out)[1:, 2]
    return p.fraction * areas


def rise_model(p: RateParams) -> dict[str, float]:
    """Parameters of ``A(tau) = A_ss [1 - a1 e^{-tau/tau1} - a2 e^{-tau/tau2}]``.

    The two time constants are minus the inverse non-zero eigenvalues of the
    pumped rate matrix; ``a1``/``a2`` follow from starting in the ground state.
    """
    M = rate_matrix(p, pump_on=True)
    w, V = np.linalg.eig(M)
    c = np.linalg.solve(V, np.array([1.0, 0.0, 0.0]))
    k0 = int(np.argmin(np.abs(w)))
    rest = [i for i in range(3) if i != k0]
    if any(abs(w[i].imag) > 1e-12 * abs(w[i]) for i in rest):
        raise DomainError("complex rate eigenvalues: the rise is not a sum of two exponentials")
    nb_ss = (V[2, k0] * c[k0]).real
    a_ss = p.fraction * nb_ss
    if nb_ss == 0:
        return {"A_ss": 0.0, "a1": 0.0, "tau1": math.inf, "a2": 0.0, "tau2": math.inf}
    terms = sorted(((-1.0 / w[i].real), -(V[2, i] * c[i]).real / nb_ss) for i in rest)
    (tau1, a1), (tau2, a2) = terms
    return {"A_ss": float(a_ss), "a1": float(a1), "tau1": float(tau1), "a2": float(a2), "tau2": float(tau2)}


def fit_lifetime(times, signal, sigma=None, *, biexponential: bool = False) -> FitResult:
    """Exponential decay fit; returns ``amplitude``/``tau`` (or two of each)."""
    data = Dataset(times, signal, sigma)
    if len(data) < 6:
        raise FitError(f"need at least 6 points for a lifetime fit, got {len(data)}")
    guess = initial_guess_exponential(data)
    if not biexponential:
        return fit(EXPONENTIAL, data, guess, log_params=("tau",))
    tau = guess["tau"]
    init = {"amplitude1": guess["amplitude"] / 2, "tau1": tau / 3,
            "amplitude2": guess["amplitude"] / 2, "tau2": tau * 1.5}
    res = fit(BIEXPONENTIAL, data, init, log_params=("tau1", "tau2"))
    if res.params["tau1"] > res.params["tau2"]:
        p, s = res.params, res.sigmas
        res.params = {"amplitude1": p["amplitude2"], "tau1": p["tau2"], "amplitude2": p["amplitude1"], "tau2": p["tau1"]}
        res.sigmas = {"amplitude1": s["amplitude2"], "tau1": s["tau2"], "amplitude2": s["amplitude1"], "tau2": s["tau1"]}
        perm = [2, 3, 0, 1]
        res.covariance = res.covariance[np.ix_(perm, perm)]
    return res
