"""Weighted nonlinear least squares and the small model library used by every fit.

The engine is a Levenberg-Marquardt loop (damped Gauss-Newton with
multiplicative damping updates). Callers describe a model by its parameter
names and a vectorised ``func(x, params)``; :func:`fit` adds freezing,
log-scale reparameterisation and box bounds on top of :func:`least_squares`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import FitError

ArrayFunc = Callable[[np.ndarray, np.ndarray], np.ndarray]

FTOL = 1e-10
GTOL = 1e-8
MAX_ITER = 200
LAMBDA0 = 1e-3
LAMBDA_MAX = 1e16
FD_REL_STEP = 1e-6
FD_MIN_STEP = 1e-8


@dataclass(frozen=True)
class Dataset:
    """Abscissa, ordinate and optional 1-sigma errors of a measured trace."""

    x: np.ndarray
    y: np.ndarray
    sigma_y: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.sigma_y is not None:
            s = np.asarray(self.sigma_y, dtype=float)
            if s.shape != y.shape or not np.all(np.isfinite(s)) or np.any(s <= 0):
                raise ValueError("sigma_y must be positive, finite and match y")
            object.__setattr__(self, "sigma_y", s)

    def __len__(self) -> int:
        return self.x.size

    @property
    def sigma(self) -> np.ndarray:
        return np.ones_like(self.y) if self.sigma_y is None else self.sigma_y


@dataclass
class FitResult:
    """Outcome of a least-squares fit.

    ``sigmas`` come from ``(J^T W J)^-1`` scaled by the reduced chi-square,
    mapped back to natural units for log-scaled parameters. Frozen
    parameters are reported with zero uncertainty.
    """

    params: dict[str, float]
    sigmas: dict[str, float]
    residual_norm: float
    converged: bool
    iterations: int
    covariance: np.ndarray | None = None
    free: tuple[str, ...] = ()
    extras: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.params[name]


def _weighted_residual(func, x, y, sigma, theta):
    with np.errstate(all="ignore"):
        f = np.asarray(func(x, theta), dtype=float)
    if f.shape != y.shape:
        raise FitError(f"model returned shape {f.shape}, expected {y.shape}", theta)
    return (y - f) / sigma


def finite_difference_jacobian(func: ArrayFunc, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Central-difference d func / d theta, step ``max(1e-8, 1e-6*|theta_j|)``."""
    theta = np.asarray(theta, dtype=float)
    cols = []
    for j in range(theta.size):
        h = max(FD_MIN_STEP, FD_REL_STEP * abs(theta[j]))
        tp = theta.copy()
        tm = theta.copy()
        tp[j] += h
        tm[j] -= h
        # the actual step differs from h after rounding
        cols.append((np.asarray(func(x, tp)) - np.asarray(func(x, tm))) / (tp[j] - tm[j]))
    return np.column_stack(cols) if cols else np.zeros((x.size, 0))


def least_squares(
    func: ArrayFunc,
    data: Dataset,
    init: Sequence[float],
    *,
    jac: ArrayFunc | None = None,
    bounds: tuple[Sequence[float], Sequence[float]] | None = None,
    names: Sequence[str] | None = None,
    max_iter: int = MAX_ITER,
) -> FitResult:
    """Minimise ``sum(((y - func(x, p)) / sigma)**2)`` over the vector ``p``.

    Parameters
    ----------
    func
        Vectorised model ``func(x, p) -> y``.
    data
        Trace to fit.
    init
        Starting point; must lie inside ``bounds`` and give a finite model.
    jac
        Optional analytic ``d func / d p`` with shape ``(len(x), len(p))``.
        Central finite differences are used when omitted.
    bounds
        ``(lower, upper)`` arrays. Trial points are clipped into the box.

    The damping matrix is ``lambda * diag(J^T J)``; lambda starts at 1e-3 and
    is multiplied by 10 on a rejected step, divided by 10 on an accepted one.
    Iteration stops when an accepted step changes the cost by less than
    1e-10 relative, when the gradient max-norm drops below 1e-8, or when no
    step reduces the cost even at maximal damping (the iterate is then a
    minimum to working precision).

    Raises
    ------
    FitError
        Non-finite model output at ``init``, singular normal equations at
        every damping level, or no convergence within ``max_iter``.
    """
    theta = np.array(init, dtype=float)
    n_par = theta.size
    names = tuple(names) if names is not None else tuple(f"p{i}" for i in range(n_par))
    if len(names) != n_par:
        raise ValueError("names and init differ in length")
    x, y, sigma = data.x, data.y, data.sigma
    if len(data) < n_par + 1:
        raise FitError(f"{len(data)} points cannot constrain {n_par} parameters")

    if bounds is not None:
        lo = np.broadcast_to(np.asarray(bounds[0], dtype=float), theta.shape)
        hi = np.broadcast_to(np.asarray(bounds[1], dtype=float), theta.shape)
        if np.any(theta < lo) or np.any(theta > hi):
            raise FitError("initial parameters outside bounds", theta)
    else:
        lo = np.full(n_par, -np.inf)
        hi = np.full(n_par, np.inf)

    r = _weighted_residual(func, x, y, sigma, theta)
    if not np.all(np.isfinite(r)):
        raise FitError(f"model is not finite at parameters {theta.tolist()}", theta)
    cost = 0.5 * float(r @ r)

    def jacobian(th):
        if jac is not None:
            dj = np.asarray(jac(x, th), dtype=float)
        else:
            dj = finite_difference_jacobian(func, x, th)
        # Jacobian of the weighted residual, not of the model
        return -dj / sigma[:, None]

    lam = LAMBDA0
    converged = False
    iterations = 0
    J = jacobian(theta)
    for iterations in range(1, max_iter + 1):
        if not np.all(np.isfinite(J)):
            raise FitError(f"non-finite Jacobian at parameters {theta.tolist()}", theta)
        grad = J.T @ r
        if cost == 0.0 or np.max(np.abs(grad), initial=0.0) < GTOL:
            converged = True
            break
        A = J.T @ J
        diag = np.maximum(np.diag(A), np.finfo(float).tiny)
        accepted = solved = False
        while lam <= LAMBDA_MAX:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            solved = True
            trial = np.clip(theta + step, lo, hi)
            r_trial = _weighted_residual(func, x, y, sigma, trial)
            cost_trial = 0.5 * float(r_trial @ r_trial) if np.all(np.isfinite(r_trial)) else np.inf
            if cost_trial < cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            if not solved:
                raise FitError("singular normal equations at maximal damping", theta)
            converged = True
            break
        rel_change = (cost - cost_trial) / cost
        theta, r, cost = trial, r_trial, cost_trial
        lam = max(lam / 10.0, 1e-300)
        J = jacobian(theta)
        if rel_change < FTOL:
            converged = True
            break

    if not converged:
        raise FitError(f"no convergence after {max_iter} iterations", theta)

    dof = len(data) - n_par
    red_chi2 = 2.0 * cost / dof if dof > 0 else 1.0
    try:
        cov = np.linalg.inv(J.T @ J) * red_chi2
    except np.linalg.LinAlgError:
        cov = np.full((n_par, n_par), np.nan)
    sig = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return FitResult(
        params=dict(zip(names, theta.tolist())),
        sigmas=dict(zip(names, sig.tolist())),
        residual_norm=float(np.sqrt(2.0 * cost)),
        converged=True,
        iterations=iterations,
        covariance=cov,
        free=names,
    )


@dataclass(frozen=True)
class Model:
    """A named parametric curve with an optional analytic Jacobian."""

    name: str
    param_names: tuple[str, ...]
    func: Callable[..., np.ndarray]
    jac: Callable[..., np.ndarray] | None = None

    def __call__(self, x, params: Mapping[str, float]) -> np.ndarray:
        return self.func(np.asarray(x, dtype=float), *[params[k] for k in self.param_names])


def fit(
    model: Model,
    data: Dataset,
    init: Mapping[str, float],
    *,
    frozen: Sequence[str] = (),
    log_params: Sequence[str] = (),
    bounds: Mapping[str, tuple[float, float]] | None = None,
    use_jac: bool = True,
    max_iter: int = MAX_ITER,
) -> FitResult:
    """Fit ``model`` to ``data`` with named parameters.

    Parameters in ``log_params`` are optimised as their natural logarithm and
    must start positive. Names in ``frozen`` stay at their ``init`` value.
    """
    unknown = set(init) ^ set(model.param_names)
    if unknown:
        raise ValueError(f"init must name exactly {model.param_names}, got mismatch {sorted(unknown)}")
    bad = set(frozen) - set(model.param_names)
    if bad:
        raise ValueError(f"cannot freeze unknown parameters {sorted(bad)}")
    free = tuple(k for k in model.param_names if k not in frozen)
    if not free:
        raise ValueError("all parameters frozen")
    logs = set(log_params) & set(free)
    for k in logs:
        if init[k] <= 0:
            raise FitError(f"log-scaled parameter {k} must start positive, got {init[k]}")
    if len(free) >= len(data):
        raise FitError(f"underdetermined: {len(free)} free parameters for {len(data)} points")

    base = {k: float(v) for k, v in init.items()}
    idx = {k: model.param_names.index(k) for k in free}
    is_log = np.array([k in logs for k in free])

    def to_natural(theta):
        return np.where(is_log, np.exp(np.where(is_log, theta, 0.0)), theta)

    def full_vector(theta):
        p = np.array([base[k] for k in model.param_names])
        nat = to_natural(theta)
        for j, k in enumerate(free):
            p[idx[k]] = nat[j]
        return p

    def f(x, theta):
        return model.func(x, *full_vector(theta))

    jac = None
    if use_jac and model.jac is not None:
        def jac(x, theta):
            full = np.asarray(model.jac(x, *full_vector(theta)))
            cols = full[:, [idx[k] for k in free]]
            # chain rule for log-scaled columns
            return cols * np.where(is_log, to_natural(theta), 1.0)

    theta0 = np.array([np.log(base[k]) if k in logs else base[k] for k in free])
    fit_bounds = None
    if bounds:
        lo = np.full(len(free), -np.inf)
        hi = np.full(len(free), np.inf)
        for j, k in enumerate(free):
            if k in bounds:
                a, b = bounds[k]
                if k in logs:
                    a = np.log(a) if a > 0 else -np.inf
                    b = np.log(b) if np.isfinite(b) else np.inf
                lo[j], hi[j] = a, b
        fit_bounds = (lo, hi)

    try:
        res = least_squares(f, data, theta0, jac=jac, bounds=fit_bounds, names=free, max_iter=max_iter)
    except FitError as exc:
        if exc.last_params is not None and len(exc.last_params) == len(free):
            exc.last_params = dict(zip(model.param_names, full_vector(np.asarray(exc.last_params)).tolist()))
        raise

    theta = np.array([res.params[k] for k in free])
    scale = np.where(is_log, to_natural(theta), 1.0)
    cov = res.covariance * np.outer(scale, scale)
    sig = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    params = dict(zip(model.param_names, full_vector(theta).tolist()))
    sigmas = {k: 0.0 for k in model.param_names}
    sigmas.update(zip(free, sig.tolist()))
    return FitResult(
        params=params,
        sigmas=sigmas,
        residual_norm=res.residual_norm,
        converged=res.converged,
        iterations=res.iterations,
        covariance=cov,
        free=free,
    )


# -- model library ----------------------------------------------------------

def lorentzian(x, center: float, fwhm: float) -> np.ndarray:
    """Unit-peak Lorentzian of full width ``fwhm``."""
    u = 2.0 * (np.asarray(x, dtype=float) - center) / fwhm
    return 1.0 / (1.0 + u * u)


def _exp(t, amplitude, tau):
    return amplitude * np.exp(-t / tau)


def _exp_jac(t, amplitude, tau):
    e = np.exp(-t / tau)
    return np.column_stack([e, amplitude * e * t / tau**2])


def _exp_offset(t, amplitude, tau, offset):
    return amplitude * np.exp(-t / tau) + offset


def _exp_offset_jac(t, amplitude, tau, offset):
    e = np.exp(-t / tau)
    return np.column_stack([e, amplitude * e * t / tau**2, np.ones_like(t)])


def _biexp(t, amplitude1, tau1, amplitude2, tau2):
    return amplitude1 * np.exp(-t / tau1) + amplitude2 * np.exp(-t / tau2)


def _biexp_jac(t, amplitude1, tau1, amplitude2, tau2):
    e1 = np.exp(-t / tau1)
    e2 = np.exp(-t / tau2)
    return np.column_stack([e1, amplitude1 * e1 * t / tau1**2, e2, amplitude2 * e2 * t / tau2**2])


def _lorentz_dip(x, center, fwhm, depth, baseline):
    return baseline - depth * lorentzian(x, center, fwhm)


def _lorentz_dip_jac(x, center, fwhm, depth, baseline):
    u = 2.0 * (x - center) / fwhm
    L = 1.0 / (1.0 + u * u)
    dL_du = -2.0 * u * L * L
    d_center = -depth * dL_du * (-2.0 / fwhm)
    d_fwhm = -depth * dL_du * (-u / fwhm)
    return np.column_stack([d_center, d_fwhm, -L, np.ones_like(x)])


EXPONENTIAL = Model("exponential", ("amplitude", "tau"), _exp, _exp_jac)
EXPONENTIAL_OFFSET = Model("exponential_offset", ("amplitude", "tau", "offset"), _exp_offset, _exp_offset_jac)
BIEXPONENTIAL = Model("biexponential", ("amplitude1", "tau1", "amplitude2", "tau2"), _biexp, _biexp_jac)
LORENTZIAN_DIP = Model("lorentzian_dip", ("center", "fwhm", "depth", "baseline"), _lorentz_dip, _lorentz_dip_jac)

MODELS = {m.name: m for m in (EXPONENTIAL, EXPONENTIAL_OFFSET, BIEXPONENTIAL, LORENTZIAN_DIP)}


# -- starting points --------------------------------------------------------

def initial_guess_exponential(data: Dataset) -> dict[str, float]:
    """Amplitude at t=0 and time constant from a log-linear regression.

    Only strictly positive ordinates enter the regression.
    """
    pos = data.y > 0
    if np.count_nonzero(pos) < 2:
        raise FitError("fewer than two positive points, no decay to fit")
    t, logy = data.x[pos], np.log(data.y[pos])
    if np.ptp(t) == 0:
        raise FitError("abscissa has no spread")
    slope, intercept = np.polyfit(t, logy, 1)
    if not slope < 0:
        raise FitError("trace does not decay")
    return {"amplitude": float(np.exp(intercept)), "tau": float(-1.0 / slope)}


def initial_guess_lorentzian(data: Dataset) -> dict[str, float]:
    """Centre, FWHM, depth and baseline of a single dip (or peak).

    The baseline is the median of the outer 20% of points (10% per side),
    the centre the extreme point, the width the distance between the
    half-depth crossings on either side of it. Peaks come back with a
    negative depth.
    """
    order = np.argsort(data.x)
    x, y = data.x[order], data.y[order]
    n = x.size
    k = max(1, int(round(0.1 * n)))
    baseline = float(np.median(np.concatenate([y[:k], y[-k:]])))
    i_min, i_max = int(np.argmin(y)), int(np.argmax(y))
    if baseline - y[i_min] >= y[i_max] - baseline:
        i0, depth = i_min, baseline - y[i_min]
    else:
        i0, depth = i_max, baseline - y[i_max]
    if depth == 0 or not np.isfinite(depth):
        raise FitError("feature not resolved: trace is flat")
    # signed excursion toward the feature, positive inside the feature
    s = (baseline - y) / depth
    left = right = None
    for i in range(i0, 0, -1):
        if s[i - 1] < 0.5 <= s[i]:
            left = x[i - 1] + (0.5 - s[i - 1]) * (x[i] - x[i - 1]) / (s[i] - s[i - 1])
            break
    for i in range(i0, n - 1):
        if s[i + 1] < 0.5 <= s[i]:
            right = x[i] + (s[i] - 0.5) * (x[i + 1] - x[i]) / (s[i] - s[i + 1])
            break
    if left is None or right is None:
        raise FitError("feature not resolved: no half-depth crossing on both sides")
    return {"center": float(x[i0]), "fwhm": float(right - left), "depth": float(depth), "baseline": baseline}
