"""
Curve models and a Levenberg-Marquardt least-squares engine.

Every model splits its parameters into non-linear ones (scanned on a coarse
grid for initialisation) and a linear amplitude/baseline pair that is solved
exactly at each grid point. The best grid point seeds the damped Gauss-Newton
refinement, which works in data-scaled coordinates with central-difference
Jacobians.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from services.exceptions import FitError

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 200
XTOL = 1e-8
JACOBIAN_STEP = 1e-6
LAMBDA_INIT = 1e-3
LAMBDA_MAX = 1e12
GTOL = 1e-6
RESIDUAL_FLOOR = 1e-9
DEGENERATE_AMPLITUDE = 1e-6


@dataclass(frozen=True)
class SweepData:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError(f"x and y lengths differ ({x.size} vs {y.size})")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("Sweep data must be finite")
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "x", x[order])
        object.__setattr__(self, "y", y[order])

    def __len__(self) -> int:
        return int(self.x.size)

    @property
    def span(self) -> float:
        return float(self.x[-1] - self.x[0]) if len(self) else 0.0

    @property
    def y_scale(self) -> float:
        scale = float(np.ptp(self.y)) if len(self) else 0.0
        if scale <= 0:
            scale = float(np.max(np.abs(self.y))) if len(self) else 0.0
        return scale if scale > 0 else 1.0

    def require(self, n_params: int) -> None:
        if len(self) < n_params + 1:
            raise ValueError(f"Need at least {n_params + 1} points, got {len(self)}")
        if self.span <= 0:
            raise ValueError("Sweep x values must not all coincide")


@dataclass
class FitResult:
    params: Dict[str, float]
    residual_norm: float
    converged: bool
    iterations: int
    model: str = ""
    flags: List[str] = field(default_factory=list)
    stderr: Dict[str, float] = field(default_factory=dict)
    derived: Dict[str, float] = field(default_factory=dict)
    n_points: int = 0

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    @property
    def bic(self) -> float:
        """Bayesian information criterion from the residual sum of squares."""
        n = max(self.n_points, 1)
        rss = max(self.residual_norm ** 2, 1e-300)
        return n * math.log(rss / n) + len(self.params) * math.log(n)

    def to_dict(self) -> Dict:
        return {
            "model": self.model,
            "params": dict(self.params),
            "stderr": dict(self.stderr),
            "derived": dict(self.derived),
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "iterations": self.iterations,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class CurveModel:
    """A parametric curve plus the grid used to initialise it."""

    name: str
    param_names: Tuple[str, ...]
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    # non-linear params -> basis columns whose linear weights give the rest
    basis: Callable[[np.ndarray, Tuple[float, ...]], np.ndarray]
    from_linear: Callable[[Tuple[float, ...], np.ndarray], np.ndarray]
    grid: Callable[["SweepData"], List[Tuple[float, ...]]]
    scales: Callable[["SweepData"], np.ndarray]

    def __call__(self, x, params) -> np.ndarray:
        return self.func(np.asarray(x, dtype=float), np.asarray(params, dtype=float))


def _log_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.geomspace(lo, hi, n)


def _min_step(data: SweepData) -> float:
    diffs = np.diff(data.x)
    diffs = diffs[diffs > 0]
    return float(np.min(diffs)) if diffs.size else data.span


def _freq_grid(data: SweepData, start: float) -> np.ndarray:
    nyquist = 0.5 / _min_step(data)
    step = 0.25 / data.span
    return np.arange(start, nyquist + step, step)


# --- model definitions ---------------------------------------------------

def _lorentzian(x, p):
    f0, gamma, amp, base = p
    half = 0.5 * gamma
    return base + amp * half ** 2 / ((x - f0) ** 2 + half ** 2)


LORENTZIAN = CurveModel(
    name="lorentzian",
    param_names=("center", "width", "amplitude", "baseline"),
    func=_lorentzian,
    basis=lambda x, q: np.column_stack([(0.5 * q[1]) ** 2 / ((x - q[0]) ** 2 + (0.5 * q[1]) ** 2), np.ones_like(x)]),
    from_linear=lambda q, w: np.array([q[0], q[1], w[0], w[1]]),
    grid=lambda d: [(f0, g) for f0 in d.x
                    for g in _log_grid(2.0 * _min_step(d), d.span, 24)],
    scales=lambda d: np.array([d.span, d.span, d.y_scale, d.y_scale]),
)


def _cosine(x, p):
    period, phase, amp, base = p
    return base + amp * np.cos(2.0 * math.pi * x / period + phase)


COSINE = CurveModel(
    name="cosine",
    param_names=("period", "phase", "amplitude", "baseline"),
    func=_cosine,
    basis=lambda x, q: np.column_stack([np.cos(2.0 * math.pi * x / q[0]),
                                        np.sin(2.0 * math.pi * x / q[0]),
                                        np.ones_like(x)]),
    from_linear=lambda q, w: np.array([q[0], math.atan2(-w[1], w[0]), math.hypot(w[0], w[1]), w[2]]),
    grid=lambda d: [(1.0 / f,) for f in _freq_grid(d, 0.5 / d.span)],
    scales=lambda d: np.array([d.span, 1.0, d.y_scale, d.y_scale]),
)


def _rate_grid(data: SweepData, n: int, with_zero: bool) -> np.ndarray:
    rates = 1.0 / _log_grid(0.1 * data.span, 30.0 * data.span, n)
    return np.concatenate([[0.0], rates]) if with_zero else rates


def _damped(x, p):
    freq, rate, phase, amp, base = p
    return base + amp * np.exp(-x * rate) * np.cos(2.0 * math.pi * freq * x + phase)


def _damped_basis(x, q):
    freq, rate = q
    env = np.exp(-x * rate)
    return np.column_stack([env * np.cos(2.0 * math.pi * freq * x),
                            env * np.sin(2.0 * math.pi * freq * x),
                            np.ones_like(x)])


# decays are fitted as rates so an undamped signal converges at rate 0
DAMPED_SINUSOID = CurveModel(
    name="damped_sinusoid",
    param_names=("frequency", "decay_rate", "phase", "amplitude", "baseline"),
    func=_damped,
    basis=_damped_basis,
    from_linear=lambda q, w: np.array([q[0], q[1], math.atan2(-w[1], w[0]), math.hypot(w[0], w[1]), w[2]]),
    grid=lambda d: [(f, k) for f in _freq_grid(d, 0.0) for k in _rate_grid(d, 15, True)],
    scales=lambda d: np.array([1.0 / d.span, 1.0 / d.span, 1.0, d.y_scale, d.y_scale]),
)


def _exponential(x, p):
    rate, amp, base = p
    return base + amp * np.exp(-x * rate)


EXPONENTIAL = CurveModel(
    name="exponential",
    param_names=("decay_rate", "amplitude", "baseline"),
    func=_exponential,
    basis=lambda x, q: np.column_stack([np.exp(-x * q[0]), np.ones_like(x)]),
    from_linear=lambda q, w: np.array([q[0], w[0], w[1]]),
    grid=lambda d: [(k,) for k in 1.0 / _log_grid(_min_step(d), 30.0 * d.span, 48)],
    scales=lambda d: np.array([1.0 / d.span, d.y_scale, d.y_scale]),
)

MODELS = {m.name: m for m in (LORENTZIAN, COSINE, DAMPED_SINUSOID, EXPONENTIAL)}


# --- engine ----------------------------------------------------------------

def grid_initial_guess(model: CurveModel, data: SweepData) -> np.ndarray:
    """Best grid point with the linear parameters solved by least squares."""
    best, best_cost = None, math.inf
    for q in model.grid(data):
        a = model.basis(data.x, q)
        w, *_ = np.linalg.lstsq(a, data.y, rcond=None)
        cost = float(np.sum((a @ w - data.y) ** 2))
        if cost < best_cost:
            best, best_cost = model.from_linear(q, w), cost
    if best is None:
        raise FitError(f"{model.name}: empty initialisation grid")
    return best


def _jacobian(residual: Callable[[np.ndarray], np.ndarray], u: np.ndarray) -> np.ndarray:
    cols = []
    for i in range(u.size):
        h = JACOBIAN_STEP * max(abs(u[i]), 1.0)
        up, down = u.copy(), u.copy()
        up[i] += h
        down[i] -= h
        cols.append((residual(up) - residual(down)) / (2.0 * h))
    return np.column_stack(cols)


def gradient_cosine(jac: np.ndarray, r: np.ndarray) -> float:
    """Largest cosine between the residual and a Jacobian column (0 for zero columns)."""
    r_norm = float(np.linalg.norm(r))
    if r_norm == 0.0:
        return 0.0
    col_norms = np.linalg.norm(jac, axis=0)
    g = np.abs(jac.T @ r)
    nonzero = col_norms > 0
    if not np.any(nonzero):
        return 0.0
    return float(np.max(g[nonzero] / (col_norms[nonzero] * r_norm)))


def levenberg_marquardt(residual: Callable[[np.ndarray], np.ndarray], u0: np.ndarray,
                        max_iterations: int = MAX_ITERATIONS, xtol: float = XTOL,
                        history: Optional[List[float]] = None, residual_floor: float = 1e-12
                        ) -> Tuple[np.ndarray, float, bool, int, Optional[np.ndarray]]:
    """
    Minimise ||residual(u)||^2 from ``u0``.

    Steps are accepted only when the cost does not increase, so the residual is
    monotone over accepted iterations. When no downhill step exists the run
    counts as converged only if the residual is orthogonal to the Jacobian
    columns to within GTOL or its norm is at most ``residual_floor``.

    Args:
        residual_floor: Residual norm treated as an exact fit
        history: If given, receives the starting cost and the cost after every
            accepted step

    Returns:
        (u, cost, converged, iterations, J at the solution)
    """
    u = np.asarray(u0, dtype=float).copy()
    r = residual(u)
    cost = float(r @ r)
    if history is not None:
        history.append(cost)
    lam = LAMBDA_INIT
    jac = None
    for iteration in range(1, max_iterations + 1):
        jac = _jacobian(residual, u)
        g = jac.T @ r
        a = jac.T @ jac
        diag = np.maximum(np.diag(a), 1e-12 * max(float(np.max(np.diag(a))), 1e-300))
        accepted = False
        while lam <= LAMBDA_MAX:
            try:
                step = np.linalg.solve(a + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            u_new = u + step
            r_new = residual(u_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # no downhill step exists at working precision
            cosine = gradient_cosine(jac, r)
            logger.debug(f"LM stalled at iteration {iteration}, cost={cost:.6g}, gradient cosine={cosine:.3e}")
            return u, cost, cosine <= GTOL or math.sqrt(cost) <= residual_floor, iteration, jac
        small = np.all(np.abs(step) <= xtol * (np.abs(u) + 1.0))
        u, r, cost = u_new, r_new, cost_new
        if history is not None:
            history.append(cost)
        lam = max(lam / 10.0, 1e-15)
        if small or cost == 0.0:
            return u, cost, True, iteration, jac
    return u, cost, False, max_iterations, jac


def fit_model(model: CurveModel, data: SweepData, init: Optional[Sequence[float]] = None,
              max_iterations: int = MAX_ITERATIONS) -> FitResult:
    """
    Fit ``model`` to ``data``.

    Args:
        model: Curve to fit
        data: Sweep to fit against
        init: Optional starting parameters in the model's order; grid scan when absent
        max_iterations: LM iteration cap

    Returns:
        FitResult in natural units

    Raises:
        FitError: if LM does not converge within ``max_iterations``
    """
    n_params = len(model.param_names)
    data.require(n_params)
    p0 = grid_initial_guess(model, data) if init is None else np.asarray(init, dtype=float)
    if p0.size != n_params:
        raise ValueError(f"{model.name} expects {n_params} initial parameters")
    scales = model.scales(data)

    def residual(u):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out = model(data.x, u * scales) - data.y
        return np.where(np.isfinite(out), out, 1e150)

    floor = RESIDUAL_FLOOR * data.y_scale * math.sqrt(len(data))
    u, cost, converged, iterations, jac = levenberg_marquardt(residual, p0 / scales, max_iterations,
                                                              residual_floor=floor)
    params = u * scales
    if not converged:
        logger.warning(f"{model.name} fit did not converge after {iterations} iterations")
        raise FitError(f"{model.name} fit did not converge after {iterations} iterations")

    stderr = {}
    dof = len(data) - n_params
    if jac is not None and dof > 0:
        try:
            cov = np.linalg.pinv(jac.T @ jac) * cost / dof
            stderr = {name: float(np.sqrt(max(cov[i, i], 0.0)) * scales[i])
                      for i, name in enumerate(model.param_names)}
        except np.linalg.LinAlgError:
            stderr = {}

    result = FitResult(
        params={name: float(v) for name, v in zip(model.param_names, params)},
        residual_norm=math.sqrt(cost),
        converged=converged,
        iterations=iterations,
        model=model.name,
        stderr=stderr,
        n_points=len(data),
    )
    if abs(result.params["amplitude"]) < DEGENERATE_AMPLITUDE * data.y_scale or np.ptp(data.y) == 0:
        result.flags.append("degenerate")
    logger.debug(f"{model.name} fit: {result.params} (iterations={iterations}, residual={result.residual_norm:.3e})")
    return result


def wrap_phase(phi: float) -> float:
    """Map a phase onto (-pi, pi]."""
    wrapped = math.remainder(phi, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def normalise_oscillation(result: FitResult, frequency_key: Optional[str] = None) -> FitResult:
    """Make amplitude and frequency non-negative by absorbing signs into the phase."""
    p = result.params
    if frequency_key and p[frequency_key] < 0:
        p[frequency_key] = -p[frequency_key]
        p["phase"] = -p["phase"]
    if p["amplitude"] < 0:
        p["amplitude"] = -p["amplitude"]
        p["phase"] += math.pi
    p["phase"] = wrap_phase(p["phase"])
    return result


def decay_time(rate: float) -> float:
    """1 / rate, infinite for a non-positive rate."""
    return math.inf if rate <= 0 else 1.0 / rate
