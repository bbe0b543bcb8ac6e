"""Fit model parameters to a measured transient-current curve.

Every loss evaluation runs the forward solver with a Gaussian initial packet,
turns the field into ``I/q`` and compares shapes in log-log space.  The current
amplitude is profiled out analytically: the best additive offset between
``ln I_sim`` and ``ln I_meas`` is their mean difference, so rescaling the data
never changes the loss.

The optimiser is Nelder-Mead on unconstrained coordinates.  Each bounded
parameter is mapped through a logistic function (in log space for the
strictly positive scale parameters ``v``, ``D`` and ``w``), so candidates can
never leave their bounds.  Candidates that violate ``h < 2D/v`` receive a
fixed penalty without being simulated.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .errors import InvalidParameterError
from .fractional import TemperedParams
from .observables import CurrentTrace, transient_current
from .solver import ProblemSpec, march

__all__ = [
    "PARAM_NAMES",
    "DEFAULT_BOUNDS",
    "BORON_FIT",
    "MeasuredTrace",
    "FitProblem",
    "LossDetail",
    "FitResult",
    "gaussian_packet",
    "width_from_exponent",
    "simulate_current",
    "evaluate_loss",
    "loss",
    "fit",
    "synthetic_trace",
    "write_fit_csv",
]

log = logging.getLogger(__name__)

PARAM_NAMES = ("alpha", "lam", "v", "D", "x_c", "w")
_LOG_SCALED = frozenset({"v", "D", "w"})

#: Bounds for ``L = 1``; default ``x_c`` and ``w`` bounds are scaled by ``L``.
DEFAULT_BOUNDS = {
    "alpha": (0.02, 0.98),
    "lam": (0.0, 10.0),
    "v": (1e-3, 10.0),
    "D": (1e-6, 1.0),
    "x_c": (0.01, 0.99),
    "w": (1e-3, 0.3),
}


def width_from_exponent(c: float, L: float = 1.0) -> float:
    """Width ``w`` with ``exp(-(x-x_c)**2 / (2 w**2)) == exp(-c (x-x_c)**2 / L**2)``."""
    return L / math.sqrt(2.0 * c)


#: Parameters of the amorphous-boron fit: packet ``exp(-2e3 (x - 0.2L)**2)``.
BORON_FIT = {
    "alpha": 0.66,
    "lam": 1.0,
    "v": 0.38,
    "D": 2.7e-3,
    "x_c": 0.2,
    "w": width_from_exponent(2e3),
}


def gaussian_packet(x_c: float, w: float, A: float = 1.0):
    """``g(x) = A exp(-(x - x_c)**2 / (2 w**2))``."""
    if not w > 0:
        raise InvalidParameterError(f"packet width must be > 0, got {w!r}")
    inv = 1.0 / (2.0 * w * w)

    def g(x):
        x = np.asarray(x, dtype=float)
        return A * np.exp(-inv * (x - x_c) ** 2)

    return g


@dataclass(frozen=True)
class MeasuredTrace:
    times: np.ndarray
    current: np.ndarray
    source: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        I = np.asarray(self.current, dtype=float)
        if t.ndim != 1 or t.shape != I.shape or t.size < 2:
            raise InvalidParameterError("times and current must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(t) <= 0) or t[0] <= 0:
            raise InvalidParameterError("measured times must be positive and strictly increasing")
        if np.any(~(I > 0)):
            raise InvalidParameterError("measured currents must be strictly positive")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "current", I)

    @classmethod
    def from_csv(cls, path) -> "MeasuredTrace":
        """Two-column ``t,I`` file; ``#`` lines and one non-numeric header are skipped."""
        ts, Is = [], []
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                s = line.strip()
                if not s or s.startswith("#"):
                    continue
                parts = [p.strip() for p in s.split(",")]
                try:
                    t, I = float(parts[0]), float(parts[1])
                except (ValueError, IndexError):
                    if not ts:
                        continue  # header
                    raise InvalidParameterError(f"{path}:{lineno}: expected 't,I', got {s!r}")
                ts.append(t)
                Is.append(I)
        return cls(np.array(ts), np.array(Is), source=str(path))

    def to_csv(self, path, precision: int = 17) -> None:
        fmt = f"%.{precision}g"
        with open(path, "w", newline="") as fh:
            if self.source:
                fh.write(f"# {self.source}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "I"])
            for t, I in zip(self.times, self.current):
                w.writerow([fmt % t, fmt % I])

    def scaled(self, c: float) -> "MeasuredTrace":
        return replace(self, current=self.current * c)


@dataclass(frozen=True)
class FitProblem:
    """Free parameters, bounds and the fixed forward-simulation grid.

    ``bounds`` overrides entries of :data:`DEFAULT_BOUNDS`; ``fixed`` pins
    parameters (e.g. ``{"lam": 0.0}``) and everything else in
    :data:`PARAM_NAMES` is free.  ``x_c`` and ``w`` are absolute lengths.
    ``T = None`` simulates up to the last measured time.
    """

    bounds: Mapping[str, tuple] = field(default_factory=dict)
    fixed: Mapping[str, float] = field(default_factory=dict)
    n: int = 100
    r: float = 3.0
    K: int = 100
    L: float = 1.0
    T: Optional[float] = None
    penalty: float = 1e6
    max_iter: int = 500
    tol: float = 1e-6
    restarts: int = 0
    simplex_step: float = 0.1

    def __post_init__(self):
        bounds = dict(DEFAULT_BOUNDS)
        for name in ("x_c", "w"):
            lo, hi = bounds[name]
            bounds[name] = (lo * self.L, hi * self.L)
        bounds.update(self.bounds)
        for name, (lo, hi) in bounds.items():
            if name not in PARAM_NAMES:
                raise InvalidParameterError(f"unknown parameter {name!r}")
            if not lo < hi:
                raise InvalidParameterError(f"bounds for {name} must satisfy lo < hi, got {(lo, hi)}")
            if name in _LOG_SCALED and lo <= 0:
                raise InvalidParameterError(f"lower bound for {name} must be > 0")
        for name in self.fixed:
            if name not in PARAM_NAMES:
                raise InvalidParameterError(f"unknown parameter {name!r}")
        object.__setattr__(self, "bounds", bounds)

    @property
    def free(self) -> tuple:
        return tuple(p for p in PARAM_NAMES if p not in self.fixed)

    @property
    def h(self) -> float:
        return self.L / self.K

    def complete(self, point: Mapping[str, float]) -> dict:
        full = dict(point)
        full.update(self.fixed)
        missing = [p for p in PARAM_NAMES if p not in full]
        if missing:
            raise InvalidParameterError(f"missing parameters: {missing}")
        return full

    def in_bounds(self, point: Mapping[str, float]) -> bool:
        for name in self.free:
            lo, hi = self.bounds[name]
            if not lo <= point[name] <= hi:
                return False
        return True

    def is_stable(self, point: Mapping[str, float]) -> bool:
        return self.h < 2.0 * point["D"] / point["v"]

    # unconstrained coordinates ------------------------------------------------
    def _unit(self, name, value):
        lo, hi = self.bounds[name]
        if name in _LOG_SCALED:
            return (math.log(value) - math.log(lo)) / (math.log(hi) - math.log(lo))
        return (value - lo) / (hi - lo)

    def to_unconstrained(self, point: Mapping[str, float]) -> np.ndarray:
        eps = 1e-9
        return np.array([logit(min(max(self._unit(p, point[p]), eps), 1 - eps)) for p in self.free])

    def from_unconstrained(self, z: Sequence[float]) -> dict:
        out = {}
        for name, zi in zip(self.free, z):
            lo, hi = self.bounds[name]
            s = float(expit(zi))
            if name in _LOG_SCALED:
                out[name] = math.exp(math.log(lo) + s * (math.log(hi) - math.log(lo)))
            else:
                out[name] = lo + s * (hi - lo)
        return self.complete(out)


def simulate_current(point: Mapping[str, float], problem: FitProblem, T: float,
                     n: Optional[int] = None, K: Optional[int] = None) -> CurrentTrace:
    """Forward run with a unit-amplitude packet and zero forcing."""
    spec = ProblemSpec(
        params=TemperedParams(point["alpha"], point["lam"]),
        v=point["v"],
        D=point["D"],
        L=problem.L,
        T=T,
        g=gaussian_packet(point["x_c"], point["w"]),
    )
    with warnings.catch_warnings():
        # candidates may park the packet on an electrode; that is a valid trial
        warnings.simplefilter("ignore", RuntimeWarning)
        field_ = march(spec, n or problem.n, problem.r, K or problem.K)
    return transient_current(field_)


@dataclass(frozen=True)
class LossDetail:
    value: float
    compared: int
    skipped: int
    stable: bool
    log_offset: float = 0.0


def _horizon(problem: FitProblem, measured: MeasuredTrace) -> float:
    return problem.T if problem.T is not None else float(measured.times[-1])


def _log_interp(trace: CurrentTrace, t: np.ndarray):
    """Linear interpolation of ``ln I`` in ``ln t``; NaN where a bracket is not positive."""
    ts, Is = trace.times, trace.current
    out = np.full(t.shape, np.nan)
    inside = (t >= ts[0]) & (t <= ts[-1])
    idx = np.clip(np.searchsorted(ts, t[inside]), 1, ts.size - 1)
    I0, I1 = Is[idx - 1], Is[idx]
    good = (I0 > 0) & (I1 > 0)
    lt0, lt1 = np.log(ts[idx - 1]), np.log(ts[idx])
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (np.log(t[inside]) - lt0) / (lt1 - lt0)
        val = np.log(I0) + s * (np.log(I1) - np.log(I0))
    sub = np.where(good, val, np.nan)
    out[inside] = sub
    return out


def evaluate_loss(point: Mapping[str, float], measured: MeasuredTrace, problem: FitProblem,
                  n: Optional[int] = None, K: Optional[int] = None) -> LossDetail:
    point = problem.complete(point)
    K_eff = K or problem.K
    if not problem.L / K_eff < 2.0 * point["D"] / point["v"] or not problem.in_bounds(point):
        return LossDetail(value=problem.penalty, compared=0, skipped=len(measured.times), stable=False)
    trace = simulate_current(point, problem, _horizon(problem, measured), n=n, K=K)
    lsim = _log_interp(trace, measured.times)
    ok = np.isfinite(lsim)
    skipped = int(np.count_nonzero(~ok))
    if not ok.any():
        return LossDetail(value=problem.penalty, compared=0, skipped=skipped, stable=True)
    diff = lsim[ok] - np.log(measured.current[ok])
    c = float(np.mean(diff))
    return LossDetail(value=float(np.sum((diff - c) ** 2)), compared=int(ok.sum()), skipped=skipped,
                      stable=True, log_offset=c)


def loss(point: Mapping[str, float], measured: MeasuredTrace, problem: FitProblem) -> float:
    """Profiled log-space least squares between simulated and measured current."""
    return evaluate_loss(point, measured, problem).value


@dataclass
class FitResult:
    params: dict
    loss: float
    initial_loss: float
    iterations: int
    evaluations: int
    loss_trace: list
    converged: bool
    message: str
    skipped: int = 0
    log_offset: float = 0.0
    refined_loss: Optional[float] = None

    @property
    def amplitude(self) -> float:
        """Factor turning the unit-packet simulation into measured units."""
        return math.exp(-self.log_offset)

    @property
    def refined_change(self) -> Optional[float]:
        if self.refined_loss is None or self.loss == 0:
            return None
        return abs(self.refined_loss - self.loss) / self.loss

    def report(self) -> str:
        lines = ["fit result"]
        for name in PARAM_NAMES:
            lines.append(f"{name:<14}= {self.params[name]:.8g}")
        lines += [
            f"{'amplitude':<14}= {self.amplitude:.8g}",
            f"{'loss':<14}= {self.loss:.8g}",
            f"{'initial_loss':<14}= {self.initial_loss:.8g}",
            f"{'iterations':<14}= {self.iterations}",
            f"{'evaluations':<14}= {self.evaluations}",
            f"{'converged':<14}= {str(self.converged).lower()}",
            f"{'skipped':<14}= {self.skipped}",
        ]
        if self.refined_loss is not None:
            lines.append(f"{'refined_loss':<14}= {self.refined_loss:.8g}")
            lines.append(f"{'refined_change':<14}= {self.refined_change:.4g}")
        lines.append(f"{'message':<14}= {self.message}")
        return "\n".join(lines) + "\n"


class _Tracker:
    def __init__(self, problem, measured):
        self.problem = problem
        self.measured = measured
        self.best_value = math.inf
        self.best_point = None
        self.best_detail = None
        self.evaluations = 0

    def __call__(self, z):
        point = self.problem.from_unconstrained(z)
        detail = evaluate_loss(point, self.measured, self.problem)
        self.evaluations += 1
        if detail.value < self.best_value:
            self.best_value, self.best_point, self.best_detail = detail.value, point, detail
        # Nelder-Mead only compares values, so the log keeps decisions unchanged
        # while turning the stopping tolerance into a relative spread.
        return math.log(detail.value + 1e-12)


def _initial_simplex(problem: FitProblem, point: Mapping[str, float]) -> np.ndarray:
    z0 = problem.to_unconstrained(point)
    verts = [z0]
    for i, name in enumerate(problem.free):
        lo, hi = problem.bounds[name]
        p = dict(point)
        val = point[name]
        step = problem.simplex_step * (abs(val) if val != 0 else (hi - lo))
        p[name] = val + step if val + step < hi else val - step
        z = problem.to_unconstrained(p)
        if z[i] == z0[i]:
            z = z0.copy()
            z[i] += 0.1
        verts.append(z)
    return np.array(verts)


def fit(problem: FitProblem, measured: MeasuredTrace, initial: Mapping[str, float],
        refine: bool = True) -> FitResult:
    """Nelder-Mead search from ``initial``; returns the best point seen.

    Stops when the spread of ``ln(loss)`` over the simplex drops below
    ``problem.tol`` or after ``problem.max_iter`` iterations per restart.
    With ``refine`` the best point is re-simulated on a grid of doubled
    resolution and the resulting loss is recorded.
    """
    start = problem.complete(initial)
    if not problem.in_bounds(start):
        raise InvalidParameterError("initial point lies outside the bounds")
    tracker = _Tracker(problem, measured)
    init_detail = evaluate_loss(start, measured, problem)
    tracker.evaluations += 1
    tracker.best_value, tracker.best_point, tracker.best_detail = init_detail.value, start, init_detail

    trace = [init_detail.value]
    iterations = 0
    converged = False
    message = ""
    point = start
    for attempt in range(problem.restarts + 1):
        res = minimize(
            tracker,
            problem.to_unconstrained(point),
            method="Nelder-Mead",
            callback=lambda xk: trace.append(tracker.best_value),
            options={
                "maxiter": problem.max_iter,
                "xatol": np.inf,
                "fatol": problem.tol,
                "initial_simplex": _initial_simplex(problem, point),
            },
        )
        iterations += int(res.nit)
        converged = bool(res.success)
        message = str(res.message)
        point = tracker.best_point
        log.info("fit attempt %d: loss=%.6g nit=%d", attempt, tracker.best_value, res.nit)

    best = tracker.best_detail
    result = FitResult(
        params=dict(tracker.best_point),
        loss=tracker.best_value,
        initial_loss=init_detail.value,
        iterations=iterations,
        evaluations=tracker.evaluations,
        loss_trace=trace,
        converged=converged,
        message=message,
        skipped=best.skipped,
        log_offset=best.log_offset,
    )
    if refine and best.stable:
        result.refined_loss = evaluate_loss(result.params, measured, problem, n=2 * problem.n, K=2 * problem.K).value
    return result


def synthetic_trace(
    point: Mapping[str, float],
    problem: FitProblem,
    times: Sequence[float],
    noise: float = 0.0,
    seed: int = 0,
    amplitude: float = 1.0,
    n: Optional[int] = None,
    K: Optional[int] = None,
) -> MeasuredTrace:
    """Simulated current sampled at ``times`` with multiplicative log-normal noise."""
    times = np.asarray(times, dtype=float)
    point = problem.complete(point) if set(problem.fixed) else dict(point)
    T = problem.T if problem.T is not None else float(times[-1])
    trace = simulate_current(point, problem, T, n=n, K=K)
    lI = _log_interp(trace, times)
    if not np.all(np.isfinite(lI)):
        raise InvalidParameterError("simulated current is not positive at every requested time")
    rng = np.random.default_rng(seed)
    I = amplitude * np.exp(lI + noise * rng.standard_normal(times.shape))
    return MeasuredTrace(times, I, source=f"synthetic noise={noise:g} seed={seed}")


def write_fit_csv(path, measured: MeasuredTrace, result: FitResult, problem: FitProblem,
                  precision: int = 17) -> None:
    """Columns ``t,I_measured,I_fitted``; the fitted curve includes the profiled amplitude."""
    trace = simulate_current(result.params, problem, _horizon(problem, measured))
    lI = _log_interp(trace, measured.times)
    fitted = np.exp(lI - result.log_offset)
    fmt = f"%.{precision}g"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "I_measured", "I_fitted"])
        for t, Im, If in zip(measured.times, measured.current, fitted):
            w.writerow([fmt % t, fmt % Im, "" if not np.isfinite(If) else fmt % If])
