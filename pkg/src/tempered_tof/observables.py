"""Time-of-flight current from a solution field and power-law regime fits.

With absorbing electrodes at ``x = 0`` and ``x = L`` the charge-normalised
current is

    I(t)/q = -d/dt Q(t),   Q(t) = integral_0^L (L - x) u(x, t) dx.

The carrier charge ``q`` is normalised to one everywhere.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np

from .errors import DegenerateWindowError, NonPositiveSampleError
from .solver import SolutionField

__all__ = [
    "CurrentTrace",
    "PowerLawFit",
    "charge_moment",
    "transient_current",
    "auto_windows",
    "fit_power_laws",
    "write_current_csv",
    "read_current_csv",
]

IndexRange = Tuple[int, int]


@dataclass(frozen=True)
class CurrentTrace:
    """``I/q`` at ``times`` (one sample per step ``l = 1..n``).

    ``charge_moment`` holds ``Q(t_l)`` for ``l = 0..n`` and ``steps`` the
    interval lengths ``tau_{l-1}`` so the trace can be integrated back.
    """

    times: np.ndarray
    current: np.ndarray
    charge_moment: np.ndarray
    steps: np.ndarray

    def __len__(self) -> int:
        return self.times.shape[0]

    def integrated_charge(self) -> float:
        """``sum_l I(t_l) tau_{l-1}``; equals ``Q(t_0) - Q(t_n)`` for backward differences."""
        return float(np.sum(self.current * self.steps))


@dataclass(frozen=True)
class PowerLawFit:
    pre_slope: float
    pre_intercept: float
    post_slope: float
    post_intercept: float
    t_tr: float
    window_pre: IndexRange
    window_post: IndexRange
    window_pre_times: Tuple[float, float]
    window_post_times: Tuple[float, float]

    @property
    def alpha_pre(self) -> float:
        return 1.0 + self.pre_slope

    @property
    def alpha_post(self) -> float:
        return -1.0 - self.post_slope

    @property
    def transit_between_windows(self) -> bool:
        return self.window_pre_times[1] <= self.t_tr <= self.window_post_times[0]

    def report(self) -> str:
        lines = [
            "power-law regimes (I/q ~ t^s)",
            f"pre_slope       = {self.pre_slope:.6g}",
            f"post_slope      = {self.post_slope:.6g}",
            f"alpha_pre       = {self.alpha_pre:.6g}",
            f"alpha_post      = {self.alpha_post:.6g}",
            f"t_tr            = {self.t_tr:.6g}",
            f"window_pre      = [{self.window_pre[0]}, {self.window_pre[1]})"
            f"  t in [{self.window_pre_times[0]:.6g}, {self.window_pre_times[1]:.6g}]",
            f"window_post     = [{self.window_post[0]}, {self.window_post[1]})"
            f"  t in [{self.window_post_times[0]:.6g}, {self.window_post_times[1]:.6g}]",
            f"t_tr_between    = {str(self.transit_between_windows).lower()}",
        ]
        return "\n".join(lines) + "\n"


def _slice_moment(x: np.ndarray, L: float, u: np.ndarray) -> float:
    return float(np.trapezoid((L - x) * u, x))


def charge_moment(field: SolutionField, l: int) -> float:
    """Trapezoidal ``integral_0^L (L - x) U[l] dx``."""
    return _slice_moment(field.x, field.spatial.L, field.untempered[l])


def transient_current(
    field: SolutionField,
    placement: Literal["end", "logmid"] = "end",
    scheme: Literal["backward", "centered"] = "backward",
) -> CurrentTrace:
    """Charge-normalised current ``-dQ/dt`` on the time mesh.

    ``scheme="backward"`` gives ``-(Q_l - Q_{l-1}) / tau_{l-1}``, attached to
    ``t_l`` or, with ``placement="logmid"``, to ``sqrt(t_{l-1} t_l)`` (the
    first sample then sits at ``t_1 / 2``).  ``scheme="centered"`` uses the
    three-point derivative on the nonuniform mesh at interior nodes and the
    backward difference at ``t_n``; placement is then always ``t_l``.
    """
    mesh = field.temporal
    if mesh.n < 2:
        raise ValueError("transient_current needs at least two time steps")
    t = mesh.points
    x = field.x
    L = field.spatial.L
    Q = np.trapezoid((L - x)[None, :] * field.untempered, x, axis=1)
    tau = np.asarray(mesh.lengths)
    if scheme == "backward":
        I = -(Q[1:] - Q[:-1]) / tau
        if placement == "end":
            times = t[1:].copy()
        elif placement == "logmid":
            times = np.sqrt(t[:-1] * t[1:])
            times[0] = 0.5 * t[1]
        else:
            raise ValueError(f"unknown placement {placement!r}")
    elif scheme == "centered":
        I = np.empty(mesh.n)
        hm = tau[:-1]
        hp = tau[1:]
        # derivative at t_1..t_{n-1}
        dQ = (-hp / (hm * (hm + hp))) * Q[:-2] + ((hp - hm) / (hm * hp)) * Q[1:-1] + (hm / (hp * (hm + hp))) * Q[2:]
        I[:-1] = -dQ
        I[-1] = -(Q[-1] - Q[-2]) / tau[-1]
        times = t[1:].copy()
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return CurrentTrace(times=times, current=I, charge_moment=Q, steps=tau.copy())


def auto_windows(
    trace: CurrentTrace,
    pre: Tuple[float, float] = (0.05, 0.30),
    post: Tuple[float, float] = (0.60, 0.95),
) -> Tuple[IndexRange, IndexRange]:
    """Index ranges covering the given fractions of the log-time axis."""
    lt = np.log(trace.times)
    s = (lt - lt[0]) / (lt[-1] - lt[0])

    eps = 1e-12  # keep samples that sit on a window edge up to rounding

    def rng(frac):
        lo, hi = frac
        idx = np.nonzero((s >= lo - eps) & (s <= hi + eps))[0]
        if idx.size == 0:
            raise DegenerateWindowError(f"no samples in log-time fraction window {frac}")
        return int(idx[0]), int(idx[-1]) + 1

    return rng(pre), rng(post)


def _line_fit(lt: np.ndarray, lI: np.ndarray) -> Tuple[float, float]:
    lt_mean = lt.mean()
    dx = lt - lt_mean
    slope = float(np.dot(dx, lI - lI.mean()) / np.dot(dx, dx))
    return slope, float(lI.mean() - slope * lt_mean)


def fit_power_laws(
    trace: CurrentTrace,
    window_pre: Optional[IndexRange] = None,
    window_post: Optional[IndexRange] = None,
) -> PowerLawFit:
    """Least-squares lines in ``(ln t, ln I)`` over two index windows.

    Windows are half-open ``(start, stop)`` index ranges into the trace; when
    omitted they come from :func:`auto_windows`.  The transit time is the
    abscissa where the two fitted lines cross.
    """
    if window_pre is None or window_post is None:
        auto_pre, auto_post = auto_windows(trace)
        window_pre = window_pre or auto_pre
        window_post = window_post or auto_post
    (a0, a1), (b0, b1) = window_pre, window_post
    if a1 - a0 < 3 or b1 - b0 < 3:
        raise DegenerateWindowError("each window needs at least 3 samples")
    if not (0 <= a0 < a1 <= b0 < b1 <= len(trace)):
        raise DegenerateWindowError(f"windows must be ordered and disjoint, got {window_pre}, {window_post}")
    fits = []
    for lo, hi in ((a0, a1), (b0, b1)):
        I = trace.current[lo:hi]
        if np.any(~(I > 0)):
            raise NonPositiveSampleError(f"non-positive current in window [{lo}, {hi})")
        fits.append(_line_fit(np.log(trace.times[lo:hi]), np.log(I)))
    (s_pre, b_pre), (s_post, b_post) = fits
    if abs(s_pre - s_post) < 1e-9:
        raise DegenerateWindowError("fitted slopes are parallel; no transit time")
    t_tr = float(np.exp((b_post - b_pre) / (s_pre - s_post)))
    tt = trace.times
    return PowerLawFit(
        pre_slope=s_pre,
        pre_intercept=b_pre,
        post_slope=s_post,
        post_intercept=b_post,
        t_tr=t_tr,
        window_pre=(a0, a1),
        window_post=(b0, b1),
        window_pre_times=(float(tt[a0]), float(tt[a1 - 1])),
        window_post_times=(float(tt[b0]), float(tt[b1 - 1])),
    )


def write_current_csv(path, trace: CurrentTrace, precision: int = 17) -> None:
    fmt = f"%.{precision}g"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "I_over_q"])
        for t, I in zip(trace.times, trace.current):
            w.writerow([fmt % t, fmt % I])


def read_current_csv(path) -> Tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]
