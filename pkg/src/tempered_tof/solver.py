"""Implicit L1 / central-difference scheme for the tempered advection-diffusion model.

The tempered problem for ``u`` is rewritten for ``y = exp(lam t) u``, which obeys a
plain Caputo equation with forcing ``exp(lam t) f``.  Each step ``l`` solves the
tridiagonal system

    sub * Y[i-1] + diag * Y[i] + sup * Y[i+1] = rhs[i],   i = 1..K-1

with

    sub  = -(D/h**2 + v/(2h))
    diag = tau_{l-1}**-alpha / Gamma(2-alpha) + 2D/h**2
    sup  = -(D/h**2 - v/(2h))

and zero boundary values.  ``u`` is recovered as ``exp(-lam t) Y`` afterwards.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameterError, NumericalBreakdownError, StabilityError
from .fractional import TemperedParams, compensated_sum, gamma_eval, temper
from .mesh import (
    GradedMesh,
    L1CoefficientTable,
    SpatialMesh,
    build_graded_mesh,
    build_l1_table,
    build_spatial_mesh,
)

__all__ = [
    "ProblemSpec",
    "SolutionField",
    "StepSystem",
    "StabilityCheck",
    "check_stability",
    "assemble_rhs",
    "step_system",
    "thomas_solve",
    "march",
    "write_field_csv",
    "read_field_csv",
]

log = logging.getLogger(__name__)

InitialProfile = Callable[[np.ndarray], np.ndarray]
Forcing = Callable[[np.ndarray, float], np.ndarray]


def _zero_profile(x):
    return np.zeros_like(x)


@dataclass(frozen=True)
class ProblemSpec:
    """Continuous model with absorbing boundaries ``u(0,t) = u(L,t) = 0``.

    ``g(x)`` is the initial profile, ``f(x, t)`` the forcing (``None`` means
    identically zero).  Both are called with numpy arrays of grid points.
    """

    params: TemperedParams
    v: float
    D: float
    L: float = 1.0
    T: float = 1.0
    g: InitialProfile = _zero_profile
    f: Optional[Forcing] = None

    def __post_init__(self):
        for name in ("v", "D", "L", "T"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise InvalidParameterError(f"{name} must be > 0, got {val!r}")

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def lam(self) -> float:
        return self.params.lam

    @property
    def hmax(self) -> float:
        return 2.0 * self.D / self.v


@dataclass
class SolutionField:
    """Tempered values ``Y[l, i]`` and untempered ``U[l, i] = exp(-lam t_l) Y[l, i]``.

    Arrays have shape ``(n+1, K+1)``: time along axis 0, space along axis 1.
    Boundary columns are zero for every ``l``, including ``l = 0`` since the
    initial profile is only sampled at interior points.
    """

    spatial: SpatialMesh
    temporal: GradedMesh
    tempered: np.ndarray = field(repr=False)
    untempered: np.ndarray = field(repr=False)
    lam: float = 0.0

    @property
    def x(self) -> np.ndarray:
        return self.spatial.points

    @property
    def t(self) -> np.ndarray:
        return self.temporal.points


@dataclass(frozen=True)
class StepSystem:
    sub: float
    diag: float
    sup: float
    rhs: np.ndarray

    def dense(self) -> np.ndarray:
        m = self.rhs.shape[0]
        A = np.diag(np.full(m, self.diag))
        if m > 1:
            A += np.diag(np.full(m - 1, self.sub), -1) + np.diag(np.full(m - 1, self.sup), 1)
        return A


@dataclass(frozen=True)
class StabilityCheck:
    ok: bool
    h: float
    hmax: float

    def __bool__(self) -> bool:
        return self.ok


def check_stability(spec: ProblemSpec, h: float) -> StabilityCheck:
    """Strict test of ``h < 2D/v``; equality fails."""
    hmax = spec.hmax
    return StabilityCheck(ok=bool(h < hmax), h=float(h), hmax=hmax)


def step_system(spec: ProblemSpec, spatial: SpatialMesh, table: L1CoefficientTable, l: int, rhs) -> StepSystem:
    h = spatial.h
    dh2 = spec.D / h**2
    vh = spec.v / (2.0 * h)
    lead = table.tau_pow[l - 1] / gamma_eval(2.0 - spec.alpha)
    return StepSystem(sub=-(dh2 + vh), diag=lead + 2.0 * dh2, sup=-(dh2 - vh), rhs=np.asarray(rhs, dtype=float))


def assemble_rhs(
    tempered: np.ndarray,
    table: L1CoefficientTable,
    spec: ProblemSpec,
    l: int,
    spatial: SpatialMesh,
) -> np.ndarray:
    """Right-hand side of step ``l`` at interior nodes ``i = 1..K-1``.

    ``tempered`` holds the already computed slices ``Y[0..l-1]`` (extra rows are
    ignored).  The ``j = l-1`` history term involves the unknown slice and sits
    on the diagonal; the remaining ``j = 0..l-2`` terms move to the right::

        rhs = w_{l-1} Y[l-1] - sum_{j<l-1} w_j (Y[j+1] - Y[j]) + exp(lam t_l) f(x, t_l)

    with ``w_j = tau_j**-alpha a[j, l] / Gamma(2-alpha)``.
    """
    Y = tempered[:, 1:-1]
    g2 = gamma_eval(2.0 - spec.alpha)
    w = table.weights(l) / g2
    rhs = w[l - 1] * Y[l - 1]
    if l > 1:
        history = compensated_sum(w[j] * (Y[j + 1] - Y[j]) for j in range(l - 1))
        rhs = rhs - history
    if spec.f is not None:
        tl = table.mesh.points[l]
        rhs = rhs + np.exp(spec.lam * tl) * np.asarray(spec.f(spatial.interior, tl), dtype=float)
    return rhs


def thomas_solve(system: StepSystem) -> np.ndarray:
    """Solve the constant-coefficient tridiagonal system by the Thomas algorithm."""
    d = system.rhs.tolist()
    m = len(d)
    a, b, c = float(system.sub), float(system.diag), float(system.sup)
    cp = [0.0] * m
    z = [0.0] * m
    piv = b
    if abs(piv) < 1e-300:
        raise NumericalBreakdownError("zero pivot at row 1")
    cp[0] = c / piv
    z[0] = d[0] / piv
    for i in range(1, m):
        piv = b - a * cp[i - 1]
        if abs(piv) < 1e-300:
            raise NumericalBreakdownError(f"zero pivot at row {i + 1}")
        cp[i] = c / piv
        z[i] = (d[i] - a * z[i - 1]) / piv
    for i in range(m - 2, -1, -1):
        z[i] -= cp[i] * z[i + 1]
    return np.asarray(z)


def _check_initial_profile(g0: np.ndarray) -> None:
    if g0.size < 2:
        return
    scale = np.mean(np.abs(g0))
    edge = max(abs(g0[0]), abs(g0[-1]))
    if scale > 0 and edge > 10.0 * scale:
        warnings.warn(
            f"initial profile is large next to the absorbing boundaries "
            f"(|g| = {edge:.3g} vs interior mean {scale:.3g})",
            RuntimeWarning,
            stacklevel=3,
        )


def march(
    spec: ProblemSpec,
    n: int,
    r: float,
    K: int,
    table: Optional[L1CoefficientTable] = None,
) -> SolutionField:
    """Run the implicit scheme over ``n`` graded time steps and ``K`` space cells.

    A precomputed coefficient table may be passed to reuse it across runs; it
    must match ``(spec.alpha, n, r, spec.T)``.
    """
    if int(K) != K or K < 2:
        raise InvalidParameterError(f"K must be an integer >= 2, got {K!r}")
    spatial = build_spatial_mesh(K, spec.L)
    stab = check_stability(spec, spatial.h)
    if not stab:
        raise StabilityError(stab.h, stab.hmax)
    if table is None:
        mesh = build_graded_mesh(n, r, spec.T)
        table = build_l1_table(spec.alpha, mesh)
    else:
        mesh = table.mesh
        if mesh.n != n or mesh.r != float(r) or mesh.T != spec.T or table.alpha != spec.alpha:
            raise InvalidParameterError("coefficient table does not match (alpha, n, r, T)")

    K = spatial.K
    Y = np.zeros((mesh.n + 1, K + 1))
    g0 = np.asarray(spec.g(spatial.interior), dtype=float)
    _check_initial_profile(g0)
    Y[0, 1:-1] = g0

    for l in range(1, mesh.n + 1):
        rhs = assemble_rhs(Y[:l], table, spec, l, spatial)
        Y[l, 1:-1] = thomas_solve(step_system(spec, spatial, table, l, rhs))

    U = temper(Y, spec.lam, mesh, "inverse")
    log.debug("march done: n=%d r=%g K=%d alpha=%g lam=%g", mesh.n, mesh.r, K, spec.alpha, spec.lam)
    return SolutionField(spatial=spatial, temporal=mesh, tempered=Y, untempered=U, lam=spec.lam)


def write_field_csv(path, field: SolutionField, precision: int = 17) -> None:
    """Write the untempered field as long-format CSV with columns ``x,t,u``."""
    fmt = f"%.{precision}g"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "t", "u"])
        x = field.x
        for l, tl in enumerate(field.t):
            row = field.untempered[l]
            for i in range(x.shape[0]):
                w.writerow([fmt % x[i], fmt % tl, fmt % row[i]])


def read_field_csv(path):
    """Read a CSV written by :func:`write_field_csv`; returns ``(x, t, U)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x = np.unique(data[:, 0])
    t = np.unique(data[:, 1])
    U = data[:, 2].reshape(t.shape[0], x.shape[0])
    return x, t, U
