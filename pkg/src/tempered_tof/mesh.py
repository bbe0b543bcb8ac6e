"""Graded temporal mesh, uniform spatial mesh and L1 history weights.

The temporal mesh is ``t_i = (i/n)**r * T``.  For ``r > 1`` points cluster
near ``t = 0`` where solutions of time-fractional problems are singular.

The L1 weights ``a[j, k]`` multiply ``tau_j**-alpha * (y_{j+1} - y_j)`` in the
discrete Caputo derivative at ``t_k``.  They are evaluated in ratio form::

    a[j, k] = A**(1-alpha) - (A - 1)**(1-alpha),
    A = (k**r - j**r) / ((j+1)**r - j**r)

which only involves ratios of mesh differences, so neither large ``r`` nor large
``n`` overflows.  The difference of powers is rewritten with ``expm1``/``log1p``
because ``A`` reaches ``k**r`` for ``j = 0`` and the naive subtraction loses all
digits there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "GradedMesh",
    "SpatialMesh",
    "L1CoefficientTable",
    "build_graded_mesh",
    "build_spatial_mesh",
    "build_l1_table",
    "DEFAULT_TABLE_CAP",
]

#: Above this many time steps the coefficient table computes rows on demand.
DEFAULT_TABLE_CAP = 4096


def _power_differences(i: np.ndarray, r: float) -> np.ndarray:
    """``(i+1)**r - i**r`` without cancellation for large ``i``."""
    i = np.asarray(i, dtype=float)
    out = np.ones_like(i)  # i = 0 gives 1**r - 0 = 1
    pos = i > 0
    ip = i[pos]
    out[pos] = ip**r * np.expm1(r * np.log1p(1.0 / ip))
    return out


@dataclass(frozen=True)
class GradedMesh:
    """Time mesh ``t_0 = 0 < t_1 < ... < t_n = T`` with grading exponent ``r``."""

    n: int
    r: float
    T: float
    points: np.ndarray = field(repr=False)
    lengths: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.n + 1

    @property
    def is_uniform(self) -> bool:
        return self.r == 1.0


@dataclass(frozen=True)
class SpatialMesh:
    """Uniform grid ``x_i = i h`` on ``[0, L]`` with ``K`` subintervals."""

    K: int
    L: float
    h: float
    points: np.ndarray = field(repr=False)

    @property
    def interior(self) -> np.ndarray:
        return self.points[1:-1]


def build_graded_mesh(n: int, r: float, T: float) -> GradedMesh:
    """Build the graded mesh ``t_i = (i/n)**r * T`` for ``i = 0..n``.

    Interval lengths are ``T * ((i+1)**r - i**r) / n**r``, evaluated so that
    they stay accurate when ``i`` is large.
    """
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"n must be a positive integer, got {n!r}")
    if not np.isfinite(r) or r < 1:
        raise InvalidParameterError(f"grading exponent r must be >= 1, got {r!r}")
    if not np.isfinite(T) or T <= 0:
        raise InvalidParameterError(f"horizon T must be > 0, got {T!r}")
    n = int(n)
    r = float(r)
    T = float(T)
    i = np.arange(n + 1, dtype=float)
    points = (i / n) ** r * T
    points[-1] = T
    if r == 1.0:
        lengths = np.full(n, T / n)
    else:
        lengths = _power_differences(i[:-1], r) / float(n) ** r * T
    points.setflags(write=False)
    lengths.setflags(write=False)
    return GradedMesh(n=n, r=r, T=T, points=points, lengths=lengths)


def build_spatial_mesh(K: int, L: float) -> SpatialMesh:
    if int(K) != K or K < 1:
        raise InvalidParameterError(f"K must be a positive integer, got {K!r}")
    if not np.isfinite(L) or L <= 0:
        raise InvalidParameterError(f"domain length L must be > 0, got {L!r}")
    K = int(K)
    h = L / K
    points = np.arange(K + 1, dtype=float) * h
    points[-1] = L
    points.setflags(write=False)
    return SpatialMesh(K=K, L=float(L), h=h, points=points)


def _l1_row(alpha: float, r: float, k: int) -> np.ndarray:
    """Weights ``a[0..k-1, k]``; independent of n since only ratios enter."""
    beta = 1.0 - alpha
    j = np.arange(k, dtype=float)
    if r == 1.0:
        A = k - j
    else:
        # numerator and denominator both scaled by k**-r; denominator in log form
        num = np.ones(k)
        log_den = np.full(k, -r * np.log(k))
        jp = j[1:]
        num[1:] = -np.expm1(r * np.log1p(-(k - jp) / k))
        log_den[1:] = r * np.log(jp / k) + np.log(np.expm1(r * np.log1p(1.0 / jp)))
        A = num * np.exp(-log_den)
        A[-1] = 1.0
    # A**beta - (A-1)**beta = A**beta * (1 - (1 - 1/A)**beta)
    row = np.ones(k)
    Ah = A[:-1]
    row[:-1] = Ah**beta * -np.expm1(beta * np.log1p(-1.0 / Ah))
    return row


class L1CoefficientTable:
    """Triangular table of L1 weights ``a[j, k]`` plus ``tau_j**-alpha``.

    Rows are precomputed when ``n <= cap``; above the cap they are generated
    on every access instead of being stored.
    """

    def __init__(self, alpha: float, mesh: GradedMesh, cap: int = DEFAULT_TABLE_CAP):
        if not 0.0 < alpha < 1.0:
            raise InvalidParameterError(f"alpha must lie in (0,1), got {alpha!r}")
        self.alpha = float(alpha)
        self.mesh = mesh
        self.tau_pow = mesh.lengths ** (-self.alpha)
        self.tau_pow.setflags(write=False)
        self.lazy = mesh.n > cap
        self._rows: list[np.ndarray] | None = None
        if not self.lazy:
            rows = []
            for k in range(1, mesh.n + 1):
                row = _l1_row(self.alpha, mesh.r, k)
                row.setflags(write=False)
                rows.append(row)
            self._rows = rows

    @property
    def n(self) -> int:
        return self.mesh.n

    def row(self, k: int) -> np.ndarray:
        """``a[0..k-1, k]`` as a read-only array of length ``k``."""
        if not 1 <= k <= self.mesh.n:
            raise IndexError(f"row index k={k} outside 1..{self.mesh.n}")
        if self._rows is not None:
            return self._rows[k - 1]
        return _l1_row(self.alpha, self.mesh.r, k)

    def rows(self) -> Iterator[np.ndarray]:
        for k in range(1, self.mesh.n + 1):
            yield self.row(k)

    def weights(self, k: int) -> np.ndarray:
        """Products ``tau_j**-alpha * a[j, k]`` for ``j = 0..k-1``."""
        return self.tau_pow[:k] * self.row(k)

    def __getitem__(self, jk: tuple[int, int]) -> float:
        j, k = jk
        if not 0 <= j < k:
            raise IndexError(f"need 0 <= j < k, got j={j}, k={k}")
        return float(self.row(k)[j])

    def __repr__(self) -> str:
        return f"L1CoefficientTable(alpha={self.alpha}, n={self.n}, r={self.mesh.r}, lazy={self.lazy})"


def build_l1_table(alpha: float, mesh: GradedMesh, cap: int = DEFAULT_TABLE_CAP) -> L1CoefficientTable:
    return L1CoefficientTable(alpha, mesh, cap=cap)
