"""Discrete Caputo derivative on a graded mesh and the tempering transform."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import InvalidParameterError
from .mesh import GradedMesh, L1CoefficientTable

__all__ = [
    "TemperedParams",
    "gamma_eval",
    "compensated_sum",
    "l1_caputo",
    "temper",
]


@dataclass(frozen=True)
class TemperedParams:
    """Fractional order ``alpha`` in (0, 1) and tempering rate ``lam >= 0``.

    ``lam = 0`` turns every tempered operator into the plain Caputo one.
    """

    alpha: float
    lam: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameterError(f"alpha must lie in (0,1), got {self.alpha!r}")
        if not (np.isfinite(self.lam) and self.lam >= 0.0):
            raise InvalidParameterError(f"lambda must be >= 0, got {self.lam!r}")

    @property
    def gamma_2ma(self) -> float:
        """``Gamma(2 - alpha)``, the normalisation of the L1 sum."""
        return gamma_eval(2.0 - self.alpha)


def gamma_eval(z: float) -> float:
    """Gamma function for ``z > 0``.

    Delegates to :func:`math.gamma`, which is accurate to a few ulp on the
    interval ``(1, 2]`` used here.
    """
    z = float(z)
    if not z > 0.0:
        raise InvalidParameterError(f"gamma_eval needs z > 0, got {z!r}")
    return math.gamma(z)


def compensated_sum(terms):
    """Neumaier-compensated sum of an iterable of scalars or equal-shape arrays.

    Terms are added in iteration order.
    """
    total = None
    comp = None
    for x in terms:
        x = np.asarray(x, dtype=float)
        if total is None:
            total = x.copy()
            comp = np.zeros_like(total)
            continue
        t = total + x
        big = np.abs(total) >= np.abs(x)
        comp += np.where(big, (total - t) + x, (x - t) + total)
        total = t
    if total is None:
        return 0.0
    out = total + comp
    return float(out) if out.ndim == 0 else out


def l1_caputo(samples: Sequence[float], table: L1CoefficientTable, k: int) -> float:
    """L1 approximation of the Caputo derivative of order ``table.alpha`` at ``t_k``.

    ``samples[j]`` is ``y(t_j)``; indices ``0..k`` are used.  The history sum is
    accumulated in ascending ``j`` with compensated summation.
    """
    if not 1 <= k <= table.n:
        raise IndexError(f"step index k={k} outside 1..{table.n}")
    y = np.asarray(samples, dtype=float)
    if y.shape[0] < k + 1:
        raise IndexError(f"need samples at t_0..t_{k}, got {y.shape[0]} values")
    terms = table.weights(k) * np.diff(y[: k + 1])
    return math.fsum(terms) / gamma_eval(2.0 - table.alpha)


def temper(
    values: np.ndarray,
    lam: float,
    mesh: GradedMesh,
    direction: Literal["forward", "inverse"] = "forward",
) -> np.ndarray:
    """Apply ``y = exp(lam t) u`` (forward) or its inverse along axis 0.

    Row ``l`` of ``values`` belongs to ``t_l``.  Both directions use the same
    factor ``exp(lam t_l)`` (multiply or divide) so that a round trip is exact
    up to two roundings per entry.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] != mesh.n + 1:
        raise ValueError(f"expected {mesh.n + 1} time slices, got {values.shape[0]}")
    if lam == 0.0:
        return values.copy()
    factor = np.exp(lam * mesh.points).reshape((-1,) + (1,) * (values.ndim - 1))
    if direction == "forward":
        return values * factor
    if direction == "inverse":
        return values / factor
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
