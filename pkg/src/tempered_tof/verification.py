"""Manufactured-solution convergence study.

The test problem uses ``v = D = T = L = 1``, ``g = 0`` and the exact solution
``u = exp(-lam t) t**alpha x (1 - x)``.  Because the tempered Caputo derivative
of ``exp(-lam t) t**alpha w(x)`` is ``exp(-lam t) Gamma(alpha+1) w(x)``, the
matching forcing is

    f = exp(-lam t) [Gamma(alpha+1) x(1-x) + v t**alpha (1-2x) + 2 D t**alpha].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidParameterError
from .fractional import TemperedParams
from .solver import ProblemSpec, march

__all__ = [
    "ErrorRecord",
    "manufactured_solution",
    "manufactured_forcing",
    "manufactured_problem",
    "max_error",
    "run_convergence_table",
    "optimal_grading",
    "ReferenceBlock",
    "ReferenceTable",
    "RowCheck",
    "BlockCheck",
    "TEMPERED_REFERENCE",
    "UNTEMPERED_REFERENCE",
    "check_block",
    "format_records",
    "write_records_csv",
]


@dataclass(frozen=True)
class ErrorRecord:
    n: int
    r: float
    alpha: float
    lam: float
    h: float
    E: float
    eoc: Optional[float] = None


def manufactured_solution(alpha, lam, x, t):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.exp(-lam * t) * t**alpha * x * (1.0 - x)


def manufactured_forcing(alpha, lam, v, D, x, t):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    ta = t**alpha
    return np.exp(-lam * t) * (math.gamma(alpha + 1.0) * x * (1.0 - x) + v * ta * (1.0 - 2.0 * x) + 2.0 * D * ta)


def manufactured_problem(alpha: float, lam: float, v: float = 1.0, D: float = 1.0) -> ProblemSpec:
    return ProblemSpec(
        params=TemperedParams(alpha, lam),
        v=v,
        D=D,
        L=1.0,
        T=1.0,
        g=np.zeros_like,
        f=lambda x, t: manufactured_forcing(alpha, lam, v, D, x, t),
    )


def max_error(field, alpha: float, lam: float) -> float:
    """Max abs error over every lattice point, including ``t_0`` and the boundaries."""
    X, T = np.meshgrid(field.x, field.t)
    return float(np.max(np.abs(manufactured_solution(alpha, lam, X, T) - field.untempered)))


def optimal_grading(alpha: float) -> float:
    """Grading exponent ``(2 - alpha) / alpha`` that restores order ``2 - alpha``."""
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0,1), got {alpha!r}")
    return (2.0 - alpha) / alpha


def _spatial_cells(h: float, L: float = 1.0) -> int:
    K = round(L / h)
    if K < 2 or not math.isclose(K * h, L, rel_tol=1e-9):
        raise InvalidParameterError(f"h={h!r} must divide L={L!r} into at least 2 cells")
    return int(K)


def run_convergence_table(
    alpha: float,
    lam: float,
    r: float,
    h: float,
    n_list: Sequence[int],
    v: float = 1.0,
    D: float = 1.0,
) -> list[ErrorRecord]:
    """One march per ``n``; EOC is ``log2(E_prev / E)`` when ``n`` doubled."""
    spec = manufactured_problem(alpha, lam, v, D)
    K = _spatial_cells(h)
    records: list[ErrorRecord] = []
    for n in sorted(n_list):
        E = max_error(march(spec, n, r, K), alpha, lam)
        eoc = None
        if records and n == 2 * records[-1].n and E > 0:
            eoc = math.log2(records[-1].E / E)
        records.append(ErrorRecord(n=n, r=r, alpha=alpha, lam=lam, h=h, E=E, eoc=eoc))
    return records


# ---------------------------------------------------------------------------
# reference values printed with the scheme, and how each block is judged


@dataclass(frozen=True)
class ReferenceBlock:
    """Printed errors for one grading exponent.

    ``mode`` is ``"strict"`` (every E within ``rtol`` and every EOC within
    ``eoc_atol``), ``"stagnation"`` (E at the largest n within ``rtol`` and all
    EOC at most ``eoc_cap``) or ``"monotone"`` (E non-increasing in n).
    ``informational`` lists n whose printed E is reported but never judged.
    """

    r: float
    n: tuple
    E: tuple
    eoc: tuple
    mode: str = "strict"
    informational: frozenset = frozenset()
    eoc_cap: float = 0.30


@dataclass(frozen=True)
class ReferenceTable:
    name: str
    alpha: float
    lam: float
    blocks: tuple


N_LIST = (5, 10, 20, 40, 80, 160)

TEMPERED_REFERENCE = ReferenceTable(
    name="tempered",
    alpha=0.5,
    lam=1.0,
    blocks=(
        ReferenceBlock(
            r=1.0,
            n=N_LIST,
            E=(3.86e-3, 4.11e-3, 3.92e-3, 3.54e-3, 3.05e-3, 2.54e-3),
            eoc=(None, -0.08, 0.07, 0.15, 0.21, 0.26),
            mode="stagnation",
        ),
        ReferenceBlock(
            r=3.0,
            n=N_LIST,
            E=(2.72e-3, 1.48e-3, 7.57e-4, 3.38e-4, 1.39e-4, 5.40e-5),
            eoc=(None, 0.88, 0.97, 1.16, 1.29, 1.36),
        ),
    ),
)

UNTEMPERED_REFERENCE = ReferenceTable(
    name="untempered",
    alpha=0.25,
    lam=0.0,
    blocks=(
        ReferenceBlock(
            r=1.0,
            n=N_LIST,
            E=(3.94e-3, 3.90e-3, 3.79e-3, 3.66e-3, 3.52e-3, 3.36e-2),
            eoc=(None, 0.01, 0.04, 0.05, 0.06, 0.07),
            mode="monotone",
            # printed 3.36e-2 breaks the monotone trend of its own column
            informational=frozenset({160}),
        ),
        ReferenceBlock(
            r=7.0,
            n=N_LIST,
            E=(4.09e-3, 2.47e-3, 1.12e-3, 4.33e-4, 1.53e-4, 5.10e-5),
            eoc=(None, 0.72, 1.14, 1.37, 1.50, 1.59),
        ),
    ),
)

REFERENCE_TABLES = {t.name: t for t in (TEMPERED_REFERENCE, UNTEMPERED_REFERENCE)}


@dataclass(frozen=True)
class RowCheck:
    n: int
    E: float
    E_ref: Optional[float]
    eoc: Optional[float]
    eoc_ref: Optional[float]
    E_ok: Optional[bool]
    eoc_ok: Optional[bool]
    informational: bool = False

    @property
    def ok(self) -> bool:
        return self.E_ok is not False and self.eoc_ok is not False


@dataclass(frozen=True)
class BlockCheck:
    block: ReferenceBlock
    rows: tuple
    ok: bool
    notes: tuple = ()


def check_block(
    records: Sequence[ErrorRecord],
    block: ReferenceBlock,
    rtol: float = 0.10,
    eoc_atol: float = 0.05,
) -> BlockCheck:
    ref = {n: (E, eoc) for n, E, eoc in zip(block.n, block.E, block.eoc)}
    rows = []
    notes = []
    for rec in records:
        E_ref, eoc_ref = ref.get(rec.n, (None, None))
        info = rec.n in block.informational
        E_ok = eoc_ok = None
        if E_ref is not None and not info:
            if block.mode == "strict":
                E_ok = abs(rec.E - E_ref) <= rtol * E_ref
                if eoc_ref is not None:
                    eoc_ok = rec.eoc is not None and abs(rec.eoc - eoc_ref) <= eoc_atol
            elif block.mode == "stagnation":
                if rec.n == max(block.n):
                    E_ok = abs(rec.E - E_ref) <= rtol * E_ref
                if rec.eoc is not None:
                    eoc_ok = rec.eoc <= block.eoc_cap
        rows.append(
            RowCheck(
                n=rec.n, E=rec.E, E_ref=E_ref, eoc=rec.eoc, eoc_ref=eoc_ref,
                E_ok=E_ok, eoc_ok=eoc_ok, informational=info,
            )
        )
    ok = all(row.ok for row in rows)
    if block.mode == "monotone":
        Es = [rec.E for rec in records]
        mono = all(b <= a for a, b in zip(Es, Es[1:]))
        if not mono:
            notes.append("E is not monotonically non-increasing")
        ok = ok and mono
    return BlockCheck(block=block, rows=tuple(rows), ok=ok, notes=tuple(notes))


def _fmt(v, spec):
    return "-" if v is None else format(v, spec)


def _flag(v):
    return "" if v is None else ("ok" if v else "MISS")


def format_records(check: BlockCheck, header: str = "") -> str:
    out = []
    if header:
        out.append(header)
    out.append(f"{'n':>5}  {'E':>10}  {'E_ref':>10}  {'':>4}  {'EOC':>6}  {'EOC_ref':>7}  {'':>4}")
    for row in check.rows:
        out.append(
            f"{row.n:>5}  {_fmt(row.E, '.3e'):>10}  {_fmt(row.E_ref, '.3e'):>10}  {_flag(row.E_ok):>4}"
            f"  {_fmt(row.eoc, '.2f'):>6}  {_fmt(row.eoc_ref, '.2f'):>7}  {_flag(row.eoc_ok):>4}"
            + ("  (informational)" if row.informational else "")
        )
    out.extend(check.notes)
    out.append(f"block r={check.block.r:g} [{check.block.mode}]: {'PASS' if check.ok else 'FAIL'}")
    return "\n".join(out) + "\n"


def write_records_csv(path, records: Iterable[ErrorRecord], precision: int = 17) -> None:
    fmt = f"%.{precision}g"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "r", "alpha", "lambda", "h", "E", "eoc"])
        for rec in records:
            w.writerow([rec.n, fmt % rec.r, fmt % rec.alpha, fmt % rec.lam, fmt % rec.h, fmt % rec.E,
                        "" if rec.eoc is None else fmt % rec.eoc])
