"""INI-style run configuration.

Sections and keys (defaults in brackets)::

    [model]          alpha, lambda [0], v [1], D [1], L [1], T [1]
    [discretization] n [100], r [auto = (2-alpha)/alpha], K [100]
    [initial]        preset [zero] = zero | gaussian | expression
                     x_c [0.2 L], w, exponent (alternative to w) [2000], A [1]
                     expression (numpy expression in x and L)
    [forcing]        kind [zero] = zero | manufactured
    [output]         dir [out], precision [17]
    [converge]       table [tempered] = tempered | untempered | custom,
                     h [1e-4], n_list [5,10,20,40,80,160], r_list, rtol [0.10], eoc_atol [0.05]
    [current]        window_pre [0.05,0.30], window_post [0.60,0.95],
                     placement [end], scheme [backward]
    [fit]            data, fixed (name=value,...), n [100], r [3], K [100], T,
                     max_iter [500], restarts [0],
                     bounds_<name> (lo,hi), initial_<name>

Any key can be overridden through the environment as
``TTOF_<SECTION>__<KEY>=value`` (case-insensitive).
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .calibration import PARAM_NAMES, gaussian_packet, width_from_exponent
from .errors import ConfigParseError, ConfigValidationError, InvalidParameterError
from .fractional import TemperedParams
from .solver import ProblemSpec
from .verification import manufactured_forcing, optimal_grading

__all__ = ["RunConfig", "parse_config", "parse_config_string", "ENV_PREFIX"]

ENV_PREFIX = "TTOF_"

_KNOWN = {
    "model": {"alpha", "lambda", "v", "d", "l", "t"},
    "discretization": {"n", "r", "k"},
    "initial": {"preset", "x_c", "w", "exponent", "a", "expression"},
    "forcing": {"kind"},
    "output": {"dir", "precision"},
    "converge": {"table", "h", "n_list", "r_list", "rtol", "eoc_atol"},
    "current": {"window_pre", "window_post", "placement", "scheme"},
    "fit": {"data", "fixed", "n", "r", "k", "t", "max_iter", "restarts"}
    | {f"bounds_{p.lower()}" for p in PARAM_NAMES}
    | {f"initial_{p.lower()}" for p in PARAM_NAMES},
}

_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "pi", "where", "minimum", "maximum")
}


@dataclass(frozen=True)
class ModelBlock:
    alpha: float
    lam: float = 0.0
    v: float = 1.0
    D: float = 1.0
    L: float = 1.0
    T: float = 1.0


@dataclass(frozen=True)
class DiscretizationBlock:
    n: int = 100
    r: float = 1.0
    K: int = 100
    r_auto: bool = True


@dataclass(frozen=True)
class InitialBlock:
    preset: str = "zero"
    x_c: float = 0.2
    w: float = width_from_exponent(2e3)
    A: float = 1.0
    expression: str = ""


@dataclass(frozen=True)
class ConvergeBlock:
    table: str = "tempered"
    h: float = 1e-4
    n_list: tuple = (5, 10, 20, 40, 80, 160)
    r_list: tuple = ()
    rtol: float = 0.10
    eoc_atol: float = 0.05


@dataclass(frozen=True)
class CurrentBlock:
    window_pre: tuple = (0.05, 0.30)
    window_post: tuple = (0.60, 0.95)
    placement: str = "end"
    scheme: str = "backward"


@dataclass(frozen=True)
class FitBlock:
    data: str = ""
    fixed: Mapping[str, float] = field(default_factory=dict)
    n: int = 100
    r: float = 3.0
    K: int = 100
    T: Optional[float] = None
    max_iter: int = 500
    restarts: int = 0
    bounds: Mapping[str, tuple] = field(default_factory=dict)
    initial: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    model: ModelBlock
    discretization: DiscretizationBlock
    initial: InitialBlock
    forcing: str = "zero"
    output_dir: str = "out"
    precision: int = 17
    converge: ConvergeBlock = ConvergeBlock()
    current: CurrentBlock = CurrentBlock()
    fit: FitBlock = FitBlock()
    source: str = ""

    def initial_profile(self):
        ini = self.initial
        if ini.preset == "zero":
            return np.zeros_like
        if ini.preset == "gaussian":
            return gaussian_packet(ini.x_c, ini.w, ini.A)
        L = self.model.L
        code = compile(ini.expression, "<initial.expression>", "eval")

        def g(x):
            ns = dict(_EXPR_NAMESPACE, x=x, L=L)
            return np.broadcast_to(np.asarray(eval(code, {"__builtins__": {}}, ns), dtype=float), x.shape).copy()

        return g

    def forcing_function(self):
        if self.forcing == "zero":
            return None
        m = self.model
        return lambda x, t: manufactured_forcing(m.alpha, m.lam, m.v, m.D, x, t)

    def problem_spec(self) -> ProblemSpec:
        m = self.model
        return ProblemSpec(
            params=TemperedParams(m.alpha, m.lam),
            v=m.v, D=m.D, L=m.L, T=m.T,
            g=self.initial_profile(),
            f=self.forcing_function(),
        )

    def initial_point(self) -> dict:
        """Starting point for calibration: ``[fit] initial_*`` over model values."""
        m, ini = self.model, self.initial
        point = {"alpha": m.alpha, "lam": m.lam, "v": m.v, "D": m.D, "x_c": ini.x_c, "w": ini.w}
        point.update(self.fit.initial)
        return point


# ---------------------------------------------------------------------------


def _float(raw, key, lo=None, hi=None, lo_open=True, hi_open=True, desc=None):
    try:
        val = float(raw)
    except ValueError:
        raise ConfigValidationError(key, f"expected a number, got {raw!r}") from None
    if not math.isfinite(val):
        raise ConfigValidationError(key, f"must be finite, got {raw!r}")
    bad = (
        (lo is not None and (val <= lo if lo_open else val < lo))
        or (hi is not None and (val >= hi if hi_open else val > hi))
    )
    if bad:
        raise ConfigValidationError(key, f"{key.split('.')[-1]} must lie in {desc}")
    return val


def _int(raw, key, lo):
    try:
        val = int(raw)
    except ValueError:
        raise ConfigValidationError(key, f"expected an integer, got {raw!r}") from None
    if val < lo:
        raise ConfigValidationError(key, f"{key.split('.')[-1]} must be >= {lo}")
    return val


def _pair(raw, key):
    parts = [p for p in raw.replace(":", ",").split(",") if p.strip()]
    if len(parts) != 2:
        raise ConfigValidationError(key, f"expected 'lo,hi', got {raw!r}")
    a, b = (_float(p, key) for p in parts)
    if not a < b:
        raise ConfigValidationError(key, f"expected lo < hi, got {raw!r}")
    return a, b


def _choice(raw, key, options):
    val = raw.strip().lower()
    if val not in options:
        raise ConfigValidationError(key, f"must be one of {sorted(options)}, got {raw!r}")
    return val


def _read(text: str, source: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigParseError("key before any [section] header", exc.lineno) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigParseError(exc.message.split(": ", 1)[-1], exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigParseError(f"cannot parse {line.strip()!r}", lineno) from None
    return cp


def _apply_env(cp: configparser.ConfigParser, env: Mapping[str, str]) -> None:
    for name, value in env.items():
        if not name.upper().startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):]
        if "__" not in rest:
            continue
        section, key = rest.split("__", 1)
        section = section.lower()
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key.lower(), value)


def _build(cp: configparser.ConfigParser, source: str) -> RunConfig:
    for section in cp.sections():
        if section not in _KNOWN:
            raise ConfigValidationError(section, "unknown section")
        for key in cp[section]:
            if key not in _KNOWN[section]:
                raise ConfigValidationError(f"{section}.{key}", "unknown key")

    def get(section, key, default=None):
        if cp.has_option(section, key):
            return cp.get(section, key).strip()
        return default

    if get("model", "alpha") is None:
        raise ConfigValidationError("model.alpha", "required")
    alpha = _float(get("model", "alpha"), "model.alpha", 0.0, 1.0, desc="(0,1)")
    L = _float(get("model", "l", "1"), "model.L", 0.0, desc="(0,inf)")
    model = ModelBlock(
        alpha=alpha,
        lam=_float(get("model", "lambda", "0"), "model.lambda", 0.0, lo_open=False, desc="[0,inf)"),
        v=_float(get("model", "v", "1"), "model.v", 0.0, desc="(0,inf)"),
        D=_float(get("model", "d", "1"), "model.D", 0.0, desc="(0,inf)"),
        L=L,
        T=_float(get("model", "t", "1"), "model.T", 0.0, desc="(0,inf)"),
    )

    r_raw = get("discretization", "r", "auto")
    r_auto = r_raw.lower() == "auto"
    r = optimal_grading(alpha) if r_auto else _float(r_raw, "discretization.r", 1.0, lo_open=False, desc="[1,inf)")
    disc = DiscretizationBlock(
        n=_int(get("discretization", "n", "100"), "discretization.n", 1),
        r=r,
        K=_int(get("discretization", "k", "100"), "discretization.K", 2),
        r_auto=r_auto,
    )

    preset = _choice(get("initial", "preset", "zero"), "initial.preset", {"zero", "gaussian", "expression"})
    x_c = _float(get("initial", "x_c", str(0.2 * L)), "initial.x_c", 0.0, L, desc=f"(0,{L:g})")
    if get("initial", "w") is not None:
        w = _float(get("initial", "w"), "initial.w", 0.0, desc="(0,inf)")
    else:
        c = _float(get("initial", "exponent", "2000"), "initial.exponent", 0.0, desc="(0,inf)")
        w = width_from_exponent(c, L)
    expression = get("initial", "expression", "")
    if preset == "expression":
        if not expression:
            raise ConfigValidationError("initial.expression", "required when preset = expression")
        try:
            compile(expression, "<initial.expression>", "eval")
        except SyntaxError as exc:
            raise ConfigValidationError("initial.expression", f"syntax error: {exc.msg}") from None
    initial = InitialBlock(
        preset=preset, x_c=x_c, w=w,
        A=_float(get("initial", "a", "1"), "initial.A", 0.0, desc="(0,inf)"),
        expression=expression,
    )

    forcing = _choice(get("forcing", "kind", "zero"), "forcing.kind", {"zero", "manufactured"})

    table = _choice(get("converge", "table", "tempered"), "converge.table", {"tempered", "untempered", "custom"})
    n_list = tuple(_int(p, "converge.n_list", 1) for p in get("converge", "n_list", "5,10,20,40,80,160").split(","))
    r_list_raw = get("converge", "r_list", "")
    r_list = tuple(
        _float(p, "converge.r_list", 1.0, lo_open=False, desc="[1,inf)") for p in r_list_raw.split(",") if p.strip()
    )
    converge = ConvergeBlock(
        table=table,
        h=_float(get("converge", "h", "1e-4"), "converge.h", 0.0, desc="(0,inf)"),
        n_list=n_list,
        r_list=r_list,
        rtol=_float(get("converge", "rtol", "0.10"), "converge.rtol", 0.0, desc="(0,inf)"),
        eoc_atol=_float(get("converge", "eoc_atol", "0.05"), "converge.eoc_atol", 0.0, desc="(0,inf)"),
    )

    current = CurrentBlock(
        window_pre=_pair(get("current", "window_pre", "0.05,0.30"), "current.window_pre"),
        window_post=_pair(get("current", "window_post", "0.60,0.95"), "current.window_post"),
        placement=_choice(get("current", "placement", "end"), "current.placement", {"end", "logmid"}),
        scheme=_choice(get("current", "scheme", "backward"), "current.scheme", {"backward", "centered"}),
    )

    canon = {p.lower(): p for p in PARAM_NAMES}
    fixed = {}
    for item in filter(None, (s.strip() for s in get("fit", "fixed", "").split(","))):
        if "=" not in item:
            raise ConfigValidationError("fit.fixed", f"expected name=value, got {item!r}")
        name, val = (s.strip() for s in item.split("=", 1))
        if name.lower() not in canon:
            raise ConfigValidationError("fit.fixed", f"unknown parameter {name!r}")
        fixed[canon[name.lower()]] = _float(val, "fit.fixed")
    bounds = {}
    init = {}
    for low, name in canon.items():
        if get("fit", f"bounds_{low}") is not None:
            bounds[name] = _pair(get("fit", f"bounds_{low}"), f"fit.bounds_{low}")
        if get("fit", f"initial_{low}") is not None:
            init[name] = _float(get("fit", f"initial_{low}"), f"fit.initial_{low}")
    fit_T = get("fit", "t")
    fit = FitBlock(
        data=get("fit", "data", ""),
        fixed=fixed,
        n=_int(get("fit", "n", "100"), "fit.n", 2),
        r=_float(get("fit", "r", "3"), "fit.r", 1.0, lo_open=False, desc="[1,inf)"),
        K=_int(get("fit", "k", "100"), "fit.K", 2),
        T=None if fit_T is None else _float(fit_T, "fit.T", 0.0, desc="(0,inf)"),
        max_iter=_int(get("fit", "max_iter", "500"), "fit.max_iter", 1),
        restarts=_int(get("fit", "restarts", "0"), "fit.restarts", 0),
        bounds=bounds,
        initial=init,
    )

    return RunConfig(
        model=model,
        discretization=disc,
        initial=initial,
        forcing=forcing,
        output_dir=get("output", "dir", "out"),
        precision=_int(get("output", "precision", "17"), "output.precision", 1),
        converge=converge,
        current=current,
        fit=fit,
        source=source,
    )


def parse_config_string(text: str, source: str = "<string>", env: Optional[Mapping[str, str]] = None,
                        overrides: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Parse and validate configuration text.

    ``overrides`` maps ``"section.key"`` to raw values and wins over both the
    file and the environment.
    """
    cp = _read(text, source)
    _apply_env(cp, os.environ if env is None else env)
    for dotted, value in (overrides or {}).items():
        if "." not in dotted:
            raise ConfigValidationError(dotted, "override must look like section.key")
        section, key = dotted.split(".", 1)
        section = section.lower()
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key.lower(), str(value))
    try:
        return _build(cp, source)
    except InvalidParameterError as exc:
        raise ConfigValidationError("config", str(exc)) from None


def parse_config(path, env: Optional[Mapping[str, str]] = None,
                 overrides: Optional[Mapping[str, str]] = None) -> RunConfig:
    with open(path) as fh:
        text = fh.read()
    return parse_config_string(text, source=str(path), env=env, overrides=overrides)
