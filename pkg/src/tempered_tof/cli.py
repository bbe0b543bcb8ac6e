"""Command-line entry point: ``tempered-tof {run,converge,current,fit} CONFIG``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .calibration import FitProblem, MeasuredTrace, fit, write_fit_csv
from .config import RunConfig, parse_config
from .errors import TemperedToFError
from .observables import auto_windows, fit_power_laws, transient_current, write_current_csv
from .solver import march, write_field_csv
from .verification import (
    REFERENCE_TABLES,
    ReferenceBlock,
    check_block,
    format_records,
    run_convergence_table,
    write_records_csv,
)

log = logging.getLogger("tempered_tof")


def _out_dir(cfg: RunConfig, args) -> Path:
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(cfg: RunConfig, args) -> int:
    d = cfg.discretization
    field = march(cfg.problem_spec(), d.n, d.r, d.K)
    path = _out_dir(cfg, args) / "field.csv"
    write_field_csv(path, field, precision=cfg.precision)
    print(f"wrote {path}  (n={d.n}, r={d.r:g}, K={d.K})")
    return 0


def cmd_converge(cfg: RunConfig, args) -> int:
    c = cfg.converge
    h = 1e-3 if args.fast else c.h
    if c.table == "custom":
        alpha, lam = cfg.model.alpha, cfg.model.lam
        r_list = c.r_list or (cfg.discretization.r,)
        blocks = [ReferenceBlock(r=r, n=(), E=(), eoc=(), mode="strict") for r in r_list]
    else:
        ref = REFERENCE_TABLES[c.table]
        alpha, lam = ref.alpha, ref.lam
        blocks = [b for b in ref.blocks if not c.r_list or b.r in c.r_list]
    out = _out_dir(cfg, args)
    all_records = []
    text = []
    ok = True
    for block in blocks:
        records = run_convergence_table(alpha, lam, block.r, h, c.n_list)
        all_records.extend(records)
        check = check_block(records, block, rtol=c.rtol, eoc_atol=c.eoc_atol)
        ok = ok and check.ok
        text.append(format_records(check, header=f"alpha={alpha:g} lambda={lam:g} r={block.r:g} h={h:g}"))
    report = "\n".join(text) + f"\noverall: {'PASS' if ok else 'FAIL'}\n"
    write_records_csv(out / "convergence.csv", all_records, precision=cfg.precision)
    (out / "convergence.txt").write_text(report)
    sys.stdout.write(report)
    return 0 if ok else 1


def cmd_current(cfg: RunConfig, args) -> int:
    d = cfg.discretization
    field = march(cfg.problem_spec(), d.n, d.r, d.K)
    trace = transient_current(field, placement=cfg.current.placement, scheme=cfg.current.scheme)
    out = _out_dir(cfg, args)
    write_current_csv(out / "current.csv", trace, precision=cfg.precision)
    pre, post = auto_windows(trace, cfg.current.window_pre, cfg.current.window_post)
    report = fit_power_laws(trace, pre, post).report()
    (out / "regimes.txt").write_text(report)
    sys.stdout.write(report)
    return 0


def cmd_fit(cfg: RunConfig, args) -> int:
    f = cfg.fit
    if args.data:
        data = Path(args.data)
    elif f.data:
        # a path in the config file is relative to that file
        data = Path(cfg.source).parent / f.data
    else:
        raise TemperedToFError("fit needs a data file ([fit] data or --data)")
    measured = MeasuredTrace.from_csv(data)
    problem = FitProblem(
        bounds=f.bounds,
        fixed=f.fixed,
        n=args.n or f.n,
        r=args.r or f.r,
        K=args.K or f.K,
        L=cfg.model.L,
        T=f.T,
        max_iter=f.max_iter,
        restarts=args.restarts if args.restarts is not None else f.restarts,
    )
    result = fit(problem, measured, cfg.initial_point())
    out = _out_dir(cfg, args)
    (out / "fit.txt").write_text(result.report())
    write_fit_csv(out / "fit.csv", measured, result, problem, precision=cfg.precision)
    sys.stdout.write(result.report())
    return 0


COMMANDS = {"run": cmd_run, "converge": cmd_converge, "current": cmd_current, "fit": cmd_fit}


def _parse_set(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise SystemExit(f"--set expects section.key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tempered-tof", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="INI configuration file")
        sp.add_argument("-o", "--out", help="output directory (overrides [output] dir)")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config key")
        return sp

    common(sub.add_parser("run", help="solve and write the field as x,t,u CSV"))
    conv = common(sub.add_parser("converge", help="manufactured-solution error tables"))
    conv.add_argument("--fast", action="store_true", help="use h=1e-3 instead of the configured h")
    common(sub.add_parser("current", help="solve, compute I/q and fit the two power-law regimes"))
    fp = common(sub.add_parser("fit", help="calibrate parameters against a measured t,I trace"))
    fp.add_argument("--data", help="measured trace CSV (overrides [fit] data)")
    fp.add_argument("--n", type=int, help="time steps per forward run")
    fp.add_argument("--r", type=float, help="grading exponent for forward runs")
    fp.add_argument("--K", type=int, help="space cells per forward run")
    fp.add_argument("--restarts", type=int, help="extra Nelder-Mead restarts from the best point")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config, overrides=_parse_set(args.set))
        return COMMANDS[args.command](cfg, args)
    except (TemperedToFError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
