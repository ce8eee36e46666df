"""Command-line entry point: ``patholab <command> [options]``."""

from __future__ import annotations

import argparse
import sys

from patholab import checks
from patholab.errors import PathoLabError
from patholab.report import RunConfig, emit_report, exit_code

COMMANDS = ("families", "verify-identity", "weak-form", "norms", "asymptotics", "nonunique", "full-suite")
FAMILIES = ("power", "w11", "lipschitz-log", "bmo-logsq")


def _float_list(text: str) -> tuple:
    try:
        vals = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _r0(text: str) -> str:
    if text == "auto":
        return text
    try:
        float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"r0 must be 'auto' or a number, got {text!r}") from None
    return text


def _functional(text: str) -> str:
    try:
        checks.parse_functional(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patholab", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--family", choices=FAMILIES)
    parser.add_argument("--n", type=int, default=2)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--a", type=float)
    parser.add_argument("--r0", type=_r0, default="auto")
    parser.add_argument("--margin", type=float, default=0.5)
    parser.add_argument("--samples", type=int, default=1000)
    parser.add_argument("-J", type=int, default=48, dest="J")
    parser.add_argument("--p-grid", type=_float_list, default=RunConfig.p_grid)
    parser.add_argument("--c-grid", type=_float_list, default=RunConfig.c_grid)
    parser.add_argument("--rho-min", type=float, default=2.0**-20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="patholab-out")
    parser.add_argument("--strict", action="store_true", help="treat INCONCLUSIVE rows as failures")
    parser.add_argument("--functional", type=_functional, help="norms only: lp:P, llogl, exp:C or hess:P")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=ns.command,
        family=ns.family,
        n=ns.n,
        beta=ns.beta,
        a=ns.a,
        r0=ns.r0,
        margin=ns.margin,
        samples=ns.samples,
        J=ns.J,
        p_grid=tuple(ns.p_grid),
        c_grid=tuple(ns.c_grid),
        rho_min=ns.rho_min,
        seed=ns.seed,
        out=ns.out,
        strict=ns.strict,
        functional=ns.functional,
    )


def validate(cfg: RunConfig) -> None:
    if cfg.n < 2:
        raise ValueError("--n must be at least 2")
    if cfg.samples < 10:
        raise ValueError("--samples must be at least 10")
    if cfg.J < 40:
        raise ValueError("-J must be at least 40")
    if not 0 < cfg.rho_min <= 2.0**-5:
        raise ValueError("--rho-min must lie in (0, 2^-5]")
    if not 0 < cfg.margin < 1:
        raise ValueError("--margin must lie in (0, 1)")
    if cfg.functional and cfg.command != "norms":
        raise ValueError("--functional applies to the norms command only")


def run(cfg: RunConfig):
    """Run one command and write its artifacts; returns the check rows."""
    section, params = checks.run_command(cfg)
    emit_report(cfg, section.checks, cfg.out, section.tables, section.plotdata, params)
    return section.checks


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = config_from_args(ns)
    try:
        validate(cfg)
        rows = run(cfg)
    except (PathoLabError, ValueError, OSError) as exc:
        print(f"patholab: error: {exc}", file=sys.stderr)
        return 2
    for row in rows:
        print(f"{row.status:<12} {row.name}")
    print(f"wrote {cfg.out}/report.json")
    return exit_code(rows, cfg.strict)


if __name__ == "__main__":
    sys.exit(main())
