"""Command-line front end. Exit status: 0 success, 1 validation failure, 2 usage error."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .sweep import (
    DEFAULT_ALPHAS,
    DEFAULT_ETAS,
    DEFAULT_RS,
    METHODS,
    SweepGrid,
    parse_quad,
    parse_values,
    sweep,
    thresholds_report,
)
from .validate import run_validation

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

# built-in defaults per command; None in the parsed namespace means "not given"
DEFAULTS = {
    "entanglement": {"alpha": DEFAULT_ALPHAS, "r": DEFAULT_RS},
    "fidelity": {"alpha": DEFAULT_ALPHAS, "r": DEFAULT_RS, "eta": DEFAULT_ETAS},
    "success": {"alpha": DEFAULT_ALPHAS, "r": DEFAULT_RS, "eta": DEFAULT_ETAS},
    "thresholds": {"alpha": DEFAULT_ALPHAS, "eta": "1"},
    "validate": {"level": "fast"},
}
COMMON = {"quad": "32,64", "workers": "1", "method": "quadrature"}
CONFIG_KEYS = {"alpha", "r", "eta", "quad", "workers", "method", "out", "level"}


class UsageError(Exception):
    pass


def load_config(path: str) -> dict[str, str]:
    """Plain key=value lines; '#' starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecsepp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=True, eta=True, method=True):
        p.add_argument("--config", help="key=value file; command-line flags take precedence")
        p.add_argument("--out", help="write output here instead of stdout")
        if grid:
            p.add_argument("--alpha", help="start:stop:count or comma list")
            p.add_argument("--r", help="start:stop:count or comma list in [0, 1]")
        if eta:
            p.add_argument("--eta", help="start:stop:count or comma list in (0, 1]")
        if method:
            p.add_argument("--method", choices=METHODS, help="ECS evaluation path (default quadrature)")
            p.add_argument("--quad", help="N_polar,N_azimuth (default 32,64)")
        p.add_argument("--workers", help="worker processes (default 1)")

    common(sub.add_parser("entanglement", help="negativity vs r"), eta=False, method=False)
    common(sub.add_parser("fidelity", help="average teleportation fidelity"))
    common(sub.add_parser("success", help="teleportation success probability"))
    th = sub.add_parser("thresholds", help="r_ECS, r_c and r_EPP per alpha")
    th.add_argument("--config")
    th.add_argument("--out")
    th.add_argument("--alpha", help="start:stop:count or comma list")
    th.add_argument("--eta", help="single detection efficiency")
    th.add_argument("--workers")
    va = sub.add_parser("validate", help="run the acceptance checks")
    va.add_argument("--config")
    va.add_argument("--out")
    va.add_argument("--level", choices=("fast", "full"))
    return parser


def resolve(args: argparse.Namespace) -> dict[str, str]:
    """Merge flags over config over built-in defaults."""
    merged = dict(COMMON)
    merged.update(DEFAULTS[args.command])
    if getattr(args, "config", None):
        merged.update(load_config(args.config))
    for key, value in vars(args).items():
        if key not in ("command", "config") and value is not None:
            merged[key] = value
    return merged


def emit(text: str, out: str | None):
    if not out:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc.strerror}") from exc


def run(args: argparse.Namespace) -> int:
    opts = resolve(args)
    try:
        workers = int(opts["workers"])
    except ValueError as exc:
        raise UsageError(f"--workers must be an integer, got {opts['workers']!r}") from exc
    cmd = args.command
    if cmd == "validate":
        if opts["level"] not in ("fast", "full"):
            raise UsageError(f"--level must be fast or full, got {opts['level']!r}")
        report = run_validation(opts["level"])
        emit(report.to_text() + "\n", opts.get("out"))
        if opts.get("out"):
            sys.stdout.write(report.to_text() + "\n")
        return EXIT_OK if report.passed else EXIT_FAILED
    try:
        if cmd == "thresholds":
            alphas = parse_values(opts["alpha"])
            etas = parse_values(opts["eta"])
            if len(etas) != 1 or not 0 < etas[0] <= 1:
                raise ValueError("thresholds take a single eta in (0, 1]")
            if alphas[0] <= 0:
                raise ValueError("alpha values must be positive")
            text = thresholds_report(alphas, etas[0], workers)
        else:
            if opts["method"] not in METHODS:
                raise ValueError(f"--method must be one of {METHODS}")
            grid = SweepGrid.parse(opts["alpha"], opts["r"], opts.get("eta", "1"), parse_quad(opts["quad"]))
            text = sweep(cmd, grid, opts["method"], workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    emit(text, opts.get("out"))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return run(args)
    except UsageError as exc:
        print(f"ecsepp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
