"""Command-line entry point.

``sdymred run --suite NAME`` runs a verification suite and writes a JSON
report; ``dump`` and ``info`` convert and describe files in the shared field
format.

Exit codes: 0 all checks pass, 1 some check failed, 2 bad configuration or
input file, 3 internal error.
"""

import argparse
import json
import sys
import traceback
from pathlib import Path

from . import __version__
from .fieldio import load_field, read_metadata, save_field, to_csv
from .sdym import convention_header
from .suites import CORRUPTIONS, SUITES, SuiteSettings, run_suite

SCHEMA = "report_v1"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3
CONFIG_KEYS = ("suite", "grid", "seed", "paper_literal", "corrupt")


class ConfigError(Exception):
    pass


def parse_config(text):
    """Flat ``key = value`` text; ``tol.NAME = value`` sets a tolerance."""
    out, tol = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("tol."):
            tol[key[4:]] = _float(value, key)
        elif key in CONFIG_KEYS:
            out[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    out["tol"] = tol
    return out


def _float(value, what):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{what}: not a number: {value!r}") from None


def _bool(value):
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _settings(args):
    cfg = {"tol": {}}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cfg = parse_config(path.read_text())
    suite = args.suite or cfg.get("suite")
    if suite is None:
        raise ConfigError("no suite given (use --suite or 'suite = ...' in the config)")
    if suite not in SUITES + ("all",):
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES + ('all',))}")
    tol = dict(cfg["tol"])
    for item in args.tol or []:
        if "=" not in item:
            raise ConfigError(f"--tol expects KEY=VAL, got {item!r}")
        key, value = item.split("=", 1)
        tol[key.strip()] = _float(value, f"--tol {key}")
    grid = args.grid if args.grid is not None else cfg.get("grid")
    corrupt = set(cfg["corrupt"].split(",")) if cfg.get("corrupt") else set()
    corrupt |= set(args.corrupt or [])
    try:
        settings = SuiteSettings(
            grid=int(grid) if grid is not None else None,
            tol=tol,
            paper_literal=args.paper_literal or _bool(cfg.get("paper_literal", "false")),
            corrupt=frozenset(c.strip() for c in corrupt if c.strip()),
            seed=int(cfg.get("seed", 0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return suite, settings


def build_report(suite, settings, checks, wall_time):
    failing = [c.name for c in checks if not c.passed]
    return {
        "schema": SCHEMA,
        "version": __version__,
        "suite": suite,
        "conventions": convention_header(),
        "settings": {"grid": settings.grid, "seed": settings.seed,
                     "paper_literal": settings.paper_literal,
                     "corrupt": sorted(settings.corrupt),
                     "tolerance_overrides": dict(sorted(settings.tol.items()))},
        "checks": [c.to_dict() for c in checks],
        "pass": not failing,
        "failing": failing,
        "wall_time": wall_time,
    }


def validate_report(report):
    """Raise ValueError unless ``report`` follows the report_v1 layout."""
    if report.get("schema") != SCHEMA:
        raise ValueError("schema tag missing or wrong")
    for key in ("suite", "conventions", "checks", "pass", "failing", "wall_time"):
        if key not in report:
            raise ValueError(f"report lacks {key!r}")
    for chk in report["checks"]:
        if not chk.get("anchor"):
            raise ValueError(f"check {chk.get('name')!r} has no anchor")
        if chk["pass"] != (chk["linf"] <= chk["tolerance"]):
            raise ValueError(f"check {chk['name']!r} has an inconsistent pass flag")
    return True


def cmd_run(args):
    suite, settings = _settings(args)
    checks, wall = run_suite(suite, settings)
    report = build_report(suite, settings, checks, wall)
    validate_report(report)
    text = json.dumps(report, indent=2, sort_keys=True)
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"report_{suite}.json").write_text(text + "\n")
    if not args.quiet:
        print(text)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  linf={c.linf:.3e}  tol={c.tol:.1e}",
              file=sys.stderr)
    if report["failing"]:
        print("failing checks: " + ", ".join(report["failing"]), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _load(path):
    try:
        return load_field(path)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed field file {path}: {exc}") from None


def cmd_info(args):
    _load(args.field)
    print(json.dumps(read_metadata(args.field), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_dump(args):
    field = _load(args.field)
    out = Path(args.out)
    if args.format == "csv":
        to_csv(field, out)
    else:
        save_field(out, field)
    print(str(out))
    return EXIT_OK


def make_parser():
    p = argparse.ArgumentParser(prog="sdymred", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a verification suite")
    r.add_argument("--suite", choices=SUITES + ("all",))
    r.add_argument("--config", help="flat key = value config file")
    r.add_argument("--out", help="directory for report_<suite>.json")
    r.add_argument("--tol", action="append", metavar="KEY=VAL",
                   help="override the tolerance of one check (repeatable)")
    r.add_argument("--paper-literal", action="store_true",
                   help="use the literal readings of the flagged formulas")
    r.add_argument("--grid", type=int, metavar="N", help="override the base resolution")
    r.add_argument("--corrupt", action="append", choices=CORRUPTIONS,
                   help="perturb a fixture field by 10%% (non-vacuity check)")
    r.add_argument("--quiet", action="store_true", help="do not echo the report")
    r.set_defaults(func=cmd_run)

    i = sub.add_parser("info", help="print the metadata of a field file")
    i.add_argument("field")
    i.set_defaults(func=cmd_info)

    d = sub.add_parser("dump", help="re-emit a field file as CSV or binary")
    d.add_argument("field")
    d.add_argument("--format", choices=("csv", "binary"), default="csv")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_dump)
    return p


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL

