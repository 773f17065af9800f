# file: aacord/cli.py
"""Command line: ``aacord <command> [system] [options]``.

Exit status is 0 when every certificate passes, 1 when one fails or a chart
cannot be built, 2 for usage and spec errors.
"""
import argparse
import asyncio
import os
import sys
from typing import Any, Dict, List, Optional

from tabulate import tabulate

from aacord.graph.workflow import STAGES, run_pipeline
from aacord.reports import write_csv, write_json, write_report
from aacord.systems.catalog import CATALOG, load_catalog
from aacord.utils.config import Config, ToleranceConfig
from aacord.utils.errors import AacordError, SpecError
from aacord.utils.logger import set_level, setup_logger

logger = setup_logger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _scalar_tolerances() -> List[str]:
    return [name for name, info in ToleranceConfig.model_fields.items() if info.annotation in (float, int)]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aacord",
        description="Construct and certify generalized action-angle coordinates of integrable systems.",
    )
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper,
                        help=f"log verbosity on stderr (default {Config.LOG_LEVEL})")
    sub = parser.add_subparsers(dest="command", required=True)

    for command in STAGES:
        cmd = sub.add_parser(command, help=f"run the {command} pipeline")
        cmd.add_argument("system", help="catalog name or path to a spec file")
        cmd.add_argument("--point", type=_float_list, help="phase point q1..qn,p1..pn (default: reference)")
        cmd.add_argument("--seed", type=int, default=Config.SEED, help=f"sampling seed (default {Config.SEED})")
        cmd.add_argument("--out", default=Config.OUT_DIR, help=f"artifact directory (default {Config.OUT_DIR})")
        cmd.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                         help="tolerance override, e.g. search.half_width=10")
        for name in _scalar_tolerances():
            flag = "--" + name.replace("_", "-")
            cmd.add_argument(flag, dest=f"override_{name}", type=float, default=None, help=argparse.SUPPRESS)
        if command in ("verify", "trace"):
            cmd.add_argument("--hamiltonian", help="Hamiltonian expression (default: the system's)")
            cmd.add_argument("--t-max", dest="t_max", type=float, help="trajectory length")
            cmd.add_argument("--dt", type=float, help="trajectory sampling step")
        if command == "verify":
            cmd.add_argument("--anchor-offset", action="store_true",
                             help="also compare against a chart anchored elsewhere on the reference fiber")

    sub.add_parser("catalog", help="list the built-in systems")
    serve = sub.add_parser("serve", help="serve the HTTP API")
    serve.add_argument("--host", default=Config.API_HOST)
    serve.add_argument("--port", type=int, default=Config.API_PORT)
    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise SpecError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            overrides[key.strip()] = int(value) if value.strip().lstrip("+-").isdigit() else float(value)
        except ValueError:
            raise SpecError(f"--set {key}: not a number: {value!r}") from None
    for name in _scalar_tolerances():
        value = getattr(args, f"override_{name}", None)
        if value is not None:
            overrides[name] = int(value) if ToleranceConfig.model_fields[name].annotation is int else value
    return overrides


def catalog_table() -> str:
    rows = []
    for name in CATALOG:
        system = load_catalog(name)
        rows.append([name, system.kind, system.n, system.k, system.m, system.description])
    return tabulate(rows, headers=["name", "kind", "n", "k", "m", "description"])


def run(args: argparse.Namespace) -> int:
    if args.command == "catalog":
        print(catalog_table())
        return EXIT_OK
    if args.command == "serve":
        import uvicorn
        uvicorn.run("aacord.main:app", host=args.host, port=args.port)
        return EXIT_OK

    final = asyncio.run(run_pipeline(
        args.command,
        args.system,
        seed=args.seed,
        point=args.point,
        overrides=collect_overrides(args),
        hamiltonian=getattr(args, "hamiltonian", None),
        t_max=getattr(args, "t_max", None),
        dt=getattr(args, "dt", None),
        anchor_offset=getattr(args, "anchor_offset", False),
        allow_files=True,
    ))
    report = final["report"]
    os.makedirs(args.out, exist_ok=True)
    write_report(report, os.path.join(args.out, "report.json"))
    if final.get("chart") is not None and args.command == "chart":
        write_json(final["chart"].to_dict(), os.path.join(args.out, "chart.json"))
        write_csv(final["sample_table"], os.path.join(args.out, "chart_samples.csv"))
    if final.get("trace") is not None:
        write_csv(final["trace"], os.path.join(args.out, "trace.csv"))
    sys.stdout.write(report.to_json())
    for check in report.failures():
        logger.error(f"certificate {check.name} failed [{check.anchor}]")
    return EXIT_OK if report.passed else EXIT_FAILED


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_level(args.log_level)
    try:
        return run(args)
    except SpecError as exc:
        logger.error(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AacordError as exc:
        logger.error(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
# end file
