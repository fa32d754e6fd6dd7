"""Command-line interface: ``run``, ``convergence`` and ``verify``.

Exit codes: 0 success, 1 configuration error, 2 admissibility failure during
a run, 3 failed verification property.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import parallel
from .config import RunConfig
from .errors import ConfigError, NoConvergence, NoExactSolution, NotAdmissible

logger = logging.getLogger("pcprmhd")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ADMISSIBILITY = 2
EXIT_VERIFY = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcprmhd", description="Positivity-preserving relativistic MHD solvers.")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configured experiment")
    run.add_argument("config", help="JSON configuration file")
    run.add_argument("--output-dir", help="override the configured output directory")

    conv = sub.add_parser("convergence", help="mesh-refinement study against the exact solution")
    conv.add_argument("config", help="JSON configuration file")
    conv.add_argument("--cells", type=int, nargs="+", help="mesh sizes (default from config)")
    conv.add_argument("--output-dir", help="override the configured output directory")

    ver = sub.add_parser("verify", help="run the admissible-set property suite")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--trials", type=int, default=10_000)
    ver.add_argument("--glf-trials", type=int, default=None,
                     help="trials per splitting variant (default trials/10)")
    ver.add_argument("--output", default="verify_report.jsonl", help="report path (JSON lines)")
    return parser


def _cmd_run(args) -> int:
    from .runner import run, write_outputs

    cfg = RunConfig.load(args.config)
    out = args.output_dir or cfg.output_dir
    try:
        result = run(cfg)
    except (NotAdmissible, NoConvergence) as exc:
        partial = getattr(exc, "partial", None)
        where = f"step {exc.step}" if getattr(exc, "step", None) is not None else "unknown step"
        cells = getattr(exc, "indices", None)
        first = None if cells is None or len(cells) == 0 else cells[0]
        logger.error("admissibility failure at %s, first cell %s: %s", where, first, exc)
        if partial is not None:
            write_outputs(partial, out)
        return EXIT_ADMISSIBILITY
    paths = write_outputs(result, out)
    logger.info("wrote %d file(s) to %s", len(paths), out)
    return EXIT_OK


def _cmd_convergence(args) -> int:
    from .runner import convergence_study

    cfg = RunConfig.load(args.config)
    try:
        table = convergence_study(cfg, args.cells)
    except NoExactSolution as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except (NotAdmissible, NoConvergence) as exc:
        logger.error("convergence run failed: %s", exc)
        return EXIT_ADMISSIBILITY
    path = table.write(Path(args.output_dir or cfg.output_dir) / f"convergence_{cfg.preset}_{cfg.scheme}.csv")
    for row in table.rows():
        print(",".join("" if v is None else f"{v:.6g}" if isinstance(v, float) else str(v) for v in row))
    logger.info("wrote %s", path)
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import report_json, run_suite

    if args.trials < 1:
        logger.error("--trials must be at least 1")
        return EXIT_CONFIG
    reports = run_suite(args.seed, args.trials, args.glf_trials)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report_json(reports), encoding="utf-8")
    failed = [r.name for r in reports if not r.passed]
    if failed:
        logger.error("failed properties: %s", ", ".join(failed))
        return EXIT_VERIFY
    logger.info("all %d properties passed; report in %s", len(reports), out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("numba").setLevel(logging.WARNING)
    parallel.configure_threads()
    handlers = {"run": _cmd_run, "convergence": _cmd_convergence, "verify": _cmd_verify}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
