# coding=utf-8
# SPDX-License-Identifier: Apache-2.0
"""
Command line front end: evaluate, optimize, simulate and sweep reorder policies.
"""

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

from ..configuration import RunConfig
from ..core.kernels import residual_tau
from ..core.policy import argmax, argmin, scan
from ..core.profit import Evaluation, FormulaVariant, efficiency, term_profit
from ..errors import (
    ConfigParseError,
    ConfigValidationError,
    RegenInventoryError,
    TruncationError,
)
from ..simulation.simulator import WORKERS_ENV, SimulationReport, estimate, resolve_workers

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_TRUNCATION = 5

SWEEP_COLUMNS = ["r", "A", "B", "I", "income", "holding", "purchase", "deficit", "lost"]
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _row(e: Evaluation) -> List[str]:
    b = e.breakdown
    return [str(e.r)] + [_fmt(v) for v in (e.A, e.B, e.I, b.income, b.holding, b.purchase, b.deficit, b.lost_client)]


def _to_csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _to_json(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _evaluation_table(table: Sequence[Evaluation]) -> str:
    header = f"{'r':>5} {'A':>14} {'B':>12} {'I':>14} {'income':>12} {'holding':>12} {'purchase':>12} " \
             f"{'deficit':>12} {'lost':>12} {'s_cut':>6}"
    lines = [header, "-" * len(header)]
    for e in table:
        b = e.breakdown
        lines.append(
            f"{e.r:>5} {e.A:>14.6f} {e.B:>12.6f} {e.I:>14.6f} {b.income:>12.6f} {b.holding:>12.6f} "
            f"{b.purchase:>12.6f} {b.deficit:>12.6f} {b.lost_client:>12.6f} {e.s_truncated_at:>6}"
        )
        if e.flagged:
            lines.append(f"WARNING: r={e.r} truncated at the hard cap s={e.s_truncated_at} "
                         f"with tail bound {e.tail_bound:.3e}")
    return "\n".join(lines) + "\n"


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_json_file(args.config)
    if args.formula is not None:
        config = dataclasses.replace(config, formula=FormulaVariant.parse(args.formula))
    return config


def _checked_r(config: RunConfig, r: Optional[int]) -> Optional[int]:
    if r is None:
        return None
    try:
        return config.model.validate_r(r)
    except ValueError as e:
        raise ConfigValidationError([("--r", str(e))]) from None


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
        logger.info("Wrote %s", out)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _check_truncation(args: argparse.Namespace, table: Sequence[Evaluation]) -> None:
    flagged = [e.r for e in table if e.flagged]
    if flagged and args.fail_on_truncation:
        raise TruncationError(f"series truncation flagged for r in {flagged}")


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    r = _checked_r(config, args.r)
    if r is None:
        table = scan(config.model, config.costs, config.delay, config.tolerances, config.formula)
    else:
        table = [efficiency(config.model, config.costs, config.kernel_context(), r, config.formula)]

    if args.format == "json":
        text = _to_json({"formula": config.formula.value, "evaluations": [e.to_dict() for e in table]})
    elif args.format == "csv":
        header = SWEEP_COLUMNS + ["s_truncated_at", "tail_bound", "flagged"]
        rows = [_row(e) + [str(e.s_truncated_at), _fmt(e.tail_bound), str(e.flagged).lower()] for e in table]
        text = _to_csv(header, rows)
    else:
        text = _evaluation_table(table)
    _emit(text, args.out)
    _check_truncation(args, table)
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace) -> int:
    config = _load_config(args)
    table = scan(config.model, config.costs, config.delay, config.tolerances, config.formula)
    result = argmin(table) if args.minimize else argmax(table)

    if args.format == "json":
        text = _to_json(result.to_dict())
    elif args.format == "csv":
        text = _to_csv(SWEEP_COLUMNS + ["optimal"], [_row(e) + [str(e.r == result.r_star).lower()] for e in table])
    else:
        label = "worst" if args.minimize else "optimal"
        text = (f"{label} reorder level r* = {result.r_star}\n"
                f"I* = {result.I_star:.10g}\n"
                f"ties = {list(result.ties)}\n\n" + _evaluation_table(table))
    _emit(text, args.out)
    _check_truncation(args, table)
    return EXIT_OK


def _per_s_rows(config: RunConfig, report: SimulationReport) -> List[Dict[str, Any]]:
    ctx = config.kernel_context()
    rows = []
    for s, bucket in sorted(report.per_s.items()):
        analytic, _ = term_profit(config.model, config.costs, ctx, report.r, s, config.formula)
        rows.append({
            "s": s,
            **bucket.to_dict(),
            "analytic_profit": analytic,
            "analytic_residual": residual_tau(ctx.at(report.r), s),
        })
    return rows


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    r = _checked_r(config, args.r)
    cycles = args.cycles if args.cycles is not None else config.simulation.cycles
    seed = args.seed if args.seed is not None else config.simulation.seed
    if cycles < 2:
        raise ConfigValidationError([("--cycles", f"must be an integer >= 2 (got {cycles})")])
    if seed < 0:
        raise ConfigValidationError([("--seed", f"must be an integer >= 0 (got {seed})")])
    try:
        workers = resolve_workers(args.workers, default=config.simulation.workers)
    except ValueError as e:
        raise ConfigValidationError([(WORKERS_ENV if args.workers is None else "--workers", str(e))]) from None

    report = estimate(config.model, config.costs, config.delay, r, cycles, seed,
                      chunk_size=config.simulation.chunk_size, workers=workers, progress=not args.no_progress)
    analytic = efficiency(config.model, config.costs, config.kernel_context(), r, config.formula)
    z = (report.ratio.mean - analytic.I) / report.ratio.se if report.ratio.se > 0 else 0.0
    payload = {"report": report.to_dict(), "analytic": analytic.to_dict(), "z": z}
    if args.per_s:
        payload["per_s_audit"] = _per_s_rows(config, report)

    if args.format == "json":
        text = _to_json(payload)
    elif args.format == "csv":
        header = ["r", "cycles", "seed", "ratio", "ratio_se", "I", "z", "mean_profit", "mean_profit_se",
                  "mean_duration", "mean_duration_se", "low_sample"]
        rep = report
        text = _to_csv(header, [[str(r), str(rep.cycles), str(seed), _fmt(rep.ratio.mean), _fmt(rep.ratio.se),
                                 _fmt(analytic.I), _fmt(z), _fmt(rep.mean_profit.mean), _fmt(rep.mean_profit.se),
                                 _fmt(rep.mean_duration.mean), _fmt(rep.mean_duration.se),
                                 str(rep.low_sample).lower()]])
    else:
        rep = report
        lines = [
            f"r = {r}, cycles = {rep.cycles}, seed = {seed}",
            f"mean cycle profit   {rep.mean_profit.mean:.6f} +/- {rep.mean_profit.se:.6f}   (A = {analytic.A:.6f})",
            f"mean cycle length   {rep.mean_duration.mean:.6f} +/- {rep.mean_duration.se:.6f}   (B = {analytic.B:.6f})",
            f"profit per time     {rep.ratio.mean:.6f} +/- {rep.ratio.se:.6f}   (I = {analytic.I:.6f}, z = {z:+.3f})",
        ]
        if rep.low_sample:
            lines.append(f"WARNING: only {rep.cycles} cycles; standard errors are unreliable")
        if args.per_s:
            lines.append("")
            lines.append(f"{'s':>4} {'hits':>8} {'P(A_s)':>12} {'E[profit;A_s]':>15} {'+/-':>10} {'analytic':>12} "
                         f"{'E[resid;A_s]':>13} {'tau_s':>12}")
            for row in payload["per_s_audit"]:
                lines.append(f"{row['s']:>4} {row['hits']:>8} {row['prob']:>12.6f} {row['profit']:>15.6f} "
                             f"{row['profit_se']:>10.6f} {row['analytic_profit']:>12.6f} "
                             f"{row['residual']:>13.6f} {row['analytic_residual']:>12.6f}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    _check_truncation(args, [analytic])
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_config(args)
    table = scan(config.model, config.costs, config.delay, config.tolerances, config.formula)
    _emit(_to_csv(SWEEP_COLUMNS, [_row(e) for e in table]), args.out)
    _check_truncation(args, table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regen-inventory",
        description=(
            "Evaluate and optimize reorder levels of a regenerative inventory model with Poisson demand,\n"
            "random lead time, capped backlog and lost sales.\n\n"
            "Examples:\n"
            "  regen-inventory evaluate --config configs/grid.json\n"
            "  regen-inventory evaluate --config configs/grid.json --r 1 --format json\n"
            "  regen-inventory optimize --config configs/grid.json\n"
            "  regen-inventory simulate --config configs/grid.json --r 0 --cycles 100000 --seed 7 --per-s\n"
            "  regen-inventory sweep --config configs/grid.json --out sweep.csv\n"
        ),
        formatter_class=argparse.RawTextHelpFormatter,
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level.")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Log warnings and errors only.")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="Path to the JSON run configuration.")
    common.add_argument("--out", default=None, help="Write the output to this file instead of stdout.")
    common.add_argument(
        "--formula",
        default=None,
        choices=[v.value for v in FormulaVariant],
        help="Override the delay-time weighting of the profit terms (default: from config).",
    )
    common.add_argument(
        "--fail-on-truncation",
        action="store_true",
        help=f"Exit with status {EXIT_TRUNCATION} when any series truncation is flagged (default: warn only).",
    )

    formats = ["json", "csv", "table"]
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", parents=[common], help="A(r), B(r) and I_r for one or every reorder level.")
    p.add_argument("--r", type=int, default=None, help="Reorder level to evaluate (default: every level).")
    p.add_argument("--format", choices=formats, default="table", help="Output format (default: table).")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("optimize", parents=[common], help="Scan every reorder level and report r*.")
    p.add_argument("--format", choices=formats, default="table", help="Output format (default: table).")
    p.add_argument("--minimize", action="store_true", help="Report the worst level instead of the best.")
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate of I_r next to the analytic value.")
    p.add_argument("--r", type=int, required=True, help="Reorder level to simulate.")
    p.add_argument("--cycles", type=int, default=None, help="Regeneration periods (default: from config).")
    p.add_argument("--seed", type=int, default=None, help="Master seed (default: from config).")
    p.add_argument("--workers", type=int, default=None,
                   help=f"Worker processes (default: ${WORKERS_ENV}, else from config).")
    p.add_argument("--per-s", action="store_true", help="Add the per-s audit against the analytic terms.")
    p.add_argument("--no-progress", action="store_true", help="Disable the progress bar.")
    p.add_argument("--format", choices=formats, default="table", help="Output format (default: table).")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="CSV of A, B, I and the cost breakdown for every r.")
    p.add_argument("--format", choices=["csv"], default="csv", help="Output format (default: csv).")
    p.set_defaults(handler=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)

    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except ConfigParseError as e:
        logger.error("Cannot parse configuration: %s", e)
        return EXIT_PARSE
    except ConfigValidationError as e:
        logger.error("Invalid configuration:\n%s", e)
        return EXIT_VALIDATION
    except TruncationError as e:
        logger.error("%s", e)
        return EXIT_TRUNCATION
    except RegenInventoryError as e:
        logger.error("%s", e)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
