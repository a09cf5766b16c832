"""
Command-line entry point for CRB-minimizing transmit beamforming.
Parses the command, loads settings and dispatches to a handler.
"""

import argparse
import math
import sys
from typing import Any, Dict, List, Optional

from src.utils.config import (
    APP_NAME,
    APP_VERSION,
    EXIT_CHECK_FAILED,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    OUTPUT_FORMATS,
    SOLVERS,
)
from src.utils.errors import ConfigError, CrbLpmError, ResultWriteError

# CLI flags that map one-to-one onto settings keys
SETTING_FLAGS = [
    "n_tx", "n_rx", "n_blocks", "theta_deg", "noise_dbm", "power_dbm", "snr_db",
    "rho", "tol", "max_iters", "tolerance_mode", "penalty_scaling",
    "solver", "pgd_restarts", "trials", "seed", "format", "out", "workers",
]


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises ConfigError instead of exiting."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    """Build the parser with solve / sweep / check / version subcommands."""
    common = CliParser(add_help=False)
    common.add_argument("--config", help="Flat KEY=value settings file")
    common.add_argument("--n-tx", help="Transmit antennas (comma-separated list for sweeps)")
    common.add_argument("--n-rx", type=int)
    common.add_argument("--n-blocks", type=int)
    common.add_argument("--theta-deg", type=float)
    common.add_argument("--noise-dbm", type=float)
    power = common.add_mutually_exclusive_group()
    power.add_argument("--power-dbm", help="Transmit power in dBm (comma-separated list for sweeps)")
    power.add_argument("--snr-db", type=float, help="Radar SNR; sets P_t = SNR * sigma^2 / |beta|^2")
    common.add_argument("--rho", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iters", type=int)
    common.add_argument("--tolerance-mode", choices=["absolute", "relative"])
    common.add_argument("--penalty-scaling", choices=["absolute", "curvature"])
    common.add_argument("--solver", choices=SOLVERS)
    common.add_argument("--pgd-restarts", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--format", choices=OUTPUT_FORMATS)
    common.add_argument("--out")
    common.add_argument("--workers", type=int)
    common.add_argument("--quiet", action="store_true", help="Suppress progress lines")

    parser = CliParser(prog=APP_NAME, description="CRB-minimizing MIMO radar transmit beamforming")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", parents=[common], help="Solve one scenario")
    solve.add_argument("--debug", action="store_true", help="Keep iterates and print convergence ratios")
    commands.add_parser("sweep", parents=[common], help="Run an experiment sweep")
    check = commands.add_parser("check", parents=[common], help="Run the oracle check suite")
    check.add_argument("--only", help="Comma-separated subset of checks")
    commands.add_parser("version", help="Print the version")
    return parser


def collect_settings(args: argparse.Namespace) -> Dict[str, Any]:
    """Defaults < config file < CRB_LPM_* environment < CLI flags."""
    from src.utils.settings import load_settings, merge_settings

    settings = load_settings(args.config)
    flags = {name: getattr(args, name, None) for name in SETTING_FLAGS}
    return merge_settings(settings, flags)


def _print_solve(result: Dict[str, Any]):
    from src.utils.helpers import format_complex_vector, format_duration

    print(f"📡 n_tx={result['n_tx']}  P_t={result['power_dbm']:g} dBm  SNR={result['snr_db']:.1f} dB", flush=True)
    for entry in result["results"]:
        icon = "✅" if entry["status"] == "converged" else "⚠️"
        print(f"{icon} {entry['solver']}: {entry['status']} after {entry['iterations']} iterations"
              + (f" ({entry['message']})" if entry["message"] else ""), flush=True)
        print(f"  tr(F^-1) = {entry['crb_trace']:.6e}  (start {entry['initial_crb_trace']:.6e})", flush=True)
        print(f"  lambda   = {entry['lambda']:.6e}", flush=True)
        print(f"  ||p||^2  = {entry['power']:.6e} W ({entry['power_out_dbm']:.2f} dBm)", flush=True)
        print(f"  p        = {format_complex_vector(entry['weights'])}", flush=True)
        per_parameter = ", ".join(f"{k}={v:.3e}" for k, v in entry["per_parameter"].items())
        print(f"  CRB      : {per_parameter}", flush=True)
        print(f"  time     = {format_duration(entry['wall_time_ms'] / 1e3)}", flush=True)
        ratios = entry.get("convergence_ratios")
        if ratios:
            shown = ", ".join("-" if r is None else f"{r:.4f}" for r in ratios)
            print(f"  ratios   : {shown}", flush=True)


def _print_sweep(result: Dict[str, Any]):
    print(f"📊 {result['records']} records ({result['failed']} failed)", flush=True)
    for row in result["medians"]:
        print(f"  {row['solver']:>3}  n_tx={row['n_tx']:<4} P={row['power_dbm']:>6.2f} dBm"
              f"  median tr(F^-1)={row['crb_trace']:.6e}", flush=True)
    for row in result["slopes"]:
        print(f"  ⏱️ {row['solver']} P={row['power_dbm']:g} dBm: per-iteration time ~ N_t^{row['slope']:.2f}", flush=True)
    if result["out"]:
        print(f"💾 Wrote {result['format']} to {result['out']}", flush=True)


def _print_check(result: Dict[str, Any]):
    for row in result["results"]:
        icon = "✅" if row["passed"] else "❌"
        measured = "n/a" if math.isnan(row["measured"]) else f"{row['measured']:.3e}"
        print(f"{icon} {row['name']}: {measured} (threshold {row['threshold']:.0e}) {row['detail']}", flush=True)
    print("✅ All checks passed" if result["passed"] else "❌ Check suite failed", flush=True)


def main(argv: Optional[List[str]] = None) -> int:
    """Run one CLI command and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        print(f"❌ Usage error: {e}", file=sys.stderr, flush=True)
        return EXIT_USAGE

    if args.command == "version":
        print(f"{APP_NAME} {APP_VERSION}", flush=True)
        return EXIT_OK

    # Import handlers lazily so `version` and usage errors stay fast
    from handlers import handle_check, handle_solve, handle_sweep

    handlers = {
        "solve": (handle_solve, _print_solve),
        "sweep": (handle_sweep, _print_sweep),
        "check": (handle_check, _print_check),
    }
    handler, printer = handlers[args.command]

    options = {
        "quiet": args.quiet,
        "debug": getattr(args, "debug", False),
        "only": args.only.split(",") if getattr(args, "only", None) else None,
    }

    def progress_callback(progress: int, message: str):
        if not args.quiet:
            print(f"  ⏳ [{progress:3d}%] {message}", flush=True)

    try:
        settings = collect_settings(args)
        if not args.quiet:
            print(f"🚀 {APP_NAME} {args.command}", flush=True)
        result = handler(settings=settings, options=options, progress_callback=progress_callback)
    except (ConfigError, ResultWriteError) as e:
        print(f"❌ {e}", file=sys.stderr, flush=True)
        return EXIT_USAGE
    except CrbLpmError as e:
        print(f"❌ Numerical error: {e}", file=sys.stderr, flush=True)
        return EXIT_NUMERICAL
    except KeyboardInterrupt:
        print("\n👋 Interrupted", file=sys.stderr, flush=True)
        return EXIT_USAGE

    printer(result)

    if args.command == "check" and not result["passed"]:
        return EXIT_CHECK_FAILED
    if args.command == "solve" and not result["ok"]:
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
