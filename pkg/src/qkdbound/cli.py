"""Command-line front end.

Commands:

    qkdbound bounds 0.04
    qkdbound bounds --curve tau1 --range 0.01:0.05:5
    qkdbound verify --mode shannon --grid 0.01,0.05,0.10,0.20
    qkdbound simulate session.json [--summary] [--transcript rounds.csv]

Exit codes: 0 success, 1 usage error, 2 verification failure,
3 runtime or config error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace

from . import bounds, optimizer, protocol
from .config import ConfigError, ExperimentConfig, describe_defaults, load_config

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_RUNTIME = 0, 1, 2, 3
VIOLATION_TOL = 1e-6

log = logging.getLogger("qkdbound")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    return f"{x:.12g}"


def parse_range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range must look like a:b:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"range must look like a:b:n, got {text!r}") from None
    if not (0.0 <= lo < hi <= 1.0) or n < 2:
        raise UsageError(f"range needs 0 <= a < b <= 1 and n >= 2, got {text!r}")
    return lo, hi, n


def parse_grid(text: str) -> list[float]:
    items = [t for t in (text or "").split(",") if t.strip()]
    if not items:
        raise UsageError("empty disturbance grid")
    try:
        grid = [float(t) for t in items]
    except ValueError:
        raise UsageError(f"grid must be comma-separated numbers, got {text!r}") from None
    if any(not 0.0 <= d <= 1.0 / 3.0 for d in grid):
        raise UsageError("grid values must lie within [0, 1/3]")
    return grid


def _config(args) -> ExperimentConfig:
    return load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()


def cmd_bounds(args, out) -> int:
    cfg = _config(args)
    if args.curve or args.range:
        names = args.curve or list(cfg.curve_names)
        for name in names:
            if name not in {c.value for c in bounds.Curve}:
                raise UsageError(f"unknown curve {name!r}")
        lo, hi, n = parse_range(args.range or cfg.curve_range)
        tables = [bounds.tabulate_curve(name, lo, hi, n) for name in names]
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["d_m", "value"] if len(names) == 1 else ["d_m", *names])
        for i, (d, _) in enumerate(tables[0]):
            w.writerow([fmt(d), *(fmt(t[i][1]) for t in tables)])
        return EXIT_OK
    if args.d_m is None:
        raise UsageError("give a disturbance value or --curve/--range")
    if not 0.0 <= args.d_m <= 1.0:
        raise UsageError(f"disturbance must lie in [0, 1], got {args.d_m}")
    report = bounds.bound_report(args.d_m).as_dict()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(list(report))
    w.writerow([fmt(v) for v in report.values()])
    return EXIT_OK


def cmd_verify(args, out) -> int:
    grid = parse_grid(args.grid)
    search = _config(args).search
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["d_target", "mode", "best_value", "bound_value", "slack", "eta", "phi", "theta"])
    results, infeasible = [], []
    run = (optimizer.max_information_at_disturbance if args.mode == "shannon"
           else optimizer.max_collision_at_disturbance)
    for d in grid:
        try:
            r = run(d, search)
        except optimizer.InfeasibleTarget as exc:
            infeasible.append(d)
            print(f"d_target={fmt(d)}: infeasible: {exc}", file=sys.stderr)
            continue
        results.append(r)
        p = r.best_params
        w.writerow([fmt(r.target_d), r.mode, fmt(r.best_value), fmt(r.bound_value), fmt(r.slack),
                    fmt(p["eta"]), fmt(p["phi"]), fmt(p["theta"])])
    violation = optimizer.max_violation(results)
    gap = optimizer.max_gap(results)
    print(f"mode={args.mode} points={len(results)} max_violation={violation:.3e} max_gap={gap:.3e}",
          file=sys.stderr)
    if args.mode == "collision":
        for r in results:
            print(f"d_target={fmt(r.target_d)} tau1_at_optimum={r.tau1:.6f}", file=sys.stderr)
    if violation > VIOLATION_TOL:
        print("bound violated", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_RUNTIME if infeasible else EXIT_OK


def _summary(result: protocol.SessionResult) -> str:
    rows = [
        ("status", result.status),
        ("signals", result.n_signals),
        ("detected", result.detected),
        ("sifted", result.sifted_length),
        ("sampled", result.sample_size),
        ("error rate", f"{result.measured_error_rate:.6f} +/- {result.error_rate_std:.6f}"),
        ("corrected", result.corrected_length),
        ("parity bits used", result.consumed_parity_bits),
        ("residual errors", result.residual_errors),
        ("tau1", f"{result.tau1_applied:.6f}"),
        ("security param", result.security_param),
        ("final key", result.final_key_length),
        ("keys agree", result.keys_agree),
    ]
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def cmd_simulate(args, out) -> int:
    cfg = load_config(args.config)
    if cfg.session is None:
        raise ConfigError("missing required section", "session")
    session_cfg = cfg.session
    if args.seed is not None:
        session_cfg = replace(session_cfg, seed=args.seed)
    result = protocol.run_session(session_cfg)
    if args.transcript:
        protocol.write_transcript(result, args.transcript)
    if result.status == protocol.INSECURE:
        log.warning("measured error rate %.4f >= 1/3: insecure channel, no key", result.measured_error_rate)
    if args.summary:
        print(_summary(result), file=out)
    else:
        print(result.to_json(), file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qkdbound", description="BB84 eavesdropping bounds, verification and simulation.",
                     epilog=describe_defaults(), formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bounds", help="evaluate or tabulate the closed-form bounds",
                       epilog=describe_defaults(), formatter_class=argparse.RawDescriptionHelpFormatter)
    b.add_argument("d_m", nargs="?", type=float, help="measured disturbance (error rate) in [0, 1]")
    b.add_argument("--curve", action="append", choices=[c.value for c in bounds.Curve],
                   help="curve to tabulate; repeat for several columns")
    b.add_argument("--range", help="grid 'a:b:n' for --curve (default from config, else 0:0.3:31)")
    b.add_argument("--config", help="JSON config file (curves section)")

    v = sub.add_parser("verify", help="check the bounds numerically over a disturbance grid",
                       epilog=describe_defaults(), formatter_class=argparse.RawDescriptionHelpFormatter)
    v.add_argument("--mode", choices=["shannon", "collision"], default="shannon")
    v.add_argument("--grid", required=True, help="comma-separated disturbances within [0, 1/3]")
    v.add_argument("--config", help="JSON config file (search section)")

    s = sub.add_parser("simulate", help="run one simulated BB84 session",
                       epilog=describe_defaults(), formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("config", help="JSON config file with a session section")
    s.add_argument("--seed", type=int, help="override session.seed")
    s.add_argument("--summary", action="store_true", help="print a readable table instead of JSON")
    s.add_argument("--transcript", help="also write a per-round CSV transcript to this path")
    return parser


COMMANDS = {"bounds": cmd_bounds, "verify": cmd_verify, "simulate": cmd_simulate}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"qkdbound {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ValueError, OSError) as exc:
        print(f"qkdbound {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
