"""``zenclock`` command line.

Exit codes: 0 success, 1 verification failure, 2 usage or config error,
3 capacity error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from . import __version__, analysis, analytic, verify
from .errors import CapacityError, ConfigError
from .protocol import BroadcastChannel, ProtocolConfig, audit_channel, estimate_skew, run_protocol

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3

AMPLITUDE_COLUMNS = ["n", "k_opt", "a0_w", "a0_opt", "ratio"]
SWEEP_COLUMNS = ["n", "policy", "k", "a0", "skew", "p_analytic", "p_hat", "abs_err", "rmse"]
TALLY_COLUMNS = ["party", "alice", "bob_plus", "bob_minus"]
ESTIMATE_COLUMNS = [
    "party", "p_hat", "cos_hat", "estimated_abs_skew", "shots_used", "amplitude_used", "true_abs_skew",
]
VERIFY_COLUMNS = ["n", "k", "rho_max_dev", "prob_max_dev"]

log = logging.getLogger("zenclock")


class UsageError(Exception):
    pass


def render_table(rows: Sequence[dict[str, Any]], columns: Sequence[str], fmt: str) -> str:
    """CSV (floats at round-trip precision) or a JSON list of records."""
    if fmt == "json":
        return json.dumps([{c: r[c] for c in columns} for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    return path


def write_manifest(out: Path, subcommand: str, config: dict, seed: int | None, files: list[Path]) -> Path:
    digests = {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(files)}
    overall = hashlib.sha256("".join(f"{k}:{v}\n" for k, v in digests.items()).encode()).hexdigest()
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "version": __version__,
        "started": datetime.now(timezone.utc).isoformat(),
        "outputs": digests,
        "checksum": overall,
    }
    return _write(out, "manifest.json", json.dumps(manifest, indent=2) + "\n")


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"invalid JSON at line {e.lineno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be an object")
    return doc


def cmd_verify(args) -> int:
    if args.max_n < 2:
        raise UsageError("--max-n must be >= 2")
    report = verify.run_verification(args.max_n)
    rows = [
        {"n": c.n, "k": c.k, "rho_max_dev": c.rho_dev, "prob_max_dev": c.prob_dev} for c in report.cases
    ]
    text = render_table(rows, VERIFY_COLUMNS, args.format)
    if args.out:
        _write(Path(args.out), f"verify.{args.format}", text)
    else:
        sys.stdout.write(text)
    if not report.ok:
        print(f"FAIL: {report.failure}", file=sys.stderr)
        return EXIT_FAIL
    print(f"PASS: {len(report.cases)} (n, k) cases up to n={args.max_n} within {verify.TOL:g}", file=sys.stderr)
    return EXIT_OK


def cmd_amplitude(args) -> int:
    if not 2 <= args.n_min <= args.n_max:
        raise UsageError(f"need 2 <= n_min <= n_max, got {args.n_min} {args.n_max}")
    rows = [r.__dict__ for r in analysis.amplitude_table(args.n_min, args.n_max)]
    text = render_table(rows, AMPLITUDE_COLUMNS, args.format)
    if args.out:
        _write(Path(args.out), f"amplitude.{args.format}", text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_optimize(args) -> int:
    for n in args.n:
        if n < 2:
            raise UsageError("n must be >= 2")
    rows = [{"n": n, "k_opt": analytic.k_opt(n), "a0_opt": analytic.a0_opt(n)} for n in args.n]
    sys.stdout.write(render_table(rows, ["n", "k_opt", "a0_opt"], args.format))
    return EXIT_OK


def cmd_simulate(args) -> int:
    doc = _load_json(args.config)
    config = ProtocolConfig.from_dict(doc)
    config.check_estimable()
    channel = BroadcastChannel()
    tally = run_protocol(config, jobs=args.jobs, engine=args.engine, channel=channel)
    est = estimate_skew(tally, config.n, config.k, config.omega, use_minus_rounds=config.use_minus_rounds)
    est_rows = [dict(r, true_abs_skew=abs(s)) for r, s in zip(est.rows(), config.skews)]
    audit = audit_channel(channel.messages)
    out = Path(args.out)
    files = [
        _write(out, f"tally.{args.format}", render_table(tally.rows(), TALLY_COLUMNS, args.format)),
        _write(out, f"estimates.{args.format}", render_table(est_rows, ESTIMATE_COLUMNS, args.format)),
        _write(out, "audit.json", json.dumps(audit.to_dict(), indent=2) + "\n"),
    ]
    write_manifest(out, "simulate", dict(config.to_dict(), engine=args.engine), config.seed, files)
    for e in est.parties:
        log.info("party %d: |skew| ~ %.6g from %d rounds", e.party, e.estimated_abs_skew, e.shots_used)
    if not audit.ok:
        print(f"channel audit found {len(audit.violations)} violations", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = analysis.SweepSpec.from_dict(_load_json(args.config))
    rows = analysis.accuracy_sweep(spec, jobs=args.jobs)
    out = Path(args.out)
    files = [_write(out, f"sweep.{args.format}", render_table(analysis.flatten(rows), SWEEP_COLUMNS, args.format))]
    write_manifest(out, "sweep", spec.to_dict(), spec.seed, files)
    for r in rows:
        log.info("n=%d %s (k=%d): a0=%.6g rmse=%.6g", r.n, r.policy, r.k_used, r.a0, r.rmse)
    return EXIT_OK


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zenclock", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("csv", "json"), default="csv")
    fmt.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    s = sub.add_parser("verify", parents=[fmt], help="check closed forms against statevector brute force")
    s.add_argument("--max-n", type=int, default=8)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("amplitude", parents=[fmt], help="amplitude table, k=1 vs optimal k")
    s.add_argument("n_min", type=int)
    s.add_argument("n_max", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_amplitude)

    s = sub.add_parser("optimize", parents=[fmt], help="optimal k and its amplitude for given n")
    s.add_argument("n", type=int, nargs="+")
    s.set_defaults(func=cmd_optimize)

    for name, func, helptext in (
        ("simulate", cmd_simulate, "run the protocol from a JSON config"),
        ("sweep", cmd_sweep, "accuracy sweep from a JSON spec"),
    ):
        s = sub.add_parser(name, parents=[fmt], help=helptext)
        s.add_argument("--config", required=True)
        s.add_argument("--out", required=True)
        s.add_argument("--jobs", type=_positive, default=1)
        if name == "simulate":
            s.add_argument("--engine", choices=("sampled", "statevector"), default="sampled")
        s.set_defaults(func=func)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        parser.error(str(e))
    except CapacityError as e:
        print(f"capacity error: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConfigError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
