"""Command-line front end.

Every command writes CSV (or JSON for ``optimize``) to stdout or ``--out``.
With ``--out`` a ``<out>.manifest.json`` sidecar records the normalized
arguments, seeds, version and time; ``age-metrics rerun <manifest>`` replays
it.  Numeric cells are finite floats or ``NA(reason)``.

Exit codes: 0 success, 1 runtime failure or failed verification, 2 bad
arguments.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

from . import __version__, analytic, optimizer, verify
from .core import ALL_SCENARIOS, ScenarioParams, ScenarioTag
from .simulator import (
    DEFAULT_BATCHES,
    DEFAULT_QUEUE_CAP,
    DEFAULT_WARMUP,
    METRICS,
    QueueOverflowError,
    SimConfig,
    replicate,
    replication_seed,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SIM_COLUMNS = [
    "scenario", "lambda1", "lambda2", "horizon", "seed",
    "mean_aoi", "ci_aoi", "mean_aoa", "ci_aoa", "mean_aoai", "ci_aoai",
    "actuation_rate", "nonstationary",
]


class UsageError(Exception):
    """Arguments parsed but describe an invalid run."""


@dataclass
class RunManifest:
    command: str
    argv: List[str]
    parameters: Dict[str, object]
    seeds: List[int] = field(default_factory=list)
    version: str = __version__
    timestamp: str = ""
    provenance: Dict[str, str] = field(default_factory=dict)

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, path: str) -> "RunManifest":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


PROVENANCE = {
    "analytic": "closed-form averages",
    "oracle": "truncated Markov chain, power iteration",
    "simulation": "slot simulation, Philox streams from SeedSequence, batch-means 95% CI",
}


# ---------------------------------------------------------------- parsing helpers


def _count(text: str) -> int:
    """Integer that may be written in scientific notation, e.g. ``1e7``."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value) or value != int(value):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def _rate(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"rate must lie in (0, 1), got {text}")
    return value


def _scenario(text: str) -> ScenarioTag:
    try:
        return ScenarioTag.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fix(text: str):
    name, sep, value = text.partition("=")
    if not sep or name not in ("l1", "l2"):
        raise argparse.ArgumentTypeError("expected l1=<value> or l2=<value>")
    return name, _rate(value)


def _grid(text: str):
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; expected start:stop:step") from None
    if len(nums) == 1:
        nums = [nums[0], nums[0], 1.0]
    if len(nums) != 3:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; expected start:stop:step")
    return tuple(nums)


def _num(value: Optional[float], reason: str) -> str:
    if value is None or not math.isfinite(value):
        return f"NA({reason})"
    return repr(float(value))


# ---------------------------------------------------------------- output


def _emit(args, text: str, manifest: RunManifest) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        manifest.timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        manifest.write(args.out + ".manifest.json")
    else:
        sys.stdout.write(text)


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    out.writerows(rows)
    return buf.getvalue()


def _manifest(args, argv, parameters, seeds=()) -> RunManifest:
    return RunManifest(
        command=args.command,
        argv=list(argv),
        parameters=parameters,
        seeds=list(seeds),
        provenance=PROVENANCE,
    )


# ---------------------------------------------------------------- commands


def cmd_simulate(args, argv) -> int:
    try:
        params = ScenarioParams(args.scenario, args.l1, args.l2)
        cfg = SimConfig(
            params,
            args.horizon,
            warmup=args.warmup,
            seed=args.seed,
            batches=args.batches,
            queue_cap=args.queue_cap,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    stats = replicate(cfg, args.reps)
    single = "single-batch" if args.reps == 1 else "single-replication"
    row = [
        params.scenario.value, repr(params.lambda1), repr(params.lambda2), cfg.horizon, cfg.seed,
    ]
    for m in METRICS:
        row += [_num(stats.mean(m), "no-data"), _num(stats.ci(m), single)]
    row += [repr(stats.actuation_rate), str(stats.nonstationary).lower()]
    seeds = [replication_seed(cfg.seed, r) for r in range(args.reps)]
    parameters = {
        "scenario": params.scenario.value, "lambda1": params.lambda1, "lambda2": params.lambda2,
        "horizon": cfg.horizon, "warmup": cfg.warmup, "batches": cfg.batches, "reps": args.reps,
        "queue_cap": cfg.queue_cap,
    }
    _emit(args, _csv(SIM_COLUMNS, [row]), _manifest(args, argv, parameters, seeds))
    if stats.nonstationary:
        print("note: unstable queue; averages describe a growing backlog", file=sys.stderr)
    return EXIT_OK


VERIFY_COLUMNS = [
    "scenario", "metric", "lambda1", "lambda2", "analytic", "oracle", "oracle_bound",
    "simulated", "ci", "rel_err", "pass",
]


def cmd_verify(args, argv) -> int:
    if args.patterns:
        return _verify_patterns(args, argv)
    tol = verify.Tolerances(
        oracle_slack=args.oracle_tol if args.tol is None else args.tol,
        rel_tol=args.rel_tol if args.tol is None else args.tol,
        ci_scale=args.ci_scale,
    )
    start, stop, step = args.grid
    if step <= 0 or stop < start:
        raise UsageError("grid needs step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    grid = [round(start + k * step, 12) for k in range(n)]
    if grid[0] <= 0 or grid[-1] >= 1:
        raise UsageError("grid must lie inside the open interval (0, 1)")
    horizon = None if args.no_sim else args.horizon
    rows = verify.triangle(
        scenarios=args.scenario or ALL_SCENARIOS,
        metrics=args.metric or METRICS,
        grid=grid,
        horizon=horizon,
        warmup=args.warmup,
        seed=args.seed,
        tol=tol,
    )
    table = []
    for r in rows:
        table.append([
            r.scenario.value, r.metric, repr(r.lambda1), repr(r.lambda2), repr(r.analytic),
            _num(r.oracle, "no-stationary-chain"), _num(r.oracle_bound, "no-stationary-chain"),
            _num(r.simulated, "not-simulated"), _num(r.ci, "not-simulated"),
            _num(r.rel_err, "not-simulated"), "PASS" if r.passed else "FAIL",
        ])
    parameters = {
        "grid": grid, "horizon": horizon, "warmup": args.warmup,
        "tolerances": asdict(tol),
    }
    _emit(args, _csv(VERIFY_COLUMNS, table), _manifest(args, argv, parameters, [args.seed]))
    failed = sum(not r.passed for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} comparisons passed", file=sys.stderr)
    return EXIT_OK if failed == 0 else EXIT_FAIL


def _verify_patterns(args, argv) -> int:
    if args.l1 is None or args.l2 is None:
        raise UsageError("--patterns needs --l1 and --l2")
    if args.l1 >= args.l2:
        raise UsageError("queue patterns need lambda1 < lambda2")
    if not 1 <= args.hmax <= 16:
        raise UsageError("--hmax must lie in [1, 16]")
    rep = verify.pattern_check(args.l1, args.l2, args.hmax)
    limits = {"spread": 1e-9, "state_err": 1e-7, "level_err": 1e-12, "queue_err": 1e-8, "empty_err": 1e-8}
    rows = []
    for key, limit in limits.items():
        value = float(getattr(rep, key))
        rows.append([key, repr(value), repr(limit), "PASS" if value < limit else "FAIL"])
    parameters = {"lambda1": args.l1, "lambda2": args.l2, "h_max": args.hmax, "patterns": rep.n_patterns}
    _emit(args, _csv(["check", "value", "limit", "pass"], rows), _manifest(args, argv, parameters))
    return EXIT_OK if rep.passed() else EXIT_FAIL


def _sweep_spec(args) -> optimizer.SweepSpec:
    try:
        return optimizer.SweepSpec(
            args.scenario, args.metric, args.fix, args.grid,
            evaluator=args.evaluator, horizon=args.horizon, warmup=args.warmup, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_sweep(args, argv) -> int:
    spec = _sweep_spec(args)
    curve = optimizer.sweep(spec)
    free = "lambda1" if spec.free == "l1" else "lambda2"
    rows = []
    for p in curve:
        reason = "evaluation-failed" if p.error else "no-value"
        ci_reason = "evaluation-failed" if p.error else "exact"
        rows.append([repr(p.parameter), _num(p.value, reason), _num(p.ci, ci_reason), p.error or ""])
    parameters = {
        "scenario": spec.scenario.value, "metric": spec.metric, "fixed": list(spec.fixed),
        "grid": list(spec.grid), "evaluator": spec.evaluator,
    }
    if spec.evaluator == "simulation":
        parameters.update(horizon=spec.horizon, warmup=spec.warmup)
    seeds = [spec.seed] if spec.evaluator == "simulation" else []
    _emit(args, _csv([free, f"mean_{spec.metric}", "ci", "error"], rows), _manifest(args, argv, parameters, seeds))
    return EXIT_OK if all(p.ok for p in curve) else EXIT_FAIL


def cmd_optimize(args, argv) -> int:
    which, l2 = args.fix
    if which != "l2":
        raise UsageError("optimize searches over lambda1; fix l2=<value>")
    if args.tol <= 0 or args.grid_step <= 0:
        raise UsageError("--tol and --grid-step must be positive")
    try:
        rep = optimizer.minimize_lambda1(args.scenario, args.metric, l2, args.tol, args.grid_step)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    nonmono, _ = optimizer.detect_nonmonotonicity(rep.curve)
    payload = {
        "scenario": args.scenario.value, "metric": args.metric, "lambda2": l2,
        **rep.as_dict(), "nonmonotone": nonmono,
    }
    if args.curve:
        rows = [[repr(x), repr(v)] for x, v in rep.curve]
        with open(args.curve, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_csv(["lambda1", f"mean_{args.metric}"], rows))
    parameters = {"scenario": args.scenario.value, "metric": args.metric, "lambda2": l2,
                  "tol": args.tol, "grid_step": args.grid_step}
    _emit(args, json.dumps(payload, indent=2, sort_keys=True) + "\n", _manifest(args, argv, parameters))
    return EXIT_OK


def cmd_rerun(args, argv) -> int:
    try:
        manifest = RunManifest.read(args.manifest)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"cannot read manifest: {exc}") from None
    replay = list(manifest.argv)
    if "--out" in replay:
        i = replay.index("--out")
        del replay[i:i + 2]
    if args.out:
        replay += ["--out", args.out]
    return main(replay)


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="age-metrics", description="AoI / AoA / AoAI simulation and verification")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common_sim(sp, horizon_default):
        sp.add_argument("--horizon", type=_count, default=horizon_default)
        sp.add_argument("--warmup", type=_count, default=DEFAULT_WARMUP)
        sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("simulate", help="run the slot simulation")
    s.add_argument("--scenario", type=_scenario, required=True, metavar="{" + ",".join(t.value for t in ALL_SCENARIOS) + "}")
    s.add_argument("--l1", type=_rate, required=True)
    s.add_argument("--l2", type=_rate, required=True)
    common_sim(s, 10**6)
    s.add_argument("--batches", type=int, default=DEFAULT_BATCHES)
    s.add_argument("--reps", type=int, default=1)
    s.add_argument("--queue-cap", type=_count, default=DEFAULT_QUEUE_CAP)
    s.add_argument("--out")

    v = sub.add_parser("verify", help="closed form vs truncated chain vs simulation")
    v.add_argument("--scenario", type=_scenario, action="append")
    v.add_argument("--metric", choices=METRICS, action="append")
    v.add_argument("--grid", type=_grid, default=(0.1, 0.9, 0.2))
    common_sim(v, 10**7)
    v.add_argument("--no-sim", action="store_true", help="skip simulation, compare oracle only")
    v.add_argument("--tol", type=float, help="set both the oracle slack and the relative tolerance")
    v.add_argument("--oracle-tol", type=float, default=1e-6)
    v.add_argument("--rel-tol", type=float, default=0.01)
    v.add_argument("--ci-scale", type=float, default=1.0)
    v.add_argument("--patterns", action="store_true", help="check queue-pattern probabilities instead")
    v.add_argument("--l1", type=_rate)
    v.add_argument("--l2", type=_rate)
    v.add_argument("--hmax", type=int, default=8)
    v.add_argument("--out")

    for name, helptext in (("sweep", "evaluate a metric along a grid"), ("optimize", "minimize over lambda1")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--scenario", type=_scenario, required=True)
        sp.add_argument("--metric", choices=METRICS, required=True)
        sp.add_argument("--fix", type=_fix, required=True)
        sp.add_argument("--out")
        if name == "sweep":
            sp.add_argument("--grid", type=_grid, required=True)
            sp.add_argument("--evaluator", choices=optimizer.EVALUATORS, default="analytic")
            common_sim(sp, 10**6)
        else:
            sp.add_argument("--tol", type=float, default=1e-6)
            sp.add_argument("--grid-step", type=float, default=1e-2)
            sp.add_argument("--curve", help="also write the scanned grid as CSV")

    r = sub.add_parser("rerun", help="replay the command recorded in a manifest")
    r.add_argument("manifest")
    r.add_argument("--out")
    return p


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "rerun": cmd_rerun,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(f"age-metrics {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QueueOverflowError, analytic.UnstableQueueError, ArithmeticError, RuntimeError,
            MemoryError, OSError, ValueError) as exc:
        print(f"age-metrics {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
