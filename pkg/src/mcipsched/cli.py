"""Command line: generate, solve, validate, oracle, bench.

Exit codes: 0 ok, 1 schedule violation or rejected T, 2 usage or input error,
3 a search or enumeration cap was hit.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction

from . import driver, io, oracle, rng
from .errors import CapExceeded
from .model import MODELS, SPLITTABLE, makespan, validate
from .rational import fmt, parse_epsilon, rat

OK, VIOLATION, USAGE, CAP = 0, 1, 2, 3
BACKENDS = {"direct": "direct", "augment": "augment", "exact": "nfold-exact"}


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcipsched", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded random instance")
    g.add_argument("--model", choices=MODELS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--classes", type=int, default=None, help="setup classes (setup-class only)")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--grid", type=int, default=10, help="times are drawn from 1..grid")
    g.add_argument("--denominator", type=int, default=1, help="divide drawn times by this")
    g.add_argument("-o", "--out")

    s = sub.add_parser("solve", help="run the approximation scheme on an instance")
    s.add_argument("instance")
    s.add_argument("--model", choices=MODELS, help="must match the instance if given")
    s.add_argument("--epsilon", default="1/2")
    s.add_argument("--fixed-T", dest="fixed_T", help="probe this T only, no binary search")
    s.add_argument("--backend", choices=sorted(BACKENDS), default="direct")
    s.add_argument("--container-rounding", type=_on_off, default=False, metavar="on|off")
    s.add_argument("--simple-schedule", type=_on_off, default=True, metavar="on|off")
    s.add_argument("--oracle", action="store_true", help="add the exact optimum to the report")
    s.add_argument("-o", "--out", help="schedule file (default: stdout)")
    s.add_argument("--report", help="report file (default: stderr)")

    v = sub.add_parser("validate", help="check a schedule against an instance")
    v.add_argument("instance")
    v.add_argument("schedule")

    o = sub.add_parser("oracle", help="exact optimum (tiny instances) or a lower bound")
    o.add_argument("instance")
    o.add_argument("--cap", type=int, default=oracle.ORACLE_CAP)

    b = sub.add_parser("bench", help="solve a seed range and print a CSV ratio table")
    b.add_argument("--model", choices=MODELS, required=True)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--classes", type=int, default=None)
    b.add_argument("--seeds", default="1:10", help="inclusive range a:b")
    b.add_argument("--grid", type=int, default=10)
    b.add_argument("--epsilon", default="1/2")
    b.add_argument("--backend", choices=sorted(BACKENDS), default="direct")
    b.add_argument("-o", "--out")
    return parser


def _options(model: str, args) -> dict:
    opts = {"backend": BACKENDS[args.backend]}
    if model != "preemptive":
        opts["container_rounding"] = getattr(args, "container_rounding", False)
    if model == SPLITTABLE:
        opts["simple"] = getattr(args, "simple_schedule", True)
    return opts


def _stats(stats: dict) -> dict:
    return {k: fmt(v) if isinstance(v, Fraction) else v for k, v in stats.items()}


def cmd_generate(args) -> int:
    instance = rng.generate(args.model, args.n, args.m, args.seed, args.classes,
                            args.grid, args.denominator)
    text = io.dump(io.instance_to_json(instance), args.out)
    if args.out is None:
        sys.stdout.write(text)
    return OK


def cmd_solve(args) -> int:
    instance = io.instance_from_json(io.load(args.instance))
    if args.model and args.model != instance.model:
        raise ValueError(f"instance is {instance.model}, not {args.model}")
    eps = parse_epsilon(args.epsilon)
    opts = _options(instance.model, args)
    started = time.perf_counter()
    report = {"instance": io.digest(instance), "model": instance.model, "epsilon": fmt(eps)}
    if args.fixed_T is not None:
        T = rat(args.fixed_T)
        out = driver.probe(instance, T, eps, **opts) if instance.n else None
        if out is not None and not out.accepted:
            report.update({"accepted": False, "T": fmt(T), "stats": _stats(out.stats),
                           "seconds": round(time.perf_counter() - started, 4)})
            _emit_report(report, args.report)
            return VIOLATION
        schedule = out.schedule if out else driver.empty_schedule(instance)
        ms = makespan(instance, schedule)
        report.update({"accepted": True, "T": fmt(T), "makespan": fmt(ms),
                       "factor": fmt(out.transcript.factor) if out else None,
                       "stats": _stats(out.stats) if out else {}})
    else:
        res = driver.search(instance, eps, **opts)
        schedule = res.schedule
        report.update({"accepted": True, "T": fmt(res.T_star), "makespan": fmt(res.makespan),
                       "B": fmt(res.B), "b": res.b, "iterations": res.iterations,
                       "probes": [p.as_json() for p in res.probes],
                       "stats": _stats(res.stats)})
    report["seconds"] = round(time.perf_counter() - started, 4)
    report["lowerBound"] = fmt(oracle.lower_bound(instance))
    if args.oracle:
        best = oracle.exact(instance)
        report["oracle"] = {"kind": best.kind, "value": fmt(best.value)}
        if best.value:
            report["ratio"] = float(Fraction(rat(report["makespan"])) / best.value)
    text = io.dump(io.schedule_to_json(instance, schedule), args.out)
    if args.out is None:
        sys.stdout.write(text)
    _emit_report(report, args.report)
    return OK


def _emit_report(report: dict, path: str | None) -> None:
    if path is None:
        sys.stderr.write(json.dumps(report) + "\n")
    else:
        io.dump(report, path)


def cmd_validate(args) -> int:
    instance = io.instance_from_json(io.load(args.instance))
    schedule = io.schedule_from_json(io.load(args.schedule), instance)
    violation = validate(instance, schedule)
    if violation is None:
        print(json.dumps({"valid": True, "makespan": fmt(makespan(instance, schedule))}))
        return OK
    print(json.dumps({"valid": False, "kind": violation.kind, "message": violation.message,
                      "job": None if violation.job is None else violation.job + 1,
                      "machine": None if violation.machine is None else violation.machine + 1}))
    return VIOLATION


def cmd_oracle(args) -> int:
    instance = io.instance_from_json(io.load(args.instance))
    result = oracle.exact(instance, args.cap)
    out = {"kind": result.kind, "value": fmt(result.value)}
    if result.witness is not None:
        out["witness"] = io.schedule_to_json(instance, result.witness)
    print(json.dumps(out))
    return OK


def cmd_bench(args) -> int:
    eps = parse_epsilon(args.epsilon)
    lo, _, hi = args.seeds.partition(":")
    seeds = range(int(lo), int(hi or lo) + 1)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(["seed", "model", "n", "m", "T", "makespan", "oracle_kind", "oracle",
                         "ratio", "bound_ratio", "seconds"])
        for seed in seeds:
            instance = rng.generate(args.model, args.n, args.m, seed, args.classes, args.grid)
            started = time.perf_counter()
            res = driver.search(instance, eps, **_options(args.model, args))
            seconds = time.perf_counter() - started
            try:
                best = oracle.exact(instance)
            except CapExceeded:
                best = oracle.OracleResult("lower-bound", oracle.lower_bound(instance))
            ratio = res.makespan / best.value if best.value else Fraction(1)
            bound_ratio = res.makespan / res.T_star if res.T_star else Fraction(0)
            writer.writerow([seed, args.model, instance.n, instance.machines, fmt(res.T_star),
                             fmt(res.makespan), best.kind, fmt(best.value),
                             f"{float(ratio):.4f}", f"{float(bound_ratio):.4f}",
                             f"{seconds:.3f}"])
    finally:
        if args.out:
            fh.close()
    return OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "validate": cmd_validate,
            "oracle": cmd_oracle, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return CAP
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
