"""Command line entry point.  Exit codes: 0 success, 1 criterion failure,
2 usage error."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import ages, coupling, dla2d, harness, lattice1d, surgery

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latticegrow")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("sim1d", help="one-dimensional add/delete model")
    s.add_argument("--K", type=int, default=2)
    s.add_argument("--periods", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--backend", choices=("fast", "python", "faithful"), default="fast")
    s.add_argument("--labeling", choices=("none", "full"), default="none")
    s.add_argument("--steps-out", help="JSONL per-step log (python backends)")
    s.add_argument("--out", help="trace CSV")

    s = sub.add_parser("ages", help="oldest-particle ages for K=2")
    s.add_argument("--n", type=int, default=400)
    s.add_argument("--reps", type=int, default=20000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="directory")

    s = sub.add_parser("dla", help="diffusion limited aggregation")
    s.add_argument("--steps", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--entry", choices=("far-circle", "uniform"), default="far-circle")
    s.add_argument("--snapshot", type=int, default=100)
    s.add_argument("--L", type=int, default=1)
    s.add_argument("--out", help="directory")

    for name, hlp in (("patches", "patch decomposition of a cluster"),
                      ("phi", "sampled hole-forcing surgery")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("--n", type=int, default=500, help="grow a DLA cluster of this size")
        s.add_argument("--cluster", help="cluster JSON (overrides --n)")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--out", help="directory")
        if name == "phi":
            s.add_argument("--samples", type=int, default=5)

    s = sub.add_parser("rwtest", help="random-walk overshoot estimate")
    s.add_argument("--N", type=float, default=1000)
    s.add_argument("--K", type=int, default=2)
    s.add_argument("--eta", type=float, default=0.5)
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--eps", type=float, default=0.5)
    s.add_argument("--trials", type=int, default=10 ** 6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="directory")

    s = sub.add_parser("couple", help="uniformity of a derived coupling stream")
    s.add_argument("--policy", default="alternate")
    s.add_argument("--n", type=int, default=10 ** 6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="directory")

    s = sub.add_parser("accept", help="acceptance criteria")
    s.add_argument("--suite", default="all",
                   help="exact, fast, all, or a comma list such as A1,A3")
    s.add_argument("--out", help="directory for per-criterion JSON")
    return p


def _check(cond, msg):
    if not cond:
        raise UsageError(msg)


def _config(args) -> harness.ExperimentConfig:
    c = args.cmd
    if c == "sim1d":
        _check(args.K >= 2, "--K must be at least 2")
        _check(args.periods >= 1, "--periods must be positive")
        params = {"K": args.K, "periods": args.periods, "backend": args.backend,
                  "labeling": args.labeling, "logSteps": bool(args.steps_out)}
        _check(not (args.steps_out and args.backend == "fast"),
               "--steps-out needs the python or faithful backend")
    elif c == "ages":
        _check(args.n >= 1 and args.reps >= 1, "--n and --reps must be positive")
        params = {"n": args.n, "reps": args.reps}
    elif c == "dla":
        _check(args.steps >= 1 and args.snapshot >= 1 and args.L >= 1,
               "--steps, --snapshot and --L must be positive")
        return harness.ExperimentConfig("dla", {"steps": args.steps, "L": args.L}, args.seed,
                                        args.entry, args.out, args.snapshot)
    elif c in ("patches", "phi"):
        params = {"n": args.n}
        if args.cluster:
            params["cluster"] = json.loads(Path(args.cluster).read_text())["points"]
        if c == "phi":
            _check(args.samples >= 1, "--samples must be positive")
            params["samples"] = args.samples
    elif c == "rwtest":
        _check(args.K >= 2 and args.trials >= 1 and args.N > 1, "need K >= 2, trials >= 1, N > 1")
        params = {"N": args.N, "K": args.K, "eta": args.eta, "c": args.c, "eps": args.eps,
                  "trials": args.trials}
    else:
        params = {"policy": args.policy, "n": args.n}
        _check(args.n >= 1000, "--n must be at least 1000")
    out = None if c == "sim1d" else args.out
    return harness.ExperimentConfig(c, params, args.seed, out=out)


def _accept(args) -> int:
    s = args.suite
    ids = harness.SUITES.get(s) or tuple(x.strip().upper() for x in s.split(","))
    bad = [x for x in ids if x not in harness.DRIVERS]
    _check(not bad, f"unknown criteria {bad}")
    failed = False
    for c in harness.run_acceptance(ids, args.out):
        print(c.line(), flush=True)
        failed |= not c.passed and not c.soft
    return EXIT_FAIL if failed else EXIT_OK


def main(argv=None) -> int:
    p = _parser()
    try:
        args = p.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        if args.cmd == "accept":
            return _accept(args)
        cfg = _config(args)
        if args.cmd == "sim1d" and args.out:
            # direct file outputs for the one-dimensional model
            tr = lattice1d.run_model(args.K, args.periods, seed=args.seed, backend=args.backend,
                                     labeling=args.labeling, log_steps=bool(args.steps_out))
            harness.write_trace(args.out, tr)
            if args.steps_out:
                lattice1d.write_steps(args.steps_out, tr.steps)
            print(args.out)
            return EXIT_OK
        rec = harness.run_experiment(cfg)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (lattice1d.DomainError, ages.DomainError, dla2d.DomainError, surgery.DomainError,
            coupling.ParameterError, harness.ConfigError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if rec.error:
        print(rec.error, file=sys.stderr)
        return EXIT_FAIL
    for a in rec.artifacts:
        print(a)
    if rec.flags:
        print(json.dumps(rec.flags, sort_keys=True))
    return EXIT_OK if all(rec.flags.values()) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
