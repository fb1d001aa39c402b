"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 certification failure (a tail
quantity could not be certified for the requested profile).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .bounds import (
    DEFAULT_C,
    DEFAULT_C_PRIME,
    DEFAULT_EQUIV_PAIR,
    DEFAULT_SMALL_C,
    minimax_instance,
    tight_bound,
)
from .experiments import ConfigError, ExperimentConfig, PRESETS, run
from .oracle import exact_deviation
from .profiles import (
    CertificationError,
    functional_S,
    functional_T,
    profile_from_json,
)
from .sampler import DEFAULT_DELTA, deviation_mc


def _load_profile(text: str):
    if text.startswith("@"):
        with open(text[1:]) as f:
            return profile_from_json(json.load(f))
    return profile_from_json(text)


def _common_flags(sp):
    sp.add_argument("--seed", type=int, default=20240801, help="master seed")
    sp.add_argument("--reps", type=int, default=1000, help="Monte Carlo repetitions")
    sp.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="tail failure budget")
    sp.add_argument("--out", type=str, default=None, help="output CSV path")
    sp.add_argument("--config", type=str, default=None, help="JSON config file")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bernlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("functionals", help="evaluate the S and T functionals")
    p.add_argument("--profile", required=True, help="profile JSON (or @file)")
    p.add_argument("--tol", type=float, default=1e-12)
    _common_flags(p)

    p = sub.add_parser("oracle", help="exact expected supremum deviation")
    p.add_argument("--profile", required=True)
    p.add_argument("--n", type=int, required=True)
    _common_flags(p)

    p = sub.add_parser("simulate", help="Monte Carlo deviation of an estimator")
    p.add_argument("--profile", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--estimator", default="eme", choices=["eme", "truncated", "hybrid"])
    p.add_argument("--cols", type=int, default=None, help="explicit truncation width")
    p.add_argument("--kappa", type=float, default=1.0)
    _common_flags(p)

    p = sub.add_parser("bounds", help="two-regime deviation bracket")
    p.add_argument("--profile", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--c-low", type=float, default=DEFAULT_EQUIV_PAIR[0])
    p.add_argument("--c-high", type=float, default=DEFAULT_EQUIV_PAIR[1])
    _common_flags(p)

    p = sub.add_parser("minimax", help="hard-instance construction and lower bound")
    p.add_argument("--t", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--s", type=float)
    g.add_argument("--ratio", type=float, help="t/s")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--big-c", type=float, default=DEFAULT_C)
    p.add_argument("--small-c", type=float, default=DEFAULT_SMALL_C)
    p.add_argument("--c-prime", type=float, default=DEFAULT_C_PRIME)
    p.add_argument("--profiles", action="store_true", help="include the profile family")
    _common_flags(p)

    p = sub.add_parser("experiment", help="run a preset experiment")
    p.add_argument("preset", choices=PRESETS)
    p.add_argument("--workers", type=int, default=1)
    _common_flags(p)

    return ap


def _emit(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True, default=str)
    if out:
        with open(out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, ValueError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except CertificationError as e:
        print(f"certification failure: {e}", file=sys.stderr)
        return 3


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "functionals":
        prof = _load_profile(args.profile)
        s = functional_S(prof, args.tol)
        t = functional_T(prof, args.tol)
        _emit(
            {
                "profile": args.profile,
                "S": {"value": s.value, "attained_at": s.attained_at,
                      "truncation_index": s.truncation_index, "tolerance": s.tolerance},
                "T": {"value": t.value, "attained_at": t.attained_at,
                      "truncation_index": t.truncation_index, "tolerance": t.tolerance},
            },
            args.out,
        )
        return 0
    if cmd == "oracle":
        prof = _load_profile(args.profile)
        r = exact_deviation(prof, args.n)
        _emit({"value": r.value, "n": r.n, "J": r.J,
               "support_points": len(r.support_points)}, args.out)
        return 0
    if cmd == "simulate":
        prof = _load_profile(args.profile)
        d = deviation_mc(
            prof, args.estimator, args.n, args.reps, args.delta, args.seed,
            J=args.cols, kappa=args.kappa,
        )
        _emit(
            {
                "low": d.low, "high": d.high, "std_err": d.std_err,
                "reps": d.reps, "tail_bias": d.tail_bias, "n": d.n, "J": d.J,
                "tail_mode": d.tail_mode, "delta": d.delta, "seed": d.seed,
            },
            args.out,
        )
        return 0
    if cmd == "bounds":
        prof = _load_profile(args.profile)
        r = tight_bound(prof, args.n, (args.c_low, args.c_high))
        _emit(
            {
                "regime": r.regime, "value_low": r.value_low, "value_high": r.value_high,
                "expression": r.expression, "sqrt_term": _j(r.sqrt_term),
                "log_sup_term": _j(r.log_sup_term), "coordinate_sum": _j(r.coordinate_sum),
                "regime_stat": _j(r.regime_stat), "const_pair": list(r.const_pair),
            },
            args.out,
        )
        return 0
    if cmd == "minimax":
        s = args.s if args.s is not None else args.t / args.ratio
        inst = minimax_instance(
            s, args.t, args.n, args.big_c, args.small_c, args.c_prime,
            materialize_profiles=args.profiles,
        )
        d = inst.to_json()
        if not args.profiles:
            d.pop("profiles")
        _emit(d, args.out)
        return 0
    if cmd == "experiment":
        base = {}
        if args.config:
            with open(args.config) as f:
                base = json.load(f)
        base["preset"] = args.preset
        base.setdefault("seed", args.seed)
        base.setdefault("reps", args.reps)
        base.setdefault("delta", args.delta)
        base["workers"] = args.workers
        if args.out:
            base["out"] = args.out
        table = run(ExperimentConfig.from_json(base))
        if not args.out:
            sys.stdout.write(table.to_csv_bytes().decode())
        else:
            print(f"wrote {len(table.rows)} rows to {args.out}")
        return 0
    raise ConfigError(f"unknown command {cmd!r}")


def _j(x: float):
    if isinstance(x, float) and math.isnan(x):
        return None
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return x


if __name__ == "__main__":
    sys.exit(main())
