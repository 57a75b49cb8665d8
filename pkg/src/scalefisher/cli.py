"""Command-line front end: fisher, estimate, simulate, mc-study, rate-scan.

All file outputs are written atomically (temp file + rename); exit code 0
means the result file or stdout payload was fully written, 2 flags invalid
inputs, 3 flags numerical failures."""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from ._quad import QuadratureError
from .estimator import InsufficientInformation, estimate
from .fisher import fisher_report, rate_scan
from .linalg import NotPositiveDefiniteError
from .model import (
    DomainError,
    ModelSpec,
    SlowlyVaryingSpec,
    fbm_wn_spec,
    integrated_fbm_spec,
    large_error_spec,
    user_spec,
)
from .montecarlo import run_study, sample_z

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_NUMERICAL_ERRORS = (QuadratureError, NotPositiveDefiniteError,
                     InsufficientInformation, np.linalg.LinAlgError)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".scalefisher-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, text: str) -> None:
    if getattr(args, "output", None):
        _atomic_write(args.output, text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _add_model_args(p: argparse.ArgumentParser, require_n: bool = True) -> None:
    p.add_argument("--preset", choices=("fbm-wn", "large-error", "integrated-fbm", "user"),
                   default="fbm-wn")
    p.add_argument("--n", type=int, required=require_n, help="sample size")
    p.add_argument("--H", type=float, help="Hurst index (fbm-wn, large-error, integrated-fbm)")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--beta", type=float, help="scale exponent (large-error and user presets)")
    p.add_argument("--K", type=int, help="difference order (user preset)")
    p.add_argument("--alpha", type=float, help="long-memory index (user preset)")
    p.add_argument("--gamma", type=str,
                   help="comma-separated leading autocovariances (user preset)")
    p.add_argument("--ell", type=str, default="constant:1",
                   help="slowly varying part, constant:C or logpow:C:RHO (user preset)")
    p.add_argument("--convention", choices=("delta_deltaT", "deltaT_delta"),
                   default="delta_deltaT")
    p.add_argument("--normalize", action="store_true",
                   help="rescale gamma so the squared autocovariances sum to one "
                        "(large-error preset)")


def _parse_ell(text: str) -> SlowlyVaryingSpec:
    parts = text.split(":")
    if parts[0] == "constant" and len(parts) == 2:
        return SlowlyVaryingSpec("constant", float(parts[1]))
    if parts[0] == "logpow" and len(parts) == 3:
        return SlowlyVaryingSpec("log_power", float(parts[1]), float(parts[2]))
    raise DomainError(f"cannot parse slowly varying spec {text!r}")


def build_spec(args) -> ModelSpec:
    if args.preset == "fbm-wn":
        if args.H is None:
            raise DomainError("fbm-wn preset requires --H")
        return fbm_wn_spec(args.n, args.H, args.sigma, args.tau)
    if args.preset == "large-error":
        if args.H is None or args.beta is None:
            raise DomainError("large-error preset requires --H and --beta")
        normalize = True if args.normalize else None
        return large_error_spec(args.n, args.H, args.beta, args.sigma, args.tau,
                                normalize=normalize)
    if args.preset == "integrated-fbm":
        if args.H is None:
            raise DomainError("integrated-fbm preset requires --H")
        return integrated_fbm_spec(args.n, args.H, args.sigma, args.tau)
    required = {"--beta": args.beta, "--K": args.K, "--alpha": args.alpha,
                "--gamma": args.gamma}
    missing = [k for k, v in required.items() if v is None]
    if missing:
        raise DomainError(f"user preset requires {', '.join(missing)}")
    gamma_vals = [float(v) for v in args.gamma.split(",") if v.strip()]
    return user_spec(args.n, args.beta, args.sigma, args.tau, args.K,
                     gamma_vals, args.alpha, _parse_ell(args.ell),
                     noise_convention=args.convention)


def _parse_n_grid(text: str) -> list[int]:
    """Grid syntax: 'n1,n2,...' or 'lo:hi:logsteps=K'."""
    if ":" in text:
        lo_s, hi_s, steps_s = text.split(":")
        if not steps_s.startswith("logsteps="):
            raise DomainError(f"cannot parse n-grid {text!r}")
        lo, hi = float(lo_s), float(hi_s)
        steps = int(steps_s.split("=", 1)[1])
        if steps < 2 or lo <= 0 or hi <= lo:
            raise DomainError(f"invalid n-grid bounds in {text!r}")
        grid = np.unique(np.geomspace(lo, hi, steps).round().astype(int))
        return [int(v) for v in grid]
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _read_data(path: str, n: int) -> np.ndarray:
    try:
        fh = open(path, "r")
    except OSError as exc:
        raise DomainError(f"cannot open input file: {exc}") from exc
    values = []
    with fh:
        for lineno, line in enumerate(fh, start=1):
            token = line.strip()
            if not token:
                continue
            try:
                values.append(float(token))
            except ValueError:
                raise DomainError(
                    f"line {lineno}: cannot parse {token!r} as a number") from None
    if not values:
        raise DomainError("input file contains no data")
    if len(values) != n:
        raise DomainError(f"input has {len(values)} values but spec n = {n}")
    return np.array(values)


def _workers_from_env() -> int:
    raw = os.environ.get("SCALEFISHER_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_fisher(args) -> int:
    spec = build_spec(args)
    methods = ("exact", "integral", "closed-form") if args.method == "all" \
        else (args.method,)
    report = fisher_report(spec, methods=methods)
    payload = report.to_dict()
    if args.method == "all":
        vals = {k: payload[k] for k in ("exact", "integral", "closed_form")}
        diffs = {}
        for a in vals:
            for b in vals:
                if a < b and vals[a] and vals[b]:
                    diffs[f"{a}_vs_{b}"] = abs(vals[a] - vals[b]) / max(
                        abs(vals[a]), abs(vals[b]))
        payload["relative_differences"] = diffs
    _emit(args, json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_estimate(args) -> int:
    spec = build_spec(args)
    z = _read_data(args.input, spec.n)
    result = estimate(z, spec)
    _emit(args, result.to_json())
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = build_spec(args)
    if args.reps < 1:
        raise DomainError("need at least one replicate")
    lines = ["rep,index,z"]
    for rep in range(args.reps):
        z = sample_z(spec, args.seed, rep)
        lines.extend(f"{rep},{i},{_fmt(v)}" for i, v in enumerate(z))
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_mc_study(args) -> int:
    spec = build_spec(args)
    if args.reps < 2:
        raise DomainError("mc-study requires --reps >= 2")
    study = run_study(spec, args.reps, args.seed, estimator=args.estimator,
                      workers=_workers_from_env())
    if args.per_rep:
        rows = ["rep,V,sigma2_tilde,sigma2_hat"]
        rows.extend(
            f"{i},{_fmt(e.preliminary_V)},{_fmt(e.sigma2_tilde)},{_fmt(e.sigma2_hat)}"
            for i, e in enumerate(study.estimates))
        _atomic_write(args.per_rep, "\n".join(rows) + "\n")
    _emit(args, study.to_json())
    return EXIT_OK


def cmd_rate_scan(args) -> int:
    grid = _parse_n_grid(args.n_grid)
    if args.n is None:
        args.n = grid[0]
    spec = build_spec(args)
    scan = rate_scan(spec, grid)
    lines = ["n,fisher_integral,fisher_closed_form"]
    lines.extend(f"{n},{_fmt(a)},{_fmt(b)}" for n, a, b in scan.rows())
    _emit(args, "\n".join(lines) + "\n")
    summary = {"slope_integral": scan.slope_integral,
               "slope_closed_form": scan.slope_closed_form}
    if getattr(args, "output", None):
        sys.stdout.write(json.dumps(summary) + "\n")
    else:
        sys.stderr.write(json.dumps(summary) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scalefisher",
        description="Fisher information and efficient estimation of the scale "
                    "parameter in Gaussian signal-plus-noise time series.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fisher", help="compute Fisher information")
    _add_model_args(p)
    p.add_argument("--method", choices=("exact", "integral", "closed-form", "all"),
                   default="all")
    p.add_argument("--output", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_fisher)

    p = sub.add_parser("estimate", help="estimate sigma^2 from a data file")
    _add_model_args(p)
    p.add_argument("--input", required=True, help="newline-delimited data values")
    p.add_argument("--output", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="draw replicates of the model")
    _add_model_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--output", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mc-study", help="replicate simulate-then-estimate study")
    _add_model_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--estimator", choices=("oracle", "efficient"), default="efficient")
    p.add_argument("--per-rep", help="also write a per-replicate CSV here")
    p.add_argument("--output", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_mc_study)

    p = sub.add_parser("rate-scan", help="Fisher growth across sample sizes")
    _add_model_args(p, require_n=False)
    p.add_argument("--n-grid", required=True,
                   help="'n1,n2,...' or 'lo:hi:logsteps=K'")
    p.add_argument("--output", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_rate_scan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except DomainError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except _NUMERICAL_ERRORS as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
