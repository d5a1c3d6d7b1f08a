"""Command-line entry point.

Subcommands: ``run``, ``se``, ``fixed-point`` and ``compare``.  A plain
``key = value`` file given with ``--config`` can supply any flag; flags on
the command line win.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from .denoiser import BgPrior, mmse_of_snr
from .errors import InvalidConfigError, NumericalFailureError
from .harness import (ALGORITHMS, ExperimentResult, ExperimentSpec, emit_csv, emit_merged_csv,
                      format_csv, run_experiment)
from .model import SystemConfig
from .state_evolution import fixed_point_residual, replica_solution, se_run, v_at

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "n": 4096,
    "m": None,  # round(0.7 n)
    "lambda": 0.4,
    "snr_db": 50.0,
    "trials": 200,
    "max_iters": 50,
    "rel_tol": 1e-6,
    "seed": 0,
    "algo": "turbo",
    "out": None,
    "threads": 1,
}

_CASTS = {"n": int, "m": int, "lambda": float, "snr_db": float, "trials": int, "max_iters": int,
          "rel_tol": float, "seed": int, "algo": str, "out": str, "threads": int}


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key = key.strip().lstrip("-").replace("-", "_")
            if not sep or key not in _CASTS:
                raise InvalidConfigError(f"{path}:{lineno}: cannot parse {raw.strip()!r}")
            try:
                out[key] = _CASTS[key](val.strip())
            except ValueError as exc:
                raise InvalidConfigError(f"{path}:{lineno}: {exc}") from None
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="turbocs", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value file supplying defaults")
        sp.add_argument("--n", type=int)
        sp.add_argument("--m", type=int)
        sp.add_argument("--lambda", dest="lambda", type=float)
        sp.add_argument("--snr-db", dest="snr_db", type=float)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--max-iters", dest="max_iters", type=int)
        sp.add_argument("--rel-tol", dest="rel_tol", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--algo", choices=ALGORITHMS)
        sp.add_argument("--out", help="CSV output path (stdout if omitted)")
        sp.add_argument("--threads", type=int)

    common(sub.add_parser("run", help="Monte Carlo MSE trajectory of one algorithm"))
    common(sub.add_parser("se", help="state-evolution trajectory only"))
    common(sub.add_parser("fixed-point", help="SE and replica fixed points"))
    common(sub.add_parser("compare", help="turbo, amp_dft and amp_gauss on one config"))
    return p


def resolve(args):
    opts = dict(DEFAULTS)
    if args.config:
        opts.update(read_config_file(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    if opts["m"] is None:
        opts["m"] = int(round(0.7 * opts["n"]))
    return opts


def make_spec(opts, algorithm=None, trials=None):
    cfg = SystemConfig(opts["n"], opts["m"], opts["lambda"], opts["snr_db"], opts["seed"])
    return ExperimentSpec(cfg, algorithm or opts["algo"],
                          opts["trials"] if trials is None else trials,
                          opts["max_iters"], opts["rel_tol"], opts["out"], opts["threads"])


def _db(x):
    return 10 * math.log10(x) if x > 0 else float("-inf")


def _summary(res: ExperimentResult):
    algo = res.metadata["algorithm"]
    if len(res) == 0:
        return f"{algo}: no iterations recorded"
    parts = [f"{algo}: {len(res)} iterations"]
    if not np.isnan(res.per_iteration_mse[-1]):
        parts.append(f"final MSE {res.final_mse:.6e} ({_db(res.final_mse):.2f} dB)")
    if res.se_prediction is not None and len(res.se_prediction):
        se = float(res.se_prediction[-1])
        parts.append(f"SE {se:.6e} ({_db(se):.2f} dB)")
    if res.failures:
        parts.append(f"{len(res.failures)} trials excluded")
    return ", ".join(parts)


def cmd_run(opts, trials=None):
    res = run_experiment(make_spec(opts, trials=trials))
    if opts["out"]:
        emit_csv(res, opts["out"])
    else:
        sys.stdout.write(format_csv(res))
    print(_summary(res), file=sys.stderr)
    if res.metadata["trials"] > 0 and len(res.failures) == res.metadata["trials"]:
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_fixed_point(opts):
    cfg = SystemConfig(opts["n"], opts["m"], opts["lambda"], opts["snr_db"], opts["seed"])
    prior = BgPrior(cfg.lam)
    traj = se_run(cfg, prior)
    eta_rep = replica_solution(cfg, prior)
    rows = []
    if traj.converged:
        rows.append(("se_run", traj.fixed_point_eta))
    else:
        print("se_run did not converge; reporting last state", file=sys.stderr)
        rows.append(("se_run", traj.states[-1].eta))
    rows.append(("replica", eta_rep))
    print("method,eta,v,mse,mse_db,residual")
    for name, eta in rows:
        mse = mmse_of_snr(eta, prior)
        print(f"{name},{eta:.16e},{v_at(eta, prior):.16e},{mse:.16e},{_db(mse):.4f},"
              f"{fixed_point_residual(eta, cfg, prior):.3e}")
    return EXIT_OK


def cmd_compare(opts):
    results = [run_experiment(make_spec(opts, algorithm=a)) for a in ALGORITHMS]
    if opts["out"]:
        emit_merged_csv(results, opts["out"])
    else:
        sys.stdout.write(",".join(("algo", "iter", "mse_sim", "mse_stderr", "mse_se")) + "\n")
        for res in results:
            sys.stdout.write(format_csv(res, algo_column=True, header=False))
    for res in results:
        print(_summary(res), file=sys.stderr)
    trials = opts["trials"]
    if trials > 0 and all(len(r.failures) == trials for r in results):
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve(args)
        if args.command == "run":
            return cmd_run(opts)
        if args.command == "se":
            if opts["algo"] == "amp_dft":
                raise InvalidConfigError("no state evolution is available for amp_dft")
            return cmd_run(opts, trials=0)
        if args.command == "fixed-point":
            return cmd_fixed_point(opts)
        return cmd_compare(opts)
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
