"""Monte Carlo experiments and CSV output."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .amp import SensingOperator, amp_iid_se, amp_run, gaussian_measurements
from .denoiser import BgPrior
from .errors import InvalidConfigError, NumericalFailureError
from .model import SystemConfig, sample_instance
from .state_evolution import se_run
from .turbo import RunOptions, run_turbo

log = logging.getLogger(__name__)

ALGORITHMS = ("turbo", "amp_dft", "amp_gauss")
CSV_HEADER = ("iter", "mse_sim", "mse_stderr", "mse_se")


@dataclass(frozen=True)
class ExperimentSpec:
    cfg: SystemConfig
    algorithm: str = "turbo"
    trials: int = 200
    max_iters: int = 50
    rel_tol: float = 1e-6
    output_path: Optional[str] = None
    threads: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.trials < 0:
            raise InvalidConfigError("trials must be non-negative")
        if self.max_iters < 1:
            raise InvalidConfigError("max_iters must be at least 1")
        if self.threads < 1:
            raise InvalidConfigError("threads must be at least 1")

    @property
    def opts(self):
        return RunOptions(max_iters=self.max_iters, rel_tol=self.rel_tol)


@dataclass
class ExperimentResult:
    per_iteration_mse: np.ndarray
    per_iteration_stderr: np.ndarray
    se_prediction: Optional[np.ndarray]
    metadata: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def __len__(self):
        return len(self.per_iteration_mse)

    @property
    def final_mse(self):
        return float(self.per_iteration_mse[-1])


def run_trial(spec: ExperimentSpec, trial_index: int):
    """MSE after each iteration of one trial."""
    cfg = spec.cfg
    inst = sample_instance(cfg, trial_index)
    if spec.algorithm == "turbo":
        trace = run_turbo(inst, cfg, spec.opts).trace
    elif spec.algorithm == "amp_dft":
        op = SensingOperator.partial_dft(inst.selection)
        trace = amp_run(inst.y, op, BgPrior(cfg.lam), cfg, spec.opts, x_true=inst.x).trace
    else:
        op, y = gaussian_measurements(inst, cfg, trial_index)
        trace = amp_run(y, op, BgPrior(cfg.lam), cfg, spec.opts, x_true=inst.x).trace
    return [rec.mse_vs_truth for rec in trace]


def _safe_trial(spec, k):
    try:
        return k, run_trial(spec, k), None
    except NumericalFailureError as exc:
        return k, None, f"trial {k}: {exc}"


def se_curve(spec: ExperimentSpec):
    """State-evolution MSE per iteration, or None when no valid SE exists."""
    if spec.algorithm == "turbo":
        traj = se_run(spec.cfg, max_iters=max(spec.max_iters, 1))
        return np.array(traj.mse[: spec.max_iters])
    if spec.algorithm == "amp_gauss":
        return np.array(amp_iid_se(spec.cfg, max_iters=spec.max_iters, rel_tol=spec.rel_tol))
    return None


def _carry_forward(seq, length):
    seq = list(seq)
    return np.array(seq + [seq[-1]] * (length - len(seq)), dtype=float)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Average MSE trajectories over ``spec.trials`` independent trials.

    Trials that stop early have their last MSE carried forward.  Trials
    that fail numerically are excluded from the averages and listed in
    ``failures``.  With ``trials == 0`` only the SE curve is produced.
    """
    indices = range(spec.trials)
    if spec.threads > 1 and spec.trials > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            outcomes = list(pool.map(lambda k: _safe_trial(spec, k), indices))
    else:
        outcomes = [_safe_trial(spec, k) for k in indices]

    traces = [tr for _, tr, _ in outcomes if tr is not None]
    failures = [msg for _, _, msg in outcomes if msg is not None]
    for msg in failures:
        log.warning("excluded %s", msg)

    se = se_curve(spec)
    if traces:
        length = max(len(t) for t in traces)
        mat = np.vstack([_carry_forward(t, length) for t in traces])
        mse = mat.mean(axis=0)
        if len(traces) > 1:
            stderr = mat.std(axis=0, ddof=1) / math.sqrt(len(traces))
        else:
            stderr = np.zeros(length)
    else:
        length = len(se) if (spec.trials == 0 and se is not None) else 0
        mse = np.full(length, np.nan)
        stderr = np.full(length, np.nan)
    if se is not None and length:
        se = _carry_forward(se, length)[:length]
    elif se is not None:
        se = np.array([])

    cfg = spec.cfg
    metadata = {
        "algorithm": spec.algorithm,
        "n": cfg.n,
        "m": cfg.m,
        "lambda": cfg.lam,
        "snr_db": cfg.snr_db,
        "noise_var": cfg.noise_var,
        "seed": cfg.base_seed,
        "trials": spec.trials,
        "max_iters": spec.max_iters,
        "rel_tol": spec.rel_tol,
        "excluded_trials": len(failures),
        "version": __version__,
    }
    return ExperimentResult(mse, stderr, se, metadata, failures)


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.16e}"


def _rows(result: ExperimentResult):
    se = result.se_prediction
    for i in range(len(result)):
        yield [str(i + 1), _fmt(float(result.per_iteration_mse[i])),
               _fmt(float(result.per_iteration_stderr[i])),
               _fmt(float(se[i])) if se is not None and i < len(se) else ""]


def format_csv(result: ExperimentResult, algo_column: bool = False, header: bool = True) -> str:
    buf = io.StringIO()
    if header:
        for key, val in result.metadata.items():
            buf.write(f"# {key} = {val}\n")
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow((("algo",) if algo_column else ()) + CSV_HEADER)
    for row in _rows(result):
        w.writerow(([result.metadata.get("algorithm", "")] if algo_column else []) + row)
    return buf.getvalue()


def emit_csv(result: ExperimentResult, path) -> None:
    """Write ``# key = value`` metadata lines, the header and one row per iteration."""
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(result))


def emit_merged_csv(results, path) -> None:
    """One file for several algorithms, long format with a leading ``algo`` column."""
    with open(path, "w", newline="") as fh:
        for res in results:
            algo = res.metadata["algorithm"]
            for key, val in res.metadata.items():
                fh.write(f"# {algo}.{key} = {val}\n")
        fh.write(",".join(("algo",) + CSV_HEADER) + "\n")
        for res in results:
            fh.write(format_csv(res, algo_column=True, header=False))


def read_csv(path):
    """Parse a file written by :func:`emit_csv` or :func:`emit_merged_csv`.

    Returns (metadata, columns) where columns maps header names to lists;
    empty fields become NaN.
    """
    meta, lines = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
            elif line.strip():
                lines.append(line)
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        return meta, {}
    cols = {h: [] for h in header}
    for row in reader:
        for h, val in zip(header, row):
            if h == "algo":
                cols[h].append(val)
            elif h == "iter":
                cols[h].append(int(val))
            else:
                cols[h].append(float(val) if val else math.nan)
    return meta, {h: (v if h == "algo" else np.array(v)) for h, v in cols.items()}


def iterations_to_converge(mse, tol_db=0.1):
    """First 1-based iteration whose MSE is within ``tol_db`` of the final value."""
    mse = np.asarray(mse, dtype=float)
    final_db = 10 * np.log10(mse[-1])
    close = np.abs(10 * np.log10(mse) - final_db) <= tol_db
    # first index after which every entry stays close
    bad = np.nonzero(~close)[0]
    return int(bad[-1] + 2) if bad.size else 1
