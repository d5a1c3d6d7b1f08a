"""AMP baseline with the Bernoulli-Gaussian MMSE denoiser.

The sensing operator A has entries of variance 1/N (i.i.d. Gaussian) or
is S F (partial DFT).  AMP is run on the column-normalised system
sqrt(N/M) y = sqrt(N/M) A x + sqrt(N/M) n, which gives the iteration

    r_t     = x_t + (N/M) A^H s_t
    x_{t+1} = E[x | r_t]  at noise level tau_t^2
    s_{t+1} = y - A x_{t+1} + (N/M) s_t avg_var_{t+1} / tau_t^2
    tau_{t+1}^2 = (N/M) (noise_var + avg_var_{t+1})

starting from x_0 = 0, s_0 = y, tau_0^2 = (N/M)(noise_var + 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .denoiser import BgPrior, denoise_vector, mmse_of_snr
from .errors import DimensionError, InvalidConfigError, InvalidVarianceError, NumericalFailureError
from .model import (VAR_MAX, VAR_MIN, GaussianMessage, ProblemInstance, SelectionPattern,
                    SystemConfig, complex_normal, dft, idft, select, select_adjoint, trial_rng)
from .turbo import RunOptions

PARTIAL_DFT = "partial_dft"
IID_GAUSSIAN = "iid_gaussian"


@dataclass(frozen=True)
class SensingOperator:
    kind: str
    selection: Optional[SelectionPattern] = None
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == PARTIAL_DFT:
            if self.selection is None:
                raise InvalidConfigError("partial_dft operator needs a selection pattern")
        elif self.kind == IID_GAUSSIAN:
            if self.matrix is None or np.ndim(self.matrix) != 2:
                raise InvalidConfigError("iid_gaussian operator needs an M x N matrix")
        else:
            raise InvalidConfigError(f"unknown operator kind {self.kind!r}")

    @classmethod
    def partial_dft(cls, selection):
        return cls(PARTIAL_DFT, selection=selection)

    @classmethod
    def iid_gaussian(cls, m, n, rng):
        return cls(IID_GAUSSIAN, matrix=complex_normal(rng, (m, n), 1.0 / n))

    @property
    def shape(self):
        if self.kind == PARTIAL_DFT:
            return self.selection.m, self.selection.n
        return self.matrix.shape

    def forward(self, x):
        if self.kind == PARTIAL_DFT:
            return select(dft(x), self.selection)
        return self.matrix @ x

    def adjoint(self, s):
        if self.kind == PARTIAL_DFT:
            return idft(select_adjoint(s, self.selection))
        # (s^H A)^H without materialising A^H
        return (s.conj() @ self.matrix).conj()


@dataclass
class AmpState:
    x_hat: np.ndarray
    residual: np.ndarray
    tau_sq: float


@dataclass(frozen=True)
class AmpRecord:
    iter: int
    tau_sq: float
    avg_post_var: float
    mse_vs_truth: float = math.nan


@dataclass
class AmpResult:
    x_hat: np.ndarray
    trace: list = field(default_factory=list)
    converged: bool = False

    def __iter__(self):
        return iter((self.x_hat, self.trace))


def gaussian_measurements(inst: ProblemInstance, cfg: SystemConfig, trial_index: int):
    """Dense i.i.d. Gaussian operator and y = A x + n for an instance.

    Reuses the instance's signal and noise; the matrix comes from a
    separate stream of the same trial so it is reproducible.
    """
    rng = trial_rng(cfg.base_seed, trial_index, stream=1)
    op = SensingOperator.iid_gaussian(cfg.m, cfg.n, rng)
    return op, op.forward(inst.x) + inst.noise


def amp_run(y, op: SensingOperator, prior: BgPrior, cfg: SystemConfig,
            opts: RunOptions = RunOptions(), x_true=None, onsager: bool = True) -> AmpResult:
    """Run AMP; stops on the same relative-change rule as Turbo-CS (on tau^2).

    ``onsager=False`` drops the memory term (diagnostic only).
    """
    m, n = op.shape
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (m,) or (m, n) != (cfg.m, cfg.n):
        raise DimensionError("y, operator and config dimensions disagree")
    k = n / m
    state = AmpState(np.zeros(n, dtype=np.complex128), y.copy(), k * (cfg.noise_var + 1.0))
    result = AmpResult(x_hat=state.x_hat)
    for it in range(1, opts.max_iters + 1):
        r = state.x_hat + k * op.adjoint(state.residual)
        try:
            post = denoise_vector(GaussianMessage(r, min(max(state.tau_sq, VAR_MIN), VAR_MAX)), prior)
        except InvalidVarianceError as exc:
            raise NumericalFailureError(f"iteration {it}: {exc}", iteration=it) from exc
        x_new = post.post_mean
        avg = post.avg_post_var
        s_new = y - op.forward(x_new)
        if onsager:
            s_new = s_new + k * state.residual * (avg / state.tau_sq)
        tau_new = k * (cfg.noise_var + avg)
        if not (math.isfinite(tau_new) and np.all(np.isfinite(x_new)) and np.all(np.isfinite(s_new))):
            raise NumericalFailureError(f"AMP produced non-finite values at iteration {it}", iteration=it)
        mse = float(np.mean(np.abs(x_new - x_true) ** 2)) if x_true is not None else math.nan
        result.trace.append(AmpRecord(it, state.tau_sq, avg, mse))
        result.x_hat = x_new
        done = abs(tau_new - state.tau_sq) / state.tau_sq < opts.rel_tol
        state = AmpState(x_new, s_new, tau_new)
        if done:
            result.converged = True
            break
    return result


def amp_iid_se(cfg: SystemConfig, prior: Optional[BgPrior] = None, max_iters=50, rel_tol=1e-6):
    """Predicted MSE per iteration of AMP with an i.i.d. Gaussian matrix.

    tau_{t+1}^2 = (N/M)(noise_var + mmse(1/tau_t^2)).  This recursion is
    not valid for partial DFT operators.
    """
    prior = prior or BgPrior(cfg.lam)
    k = 1.0 / cfg.ratio
    tau = k * (cfg.noise_var + 1.0)
    out = []
    for _ in range(max_iters):
        mse = mmse_of_snr(1.0 / tau, prior)
        out.append(mse)
        tau_new = k * (cfg.noise_var + mse)
        if abs(tau_new - tau) / tau < rel_tol:
            break
        tau = tau_new
    return out
