"""Turbo-CS: an LMMSE module over the partial-DFT constraint and a
Bernoulli-Gaussian denoiser over the sparsity constraint, exchanging
extrinsic Gaussian messages.

Module A works on z = F x and hands an x-domain message to module B;
module B hands a z-domain message back.  Each module folds its extrinsic
computation before the transform, so one iteration costs one IDFT and one
DFT.  No N x N matrix is ever formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .denoiser import BgPrior, DenoiserOutput, denoise_vector
from .errors import DimensionError, InvalidVarianceError, NumericalFailureError
from .model import (VAR_MAX, VAR_MIN, GaussianMessage, ProblemInstance, SystemConfig, dft,
                    idft, select, select_adjoint)


@dataclass(frozen=True)
class RunOptions:
    max_iters: int = 50
    rel_tol: float = 1e-6
    # 1.0 disables damping
    damping: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.rel_tol >= 0:
            raise ValueError("rel_tol must be non-negative")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")


@dataclass(frozen=True)
class TurboState:
    z_a_pri: GaussianMessage
    x_b_pri: Optional[GaussianMessage] = None
    iteration: int = 0

    @classmethod
    def initial(cls, n):
        return cls(GaussianMessage(np.zeros(n, dtype=np.complex128), 1.0))


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    v_a_pri: float
    v_b_pri: float
    v_a_post: float
    v_b_post: float
    mse_vs_truth: float = math.nan


@dataclass(frozen=True)
class ModuleBResult:
    extrinsic: GaussianMessage
    posterior: DenoiserOutput

    @property
    def z_post(self):
        return dft(self.posterior.post_mean)


@dataclass
class TurboResult:
    x_hat: np.ndarray
    trace: list = field(default_factory=list)
    converged: bool = False

    # allow ``x_hat, trace = run_turbo(...)``
    def __iter__(self):
        return iter((self.x_hat, self.trace))


def _clamp(v):
    return min(max(v, VAR_MIN), VAR_MAX)


def extrinsic_combine(post_mean, post_var, pri_mean, pri_var) -> GaussianMessage:
    """Remove the prior from a Gaussian posterior by precision subtraction.

    v_ext = (1/v_post - 1/v_pri)^-1 and
    m_ext = v_ext (m_post/v_post - m_pri/v_pri).  When the posterior is no
    sharper than the prior the variance is pinned at VAR_MAX.
    """
    for name, v in (("post_var", post_var), ("pri_var", pri_var)):
        if not (math.isfinite(v) and v > 0):
            raise InvalidVarianceError(f"{name} must be positive and finite, got {v!r}")
    precision = 1.0 / post_var - 1.0 / pri_var
    v_ext = VAR_MAX if precision <= 0 else _clamp(1.0 / precision)
    mean = v_ext * (np.asarray(post_mean) / post_var - np.asarray(pri_mean) / pri_var)
    return GaussianMessage(mean, v_ext)


def lmmse_posterior(z_a_pri: GaussianMessage, inst: ProblemInstance, noise_var):
    """LMMSE estimate of z given y and the prior message.

    Returns (z_post, v_post) where v_post is the common diagonal of the
    x-domain error covariance, v - (M/N) v^2/(v + noise_var).
    """
    v = z_a_pri.variance
    sel = inst.selection
    gain = v / (v + noise_var)
    z_post = z_a_pri.mean + gain * select_adjoint(inst.y - select(z_a_pri.mean, sel), sel)
    v_post = _clamp(v - (sel.m / sel.n) * v * gain)
    return z_post, v_post


def module_a(state: TurboState, inst: ProblemInstance, cfg: SystemConfig) -> GaussianMessage:
    """LMMSE step; returns the x-domain extrinsic message for module B."""
    if state.z_a_pri.mean.shape != (inst.n,):
        raise DimensionError("state and instance dimensions disagree")
    z_post, v_post = lmmse_posterior(state.z_a_pri, inst, cfg.noise_var)
    # the extrinsic map is linear, so combining before the IDFT saves one transform
    ext = extrinsic_combine(z_post, v_post, state.z_a_pri.mean, state.z_a_pri.variance)
    return GaussianMessage(idft(ext.mean), ext.variance)


def module_b(x_b_pri: GaussianMessage, prior: BgPrior) -> ModuleBResult:
    """Denoise in x, then form the z-domain extrinsic message for module A.

    The posterior of z is modelled as CN(F x_post, mean(post_var)); its
    prior is CN(F x_b_pri, v_b_pri).
    """
    post = denoise_vector(x_b_pri, prior)
    v_post = _clamp(post.avg_post_var)
    ext = extrinsic_combine(post.post_mean, v_post, x_b_pri.mean, x_b_pri.variance)
    return ModuleBResult(GaussianMessage(dft(ext.mean), ext.variance), post)


def _damp(new: GaussianMessage, old: GaussianMessage, gamma):
    if gamma == 1.0:
        return new
    mean = gamma * new.mean + (1.0 - gamma) * old.mean
    logv = gamma * math.log(new.variance) + (1.0 - gamma) * math.log(old.variance)
    return GaussianMessage(mean, _clamp(math.exp(logv)))


def _finite(msg, it, what):
    if not (math.isfinite(msg.variance) and np.all(np.isfinite(msg.mean))):
        raise NumericalFailureError(f"non-finite {what} at iteration {it}", iteration=it)


def run_turbo(inst: ProblemInstance, cfg: SystemConfig, opts: RunOptions = RunOptions(),
              prior: Optional[BgPrior] = None, truth: bool = True) -> TurboResult:
    """Iterate module A / module B from z_A^pri = 0, v_A^pri = 1.

    Stops when the relative change of v_A^pri drops below ``opts.rel_tol``
    or after ``opts.max_iters`` iterations.  The estimate is the last
    posterior mean of module B.  With ``truth`` the trace carries the
    empirical MSE against ``inst.x``.
    """
    prior = prior or BgPrior(cfg.lam)
    state = TurboState.initial(inst.n)
    result = TurboResult(x_hat=np.zeros(inst.n, dtype=np.complex128))
    for it in range(1, opts.max_iters + 1):
        try:
            v_a_pri = state.z_a_pri.variance
            _, v_a_post = lmmse_posterior(state.z_a_pri, inst, cfg.noise_var)
            x_b_pri = module_a(state, inst, cfg)
            _finite(x_b_pri, it, "module A output")
            b = module_b(x_b_pri, prior)
            _finite(b.extrinsic, it, "module B output")
        except (InvalidVarianceError, FloatingPointError) as exc:
            raise NumericalFailureError(f"iteration {it}: {exc}", iteration=it) from exc
        x_hat = b.posterior.post_mean
        if not np.all(np.isfinite(x_hat)):
            raise NumericalFailureError(f"non-finite estimate at iteration {it}", iteration=it)
        mse = float(np.mean(np.abs(x_hat - inst.x) ** 2)) if truth else math.nan
        result.trace.append(IterationRecord(it, v_a_pri, x_b_pri.variance, v_a_post,
                                            b.posterior.avg_post_var, mse))
        result.x_hat = x_hat
        z_next = _damp(b.extrinsic, state.z_a_pri, opts.damping)
        state = TurboState(z_next, x_b_pri, it)
        if abs(z_next.variance - v_a_pri) / v_a_pri < opts.rel_tol:
            result.converged = True
            break
    return result
