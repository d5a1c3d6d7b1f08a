"""Scalar state evolution of Turbo-CS and its fixed point.

States are eta = 1/v_B^pri (SNR seen by the denoiser) and v = v_A^pri.
One step is

    eta' = 1 / ((N/M)(v + noise_var) - v)
    1/v' = 1/mmse(eta') - eta'

and the predicted MSE after the step is mmse(eta').  Eliminating v gives
a quadratic in eta whose smaller root is the replica prediction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from scipy import optimize

from .denoiser import BgPrior, mmse_of_snr
from .errors import InvalidConfigError, NumericalFailureError
from .model import VAR_MAX, VAR_MIN, SystemConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeState:
    eta: float
    v: float
    predicted_mse: float


@dataclass
class SeTrajectory:
    states: list = field(default_factory=list)
    converged: bool = False
    fixed_point_eta: Optional[float] = None

    @property
    def mse(self):
        return [s.predicted_mse for s in self.states]


def se_step(v_t, cfg: SystemConfig, prior: BgPrior) -> SeState:
    if not (math.isfinite(v_t) and v_t > 0):
        raise InvalidConfigError(f"state v must be positive, got {v_t!r}")
    denom = (v_t + cfg.noise_var) / cfg.ratio - v_t
    if not denom > 0:
        raise InvalidConfigError(f"(N/M)(v + noise_var) - v = {denom!r} is not positive")
    eta = 1.0 / denom
    mse = mmse_of_snr(eta, prior)
    inv_v = 1.0 / mse - eta
    v = VAR_MAX if inv_v <= 0 else min(max(1.0 / inv_v, VAR_MIN), VAR_MAX)
    return SeState(eta, v, mse)


def se_run(cfg: SystemConfig, prior: Optional[BgPrior] = None, v0=1.0, tol=1e-10,
           max_iters=10_000) -> SeTrajectory:
    """Iterate :func:`se_step` from v0 until eta stops moving.

    ``states[k]`` is the state after k+1 iterations, aligned with the
    (k+1)-th record of :func:`turbo.run_turbo`.
    """
    prior = prior or BgPrior(cfg.lam)
    if not v0 > 0:
        raise InvalidConfigError("v0 must be positive")
    traj = SeTrajectory()
    v, eta_prev = v0, None
    for _ in range(max_iters):
        st = se_step(v, cfg, prior)
        traj.states.append(st)
        if eta_prev is not None and abs(st.eta - eta_prev) <= tol * abs(eta_prev):
            traj.converged = True
            traj.fixed_point_eta = st.eta
            break
        v, eta_prev = st.v, st.eta
    return traj


def fixed_point_residual(eta, cfg: SystemConfig, prior: Optional[BgPrior] = None) -> float:
    """(N/M) s2 m eta^2 - (N/M)(m + s2) eta + 1 with m = mmse(eta)."""
    prior = prior or BgPrior(cfg.lam)
    m = mmse_of_snr(eta, prior)
    k = 1.0 / cfg.ratio
    s2 = cfg.noise_var
    return k * s2 * m * eta * eta - k * (m + s2) * eta + 1.0


def _quadratic_roots(mse, cfg):
    s2, ratio = cfg.noise_var, cfg.ratio
    b = mse + s2
    disc = b * b - 4.0 * s2 * mse * ratio
    if disc < 0:
        raise NumericalFailureError(f"negative discriminant {disc!r} in fixed-point equation")
    sq = math.sqrt(disc)
    # minus root written as 2 c/(b + sq) to avoid cancellation when s2*mse is tiny
    minus = 2.0 * ratio / (b + sq)
    plus = (b + sq) / (2.0 * s2 * mse)
    return minus, plus


def replica_eta(mse, cfg: SystemConfig) -> float:
    """Smaller root of the fixed-point quadratic for a given mmse value."""
    return _quadratic_roots(mse, cfg)[0]


def replica_eta_plus_branch(mse, cfg: SystemConfig) -> float:
    """Larger root; diagnostic only, never a valid convergence point."""
    return _quadratic_roots(mse, cfg)[1]


def replica_solution(cfg: SystemConfig, prior: Optional[BgPrior] = None, tol=1e-10,
                     max_iters=1000) -> float:
    """Solve eta = replica_eta(mmse(eta)) self-consistently.

    Plain fixed-point iteration from eta0 = (M/N)/(1 + noise_var), switching
    to a 0.5-damped update once successive steps alternate in sign.  Falls
    back to root bracketing on the residual if the iteration stalls.
    """
    prior = prior or BgPrior(cfg.lam)
    eta = cfg.ratio / (1.0 + cfg.noise_var)
    damping, last_step = 1.0, 0.0
    for _ in range(max_iters):
        target = replica_eta(mmse_of_snr(eta, prior), cfg)
        step = target - eta
        if last_step * step < 0:
            damping = 0.5
        new = eta + damping * step
        if abs(new - eta) <= tol * abs(eta):
            return new
        eta, last_step = new, step
    log.warning("replica fixed-point iteration stalled at eta=%g; bisecting", eta)
    return _bisect_replica(cfg, prior, eta, tol)


def _bisect_replica(cfg, prior, guess, tol):
    def g(e):
        return replica_eta(mmse_of_snr(e, prior), cfg) - e

    lo = cfg.ratio / (1.0 + cfg.noise_var)
    hi = max(guess, lo) * 2.0
    # g(lo) >= 0 since mmse <= 1; grow hi until g changes sign
    while g(hi) > 0:
        hi *= 2.0
        if hi > 1e30:
            raise NumericalFailureError("could not bracket the replica fixed point")
    return optimize.brentq(g, lo, hi, xtol=0.0, rtol=max(tol, 4e-16), maxiter=500)


def v_at(eta, prior: BgPrior) -> float:
    """v_A^pri consistent with eta at a fixed point."""
    inv_v = 1.0 / mmse_of_snr(eta, prior) - eta
    return VAR_MAX if inv_v <= 0 else 1.0 / inv_v
