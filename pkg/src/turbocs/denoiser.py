"""Bernoulli-Gaussian MMSE denoiser for a complex AWGN observation.

Scalar channel: r = x + w, w ~ CN(0, v), with x = 0 w.p. 1 - lambda and
x ~ CN(0, 1/lambda) otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import expit

from .errors import InvalidConfigError, InvalidVarianceError
from .model import GaussianMessage

# Bound on the activation log-odds before exponentiation.
_LOGIT_CLAMP = 700.0
# Integration cutoff for |r|^2 / scale ~ Exp(1); exp(-144) is far below
# double precision relative to the integrand's O(1) size.
_RADIAL_CUTOFF = 144.0


@dataclass(frozen=True)
class BgPrior:
    lam: float

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise InvalidConfigError(f"lambda must lie in (0, 1], got {self.lam}")
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def active_var(self) -> float:
        return 1.0 / self.lam

    @property
    def mean(self) -> float:
        return 0.0

    @property
    def variance(self) -> float:
        return 1.0


@dataclass(frozen=True)
class DenoiserOutput:
    post_mean: np.ndarray
    post_var: np.ndarray
    avg_post_var: float


def _check_var(v):
    if not (np.isfinite(v) and v > 0):
        raise InvalidVarianceError(f"noise variance must be positive and finite, got {v!r}")


def _activation_logit(abs_r2, v, prior):
    """log P(inactive | r) - log P(active | r), clamped."""
    s = prior.active_var
    if prior.lam == 1.0:
        return np.full(np.shape(abs_r2), -_LOGIT_CLAMP)
    L = (math.log((1.0 - prior.lam) / prior.lam) + math.log1p(s / v)
         - abs_r2 * (s / (v * (s + v))))
    return np.clip(L, -_LOGIT_CLAMP, _LOGIT_CLAMP)


def _posterior(r, v, prior):
    s = prior.active_var
    gain = s / (s + v)
    abs_r2 = (r * np.conj(r)).real
    pi = expit(-_activation_logit(abs_r2, v, prior))
    mean = pi * gain * r
    # pi*(c + |g r|^2) - |pi g r|^2 rewritten to stay non-negative
    var = pi * (gain * v) + pi * (1.0 - pi) * (gain * gain) * abs_r2
    return mean, var


def bg_denoise(r, v, prior: BgPrior):
    """Posterior mean E[x|r] and variance var[x|r] for one observation.

    Works elementwise if ``r`` is an array.
    """
    _check_var(v)
    r = np.asarray(r, dtype=np.complex128)
    mean, var = _posterior(r, float(v), prior)
    if r.ndim == 0:
        return complex(mean), float(var)
    return mean, var


def denoise_vector(msg: GaussianMessage, prior: BgPrior) -> DenoiserOutput:
    mean, var = _posterior(msg.mean, msg.variance, prior)
    return DenoiserOutput(post_mean=mean, post_var=var, avg_post_var=float(np.mean(var)))


def _conditional_var_radial(abs_r2, v, prior):
    _, var = _posterior(np.sqrt(abs_r2) + 0j, v, prior)
    return var


def _expected_var(scale, v, prior):
    """E[var(r)] for |r|^2 ~ Exp(mean=scale), via u = |r|^2/scale ~ Exp(1)."""
    points = [1.0, 8.0, 32.0]
    if prior.lam < 1.0:
        s = prior.active_var
        # |r|^2 where the activation posterior crosses 1/2
        r2_half = (v * (s + v) / s) * (math.log((1.0 - prior.lam) / prior.lam) + math.log1p(s / v))
        if 0.0 < r2_half / scale < _RADIAL_CUTOFF:
            points.append(r2_half / scale)

    def f(u):
        return float(_conditional_var_radial(scale * u, v, prior)) * math.exp(-u)

    # full_output keeps roundoff notices (error estimates ~1e-12) off stderr
    return integrate.quad(f, 0.0, _RADIAL_CUTOFF, points=sorted(points),
                          epsabs=1e-15, epsrel=1e-11, limit=500, full_output=1)[0]


@lru_cache(maxsize=1 << 16)
def _mmse_cached(eta, lam):
    prior = BgPrior(lam)
    v = 1.0 / eta
    out = prior.lam * _expected_var(prior.active_var + v, v, prior)
    if prior.lam < 1.0:
        out += (1.0 - prior.lam) * _expected_var(v, v, prior)
    return out


def mmse_of_snr(eta, prior: BgPrior) -> float:
    """mmse(eta) = E|x - E[x | x + xi]|^2 with xi ~ CN(0, 1/eta).

    The conditional variance depends on r only through |r|, and r is a
    two-component mixture of circular Gaussians, so the expectation
    reduces to two 1-D integrals over |r|^2.  Results are memoized on
    (eta, lambda).
    """
    eta = float(eta)
    if not (math.isfinite(eta) and eta > 0):
        raise InvalidVarianceError(f"eta must be positive and finite, got {eta!r}")
    return _mmse_cached(eta, prior.lam)
