"""Linear measurement model y = S F x + n.

F is the unitary N-point DFT and S selects M of its rows.  This module
holds the problem description, the transform/selection operators, and the
sampler for random problem instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidConfigError, InvalidVarianceError

# Bounds on every message variance exchanged between modules.  VAR_MAX
# stands for "no information".
VAR_MIN = 1e-13
VAR_MAX = 1e13


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions and noise level of one measurement system.

    ``noise_var`` is derived from ``snr_db`` (unit signal power per
    measurement) and cannot be given independently.
    """

    n: int
    m: int
    lam: float
    snr_db: float
    base_seed: int = 0
    noise_var: float = field(init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidConfigError(f"n must be a positive integer, got {self.n}")
        if int(self.m) != self.m or not 1 <= self.m <= self.n:
            raise InvalidConfigError(f"m must satisfy 1 <= m <= n, got m={self.m}, n={self.n}")
        if not 0.0 < self.lam <= 1.0:
            raise InvalidConfigError(f"lambda must lie in (0, 1], got {self.lam}")
        if not math.isfinite(self.snr_db):
            raise InvalidConfigError("snr_db must be finite")
        if not 0 <= int(self.base_seed) < 2**64:
            raise InvalidConfigError("base_seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "base_seed", int(self.base_seed))
        noise_var = 10.0 ** (-self.snr_db / 10.0)
        if not noise_var > 0.0 or not math.isfinite(noise_var):
            raise InvalidConfigError(f"snr_db={self.snr_db} gives a degenerate noise variance")
        object.__setattr__(self, "noise_var", noise_var)

    @property
    def ratio(self) -> float:
        """Measurement ratio M/N."""
        return self.m / self.n


@dataclass(frozen=True)
class SelectionPattern:
    """Row indices picked out of the N-point DFT, in sampled order."""

    indices: np.ndarray
    n: int

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.ndim != 1 or idx.size == 0:
            raise DimensionError("selection indices must be a non-empty 1-D array")
        if not np.issubdtype(idx.dtype, np.integer):
            raise DimensionError("selection indices must be integers")
        if idx.min() < 0 or idx.max() >= self.n:
            raise DimensionError(f"selection index out of range [0, {self.n})")
        if np.unique(idx).size != idx.size:
            raise DimensionError("selection indices must be distinct")
        object.__setattr__(self, "indices", _frozen(idx, np.intp))

    @property
    def m(self) -> int:
        return self.indices.size

    def mask(self) -> np.ndarray:
        """Diagonal of S^H S as a boolean vector."""
        out = np.zeros(self.n, dtype=bool)
        out[self.indices] = True
        return out


@dataclass(frozen=True)
class GaussianMessage:
    """Mean vector with one scalar variance shared by every entry."""

    mean: np.ndarray
    variance: float

    def __post_init__(self):
        v = float(self.variance)
        if not math.isfinite(v) or not VAR_MIN <= v <= VAR_MAX:
            raise InvalidVarianceError(f"message variance {v!r} outside [{VAR_MIN}, {VAR_MAX}]")
        object.__setattr__(self, "variance", v)
        object.__setattr__(self, "mean", _frozen(self.mean, np.complex128))


@dataclass(frozen=True)
class ProblemInstance:
    """One realization of the signal, selection, noise and measurements."""

    x: np.ndarray
    z: np.ndarray
    support: np.ndarray
    noise: np.ndarray
    y: np.ndarray
    selection: SelectionPattern

    def __post_init__(self):
        for name, dtype in (("x", np.complex128), ("z", np.complex128), ("support", bool),
                            ("noise", np.complex128), ("y", np.complex128)):
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype))
        n, m = self.selection.n, self.selection.m
        if self.x.shape != (n,) or self.z.shape != (n,) or self.support.shape != (n,):
            raise DimensionError("x, z and support must have length N")
        if self.noise.shape != (m,) or self.y.shape != (m,):
            raise DimensionError("noise and y must have length M")

    @property
    def n(self) -> int:
        return self.selection.n

    @property
    def m(self) -> int:
        return self.selection.m


def _check_length(v, n, what="vector"):
    v = np.asarray(v)
    if v.ndim != 1 or (n is not None and v.shape[0] != n):
        raise DimensionError(f"{what} has shape {v.shape}, expected ({n},)")
    return v


def dft(v, n=None):
    """Unitary DFT: entries (1/sqrt(N)) exp(-2 pi j k l / N)."""
    v = _check_length(v, n)
    return np.fft.fft(v, norm="ortho")


def idft(v, n=None):
    """Inverse (= adjoint) of :func:`dft`."""
    v = _check_length(v, n)
    return np.fft.ifft(v, norm="ortho")


def select(z, p: SelectionPattern):
    """Apply S: pick entries ``z[p.indices]``."""
    z = _check_length(z, p.n, "z")
    return z[p.indices]


def select_adjoint(r, p: SelectionPattern):
    """Apply S^H: scatter ``r`` into a zero vector of length N."""
    r = _check_length(r, p.m, "r")
    out = np.zeros(p.n, dtype=np.result_type(r.dtype, np.complex128))
    out[p.indices] = r
    return out


def complex_normal(rng, size, var):
    """Circular CN(0, var) samples: (a + jb) sqrt(var/2)."""
    if var < 0:
        raise InvalidVarianceError("variance must be non-negative")
    ab = rng.standard_normal((2, size) if np.isscalar(size) else (2, *size))
    return (ab[0] + 1j * ab[1]) * math.sqrt(var / 2.0)


def trial_rng(base_seed, trial_index, stream=0):
    """Independent generator for one trial.

    The (base_seed, trial_index, stream) tuple is hashed by numpy's
    SeedSequence, so trials can be drawn in any order or in parallel.
    ``stream`` separates auxiliary draws (e.g. a dense sensing matrix) from
    the instance itself.
    """
    if trial_index < 0:
        raise InvalidConfigError("trial_index must be non-negative")
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), int(trial_index), int(stream)]))


def sample_instance(cfg: SystemConfig, trial_index: int) -> ProblemInstance:
    """Draw x ~ BG(lambda), a uniform M-subset of rows, and noise; form y."""
    if cfg.lam <= 0:
        raise InvalidConfigError("lambda must be positive")
    rng = trial_rng(cfg.base_seed, trial_index)
    n, m = cfg.n, cfg.m
    support = rng.random(n) < cfg.lam
    x = np.zeros(n, dtype=np.complex128)
    x[support] = complex_normal(rng, int(support.sum()), 1.0 / cfg.lam)
    indices = rng.choice(n, size=m, replace=False)
    noise = complex_normal(rng, m, cfg.noise_var)
    sel = SelectionPattern(indices, n)
    z = dft(x)
    y = select(z, sel) + noise
    return ProblemInstance(x=x, z=z, support=support, noise=noise, y=y, selection=sel)
