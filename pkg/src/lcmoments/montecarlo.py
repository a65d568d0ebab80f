"""Monte-Carlo ground truth for moment surrogates.

Reproducibility contract: every estimator splits its sample budget into
batches and derives one RNG sub-stream per batch from the entropy tuple
(seed, stream tag, batch index).  Batch statistics are reduced in batch-index
order, so a result is a pure function of (seed, n_samples, batches) no matter
how the batches are scheduled.  p-th moments are accumulated in log space and
batch-means give the standard error, propagated through the 1/p power by the
delta method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .coeffs import as_coefficients
from .errors import InvalidArgumentError, OutOfRangeError
from .families import (
    Family,
    GaussianStd,
    ProductFamily,
    UniformBall,
    UniformCube,
    _marginal_sampler_tables,
)

__all__ = [
    "EstimateRecord",
    "sample",
    "estimate_pnorm",
    "estimate_fourth_moment",
    "estimate_joint_tail",
    "dependent_vs_independent",
    "rademacher_pnorm_exact",
    "MAX_MOMENT_ORDER",
    "MIN_SAMPLES",
    "MIN_BATCHES",
]

MAX_MOMENT_ORDER = 32.0
MIN_SAMPLES = 10_000
MIN_BATCHES = 32

_MASK64 = (1 << 64) - 1

# stream tags keep estimators on disjoint sub-streams of one master seed
_TAG_PNORM = 1
_TAG_MOMENT4 = 2
_TAG_JOINT = 3
_TAG_NA_DEPENDENT = 4
_TAG_NA_INDEPENDENT = 5


def _substream(seed: int, tag: int, batch: int) -> np.random.Generator:
    entropy = (int(seed) & _MASK64, tag, batch)
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class EstimateRecord:
    """One Monte-Carlo estimate with its batch-means standard error."""

    value: float
    stderr: float
    n_samples: int
    seed: int
    batches: int


# -- samplers -----------------------------------------------------------------

def _sample_product(family: ProductFamily, rng: np.random.Generator, size: int) -> np.ndarray:
    exps = rng.standard_exponential((size, family.n))
    signs = rng.integers(0, 2, size=(size, family.n)) * 2 - 1
    out = np.empty((size, family.n))
    for j, tail in enumerate(family.tails):
        out[:, j] = tail.inverse(exps[:, j])
    return out * signs


def _sample_ball(family: UniformBall, rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform on r B_q^n via X = r y / (sum |y_i|^q + W)^{1/q}.

    Here |y_i|^q ~ Gamma(1/q, 1) with symmetric signs and W ~ Exp(1); the
    q = 2 path reuses the Gaussian signs (|g|^2 / 2 ~ Gamma(1/2, 1)).
    """
    n, q, r = family.n, family.q, family.r
    if q == 2.0:
        g = rng.standard_normal((size, n))
        w = rng.standard_exponential(size)
        denom = np.sqrt(0.5 * np.sum(g * g, axis=1) + w)
        return r * (g / math.sqrt(2.0)) / denom[:, None]
    if q == 1.0:
        gam = rng.standard_exponential((size, n))
    else:
        gam = rng.gamma(1.0 / q, size=(size, n))
    w = rng.standard_exponential(size)
    signs = rng.integers(0, 2, size=(size, n)) * 2 - 1
    denom = (np.sum(gam, axis=1) + w) ** (1.0 / q)
    return r * signs * gam ** (1.0 / q) / denom[:, None]


def sample(family: Family, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` iid vectors from the family as a (size, n) array."""
    if size < 1:
        raise InvalidArgumentError(f"sample size must be >= 1, got {size}")
    if isinstance(family, ProductFamily):
        return _sample_product(family, rng, size)
    if isinstance(family, UniformBall):
        return _sample_ball(family, rng, size)
    if isinstance(family, GaussianStd):
        return rng.standard_normal((size, family.n))
    if isinstance(family, UniformCube):
        return (rng.random((size, family.n)) * 2.0 - 1.0) * math.sqrt(3.0)
    raise InvalidArgumentError(f"unknown family {type(family).__name__}")


# -- batch engine ---------------------------------------------------------------

def _batch_counts(n_samples: int, batches: int) -> list[int]:
    base, rem = divmod(n_samples, batches)
    return [base + 1] * rem + [base] * (batches - rem)


def _validate_batching(n_samples: int, batches: int) -> None:
    if n_samples < MIN_SAMPLES:
        raise InvalidArgumentError(
            f"n_samples must be >= {MIN_SAMPLES} for stable batch means, got {n_samples}")
    if batches < MIN_BATCHES:
        raise InvalidArgumentError(f"batches must be >= {MIN_BATCHES}, got {batches}")


def _pnorm_engine(sampler: Callable[[np.random.Generator, int], np.ndarray],
                  a_arr: np.ndarray, p: float, n_samples: int, seed: int,
                  batches: int, tag: int) -> EstimateRecord:
    counts = _batch_counts(n_samples, batches)
    log_means = np.empty(batches)
    for b, m in enumerate(counts):
        rng = _substream(seed, tag, b)
        s = sampler(rng, m) @ a_arr
        with np.errstate(divide="ignore"):
            logs = p * np.log(np.abs(s))
        log_means[b] = logsumexp(logs) - math.log(m)
    weights = np.asarray(counts, dtype=float)
    log_moment = logsumexp(log_means + np.log(weights)) - math.log(n_samples)
    value = math.exp(log_moment / p)
    shift = np.max(log_means)
    if not math.isfinite(shift):
        return EstimateRecord(0.0, 0.0, n_samples, int(seed) & _MASK64, batches)
    u = np.exp(log_means - shift)
    mean_u = float(np.sum(u * weights) / n_samples)
    sd_u = float(np.std(u, ddof=1))
    stderr = value * sd_u / (math.sqrt(batches) * mean_u) / p
    return EstimateRecord(value, stderr, n_samples, int(seed) & _MASK64, batches)


def estimate_pnorm(family: Family, a, p: float, n_samples: int, seed: int,
                   batches: int = 64) -> EstimateRecord:
    """Monte-Carlo ||sum a_i X_i||_p with a batch-means standard error."""
    cv = as_coefficients(a)
    if family.n != cv.n:
        raise InvalidArgumentError(
            f"family dimension {family.n} does not match coefficient length {cv.n}")
    if p < 2:
        raise InvalidArgumentError(f"moment order must satisfy p >= 2, got {p}")
    if p > MAX_MOMENT_ORDER:
        raise OutOfRangeError(f"moment order {p} above supported maximum {MAX_MOMENT_ORDER}")
    if not np.any(cv.array != 0.0):
        raise InvalidArgumentError("coefficient vector must be nonzero")
    _validate_batching(n_samples, batches)
    return _pnorm_engine(lambda rng, m: sample(family, rng, m), cv.array,
                         p, n_samples, seed, batches, _TAG_PNORM)


def estimate_fourth_moment(family: Family, coordinate: int, n_samples: int,
                           seed: int, batches: int = 64) -> EstimateRecord:
    """Monte-Carlo E X_j^4 of a single coordinate."""
    if not (0 <= coordinate < family.n):
        raise InvalidArgumentError(f"coordinate {coordinate} outside [0, {family.n})")
    _validate_batching(n_samples, batches)
    counts = _batch_counts(n_samples, batches)
    means = np.empty(batches)
    for b, m in enumerate(counts):
        rng = _substream(seed, _TAG_MOMENT4, b)
        x = sample(family, rng, m)[:, coordinate]
        means[b] = np.mean(x ** 4)
    weights = np.asarray(counts, dtype=float)
    value = float(np.sum(means * weights) / n_samples)
    stderr = float(np.std(means, ddof=1)) / math.sqrt(batches)
    return EstimateRecord(value, stderr, n_samples, int(seed) & _MASK64, batches)


_JOINT_MAX_DIM = 8
_JOINT_MIN_PROB = math.exp(-10.0)


def estimate_joint_tail(family: Family, thresholds, n_samples: int, seed: int,
                        batches: int = 64) -> EstimateRecord:
    """Empirical P(|X_i| >= t_i for all i) with a binomial standard error.

    Guarded to n <= 8 and estimates above e^{-10}: deeper joint tails are not
    reachable at the supported sample sizes, so the empirical value itself
    enforces the guard.
    """
    t = np.asarray(thresholds, dtype=float)
    if t.shape != (family.n,):
        raise InvalidArgumentError(f"thresholds have shape {t.shape}, expected ({family.n},)")
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise InvalidArgumentError("thresholds must be finite and nonnegative")
    if family.n > _JOINT_MAX_DIM:
        raise OutOfRangeError(
            f"joint tails are supported up to dimension {_JOINT_MAX_DIM}, got {family.n}")
    _validate_batching(n_samples, batches)
    counts = _batch_counts(n_samples, batches)
    hits = 0
    for b, m in enumerate(counts):
        rng = _substream(seed, _TAG_JOINT, b)
        x = sample(family, rng, m)
        hits += int(np.sum(np.all(np.abs(x) >= t[None, :], axis=1)))
    value = hits / n_samples
    if value < _JOINT_MIN_PROB:
        raise OutOfRangeError(
            f"joint tail estimate {value:.3e} is below the e^-10 reliability guard")
    stderr = math.sqrt(value * (1.0 - value) / n_samples)
    return EstimateRecord(value, stderr, n_samples, int(seed) & _MASK64, batches)


def dependent_vs_independent(ball: UniformBall, a, p: float, n_samples: int,
                             seed: int, batches: int = 64
                             ) -> tuple[EstimateRecord, EstimateRecord]:
    """||sum a_i X_i||_p for the ball against its independent-marginals twin.

    The twin X* has iid coordinates drawn through the marginal quantile table,
    so each X*_i matches the law of X_i exactly.  Both runs share the batch
    structure but live on disjoint sub-streams of the seed.
    """
    cv = as_coefficients(a)
    if not isinstance(ball, UniformBall):
        raise InvalidArgumentError("dependent/independent comparison is ball-only")
    if ball.n < 2:
        raise InvalidArgumentError("comparison needs dimension >= 2")
    if ball.n != cv.n:
        raise InvalidArgumentError(
            f"family dimension {ball.n} does not match coefficient length {cv.n}")
    if p < 3:
        raise InvalidArgumentError(
            f"the moment comparison requires p >= 3 (|x|^p convex second derivative), got {p}")
    if p > MAX_MOMENT_ORDER:
        raise OutOfRangeError(f"moment order {p} above supported maximum {MAX_MOMENT_ORDER}")
    _validate_batching(n_samples, batches)
    tables = _marginal_sampler_tables(ball)
    lo = float(tables.cdf_values[0])
    hi = float(tables.cdf_values[-1])

    def indep_sampler(rng: np.random.Generator, m: int) -> np.ndarray:
        u = np.clip(rng.random((m, ball.n)), lo, hi)
        return tables.quantile(u)

    dep = _pnorm_engine(lambda rng, m: _sample_ball(ball, rng, m), cv.array,
                        p, n_samples, seed, batches, _TAG_NA_DEPENDENT)
    indep = _pnorm_engine(indep_sampler, cv.array,
                          p, n_samples, seed, batches, _TAG_NA_INDEPENDENT)
    return dep, indep


_RADEMACHER_MAX_DIM = 20


def rademacher_pnorm_exact(a, p: float) -> float:
    """Exact ||sum a_i eps_i||_p by enumerating all 2^n sign patterns."""
    cv = as_coefficients(a)
    if cv.n > _RADEMACHER_MAX_DIM:
        raise OutOfRangeError(
            f"exact enumeration is supported up to n = {_RADEMACHER_MAX_DIM}, got {cv.n}")
    if p < 1 or not math.isfinite(p):
        raise InvalidArgumentError(f"p must be >= 1, got {p}")
    sums = np.zeros(1)
    for v in cv.values:
        sums = np.concatenate([sums + v, sums - v])
    mags = np.abs(sums)
    top = float(np.max(mags))
    if top == 0.0:
        return 0.0
    return top * float(np.mean((mags / top) ** p)) ** (1.0 / p)
