"""Unconditional isotropic log-concave families and their level-set geometry.

Four families are provided, each normalized so that every coordinate has
unit variance:

* ``ProductFamily``  -- independent symmetric coordinates given by tail
  functions (the exponential member has density prod (1/sqrt 2) e^{-sqrt2 |x_i|});
* ``GaussianStd``    -- the standard Gaussian;
* ``UniformCube``    -- uniform on [-sqrt 3, sqrt 3]^n;
* ``UniformBall``    -- uniform on r B_q^n with the isotropic radius r.

``level_set_support`` evaluates the support functional of the density level
set {g_I >= e^{-p} g_I(0)} of a marginal block I; these sets are exactly the
sub-level sets of -ln(g_I/g_I(0)) and have closed forms for every family
here.  For the uniform ball, a k-coordinate marginal has

    g_I(x) / g_I(0) = (1 - (||x||_q / r)^q)^{(n-k)/q},

since the complementary section is a scaled (n-k)-dimensional q-ball of
radius (r^q - ||x||_q^q)^{1/q}, so the level set is the q-ball of radius
r (1 - e^{-pq/(n-k)})^{1/q}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from types import SimpleNamespace
from typing import Union

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import betaln, gammaln

from .errors import InvalidArgumentError, UnsupportedFamilyError
from .tails import TailFunction, tail_from_spec

__all__ = [
    "ProductFamily",
    "UniformBall",
    "GaussianStd",
    "UniformCube",
    "Family",
    "product_exponential",
    "isotropic_radius",
    "log_density",
    "level_set_support",
    "marginal_cdf",
    "marginal_quantile",
    "family_from_spec",
]

_SQRT3 = math.sqrt(3.0)
_ISOTROPY_TOL = 1e-3


@dataclass(frozen=True)
class ProductFamily:
    """Independent symmetric coordinates; tail i has P(|X_i| >= t) = e^{-N_i(t)}."""

    tails: tuple[TailFunction, ...]

    def __post_init__(self) -> None:
        if len(self.tails) == 0:
            raise InvalidArgumentError("product family needs at least one coordinate")
        for i, tail in enumerate(self.tails):
            var = tail.variance()
            if abs(var - 1.0) > _ISOTROPY_TOL:
                raise InvalidArgumentError(
                    f"coordinate {i} has variance {var:.6f}; product families must be isotropic")

    @property
    def n(self) -> int:
        return len(self.tails)

    @property
    def is_linear(self) -> bool:
        return all(t.kind == "linear" for t in self.tails)


@dataclass(frozen=True)
class UniformBall:
    """Uniform law on r * B_q^n."""

    n: int
    q: float
    r: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidArgumentError(f"dimension must be >= 1, got {self.n}")
        if self.q < 1 or not math.isfinite(self.q):
            raise InvalidArgumentError(f"ball exponent must satisfy q >= 1, got {self.q}")
        if not (self.r > 0 and math.isfinite(self.r)):
            raise InvalidArgumentError(f"radius must be positive, got {self.r}")

    @classmethod
    def isotropic(cls, n: int, q: float) -> "UniformBall":
        return cls(n=n, q=float(q), r=isotropic_radius(n, q))


@dataclass(frozen=True)
class GaussianStd:
    """Standard Gaussian on R^n."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidArgumentError(f"dimension must be >= 1, got {self.n}")


@dataclass(frozen=True)
class UniformCube:
    """Uniform law on [-sqrt 3, sqrt 3]^n."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidArgumentError(f"dimension must be >= 1, got {self.n}")


Family = Union[ProductFamily, UniformBall, GaussianStd, UniformCube]


def product_exponential(n: int) -> ProductFamily:
    return ProductFamily(tails=tuple(TailFunction.exponential() for _ in range(n)))


def isotropic_radius(n: int, q: float) -> float:
    """Radius r with E X_1^2 = 1 for X uniform on r B_q^n.

    The coordinate marginal of the unit ball is proportional to
    (1 - |x|^q)^{(n-1)/q}, so with the substitution u = x^q the second-moment
    ratio reduces to Beta functions:

        E X_1^2 = B(3/q, (n-1)/q + 1) / B(1/q, (n-1)/q + 1),

    evaluated in log space.  Closed forms follow: q = 2 gives sqrt(n + 2) and
    q = 1 gives sqrt((n+1)(n+2)/2).
    """
    if n < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {n}")
    if q < 1 or not math.isfinite(q):
        raise InvalidArgumentError(f"ball exponent must satisfy q >= 1, got {q}")
    s = (n - 1) / q
    m2 = math.exp(betaln(3.0 / q, s + 1.0) - betaln(1.0 / q, s + 1.0))
    r = 1.0 / math.sqrt(m2)
    # r grows like n^{1/q}; far outside that window the moment ratio is wrong
    assert 0.1 <= r / n ** (1.0 / q) <= 10.0
    return r


def _log_ball_volume(n: int, q: float) -> float:
    """ln vol(B_q^n) = n ln(2 Gamma(1 + 1/q)) - ln Gamma(1 + n/q)."""
    return n * (math.log(2.0) + gammaln(1.0 + 1.0 / q)) - gammaln(1.0 + n / q)


def _lq_norm(x: np.ndarray, q: float) -> float:
    if math.isinf(q):
        return float(np.max(np.abs(x)))
    ax = np.abs(np.asarray(x, dtype=float))
    top = float(np.max(ax))
    if top == 0.0:
        return 0.0
    return top * float(np.sum((ax / top) ** q)) ** (1.0 / q)


def log_density(family: Family, x) -> float:
    """ln g(x) of the family density (-inf outside the support)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (family.n,):
        raise InvalidArgumentError(f"point has shape {x.shape}, expected ({family.n},)")
    if isinstance(family, GaussianStd):
        return -0.5 * family.n * math.log(2.0 * math.pi) - 0.5 * float(x @ x)
    if isinstance(family, UniformCube):
        if np.max(np.abs(x)) > _SQRT3 * (1.0 + 1e-12):
            return -math.inf
        return -family.n * math.log(2.0 * _SQRT3)
    if isinstance(family, UniformBall):
        if _lq_norm(x, family.q) > family.r * (1.0 + 1e-12):
            return -math.inf
        return -(family.n * math.log(family.r) + _log_ball_volume(family.n, family.q))
    if isinstance(family, ProductFamily):
        if not family.is_linear:
            raise UnsupportedFamilyError(
                "closed-form density is only available for linear-tail product members")
        total = 0.0
        for tail, xi in zip(family.tails, x):
            total += math.log(tail.rate / 2.0) - tail.rate * abs(float(xi))
        return total
    raise UnsupportedFamilyError(f"unknown family {type(family).__name__}")


def level_set_support(family: Family, index_set, a_block, p: float) -> float:
    """sup{sum_i a_i x_i : g_I(x) >= e^{-p} g_I(0)} over the marginal block I.

    Closed forms per family (k = |I|):

    * linear product: the level set is {sum rate_i |x_i| <= p}, so the support
      functional is p * max_i |a_i| / rate_i;
    * Gaussian: ball of radius sqrt(2p), giving sqrt(2p) ||a||_2;
    * cube: the whole cube for any p > 0, giving sqrt 3 * sum |a_i|;
    * ball: q-ball of radius r (1 - e^{-pq/(n-k)})^{1/q} (the full section's
      r for k = n), paired with the dual norm ||a||_{q'}.
    """
    if not (p > 0 and math.isfinite(p)):
        raise InvalidArgumentError(f"level-set budget must be positive, got {p}")
    idx = sorted(set(int(i) for i in index_set))
    if len(idx) == 0:
        raise InvalidArgumentError("index set must be non-empty")
    if idx[0] < 0 or idx[-1] >= family.n:
        raise InvalidArgumentError(f"index set outside [0, {family.n})")
    a_block = np.asarray(a_block, dtype=float)
    if a_block.shape != (len(idx),):
        raise InvalidArgumentError(
            f"coefficient block has shape {a_block.shape}, expected ({len(idx)},)")
    k = len(idx)
    if isinstance(family, ProductFamily):
        if not family.is_linear:
            raise UnsupportedFamilyError(
                "level sets are closed-form only for linear-tail product members")
        rates = np.array([family.tails[i].rate for i in idx])
        return p * float(np.max(np.abs(a_block) / rates))
    if isinstance(family, GaussianStd):
        return math.sqrt(2.0 * p) * _lq_norm(a_block, 2.0)
    if isinstance(family, UniformCube):
        return _SQRT3 * float(np.sum(np.abs(a_block)))
    if isinstance(family, UniformBall):
        q = family.q
        qprime = math.inf if q == 1.0 else q / (q - 1.0)
        if k == family.n:
            radius = family.r
        else:
            radius = family.r * (1.0 - math.exp(-p * q / (family.n - k))) ** (1.0 / q)
        return radius * _lq_norm(a_block, qprime)
    raise UnsupportedFamilyError(f"unknown family {type(family).__name__}")


# -- ball coordinate marginal ------------------------------------------------

_PANELS = 8192  # 2*_PANELS + 1 >= 4096 quadrature nodes


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """Quintic ramp with vanishing first and second derivatives at both ends."""
    return t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def _smoothstep_deriv(t: np.ndarray) -> np.ndarray:
    return 30.0 * t ** 2 * (1.0 - t) ** 2


@lru_cache(maxsize=None)
def _ball_marginal_tables(ball: UniformBall) -> SimpleNamespace:
    """Monotone CDF table of the one-coordinate ball marginal plus interpolants.

    The marginal density on [-r, r] is proportional to
    (1 - (|x|/r)^q)^{(n-1)/q}.  The half-line CDF is accumulated with composite
    Simpson on a uniform grid in a graded variable x = r * w(t): w is a quintic
    smoothstep, so the transformed integrand vanishes to second order at both
    endpoints and the edge singularity of the density derivative (q > n - 1)
    cannot poison the panel error.
    """
    if ball.n < 2:
        raise InvalidArgumentError("coordinate marginal requires dimension >= 2")
    s = (ball.n - 1) / ball.q
    nodes = np.linspace(0.0, 1.0, 2 * _PANELS + 1)
    x = ball.r * _smoothstep(nodes)
    u = np.clip(x / ball.r, 0.0, 1.0)
    dens = (1.0 - u ** ball.q) ** s
    integrand = dens * ball.r * _smoothstep_deriv(nodes)
    h = nodes[1] - nodes[0]
    panel = (h / 3.0) * (integrand[0:-2:2] + 4.0 * integrand[1::2] + integrand[2::2])
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    half = cum[-1]
    x_even = x[::2]
    cdf_right = 0.5 + 0.5 * cum / half
    # mirror to the negative half-line; drop the duplicated center point
    x_full = np.concatenate([-x_even[::-1], x_even[1:]])
    cdf_full = np.concatenate([1.0 - cdf_right[::-1], cdf_right[1:]])
    # panels near the support edge can underflow to zero mass; PCHIP needs
    # strictly increasing data, so collapse the flat steps
    keep = np.concatenate([[True], np.diff(cdf_full) > 0.0])
    x_keep = x_full[keep]
    cdf_keep = cdf_full[keep]
    return SimpleNamespace(
        x=x_keep,
        cdf_values=cdf_keep,
        cdf=PchipInterpolator(x_keep, cdf_keep, extrapolate=False),
        quantile=PchipInterpolator(cdf_keep, x_keep, extrapolate=False),
    )


def marginal_cdf(ball: UniformBall, x):
    """CDF of a single ball coordinate, vectorized; clamps outside [-r, r]."""
    tables = _ball_marginal_tables(ball)
    xv = np.asarray(x, dtype=float)
    clipped = np.clip(xv, tables.x[0], tables.x[-1])
    out = tables.cdf(clipped)
    return float(out) if out.ndim == 0 else out


def marginal_quantile(ball: UniformBall, u):
    """Inverse marginal CDF; defined for u strictly inside (0, 1)."""
    tables = _ball_marginal_tables(ball)
    uv = np.asarray(u, dtype=float)
    if np.any(uv <= 0.0) or np.any(uv >= 1.0):
        raise InvalidArgumentError("quantile argument must lie strictly inside (0, 1)")
    clipped = np.clip(uv, tables.cdf_values[0], tables.cdf_values[-1])
    out = tables.quantile(clipped)
    return float(out) if out.ndim == 0 else out


def _marginal_sampler_tables(ball: UniformBall):
    """Internal: quantile interpolant for iid marginal sampling (clamps at 0/1)."""
    return _ball_marginal_tables(ball)


# -- family spec strings -----------------------------------------------------

def family_from_spec(spec: str, n: int) -> Family:
    """Build a family from its CLI string: ``exp``, ``gauss``, ``cube``,
    ``ball:q=<val>``, or ``product:<tail-spec>[,<tail-spec>...]``.

    A single-tail product spec is replicated to all n coordinates; otherwise
    the number of tail specs must equal n.
    """
    spec = spec.strip()
    if n < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {n}")
    if spec == "exp":
        return product_exponential(n)
    if spec == "gauss":
        return GaussianStd(n=n)
    if spec == "cube":
        return UniformCube(n=n)
    if spec.startswith("ball:"):
        body = spec[len("ball:"):]
        key, _, raw = body.partition("=")
        if key.strip() != "q" or not raw:
            raise InvalidArgumentError(f"malformed ball spec {spec!r}")
        try:
            q = float(raw)
        except ValueError as exc:
            raise InvalidArgumentError(f"malformed ball spec {spec!r}") from exc
        return UniformBall.isotropic(n, q)
    if spec.startswith("product:"):
        parts = [part for part in spec[len("product:"):].split(",") if part.strip()]
        if not parts:
            raise InvalidArgumentError(f"product spec {spec!r} lists no tails")
        tails = [tail_from_spec(part) for part in parts]
        if len(tails) == 1:
            tails = tails * n
        if len(tails) != n:
            raise InvalidArgumentError(
                f"product spec lists {len(tails)} tails but n = {n}")
        return ProductFamily(tails=tuple(tails))
    raise InvalidArgumentError(f"unknown family spec {spec!r}")
