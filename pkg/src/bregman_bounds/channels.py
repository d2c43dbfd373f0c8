"""Poisson and Binomial forward models.

Covers the conditional pmfs and exact samplers, polynomial conditional
moments built from Stirling numbers and falling factorials, marginal
output laws (negative-binomial and hypergeometric closed forms with a
quadrature fallback), posterior means in closed form and by quadrature,
linear-MMSE coefficients, and the Laplace-transform linearity constant
that powers the universal Poisson bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import priors
from .errors import DomainError, IncompatibleModelError, UnsupportedError
from .priors import BetaPrior, GammaPrior
from .specfun import falling_factorial, gauss_2f1, log_beta, log_gamma, stirling2

__all__ = [
    "BinomialChannel",
    "MarginalLaw",
    "PoissonChannel",
    "conditional_moment",
    "linearity_constant",
    "lmmse_coefficients",
    "marginal_law",
    "marginal_pmf",
    "pmf",
    "posterior_mean",
    "sample",
]

_MAX_CONDITIONAL_ORDER = 6


@dataclass(frozen=True)
class PoissonChannel:
    """Poisson transformation y ~ Poisson(a x); a = 0 is the degenerate
    constant-output channel kept around for limit tests."""

    a: float

    def __post_init__(self):
        if self.a < 0.0:
            raise DomainError("PoissonChannel requires a >= 0")


@dataclass(frozen=True)
class BinomialChannel:
    """Binomial transformation y ~ Binomial(n, a x) with a x in [0, 1]."""

    n: int
    a: float

    def __post_init__(self):
        if self.n < 1 or int(self.n) != self.n:
            raise DomainError("BinomialChannel requires integer n >= 1")
        if not 0.0 <= self.a <= 1.0:
            raise DomainError("BinomialChannel requires a in [0, 1]")


@dataclass(frozen=True)
class MarginalLaw:
    """Truncated output law with a certified bound on the missing tail."""

    support: np.ndarray
    pmf: np.ndarray
    tail_bound: float


def _check_input(channel, x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if isinstance(channel, PoissonChannel):
        if np.any(arr < 0.0):
            raise DomainError("Poisson channel input must be non-negative")
    elif isinstance(channel, BinomialChannel):
        if np.any(arr < 0.0) or np.any(channel.a * arr > 1.0):
            raise DomainError("Binomial channel input must satisfy a x in [0, 1]")
    else:
        raise UnsupportedError(f"unknown channel type {type(channel).__name__}")
    return arr


def pmf(channel, y, x):
    """Conditional pmf P(y | x), vectorized over ``x`` or ``y``.

    Uses the 0^0 = 1 convention so a zero-rate input is a point mass at
    zero output.
    """
    x_arr = _check_input(channel, x)
    y_arr = np.asarray(y)
    if np.any(y_arr < 0) or np.any(y_arr != np.floor(y_arr)):
        raise DomainError("channel output must be a non-negative integer")
    y_arr = y_arr.astype(float)
    if isinstance(channel, PoissonChannel):
        rate = channel.a * x_arr
        safe = np.where(rate > 0.0, rate, 1.0)
        log_p = y_arr * np.log(safe) - rate - log_gamma(y_arr + 1.0)
        vals = np.where(rate > 0.0, np.exp(log_p), np.where(y_arr == 0, 1.0, 0.0))
    else:
        n = channel.n
        in_range = y_arr <= n
        y_safe = np.where(in_range, y_arr, 0.0)
        p = channel.a * x_arr
        log_comb = log_gamma(n + 1.0) - log_gamma(y_safe + 1.0) - log_gamma(n - y_safe + 1.0)
        safe_p = np.where(p > 0.0, p, 1.0)
        safe_q = np.where(p < 1.0, 1.0 - p, 1.0)
        log_p = log_comb + y_safe * np.log(safe_p) + (n - y_safe) * np.log(safe_q)
        vals = np.exp(log_p)
        vals = np.where((p == 0.0) & (y_safe > 0), 0.0, vals)
        vals = np.where((p == 0.0) & (y_safe == 0), 1.0, vals)
        vals = np.where((p == 1.0) & (y_safe < n), 0.0, vals)
        vals = np.where((p == 1.0) & (y_safe == n), 1.0, vals)
        vals = np.where(in_range, vals, 0.0)
    if np.ndim(y) == 0 and np.ndim(x) == 0:
        return float(vals)
    return vals


def sample(channel, x, seed: int) -> int:
    """One exact draw from P(. | x); deterministic for a given seed."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return int(_sample_with(channel, np.asarray([x], dtype=float), rng)[0])


def _sample_with(channel, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    x = _check_input(channel, x)
    if isinstance(channel, PoissonChannel):
        return rng.poisson(channel.a * x)
    return rng.binomial(channel.n, channel.a * x)


def conditional_moment(channel, m: int, x):
    """E[Y^m | X = x] as an exact polynomial in a x.

    Poisson uses the Stirling (Touchard) expansion sum_k s(m, k) (ax)^k;
    Binomial additionally carries falling factorials of n.
    """
    if m < 0 or m > _MAX_CONDITIONAL_ORDER:
        raise UnsupportedError(f"conditional_moment supports 0 <= m <= {_MAX_CONDITIONAL_ORDER}")
    x_arr = _check_input(channel, x)
    ax = channel.a * x_arr
    out = np.zeros_like(ax)
    for k in range(m, -1, -1):
        coef = float(stirling2(m, k))
        if isinstance(channel, BinomialChannel):
            coef *= falling_factorial(channel.n, k)
        out = out * ax + coef
    if np.ndim(x) == 0:
        return float(out)
    return out


def _negbin_log_pmf(prior: GammaPrior, channel: PoissonChannel, y: np.ndarray) -> np.ndarray:
    al, th, a = prior.alpha, prior.theta, channel.a
    y = np.asarray(y, dtype=float)
    if a == 0.0:
        return np.where(y == 0, 0.0, -math.inf)
    return (
        y * math.log(a)
        + th * math.log(al)
        - (th + y) * math.log(al + a)
        + log_gamma(th + y)
        - log_gamma(y + 1.0)
        - log_gamma(th)
    )


def _terminating_2f1(a_par: float, m: int, c: float, z: float) -> tuple[float, float]:
    """2F1(a, -m; c; z) summed to termination, with its largest |term|.

    The ratio of the two tells how many digits the alternating sum
    cancelled away.
    """
    term = 1.0
    total = 1.0
    peak = 1.0
    for j in range(m):
        term *= (a_par + j) * (j - m) / ((c + j) * (1.0 + j)) * z
        total += term
        peak = max(peak, abs(term))
    return total, peak


def _beta_binomial_pmf(prior: BetaPrior, channel: BinomialChannel, y: int) -> float:
    """Output pmf C(n,y) c_{a,b} a^y 2F1(a+y, y-n; b+a+y; a) / c_{a+y,b}.

    At a = 1 the terminating sum collapses to a stable gamma-function
    ratio; elsewhere it alternates in sign, so it is only trusted while
    the cancellation leaves at least ten significant digits.  Otherwise
    the defining mixture integral is used.
    """
    al, be, n, a = prior.alpha, prior.beta, channel.n, channel.a
    if a == 0.0:
        return 1.0 if y == 0 else 0.0
    log_comb = log_gamma(n + 1.0) - log_gamma(y + 1.0) - log_gamma(n - y + 1.0)
    log_ratio = log_beta(al + y, be) - log_beta(al, be)
    if a == 1.0:
        hyp = gauss_2f1(al + y, float(y - n), al + be + y, 1.0)
        return math.exp(log_comb + log_ratio) * hyp
    hyp, peak = _terminating_2f1(al + y, n - y, al + be + y, a)
    if hyp > 0.0 and math.isfinite(hyp) and peak * 1e-16 < 1e-10 * hyp:
        return math.exp(log_comb + y * math.log(a) + log_ratio) * hyp
    return _marginal_quadrature(prior, channel, y)


def _marginal_quadrature(prior, channel, y: int) -> float:
    return priors.expectation(prior, lambda x: pmf(channel, y, x), rel_tol=1e-11)


def marginal_pmf(prior, channel, y: int, method: str = "auto") -> float:
    """Marginal output probability P(Y = y).

    ``auto`` picks the closed form for the conjugate pairs (negative
    binomial for gamma+Poisson, hypergeometric for beta+binomial) and
    quadrature otherwise; ``quadrature`` forces the mixture integral.
    """
    if y < 0 or int(y) != y:
        raise DomainError("y must be a non-negative integer")
    y = int(y)
    if method not in ("auto", "closed-form", "quadrature"):
        raise UnsupportedError(f"unknown marginal method {method!r}")
    if isinstance(channel, BinomialChannel) and isinstance(prior, GammaPrior):
        raise IncompatibleModelError("gamma prior cannot feed a binomial channel")
    if isinstance(channel, BinomialChannel) and y > channel.n:
        return 0.0
    if method == "quadrature":
        return _marginal_quadrature(prior, channel, y)
    if isinstance(prior, GammaPrior) and isinstance(channel, PoissonChannel):
        return float(np.exp(_negbin_log_pmf(prior, channel, np.array([y]))[0]))
    if isinstance(prior, BetaPrior) and isinstance(channel, BinomialChannel):
        return _beta_binomial_pmf(prior, channel, y)
    if method == "closed-form":
        raise UnsupportedError("no closed-form marginal for this prior/channel pair")
    return _marginal_quadrature(prior, channel, y)


def marginal_law(prior, channel, tol: float = 1e-12) -> MarginalLaw:
    """Output law, truncated with a certified tail bound below ``tol``.

    Binomial outputs are finite so the tail bound is zero; the
    gamma-Poisson negative binomial is cut once the geometric envelope
    of the remaining mass drops below ``tol``.
    """
    if isinstance(channel, BinomialChannel):
        ys = np.arange(channel.n + 1)
        vals = np.array([marginal_pmf(prior, channel, int(y)) for y in ys])
        return MarginalLaw(support=ys, pmf=vals, tail_bound=0.0)
    if not isinstance(prior, GammaPrior):
        raise UnsupportedError("truncated marginal law needs a gamma prior for Poisson")
    al, th, a = prior.alpha, prior.theta, channel.a
    if a == 0.0:
        return MarginalLaw(support=np.arange(1), pmf=np.array([1.0]), tail_bound=0.0)
    q = a / (al + a)
    chunk = 4096
    start = 0
    blocks = []
    while True:
        ys = np.arange(start, start + chunk)
        blocks.append(np.exp(_negbin_log_pmf(prior, channel, ys)))
        last_y = start + chunk - 1
        ratio = max(q * (th + last_y + 1.0) / (last_y + 2.0), q)
        if ratio < 1.0:
            tail = blocks[-1][-1] * ratio / (1.0 - ratio)
            if tail < tol:
                break
        start += chunk
        if start > 50_000_000:
            raise DomainError("marginal law truncation did not converge")
    vals = np.concatenate(blocks)
    return MarginalLaw(support=np.arange(vals.size), pmf=vals, tail_bound=float(tail))


def posterior_mean(
    prior,
    channel,
    y,
    mode: str = "closed-form",
    moment_mode: str = "corrected",
):
    """Posterior mean E[X | Y = y].

    Closed form exists for gamma+Poisson ((y + theta)/(alpha + a)) and
    beta+binomial (linear in y via the prior moments); ``quadrature``
    evaluates the Bayes integral directly and works for any supported
    pair.  Vectorized over ``y``.
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0) or np.any(y_arr != np.floor(y_arr)):
        raise DomainError("y must consist of non-negative integers")
    if mode == "closed-form":
        if isinstance(prior, GammaPrior) and isinstance(channel, PoissonChannel):
            out = (y_arr + prior.theta) / (prior.alpha + channel.a)
        elif isinstance(prior, BetaPrior) and isinstance(channel, BinomialChannel):
            c, d = lmmse_coefficients(prior, channel, moment_mode=moment_mode)
            out = c * y_arr + d
        else:
            raise UnsupportedError("closed-form posterior mean needs a conjugate pair")
    elif mode == "quadrature":
        flat = np.atleast_1d(y_arr)
        out_flat = np.empty(flat.shape)
        for i, yy in enumerate(flat):
            num = priors.expectation(
                prior, lambda x: x * pmf(channel, int(yy), x), rel_tol=1e-11
            )
            den = _marginal_quadrature(prior, channel, int(yy))
            out_flat[i] = num / den
        out = out_flat.reshape(y_arr.shape)
    else:
        raise UnsupportedError(f"unknown posterior mean mode {mode!r}")
    if np.ndim(y) == 0:
        return float(out)
    return out


def lmmse_coefficients(prior, channel, moment_mode: str = "corrected") -> tuple[float, float]:
    """Coefficients (c*, d*) of the best affine estimator under squared loss."""
    mean = priors.prior_mean(prior)
    if isinstance(channel, PoissonChannel):
        var = priors.prior_variance(prior)
        a = channel.a
        den = a * var + mean
        if var <= 0.0 or den <= 0.0:
            raise DomainError("degenerate prior variance for LMMSE coefficients")
        return var / den, mean**2 / den
    if isinstance(channel, BinomialChannel):
        if not isinstance(prior, BetaPrior):
            raise IncompatibleModelError("binomial channel needs a [0, 1]-supported prior")
        var = priors.prior_variance(prior)
        a, n = channel.a, channel.n
        xe = mean - a * priors.second_moment(prior, moment_mode)
        den = n * a * xe + (n * a) ** 2 * var
        if var <= 0.0 or den <= 0.0:
            raise DomainError("degenerate variance for LMMSE coefficients")
        return a * n * var / den, n * a * xe * mean / den
    raise UnsupportedError(f"unknown channel type {type(channel).__name__}")


def linearity_constant(prior: GammaPrior, channel: PoissonChannel, n_max: int = 256) -> float:
    """Supremum of the Laplace-transform derivative ratios for a gamma prior.

    The ratio at order n is (theta + n) / ((n + 1)(alpha + a)), monotone
    decreasing for theta >= 1 (supremum at n = 0) and increasing toward
    1 / (alpha + a) otherwise; the returned value bounds the posterior
    mean by c (y + 1).
    """
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    if not isinstance(prior, GammaPrior) or not isinstance(channel, PoissonChannel):
        raise UnsupportedError("linearity constant is available for gamma+Poisson")
    al, th, a = prior.alpha, prior.theta, channel.a
    if th >= 1.0:
        return th / (al + a)
    ns = np.arange(n_max + 1, dtype=float)
    return float(np.max((th + ns) / ((ns + 1.0) * (al + a))))
