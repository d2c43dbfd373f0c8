"""Bayesian Bregman risk computation.

Monte-Carlo risk estimation with deterministic block substreams, exact
closed-form risks for the two conjugate models, linear-MMSE values,
Jensen brackets on the cross-entropy-like series term, and the
Hessian-eigenvalue sandwich that pins the risk between multiples of the
MMSE.

Determinism contract: sampling is split into fixed-size blocks; block
``i`` draws from a generator seeded by ``SeedSequence(seed, spawn_key=(i,))``
and partial sums are combined in block order, so results are identical
for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import channels as ch
from . import priors as pr
from .divergence import GeneratorDescriptor, bregman, sandwich_constants
from .errors import (
    DomainError,
    IncompatibleModelError,
    RegularityError,
    SingularityError,
    UnsupportedError,
)

__all__ = [
    "EstimatorSpec",
    "RiskEstimate",
    "b_term_bounds",
    "exact_bregman_risk",
    "exact_mmse",
    "lmmse_value",
    "monte_carlo_risk",
    "sandwich_bounds",
]

BLOCK_SIZE = 1 << 14
_INTERIOR_EPS = 1e-12


@dataclass(frozen=True)
class EstimatorSpec:
    """An estimator under test: affine in y, or the posterior mean.

    ``clamp`` optionally restricts outputs to an interval; affine
    estimators are additionally nudged into the generator's interior by
    1e-12 when the divergence requires interior second arguments.
    """

    kind: str
    c: float = 0.0
    d: float = 0.0
    mode: str = "closed-form"
    moment_mode: str = "corrected"
    clamp: tuple[float, float] | None = None

    @staticmethod
    def linear(c: float, d: float, clamp: tuple[float, float] | None = None) -> "EstimatorSpec":
        return EstimatorSpec(kind="linear", c=float(c), d=float(d), clamp=clamp)

    @staticmethod
    def posterior_mean(
        mode: str = "closed-form", moment_mode: str = "corrected"
    ) -> "EstimatorSpec":
        if mode not in ("closed-form", "quadrature"):
            raise UnsupportedError(f"unknown posterior-mean mode {mode!r}")
        return EstimatorSpec(kind="posterior-mean", mode=mode, moment_mode=moment_mode)


@dataclass(frozen=True)
class RiskEstimate:
    """Monte-Carlo estimate with its standard error and provenance."""

    mean: float
    std_error: float
    n_samples: int
    seed: int

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


def block_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for sample block ``index`` of the stream ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _blocks(n: int):
    start = 0
    index = 0
    while start < n:
        size = min(BLOCK_SIZE, n - start)
        yield index, size
        start += size
        index += 1


class _PosteriorMeanTable:
    """Quadrature posterior means cached per output value."""

    def __init__(self, prior, channel):
        self.prior = prior
        self.channel = channel
        self._cache: dict[int, float] = {}

    def lookup(self, y: np.ndarray) -> np.ndarray:
        uniq = np.unique(y).astype(int)
        missing = [int(v) for v in uniq if int(v) not in self._cache]
        for v in missing:
            self._cache[v] = ch.posterior_mean(self.prior, self.channel, v, mode="quadrature")
        table_max = int(uniq.max()) if uniq.size else 0
        lut = np.array([self._cache.get(v, 0.0) for v in range(table_max + 1)])
        return lut[y.astype(int)]


def _estimator_values(est: EstimatorSpec, prior, channel, y: np.ndarray, gen, table=None):
    if est.kind == "linear":
        g = est.c * y + est.d
        lo, hi = est.clamp if est.clamp is not None else (-math.inf, math.inf)
        iv = gen.intervals[0]
        if iv.singular_lo or not iv.closed_lo:
            lo = max(lo, iv.lo + _INTERIOR_EPS)
        if iv.singular_hi or not iv.closed_hi:
            hi = min(hi, iv.hi - _INTERIOR_EPS) if math.isfinite(iv.hi) else hi
        g = np.clip(g, lo, hi)
    elif est.kind == "posterior-mean":
        if est.mode == "closed-form":
            g = ch.posterior_mean(
                prior, channel, y, mode="closed-form", moment_mode=est.moment_mode
            )
        else:
            g = table.lookup(y)
    else:
        raise UnsupportedError(f"unknown estimator kind {est.kind!r}")
    iv = gen.intervals[0]
    bad = (g < iv.lo) | (g > iv.hi)
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise DomainError(
            f"estimate {g[idx]} for output {y[idx]} lies outside the generator domain"
        )
    return g


def simulate_block(prior, channel, est, gen, seed, index, size, table=None):
    """Draw one block of (x, y, g) triples from its dedicated substream."""
    rng = block_rng(seed, index)
    x = pr._sample_with(prior, size, rng)
    y = ch._sample_with(channel, x, rng)
    g = _estimator_values(est, prior, channel, y.astype(float), gen, table)
    return x, y.astype(float), g


def _reduce_blocks(fn, n: int, workers: int):
    """Apply fn(index, size) to every block, combining results in order."""
    tasks = list(_blocks(n))
    if workers <= 1:
        return [fn(i, s) for i, s in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, i, s) for i, s in tasks]
        return [f.result() for f in futures]


def monte_carlo_risk(
    gen: GeneratorDescriptor,
    prior,
    channel,
    est: EstimatorSpec,
    n: int,
    seed: int,
    workers: int = 1,
) -> RiskEstimate:
    """Monte-Carlo estimate of E[loss(X, g(Y))] with standard error.

    Deterministic for fixed (seed, n) regardless of ``workers``; see the
    module docstring for the substream scheme.
    """
    if n < 100:
        raise DomainError("monte_carlo_risk needs n >= 100")
    if not gen.is_scalar:
        raise UnsupportedError("risk computations use scalar generators")
    table = _PosteriorMeanTable(prior, channel) if (
        est.kind == "posterior-mean" and est.mode == "quadrature"
    ) else None
    if table is not None and isinstance(channel, ch.BinomialChannel):
        table.lookup(np.arange(channel.n + 1))

    def one_block(index, size):
        x, y, g = simulate_block(prior, channel, est, gen, seed, index, size, table)
        loss = np.asarray(bregman(gen, x, g))
        return float(np.sum(loss)), float(np.sum(loss * loss))

    parts = _reduce_blocks(one_block, n, workers)
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / n
    var = max(s2 - n * mean * mean, 0.0) / (n - 1)
    return RiskEstimate(mean=mean, std_error=math.sqrt(var / n), n_samples=n, seed=seed)


def lmmse_value(prior, channel, moment_mode: str = "corrected") -> float:
    """Closed-form risk of the best affine estimator under squared loss."""
    var = pr.prior_variance(prior)
    mean = pr.prior_mean(prior)
    if isinstance(channel, ch.PoissonChannel):
        return var / (channel.a * var / mean + 1.0)
    if isinstance(channel, ch.BinomialChannel):
        if not isinstance(prior, pr.BetaPrior):
            raise IncompatibleModelError("binomial channel needs a beta prior here")
        xe = mean - channel.a * pr.second_moment(prior, moment_mode)
        if xe <= 0.0:
            raise DomainError("degenerate E[X(1 - aX)] in LMMSE value")
        return var / (1.0 + channel.n * channel.a * var / xe)
    raise UnsupportedError(f"unknown channel type {type(channel).__name__}")


def exact_mmse(prior, channel, moment_mode: str = "corrected") -> float:
    """Exact MMSE for the conjugate pairs, where the affine bound is tight.

    For gamma+Poisson this equals theta / (alpha (a + alpha)).  For
    beta+binomial with scaling below 1 the posterior is not exactly
    linear in y, so treat the value as exactness-unverified and compare
    against the quadrature-posterior Monte-Carlo risk.
    """
    if isinstance(prior, pr.GammaPrior) and isinstance(channel, ch.PoissonChannel):
        return lmmse_value(prior, channel)
    if isinstance(prior, pr.BetaPrior) and isinstance(channel, ch.BinomialChannel):
        return lmmse_value(prior, channel, moment_mode)
    raise UnsupportedError("exact MMSE available for gamma+Poisson and beta+binomial")


def _require_natural_pair(gen, prior, channel):
    if isinstance(channel, ch.PoissonChannel):
        if gen.kind != "neg-entropy" or not isinstance(prior, pr.GammaPrior):
            raise IncompatibleModelError(
                "exact Poisson risk needs the neg-entropy generator and a gamma prior"
            )
        kind = "poisson"
    elif isinstance(channel, ch.BinomialChannel):
        if gen.kind != "binary-logit" or not isinstance(prior, pr.BetaPrior):
            raise IncompatibleModelError(
                "exact binomial risk needs the binary-logit generator and a beta prior"
            )
        kind = "binomial"
    else:
        raise UnsupportedError(f"unknown channel type {type(channel).__name__}")
    report = pr.regularity_check(prior, kind)
    if not report.holds:
        raise RegularityError(f"regularity fails: {', '.join(report.reasons)}")


def _poisson_series_term(prior, channel, tol):
    """Sum P(y) m(y) log m(y) over the negative-binomial law, tail-certified."""
    al, th, a = prior.alpha, prior.theta, channel.a
    if a == 0.0:
        m = th / al
        return m * math.log(m)
    shift = 1.0 / (al + a)
    q = a / (al + a)
    chunk = 8192
    total = 0.0
    start = 0
    while True:
        ys = np.arange(start, start + chunk, dtype=float)
        p = np.exp(ch._negbin_log_pmf(prior, channel, ys))
        m = (ys + th) / (al + a)
        total += float(np.sum(p * m * np.log(m)))
        last_y = start + chunk - 1
        r = max(q * (th + last_y + 1.0) / (last_y + 2.0), q)
        if r < 1.0:
            # |m log m| <= m^2 + 1; m grows linearly, P(y) geometrically.
            s0 = r / (1.0 - r)
            s1 = r / (1.0 - r) ** 2
            s2 = r * (1.0 + r) / (1.0 - r) ** 3
            m_last = (last_y + th) / (al + a)
            tail = p[-1] * (
                (m_last**2 + 1.0) * s0 + 2.0 * m_last * shift * s1 + shift**2 * s2
            )
            if tail < tol:
                return total
        start += chunk
        if start > 50_000_000:
            raise DomainError("Poisson risk series did not reach its tail tolerance")


def exact_bregman_risk(
    gen: GeneratorDescriptor,
    prior,
    channel,
    tol: float = 1e-10,
    moment_mode: str = "corrected",
) -> float:
    """Exact Bayesian risk under the channel's natural divergence.

    Poisson: E[X log X] minus the series term over the negative-binomial
    output law.  Binomial: E[X log(X/(1-X))] plus the finite sum of
    m(y) log((1-m(y))/m(y)) against the output law, with m the posterior
    mean.
    """
    _require_natural_pair(gen, prior, channel)
    if isinstance(channel, ch.PoissonChannel):
        e_xlogx = pr.log_moment(prior, "x-log-x")
        return e_xlogx - _poisson_series_term(prior, channel, tol)
    c, d = ch.lmmse_coefficients(prior, channel, moment_mode=moment_mode)
    law = ch.marginal_law(prior, channel)
    m = c * law.support + d
    if np.any(m <= 0.0) or np.any(m >= 1.0):
        raise DomainError("posterior mean escapes (0, 1); cannot evaluate the logit term")
    series = float(np.sum(law.pmf * m * np.log((1.0 - m) / m)))
    return pr.log_moment(prior, "x-logit") + series


def b_term_bounds(prior, channel, moment_mode: str = "corrected") -> tuple[float, float]:
    """Jensen bracket on the series term of the exact risk.

    Poisson: conditioning and convexity of u log u give
    E[m(aX) log m(aX)] <= B <= E[X log m(aX)] with m the posterior-mean
    line.  Binomial: concavity of u log((1-u)/u) gives the upper bound
    by conditioning; the lower bound is the secant of that concave
    function over the reachable posterior-mean range, evaluated at the
    mean output.
    """
    if isinstance(channel, ch.PoissonChannel):
        if not isinstance(prior, pr.GammaPrior):
            raise IncompatibleModelError("Poisson bracket needs a gamma prior")
        al, th, a = prior.alpha, prior.theta, channel.a

        def m_of_x(x):
            return (a * x + th) / (al + a)

        lower = pr.expectation(prior, lambda x: m_of_x(x) * np.log(m_of_x(x)))
        upper = pr.expectation(prior, lambda x: x * np.log(m_of_x(x)))
        return lower, upper
    if isinstance(channel, ch.BinomialChannel):
        if not isinstance(prior, pr.BetaPrior):
            raise IncompatibleModelError("binomial bracket needs a beta prior")
        c, d = ch.lmmse_coefficients(prior, channel, moment_mode=moment_mode)
        n, a = channel.n, channel.a

        def h(u):
            return u * np.log((1.0 - u) / u)

        upper = pr.expectation(prior, lambda x: h(c * n * a * x + d))
        m_lo, m_hi = d, c * n + d
        m_mean = c * n * a * pr.prior_mean(prior) + d
        if m_hi <= m_lo:
            lower = float(h(m_lo))
        else:
            lam = (m_mean - m_lo) / (m_hi - m_lo)
            lower = float((1.0 - lam) * h(m_lo) + lam * h(m_hi))
        return lower, upper
    raise UnsupportedError(f"unknown channel type {type(channel).__name__}")


def sandwich_bounds(
    gen: GeneratorDescriptor,
    prior,
    channel,
    box,
    grid: int = 201,
    moment_mode: str = "corrected",
    mass_tol: float = 1e-6,
    strict_mass: bool = True,
) -> tuple[float, float]:
    """Risk bracket (kl/2) mmse <= R <= (ku/2) mmse from Hessian extrema.

    The box must keep the Hessian bounded (an edge on a singular domain
    boundary is rejected) and should carry all but ``mass_tol`` of the
    prior mass; pass ``strict_mass=False`` to compute the bracket anyway
    when it does not.
    """
    if not gen.is_scalar:
        raise UnsupportedError("sandwich bounds use scalar generators")
    lo, hi = float(np.asarray(box, float).ravel()[0]), float(np.asarray(box, float).ravel()[-1])
    iv = gen.intervals[0]
    if (iv.singular_lo and lo <= iv.lo) or (iv.singular_hi and hi >= iv.hi):
        raise SingularityError(
            f"Hessian of {gen.kind!r} is unbounded on [{lo}, {hi}]; no sandwich applies"
        )
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError("sandwich box must be finite")
    outside = 1.0 - pr.mass_inside(prior, lo, hi)
    if strict_mass and outside > mass_tol:
        raise DomainError(
            f"prior mass {outside:.3g} outside the box exceeds {mass_tol:g}"
        )
    kl, ku = sandwich_constants(gen, (lo, hi), grid)
    mmse = exact_mmse(prior, channel, moment_mode)
    return 0.5 * kl * mmse, 0.5 * ku * mmse
