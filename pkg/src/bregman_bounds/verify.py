"""Self-contained oracle suites behind the ``verify`` CLI command.

Each check re-derives a closed form through an independent in-package
route (adaptive quadrature, finite differences, Monte Carlo) and
compares at a stated tolerance.  No external packages are involved, so
the suites run anywhere the library runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bounds as bd
from . import channels as ch
from . import divergence as dv
from . import priors as pr
from . import risk as rk

__all__ = ["CheckResult", "run_suite", "SUITES"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def _check(name, ok, detail=""):
    return CheckResult(name=name, ok=bool(ok), detail=detail)


def _scalar_generators():
    return [
        (dv.squared_mahalanobis(1.0), (-4.0, 4.0)),
        (dv.neg_entropy(), (0.02, 5.0)),
        (dv.binary_logit(), (0.02, 0.98)),
        (dv.neg_binomial_gen(), (0.02, 5.0)),
    ]


def suite_divergence() -> list[CheckResult]:
    out = []
    rng = np.random.default_rng(2024)
    # l2 representation == divergence
    worst = 0.0
    for gen, (lo, hi) in _scalar_generators():
        us = rng.uniform(lo, hi, 150)
        vs = rng.uniform(lo, hi, 150)
        for u, v in zip(us, vs):
            b = dv.bregman(gen, float(u), float(v))
            l2 = dv.l2_form(gen, float(u), float(v))
            worst = max(worst, abs(l2 - b) / max(abs(b), 1e-12))
    out.append(_check("l2-form matches divergence", worst < 1e-8, f"max rel err {worst:.2e}"))
    # polynomial inverse-weight chains (linearized slot is the first argument)
    ne, bl = dv.neg_entropy(), dv.binary_logit()
    ok_chain = True
    for u in np.linspace(0.05, 5.0, 8):
        for v in np.linspace(0.05, 5.0, 8):
            w = dv.delta_weight(ne, float(v), float(u)).scalar
            ok_chain &= u <= 1.0 / w + 1e-9
            ok_chain &= 1.0 / w <= dv.delta_inverse_upper("neg-entropy", u, v, "linear") + 1e-9
    out.append(_check("linear inverse-weight chain (half-line)", ok_chain))
    ok_chain = True
    for u in np.linspace(0.05, 0.95, 8):
        for v in np.linspace(0.05, 0.95, 8):
            w = dv.delta_weight(bl, float(v), float(u)).scalar
            cubic = dv.delta_inverse_upper("binary-logit", u, v, "cubic")
            quad = dv.delta_inverse_upper("binary-logit", u, v, "quadratic")
            relaxed = dv.delta_inverse_upper("binary-logit", u, v, "quadratic", relaxed=True)
            ok_chain &= 1.0 / w <= cubic + 1e-9 and cubic <= quad + 1e-9 and quad <= relaxed + 1e-9
    out.append(_check("cubic/quadratic inverse-weight chain (unit interval)", ok_chain))
    # generalized law of cosines
    worst = 0.0
    for gen, (lo, hi) in _scalar_generators():
        pts = rng.uniform(lo, hi, (60, 3))
        for u, w, v in pts:
            lhs = dv.bregman(gen, float(u), float(v))
            rhs = (
                dv.bregman(gen, float(u), float(w))
                + dv.bregman(gen, float(w), float(v))
                - (u - w) * (gen.gradient(float(v)) - gen.gradient(float(w)))
            )
            worst = max(worst, abs(lhs - rhs))
    out.append(_check("generalized law of cosines", worst < 1e-10, f"max abs err {worst:.2e}"))
    return out


def suite_priors() -> list[CheckResult]:
    out = []
    models = [pr.GammaPrior(2.1, 3.0), pr.GammaPrior(1.5, 4.0), pr.BetaPrior(3.0, 5.0), pr.BetaPrior(3.0, 2.5)]
    # score against central differences of log pdf
    worst = 0.0
    for prior in models:
        lo, hi = (0.3, 3.0) if isinstance(prior, pr.GammaPrior) else (0.15, 0.85)
        for x in np.linspace(lo, hi, 9):
            h = 1e-6 * max(abs(x), 1.0)
            fd = (math.log(pr.pdf(prior, x + h)) - math.log(pr.pdf(prior, x - h))) / (2 * h)
            worst = max(worst, abs(pr.score(prior, x) - fd) / max(abs(fd), 1.0))
    out.append(_check("score matches log-density differences", worst < 1e-5, f"max err {worst:.2e}"))
    # moments and score-weighted moments vs quadrature
    worst = 0.0
    for prior in models:
        for k in (-2.0, -1.0, 0.0, 1.0, 2.0, 3.0):
            m = pr.moment(prior, k)
            if math.isinf(m):
                continue
            q = pr.expectation(prior, lambda x, k=k: x**k, f_pow_lo=min(k, 0.0))
            worst = max(worst, abs(m - q) / max(abs(q), 1e-12))
    out.append(_check("moments match quadrature", worst < 1e-8, f"max rel err {worst:.2e}"))
    worst = 0.0
    for prior in models:
        for k in (0.0, 1.0, 2.0):
            m = pr.score_weighted_moment(prior, k)
            if math.isinf(m):
                continue
            q = pr.expectation(
                prior,
                lambda x, k=k: pr.score(prior, x) ** 2 * x**k,
                f_pow_lo=k - 2.0,
                f_pow_hi=-2.0,
            )
            worst = max(worst, abs(m - q) / max(abs(q), 1e-12))
    out.append(_check("score-weighted moments match quadrature", worst < 1e-7, f"max rel err {worst:.2e}"))
    # integration by parts E[g rho] = -E[g']
    worst = 0.0
    pairs = [(lambda x: np.ones_like(x), lambda x: np.zeros_like(x)),
             (lambda x: x, lambda x: np.ones_like(x)),
             (lambda x: x**2, lambda x: 2.0 * x)]
    for prior in models:
        kind = "poisson" if isinstance(prior, pr.GammaPrior) else "binomial"
        if not pr.regularity_check(prior, kind).holds:
            continue
        for gfun, dgfun in pairs:
            lhs = pr.expectation(
                prior, lambda x: gfun(x) * pr.score(prior, x), f_pow_lo=-1.0, f_pow_hi=-1.0
            )
            rhs = -pr.expectation(prior, dgfun)
            worst = max(worst, abs(lhs - rhs))
    out.append(_check("integration by parts", worst < 1e-8, f"max abs err {worst:.2e}"))
    # normalization
    worst = 0.0
    for prior in models:
        worst = max(worst, abs(pr.expectation(prior, lambda x: np.ones_like(x)) - 1.0))
    out.append(_check("densities integrate to one", worst < 1e-8, f"max abs err {worst:.2e}"))
    return out


def suite_channels() -> list[CheckResult]:
    out = []
    gamma = pr.GammaPrior(2.1, 3.0)
    beta = pr.BetaPrior(3.0, 5.0)
    cases = [
        (gamma, ch.PoissonChannel(0.5)),
        (gamma, ch.PoissonChannel(2.0)),
        (beta, ch.BinomialChannel(4, 1.0)),
        (beta, ch.BinomialChannel(6, 0.8)),
    ]
    worst = 0.0
    for prior, channel in cases:
        top = channel.n if isinstance(channel, ch.BinomialChannel) else 20
        for y in range(top + 1):
            closed = ch.marginal_pmf(prior, channel, y)
            quad = ch.marginal_pmf(prior, channel, y, method="quadrature")
            worst = max(worst, abs(closed - quad) / max(quad, 1e-14))
    out.append(_check("marginal pmf matches quadrature", worst < 1e-8, f"max rel err {worst:.2e}"))
    worst = 0.0
    for prior, channel in cases:
        if isinstance(channel, ch.BinomialChannel) and channel.a != 1.0:
            continue  # closed form is exact only for the conjugate scaling
        top = channel.n if isinstance(channel, ch.BinomialChannel) else 12
        for y in range(top + 1):
            closed = ch.posterior_mean(prior, channel, y)
            quad = ch.posterior_mean(prior, channel, y, mode="quadrature")
            worst = max(worst, abs(closed - quad) / max(abs(quad), 1e-12))
    out.append(_check("posterior mean matches quadrature", worst < 1e-7, f"max rel err {worst:.2e}"))
    worst = 0.0
    for prior, channel in cases:
        law = ch.marginal_law(prior, channel)
        mean = float(np.sum(law.pmf * ch.posterior_mean(prior, channel, law.support, mode="closed-form")) ) if not (isinstance(channel, ch.BinomialChannel) and channel.a != 1.0) else float(
            np.sum(law.pmf * np.array([ch.posterior_mean(prior, channel, int(y), mode="quadrature") for y in law.support]))
        )
        worst = max(worst, abs(mean - pr.prior_mean(prior)))
    out.append(_check("tower property", worst < 1e-8, f"max abs err {worst:.2e}"))
    # conditional moments against Monte Carlo
    rng = np.random.default_rng(5)
    ok = True
    for channel, x in [(ch.PoissonChannel(1.3), 2.0), (ch.BinomialChannel(7, 0.8), 0.6)]:
        draws = ch._sample_with(channel, np.full(200_000, x), rng).astype(float)
        for m in range(1, 5):
            sample = draws**m
            se = sample.std(ddof=1) / math.sqrt(sample.size)
            ok &= abs(sample.mean() - ch.conditional_moment(channel, m, x)) <= 5 * se
    out.append(_check("conditional moments within 5 SE of Monte Carlo", ok))
    return out


def suite_bounds() -> list[CheckResult]:
    out = []
    sq = dv.squared_mahalanobis(1.0)
    ne = dv.neg_entropy()
    bl = dv.binary_logit()
    post = rk.EstimatorSpec.posterior_mean()
    n_mc = 50_000
    ok = True
    detail = []
    for prior, channel, gen in [
        (pr.GammaPrior(2.1, 3.0), ch.PoissonChannel(0.5), ne),
        (pr.GammaPrior(2.1, 3.0), ch.PoissonChannel(2.0), ne),
        (pr.BetaPrior(3.0, 5.0), ch.BinomialChannel(1, 1.0), bl),
        (pr.BetaPrior(3.0, 5.0), ch.BinomialChannel(8, 1.0), bl),
    ]:
        mse = rk.monte_carlo_risk(sq, prior, channel, post, n_mc, seed=101)
        cr = bd.classic_cr_mmse(prior, channel)
        ok &= cr.value <= mse.mean + 3 * mse.std_error
        natural = rk.monte_carlo_risk(gen, prior, channel, post, n_mc, seed=102)
        coef = ch.lmmse_coefficients(prior, channel)
        if isinstance(channel, ch.PoissonChannel):
            lin = bd.cr_linear_poisson(prior, channel, *coef)
            uni = bd.universal_cr_poisson(prior, channel)
        else:
            lin = bd.cr_linear_binomial(prior, channel, *coef)
            uni = bd.universal_cr_binomial(prior, channel)
        for bound in (lin, uni):
            if bound.valid:
                ok &= bound.value <= natural.mean + 3 * natural.std_error
        detail.append(f"{type(channel).__name__}: cr={cr.value:.4g} mse={mse.mean:.4g}")
    out.append(_check("closed-form bounds dominated by Monte-Carlo risks", ok, "; ".join(detail)))
    prior, channel = pr.GammaPrior(2.1, 3.0), ch.PoissonChannel(1.0)
    var = bd.variational_bound(ne, prior, channel, post, "optimal", n_mc, seed=103)
    mc = rk.monte_carlo_risk(ne, prior, channel, post, n_mc, seed=103)
    gap = abs(var.mean - mc.mean)
    tol = 3 * math.hypot(var.std_error, mc.std_error) + 1e-6
    out.append(_check("optimal test function recovers the risk", gap <= tol, f"gap {gap:.2e}"))
    gmc = bd.generalized_cr_monte_carlo(ne, prior, channel, post, n_mc, seed=104)
    out.append(
        _check(
            "generalized Monte-Carlo bound dominated by the risk",
            gmc.value <= mc.mean + 3 * mc.std_error,
            f"bound {gmc.value:.4g} risk {mc.mean:.4g}",
        )
    )
    return out


SUITES = {
    "divergence": suite_divergence,
    "priors": suite_priors,
    "channels": suite_channels,
    "bounds": suite_bounds,
}


def run_suite(name: str) -> list[CheckResult]:
    """Run one named suite, or all of them."""
    if name == "all":
        results = []
        for key in ("divergence", "priors", "channels", "bounds"):
            results.extend(SUITES[key]())
        return results
    if name not in SUITES:
        raise KeyError(f"unknown verify suite {name!r}")
    return SUITES[name]()
