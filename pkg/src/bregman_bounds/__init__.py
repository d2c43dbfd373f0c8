"""Bayesian Bregman risks and Cramer-Rao-type lower bounds.

The package is organized bottom-up:

``specfun``
    Special functions, combinatorics and Gauss-Legendre quadrature.
``divergence``
    Bregman generators, divergences, the integrated-Hessian weight and
    its polynomial inverse bounds, Bregman balls, Hessian sandwiches.
``priors``
    Gamma and Beta priors: densities, samplers, (fractional) moments,
    score functions and regularity checks.
``channels``
    Poisson and Binomial forward models: pmfs, samplers, conditional
    and marginal moments, posterior means, linear-MMSE coefficients.
``risk``
    Monte-Carlo and exact Bayesian Bregman risks, linear-MMSE values,
    Jensen brackets and Hessian-sandwich brackets.
``bounds``
    The Cramer-Rao-type lower-bound family: classical, linear-estimator
    and universal closed forms plus Monte-Carlo variational evaluators.
``cli``
    Batch front-end for sweeps, figure presets, oracle verification and
    Bregman-ball boundary export.
"""

from . import bounds, channels, divergence, priors, risk, specfun
from .bounds import (
    BoundValue,
    classic_cr_mmse,
    cr_linear_binomial,
    cr_linear_poisson,
    g_function,
    generalized_cr_monte_carlo,
    universal_cr_binomial,
    universal_cr_poisson,
    variational_bound,
)
from .channels import BinomialChannel, PoissonChannel
from .divergence import (
    BallSpec,
    GeneratorDescriptor,
    ball_contains,
    binary_logit,
    bregman,
    delta_inverse_upper,
    delta_weight,
    generalized_i_divergence,
    l2_form,
    neg_binomial_gen,
    neg_entropy,
    sandwich_constants,
    squared_mahalanobis,
)
from .priors import BetaPrior, GammaPrior
from .risk import (
    EstimatorSpec,
    RiskEstimate,
    b_term_bounds,
    exact_bregman_risk,
    exact_mmse,
    lmmse_value,
    monte_carlo_risk,
    sandwich_bounds,
)

__version__ = "0.1.0"
