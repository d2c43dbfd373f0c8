"""Divergence engine: identities, weight quadrature, balls, sandwiches."""

import math

import numpy as np
import pytest

from bregman_bounds import divergence as dv
from bregman_bounds.errors import DomainError, SingularityError


def scalar_generators():
    return [
        (dv.squared_mahalanobis(1.0), (-4.0, 4.0)),
        (dv.neg_entropy(), (0.01, 5.0)),
        (dv.binary_logit(), (0.01, 0.99)),
        (dv.neg_binomial_gen(), (0.01, 5.0)),
    ]


class TestBregman:
    def test_examples(self):
        assert dv.bregman(dv.squared_mahalanobis(1.0), 3.0, 1.0) == pytest.approx(4.0)
        ne = dv.neg_entropy()
        assert dv.bregman(ne, 1.0, 1.0) == 0.0
        assert dv.bregman(ne, 2.0, 1.0) == pytest.approx(2 * math.log(2) - 1, rel=1e-12)
        gi = dv.generalized_i_divergence(2)
        assert dv.bregman(gi, [2.0, 2.0], [1.0, 1.0]) == pytest.approx(
            2 * (2 * math.log(2) - 1), rel=1e-12
        )

    def test_nonnegativity_and_identity(self):
        rng = np.random.default_rng(11)
        for gen, (lo, hi) in scalar_generators():
            us = rng.uniform(lo, hi, 1000)
            vs = rng.uniform(lo, hi, 1000)
            losses = dv.bregman(gen, us, vs)
            assert np.all(losses >= 0.0)
            assert np.all(losses[np.abs(us - vs) > 1e-6] > 0.0)
            same = dv.bregman(gen, us, us)
            np.testing.assert_allclose(same, 0.0, atol=1e-12)

    def test_convexity_in_first_argument(self):
        rng = np.random.default_rng(12)
        for gen, (lo, hi) in scalar_generators():
            u1 = rng.uniform(lo, hi, 200)
            u2 = rng.uniform(lo, hi, 200)
            v = rng.uniform(lo, hi, 200)
            lam = rng.uniform(0.0, 1.0, 200)
            mix = dv.bregman(gen, lam * u1 + (1 - lam) * u2, v)
            split = lam * dv.bregman(gen, u1, v) + (1 - lam) * dv.bregman(gen, u2, v)
            assert np.all(mix <= split + 1e-10)

    def test_linearity_in_generator(self):
        rng = np.random.default_rng(13)
        ne, nb = dv.neg_entropy(), dv.neg_binomial_gen()
        combo = dv.linear_combination([(2.5, ne), (0.7, nb)])
        us = rng.uniform(0.05, 4.0, 100)
        vs = rng.uniform(0.05, 4.0, 100)
        lhs = dv.bregman(combo, us, vs)
        rhs = 2.5 * dv.bregman(ne, us, vs) + 0.7 * dv.bregman(nb, us, vs)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)

    def test_law_of_cosines(self):
        rng = np.random.default_rng(14)
        for gen, (lo, hi) in scalar_generators():
            for _ in range(200):
                u, w, v = rng.uniform(lo, hi, 3)
                lhs = dv.bregman(gen, u, v)
                rhs = (
                    dv.bregman(gen, u, w)
                    + dv.bregman(gen, w, v)
                    - (u - w) * (gen.gradient(v) - gen.gradient(w))
                )
                assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_boundary_conventions(self):
        ne = dv.neg_entropy()
        assert dv.bregman(ne, 0.0, 1.0) == pytest.approx(1.0)  # 0 log 0 = 0
        with pytest.raises(DomainError):
            dv.bregman(ne, 1.0, 0.0)  # gradient undefined on the boundary
        with pytest.raises(DomainError):
            dv.bregman(ne, -0.5, 1.0)
        bl = dv.binary_logit()
        # phi(0) = 0 and phi(1/2) = 0, so the loss is 0.5 * grad(1/2) = 1.
        assert dv.bregman(bl, 0.0, 0.5) == pytest.approx(1.0)
        with pytest.raises(DomainError):
            dv.bregman(bl, 1.0, 0.5)  # generator value diverges at 1


class TestDeltaWeight:
    def test_examples(self):
        sq = dv.squared_mahalanobis(1.0)
        assert dv.delta_weight(sq, 3.0, 1.0).scalar == pytest.approx(1.0, rel=1e-12)
        ne = dv.neg_entropy()
        assert dv.delta_weight(ne, 2.0, 2.0).scalar == pytest.approx(0.25, rel=1e-12)
        d = dv.delta_weight(ne, 2.0, 1.0).scalar
        assert d * (2.0 - 1.0) ** 2 == pytest.approx(dv.bregman(ne, 2.0, 1.0), rel=1e-9)
        assert d == pytest.approx(2 * math.log(2) - 1, rel=1e-9)

    def test_mahalanobis_matrix_exact(self):
        mat = np.array([[2.0, 0.3], [0.3, 1.0]])
        gen = dv.squared_mahalanobis(mat)
        delta = dv.delta_weight(gen, np.array([1.0, -2.0]), np.array([0.5, 3.0]))
        np.testing.assert_allclose(delta.entries, mat, rtol=1e-10)

    def test_positive_definite(self):
        gi = dv.generalized_i_divergence(2)
        delta = dv.delta_weight(gi, np.array([2.0, 0.5]), np.array([1.0, 1.5]))
        assert np.all(np.linalg.eigvalsh(delta.entries) > 0)

    def test_refinement_matches_doubled_order(self):
        ne = dv.neg_entropy()
        base = dv.delta_weight(ne, 0.013, 4.0).scalar
        doubled = dv.delta_weight(ne, 0.013, 4.0, quad=dv.gauss_legendre(64)).scalar
        assert base == pytest.approx(doubled, rel=1e-9)

    def test_singularity_error(self):
        ne = dv.neg_entropy()
        with pytest.raises(SingularityError):
            dv.delta_weight(ne, 1.0, 0.0)  # weight t/( (1-t) u ) diverges at t=1

    def test_boundary_first_argument_finite(self):
        ne = dv.neg_entropy()
        assert dv.delta_weight(ne, 0.0, 2.0).scalar == pytest.approx(0.5, rel=1e-9)

    def test_batch_matches_adaptive(self):
        rng = np.random.default_rng(15)
        for gen, (lo, hi) in scalar_generators():
            us = rng.uniform(lo, hi, 100)
            vs = rng.uniform(lo, hi, 100)
            batch = dv.delta_weight_batch(gen, us, vs, order=128)
            ada = np.array(
                [dv.delta_weight(gen, float(u), float(v)).scalar for u, v in zip(us, vs)]
            )
            np.testing.assert_allclose(batch, ada, rtol=1e-9)


class TestL2Form:
    def test_examples(self):
        assert dv.l2_form(dv.squared_mahalanobis(1.0), 3.0, 1.0) == pytest.approx(4.0)
        assert dv.l2_form(dv.neg_entropy(), 2.0, 1.0) == pytest.approx(
            dv.bregman(dv.neg_entropy(), 2.0, 1.0), rel=1e-9
        )
        gi = dv.generalized_i_divergence(2)
        assert dv.l2_form(gi, [2.0, 2.0], [1.0, 1.0]) == pytest.approx(
            2 * (2 * math.log(2) - 1), rel=1e-9
        )

    def test_identity_random_pairs(self):
        rng = np.random.default_rng(16)
        for gen, (lo, hi) in scalar_generators():
            us = rng.uniform(lo, hi, 250)
            vs = rng.uniform(lo, hi, 250)
            for u, v in zip(us, vs):
                b = dv.bregman(gen, float(u), float(v))
                assert dv.l2_form(gen, float(u), float(v)) == pytest.approx(
                    b, rel=1e-8, abs=1e-13
                )


class TestDeltaInverseUpper:
    def test_tightness_at_diagonal(self):
        for u in (0.2, 1.0, 3.0):
            bound = dv.delta_inverse_upper("neg-entropy", u, u, "linear")
            assert bound == pytest.approx(2.0 * u)
            w = dv.delta_weight(dv.neg_entropy(), u, u).scalar
            assert bound == pytest.approx(1.0 / w, rel=1e-9)

    def test_linear_example(self):
        assert dv.delta_inverse_upper("neg-entropy", 2.0, 1.0, "linear") == pytest.approx(10 / 3)

    def test_cubic_example(self):
        # The cubic polynomial evaluates to 0.25 at (0.5, 0.5), exactly
        # the reciprocal weight (the bound is tight on the diagonal).
        cubic = dv.delta_inverse_upper("binary-logit", 0.5, 0.5, "cubic")
        assert cubic == pytest.approx(0.25, rel=1e-12)
        w = dv.delta_weight(dv.binary_logit(), 0.5, 0.5).scalar
        assert cubic >= 1.0 / w - 1e-9

    def test_chain_half_line(self):
        # u <= 1/Delta(v, u) <= 4u/3 + 2v/3 on a grid of (0, 5]^2; the
        # polynomial bounds the weight with u in the linearized slot.
        ne = dv.neg_entropy()
        grid = np.linspace(0.05, 5.0, 14)
        for u in grid:
            for v in grid:
                inv = 1.0 / dv.delta_weight(ne, float(v), float(u)).scalar
                assert u <= inv + 1e-9
                assert inv <= dv.delta_inverse_upper("neg-entropy", u, v, "linear") + 1e-9

    def test_chain_unit_interval(self):
        bl = dv.binary_logit()
        grid = np.linspace(0.01, 0.99, 12)
        for u in grid:
            for v in grid:
                inv = 1.0 / dv.delta_weight(bl, float(v), float(u)).scalar
                cubic = dv.delta_inverse_upper("binary-logit", u, v, "cubic")
                quad = dv.delta_inverse_upper("binary-logit", u, v, "quadratic")
                relaxed = dv.delta_inverse_upper("binary-logit", u, v, "quadratic", relaxed=True)
                assert inv <= cubic + 1e-9
                assert cubic <= quad + 1e-9
                assert quad <= relaxed + 1e-9

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            dv.delta_inverse_upper("neg-entropy", 1.0, 1.0, "cubic")
        with pytest.raises(DomainError):
            dv.delta_inverse_upper("binary-logit", 1.5, 0.5, "cubic")
        with pytest.raises(DomainError):
            dv.delta_inverse_upper("squared-mahalanobis", 1.0, 1.0, "linear")


class TestBalls:
    def test_contains_examples(self):
        sq2 = dv.squared_mahalanobis(np.eye(2))
        ball = dv.BallSpec(1.0, np.array([2.0, 2.0]))
        assert dv.ball_contains(sq2, ball, [2.5, 2.5])
        assert dv.ball_contains(sq2, ball, [2.0, 2.0])
        gi = dv.generalized_i_divergence(2)
        assert not dv.ball_contains(gi, ball, [8.0, 2.0])  # divergence ~ 5.09 > 1

    def test_boundary_residuals(self):
        gi = dv.generalized_i_divergence(2)
        ball = dv.BallSpec(1.0, np.array([2.0, 2.0]))
        rows = dv.ball_boundary(gi, ball, 48)
        for _, x1, x2 in rows:
            assert abs(dv.bregman(gi, [x1, x2], [2.0, 2.0]) - 1.0) < 1e-8

    def test_asymmetry(self):
        gi = dv.generalized_i_divergence(2)
        fwd = dv.ball_boundary(gi, dv.BallSpec(1.0, np.array([2.0, 2.0]), "first-argument"), 32)
        rev = dv.ball_boundary(gi, dv.BallSpec(1.0, np.array([2.0, 2.0]), "second-argument"), 32)
        assert np.max(np.abs(fwd[:, 1:] - rev[:, 1:])) > 1e-3

    def test_euclidean_circle(self):
        sq2 = dv.squared_mahalanobis(np.eye(2))
        rows = dv.ball_boundary(sq2, dv.BallSpec(1.0, np.array([2.0, 2.0])), 32)
        radii = np.hypot(rows[:, 1] - 2.0, rows[:, 2] - 2.0)
        np.testing.assert_allclose(radii, 1.0, atol=1e-9)

    def test_invalid_spec(self):
        with pytest.raises(DomainError):
            dv.BallSpec(-1.0, np.array([2.0, 2.0]))
        with pytest.raises(DomainError):
            dv.BallSpec(1.0, np.array([2.0, 2.0]), "sideways")
        with pytest.raises(DomainError):
            dv.ball_boundary(dv.neg_entropy(), dv.BallSpec(1.0, np.array([2.0])), 32)


class TestSandwichConstants:
    def test_examples(self):
        assert dv.sandwich_constants(dv.squared_mahalanobis(1.0), (-3.0, 3.0), 7) == (2.0, 2.0)
        lo, hi = dv.sandwich_constants(dv.neg_entropy(), (1.0, 2.0), 33)
        assert (lo, hi) == pytest.approx((0.5, 1.0))
        # endpoint grid on [0.25, 0.5]: H = 1/(u (1-u)^2) at the two ends
        lo, hi = dv.sandwich_constants(dv.binary_logit(), (0.25, 0.5), 2)
        assert (lo, hi) == pytest.approx((64.0 / 9.0, 8.0))
        # dense grid finds the interior minimum at u = 1/3
        lo_dense, _ = dv.sandwich_constants(dv.binary_logit(), (0.25, 0.5), 513)
        assert lo_dense == pytest.approx(27.0 / 4.0, rel=1e-4)

    def test_multivariate(self):
        gi = dv.generalized_i_divergence(2)
        lo, hi = dv.sandwich_constants(gi, [(1.0, 2.0), (0.5, 1.0)], 9)
        assert lo == pytest.approx(0.5)
        assert hi == pytest.approx(2.0)

    def test_errors(self):
        with pytest.raises(DomainError):
            dv.sandwich_constants(dv.neg_entropy(), (2.0, 2.0), 5)
        with pytest.raises(DomainError):
            dv.sandwich_constants(dv.binary_logit(), (0.5, 1.5), 5)
        with pytest.raises(DomainError):
            dv.sandwich_constants(dv.neg_entropy(), (1.0, 2.0), 1)
