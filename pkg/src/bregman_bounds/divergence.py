"""Bregman-divergence engine.

A :class:`GeneratorDescriptor` packages a strictly convex generator
(value, gradient, Hessian, domain).  On top of it this module evaluates
the divergence itself, the integrated-Hessian weight that rewrites the
divergence as a weighted squared error, polynomial upper bounds on the
inverse weight, Bregman balls, and min/max Hessian eigenvalue sandwich
constants.

Scalar generators (dimension 1) evaluate elementwise over arrays so the
Monte-Carlo layers can stay vectorized; multivariate generators operate
on single points of shape ``(d,)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, SingularityError, UnsupportedError
from .specfun import QuadratureRule, adaptive_quadrature, gauss_legendre

__all__ = [
    "BallSpec",
    "DeltaMatrix",
    "GeneratorDescriptor",
    "ball_boundary",
    "ball_contains",
    "binary_logit",
    "bregman",
    "custom_generator",
    "delta_inverse_upper",
    "delta_weight",
    "delta_weight_batch",
    "generalized_i_divergence",
    "l2_form",
    "linear_combination",
    "neg_binomial_gen",
    "neg_entropy",
    "sandwich_constants",
    "squared_mahalanobis",
]


@dataclass(frozen=True)
class Interval:
    """One coordinate of the generator domain.

    ``closed_lo``/``closed_hi`` say whether the generator value extends
    continuously onto that edge (so the divergence may take a boundary
    first argument there); the ``singular_*`` flags mark edges where the
    Hessian blows up.
    """

    lo: float
    hi: float
    closed_lo: bool = False
    closed_hi: bool = False
    singular_lo: bool = False
    singular_hi: bool = False


@dataclass(frozen=True)
class GeneratorDescriptor:
    """A convex generator: value, gradient, Hessian and domain."""

    kind: str
    dimension: int
    intervals: tuple[Interval, ...]
    value: Callable = field(repr=False)
    gradient: Callable = field(repr=False)
    hessian: Callable = field(repr=False)

    @property
    def is_scalar(self) -> bool:
        return self.dimension == 1

    def check_point(self, u, interior: bool = False, name: str = "point") -> np.ndarray:
        """Validate membership in the domain; returns the point as ndarray.

        ``interior=True`` additionally rejects boundary points; with
        ``interior=False`` a boundary coordinate is accepted only on
        edges where the generator extends continuously.
        """
        arr = np.asarray(u, dtype=float)
        if self.is_scalar:
            per_dim = [arr]
        else:
            if arr.shape != (self.dimension,):
                raise DomainError(
                    f"{name} must have shape ({self.dimension},) for generator {self.kind!r}"
                )
            per_dim = [arr[i] for i in range(self.dimension)]
        for coords, iv in zip(per_dim, self.intervals):
            c = np.asarray(coords)
            if interior:
                ok = (c > iv.lo) & (c < iv.hi)
            else:
                lo_ok = (c > iv.lo) | (iv.closed_lo & (c == iv.lo))
                hi_ok = (c < iv.hi) | (iv.closed_hi & (c == iv.hi))
                ok = lo_ok & hi_ok
            if not np.all(ok):
                side = "interior of" if interior else ""
                raise DomainError(
                    f"{name} outside {side} domain [{iv.lo}, {iv.hi}] of generator {self.kind!r}"
                )
        return arr


def _xlogx(u: np.ndarray) -> np.ndarray:
    safe = np.where(u > 0.0, u, 1.0)
    return np.where(u > 0.0, u * np.log(safe), 0.0)


def squared_mahalanobis(a=1.0) -> GeneratorDescriptor:
    """Quadratic generator u^T A u for symmetric positive-definite A.

    A scalar ``a`` gives the one-dimensional generator ``a u^2``.
    """
    mat = np.atleast_2d(np.asarray(a, dtype=float))
    if mat.shape[0] != mat.shape[1]:
        raise DomainError("squared_mahalanobis needs a square matrix")
    if not np.allclose(mat, mat.T, rtol=1e-12, atol=1e-12):
        raise DomainError("squared_mahalanobis needs a symmetric matrix")
    if np.any(np.linalg.eigvalsh(mat) <= 0.0):
        raise DomainError("squared_mahalanobis needs a positive-definite matrix")
    dim = mat.shape[0]
    iv = Interval(-math.inf, math.inf)
    if dim == 1:
        coeff = float(mat[0, 0])
        return GeneratorDescriptor(
            kind="squared-mahalanobis",
            dimension=1,
            intervals=(iv,),
            value=lambda u: coeff * np.asarray(u, float) ** 2,
            gradient=lambda u: 2.0 * coeff * np.asarray(u, float),
            hessian=lambda u: np.full_like(np.asarray(u, float), 2.0 * coeff),
        )
    return GeneratorDescriptor(
        kind="squared-mahalanobis",
        dimension=dim,
        intervals=(iv,) * dim,
        value=lambda u: float(np.asarray(u) @ mat @ np.asarray(u)),
        gradient=lambda u: 2.0 * mat @ np.asarray(u, float),
        hessian=lambda u: 2.0 * mat,
    )


def neg_entropy() -> GeneratorDescriptor:
    """Generator u log u on the non-negative half line (0 log 0 = 0)."""
    return GeneratorDescriptor(
        kind="neg-entropy",
        dimension=1,
        intervals=(Interval(0.0, math.inf, closed_lo=True, singular_lo=True),),
        value=lambda u: _xlogx(np.asarray(u, float)),
        gradient=lambda u: np.log(np.asarray(u, float)) + 1.0,
        hessian=lambda u: 1.0 / np.asarray(u, float),
    )


def binary_logit() -> GeneratorDescriptor:
    """Generator u log(u / (1 - u)) on [0, 1).

    The value diverges at u = 1, so only the lower edge is closed.
    """

    def value(u):
        arr = np.asarray(u, float)
        return _xlogx(arr) - arr * np.log1p(-arr)

    return GeneratorDescriptor(
        kind="binary-logit",
        dimension=1,
        intervals=(
            Interval(0.0, 1.0, closed_lo=True, singular_lo=True, singular_hi=True),
        ),
        value=value,
        gradient=lambda u: np.log(np.asarray(u, float) / (1.0 - np.asarray(u, float)))
        + 1.0 / (1.0 - np.asarray(u, float)),
        hessian=lambda u: 1.0
        / (np.asarray(u, float) * (1.0 - np.asarray(u, float)) ** 2),
    )


def neg_binomial_gen() -> GeneratorDescriptor:
    """Generator u log(u / (1 + u)) on the non-negative half line."""

    def value(u):
        arr = np.asarray(u, float)
        return _xlogx(arr) - arr * np.log1p(arr)

    return GeneratorDescriptor(
        kind="neg-binomial-gen",
        dimension=1,
        intervals=(Interval(0.0, math.inf, closed_lo=True, singular_lo=True),),
        value=value,
        gradient=lambda u: np.log(np.asarray(u, float) / (1.0 + np.asarray(u, float)))
        + 1.0 / (1.0 + np.asarray(u, float)),
        hessian=lambda u: 1.0
        / (np.asarray(u, float) * (1.0 + np.asarray(u, float)) ** 2),
    )


def generalized_i_divergence(dimension: int = 2) -> GeneratorDescriptor:
    """Separable generator sum_i u_i log u_i on the positive orthant."""
    if dimension < 1:
        raise DomainError("dimension must be >= 1")
    iv = Interval(0.0, math.inf, closed_lo=True, singular_lo=True)
    return GeneratorDescriptor(
        kind="generalized-i-divergence",
        dimension=dimension,
        intervals=(iv,) * dimension,
        value=lambda u: float(np.sum(_xlogx(np.asarray(u, float)))),
        gradient=lambda u: np.log(np.asarray(u, float)) + 1.0,
        hessian=lambda u: np.diag(1.0 / np.asarray(u, float)),
    )


def custom_generator(
    value: Callable,
    gradient: Callable,
    hessian: Callable,
    intervals: Sequence[Interval],
    kind: str = "custom",
) -> GeneratorDescriptor:
    """Wrap user callbacks into a descriptor."""
    ivs = tuple(intervals)
    return GeneratorDescriptor(
        kind=kind,
        dimension=len(ivs),
        intervals=ivs,
        value=value,
        gradient=gradient,
        hessian=hessian,
    )


def linear_combination(terms: Sequence[tuple[float, GeneratorDescriptor]]) -> GeneratorDescriptor:
    """Positive combination sum_j a_j phi_j as a new generator.

    All generators must share dimension; the domain is intersected.
    """
    coefs = [float(a) for a, _ in terms]
    gens = [g for _, g in terms]
    if any(a <= 0 for a in coefs):
        raise DomainError("linear_combination requires positive coefficients")
    dim = gens[0].dimension
    if any(g.dimension != dim for g in gens):
        raise DomainError("linear_combination requires matching dimensions")
    intervals = []
    for i in range(dim):
        parts = [g.intervals[i] for g in gens]
        intervals.append(
            Interval(
                lo=max(p.lo for p in parts),
                hi=min(p.hi for p in parts),
                closed_lo=all(p.closed_lo for p in parts),
                closed_hi=all(p.closed_hi for p in parts),
                singular_lo=any(p.singular_lo for p in parts),
                singular_hi=any(p.singular_hi for p in parts),
            )
        )

    def value(u):
        return sum(a * g.value(u) for a, g in zip(coefs, gens))

    def gradient(u):
        return sum(a * g.gradient(u) for a, g in zip(coefs, gens))

    def hessian(u):
        return sum(a * g.hessian(u) for a, g in zip(coefs, gens))

    return custom_generator(value, gradient, hessian, intervals, kind="combination")


def bregman(gen: GeneratorDescriptor, u, v):
    """Bregman divergence phi(u) - phi(v) - <u - v, grad phi(v)>.

    ``u`` may sit on a closed domain edge; ``v`` must be interior so the
    gradient exists.  Scalar generators broadcast over arrays.
    """
    u_arr = gen.check_point(u, interior=False, name="u")
    v_arr = gen.check_point(v, interior=True, name="v")
    if gen.is_scalar:
        out = gen.value(u_arr) - gen.value(v_arr) - (u_arr - v_arr) * gen.gradient(v_arr)
        out = np.where(out < 0.0, np.where(out > -1e-10, 0.0, out), out)
        if np.ndim(u) == 0 and np.ndim(v) == 0:
            return float(out)
        return out
    diff = u_arr - v_arr
    out = gen.value(u_arr) - gen.value(v_arr) - float(diff @ gen.gradient(v_arr))
    if -1e-10 < out < 0.0:
        out = 0.0
    return out


@dataclass(frozen=True)
class DeltaMatrix:
    """Integrated-Hessian weight of the divergence at a pair of points."""

    entries: np.ndarray
    at: tuple

    @property
    def scalar(self) -> float:
        return float(self.entries[0, 0])


def _unit_integral(f, singular_lo: bool, singular_hi: bool, rel_tol: float, order: int = 32) -> float:
    """Integral of f over (0, 1) with power substitutions at flagged ends.

    The substitution t = s^2 clusters quadrature nodes against an end
    where the integrand has a sharp (integrable) layer.
    """
    if not singular_lo and not singular_hi:
        return adaptive_quadrature(f, 0.0, 1.0, rel_tol=rel_tol, order=order)
    total = 0.0
    if singular_lo:
        total += adaptive_quadrature(
            lambda s: f(0.5 * s**2) * s, 0.0, 1.0, rel_tol=rel_tol, order=order
        )
    else:
        total += adaptive_quadrature(f, 0.0, 0.5, rel_tol=rel_tol, order=order)
    if singular_hi:
        total += adaptive_quadrature(
            lambda s: f(1.0 - 0.5 * s**2) * s, 0.0, 1.0, rel_tol=rel_tol, order=order
        )
    else:
        total += adaptive_quadrature(f, 0.5, 1.0, rel_tol=rel_tol, order=order)
    return total


def _segment_layer_flags(gen: GeneratorDescriptor, u: np.ndarray, v: np.ndarray):
    """Decide which ends of the segment [u, v] sit against singular edges."""
    lo_flag = hi_flag = False
    u_pts = np.atleast_1d(u)
    v_pts = np.atleast_1d(v)
    for i, iv in enumerate(gen.intervals):
        for edge, singular in ((iv.lo, iv.singular_lo), (iv.hi, iv.singular_hi)):
            if not singular or not math.isfinite(edge):
                continue
            du = abs(u_pts[i] - edge)
            dv = abs(v_pts[i] - edge)
            scale = max(du, dv, 1e-300)
            if du < 1e-2 * scale:
                lo_flag = True
            if dv < 1e-2 * scale:
                hi_flag = True
    return lo_flag, hi_flag


def delta_weight(
    gen: GeneratorDescriptor, u, v, quad: QuadratureRule | None = None
) -> DeltaMatrix:
    """Weight matrix int_0^1 t H_phi((1-t) u + t v) dt.

    This is the Taylor-remainder weight of the expansion of phi(u)
    around v, the unique matrix with
    divergence(u, v) = (u-v)^T Delta (u-v); the weight t sits on the
    u-side of the path (a (1-t) weight on the same path reproduces the
    divergence with swapped arguments instead).

    Both endpoints may touch the domain boundary only where the Hessian
    singularity keeps the integral finite; otherwise the refinement
    loop raises :class:`SingularityError`.
    """
    u_arr = np.atleast_1d(gen.check_point(u, interior=False, name="u"))
    v_arr = np.atleast_1d(gen.check_point(v, interior=False, name="v"))
    order = quad.order if quad is not None else 32
    rel_tol = 1e-10
    d = gen.dimension
    sing_lo, sing_hi = _segment_layer_flags(gen, u_arr, v_arr)
    entries = np.empty((d, d))
    if gen.is_scalar:
        uu, vv = float(u_arr[0]), float(v_arr[0])

        def f(t):
            return t * gen.hessian(uu + t * (vv - uu))

        try:
            entries[0, 0] = _unit_integral(f, sing_lo, sing_hi, rel_tol, order)
        except SingularityError:
            raise SingularityError(
                f"Hessian of {gen.kind!r} is not integrable along [{uu}, {vv}]"
            ) from None
    else:
        for i in range(d):
            for j in range(i, d):

                def f(t, i=i, j=j):
                    t_flat = np.asarray(t, float).ravel()
                    vals = np.array(
                        [
                            gen.hessian(u_arr + s * (v_arr - u_arr))[i, j]
                            for s in t_flat
                        ]
                    )
                    return (t_flat * vals).reshape(np.shape(t))

                entries[i, j] = entries[j, i] = _unit_integral(
                    f, sing_lo, sing_hi, rel_tol, order
                )
    if np.any(np.linalg.eigvalsh((entries + entries.T) / 2.0) <= 0.0):
        raise SingularityError("integrated Hessian weight is not positive definite")
    return DeltaMatrix(entries=entries, at=(u_arr.copy(), v_arr.copy()))


def delta_weight_batch(gen: GeneratorDescriptor, u, v, order: int = 64) -> np.ndarray:
    """Scalar weights Delta(u_i, v_i) for sample arrays, fixed-order rule.

    For generators with singular domain edges the unit interval is split
    in half and each half is mapped through t = s^2 toward its outer
    end, which resolves the boundary layer the Hessian develops when a
    sample sits close to the edge.  Used by the Monte-Carlo bound
    evaluators, which double ``order`` until their output stabilizes.
    """
    if not gen.is_scalar:
        raise UnsupportedError("delta_weight_batch handles scalar generators only")
    u_arr = gen.check_point(u, interior=False, name="u")
    v_arr = gen.check_point(v, interior=False, name="v")
    rule = gauss_legendre(order)
    s = 0.5 * (rule.nodes + 1.0)
    w = 0.5 * rule.weights
    iv = gen.intervals[0]
    if iv.singular_lo or iv.singular_hi:
        t_nodes = np.concatenate([0.5 * s**2, 1.0 - 0.5 * s**2])
        coefs = np.concatenate([w * s, w * s])
    else:
        t_nodes = s
        coefs = w
    shape = np.broadcast(u_arr, v_arr).shape
    u_b, v_b = np.broadcast_arrays(np.atleast_1d(u_arr), np.atleast_1d(v_arr))
    flat_u, flat_v = u_b.ravel(), v_b.ravel()
    flat_out = np.empty(flat_u.size)
    chunk = 1 << 15
    for lo_i in range(0, flat_u.size, chunk):
        hi_i = min(lo_i + chunk, flat_u.size)
        uu = flat_u[lo_i:hi_i, None]
        vv = flat_v[lo_i:hi_i, None]
        path = uu + t_nodes[None, :] * (vv - uu)
        vals = gen.hessian(path)
        flat_out[lo_i:hi_i] = (t_nodes[None, :] * vals * coefs[None, :]).sum(axis=1)
    return flat_out.reshape(shape)


def l2_form(gen: GeneratorDescriptor, u, v, quad: QuadratureRule | None = None) -> float:
    """Weighted squared error (u-v)^T Delta (u-v); equals the divergence."""
    delta = delta_weight(gen, u, v, quad)
    diff = np.atleast_1d(np.asarray(u, float) - np.asarray(v, float))
    return float(diff @ delta.entries @ diff)


def delta_inverse_upper(kind: str, u, v, level: str, relaxed: bool = False):
    """Polynomial upper bounds on a reciprocal divergence weight.

    The bounded quantity is 1 / delta_weight(gen, v, u), the weight of
    the divergence with u in the *linearized* slot (these are the
    polynomials the closed-form lower bounds integrate against).
    neg-entropy admits the linear bound 4u/3 + 2v/3; binary-logit the
    quadratic bound 4u/3 + 2v/3 - u^2 - 2uv/3 - v^2/3 (``relaxed`` drops
    the two trailing cross terms) and the tighter cubic refinement.
    The linear and cubic bounds are tight at u = v.
    """
    u_arr = np.asarray(u, float)
    v_arr = np.asarray(v, float)
    if kind == "neg-entropy":
        if level != "linear":
            raise DomainError("neg-entropy supports only the linear bound")
        if np.any(u_arr <= 0.0) or np.any(v_arr < 0.0):
            raise DomainError("neg-entropy bound needs u > 0 and v >= 0")
        out = 4.0 * u_arr / 3.0 + 2.0 * v_arr / 3.0
    elif kind == "binary-logit":
        if np.any((u_arr < 0.0) | (u_arr > 1.0) | (v_arr < 0.0) | (v_arr > 1.0)):
            raise DomainError("binary-logit bound needs u, v in [0, 1]")
        if level == "quadratic":
            out = 4.0 * u_arr / 3.0 + 2.0 * v_arr / 3.0 - u_arr**2
            if not relaxed:
                out = out - 2.0 * u_arr * v_arr / 3.0 - v_arr**2 / 3.0
        elif level == "cubic":
            out = (
                12.0 * u_arr**3
                + u_arr**2 * (9.0 * v_arr - 30.0)
                + u_arr * (6.0 * v_arr**2 - 20.0 * v_arr + 20.0)
                + v_arr * (3.0 * v_arr**2 - 10.0 * v_arr + 10.0)
            ) / 15.0
        else:
            raise DomainError("binary-logit supports quadratic or cubic bounds")
    else:
        raise DomainError(f"no polynomial inverse-weight bound for kind {kind!r}")
    if np.ndim(u) == 0 and np.ndim(v) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class BallSpec:
    """A Bregman ball: radius, center, and which argument is free."""

    radius: float
    center: np.ndarray
    orientation: str = "first-argument"

    def __post_init__(self):
        if self.radius < 0.0:
            raise DomainError("ball radius must be non-negative")
        if self.orientation not in ("first-argument", "second-argument"):
            raise DomainError("orientation must be first-argument or second-argument")


def ball_contains(gen: GeneratorDescriptor, ball: BallSpec, u) -> bool:
    """Membership test: divergence to (or from) the center within radius."""
    gen.check_point(ball.center, interior=True, name="center")
    if ball.orientation == "first-argument":
        return bool(bregman(gen, u, ball.center) <= ball.radius)
    return bool(bregman(gen, ball.center, u) <= ball.radius)


def _ray_crossing(gen, center, direction, radius, orientation, tol=1e-10):
    center = np.asarray(center, float)

    def loss(t):
        point = center + t * direction
        if orientation == "first-argument":
            return bregman(gen, point, center)
        return bregman(gen, center, point)

    # Largest step that stays strictly inside the domain.
    t_max = math.inf
    for i, iv in enumerate(gen.intervals):
        d = direction[i]
        if d > 0 and math.isfinite(iv.hi):
            t_max = min(t_max, (iv.hi - center[i]) / d)
        elif d < 0 and math.isfinite(iv.lo):
            t_max = min(t_max, (iv.lo - center[i]) / d)
    t_hi = 1.0 if math.isinf(t_max) else 0.5 * t_max
    while loss(t_hi) < radius:
        if math.isfinite(t_max) and t_hi > 0.999999 * t_max:
            raise DomainError("ball boundary does not cross the domain along this ray")
        t_hi = min(2.0 * t_hi, 0.999999 * t_max) if math.isfinite(t_max) else 2.0 * t_hi
    t_lo = 0.0
    # Bisection on the loss value itself: |loss - radius| <= tol at exit.
    for _ in range(200):
        t_mid = 0.5 * (t_lo + t_hi)
        val = loss(t_mid)
        if abs(val - radius) <= tol:
            return center + t_mid * direction
        if val > radius:
            t_hi = t_mid
        else:
            t_lo = t_mid
    return center + 0.5 * (t_lo + t_hi) * direction


def ball_boundary(
    gen: GeneratorDescriptor,
    ball: BallSpec,
    resolution: int,
    tol: float = 1e-10,
) -> np.ndarray:
    """Boundary points of a two-dimensional Bregman ball.

    Returns rows ``(angle, x1, x2)`` for ``resolution`` equally spaced
    ray angles around the center, each located by bisection until the
    divergence matches the radius within ``tol``.
    """
    if gen.dimension != 2:
        raise DomainError("ball_boundary requires a two-dimensional generator")
    if resolution < 4:
        raise DomainError("resolution must be at least 4")
    center = gen.check_point(ball.center, interior=True, name="center")
    rows = np.empty((resolution, 3))
    for k in range(resolution):
        angle = 2.0 * math.pi * k / resolution
        direction = np.array([math.cos(angle), math.sin(angle)])
        point = _ray_crossing(gen, center, direction, ball.radius, ball.orientation, tol)
        rows[k] = (angle, point[0], point[1])
    return rows


def sandwich_constants(gen: GeneratorDescriptor, box, grid: int) -> tuple[float, float]:
    """Min and max Hessian eigenvalues over a gridded axis-aligned box.

    ``box`` is ``(lo, hi)`` for scalar generators or a sequence of
    per-dimension ``(lo, hi)`` pairs.  The box must be interior to the
    domain and non-degenerate.
    """
    if grid < 2:
        raise DomainError("grid must have at least 2 points per axis")
    box_arr = np.atleast_2d(np.asarray(box, dtype=float))
    if box_arr.shape != (gen.dimension, 2):
        raise DomainError(f"box must give (lo, hi) for each of {gen.dimension} dimensions")
    for (lo, hi), iv in zip(box_arr, gen.intervals):
        if not lo < hi:
            raise DomainError("degenerate box: lo must be strictly below hi")
        if not (lo > iv.lo and hi < iv.hi) and not (
            math.isinf(iv.lo) and math.isinf(iv.hi)
        ):
            if lo <= iv.lo or hi >= iv.hi:
                raise DomainError("box must be interior to the generator domain")
    axes = [np.linspace(lo, hi, grid) for lo, hi in box_arr]
    if gen.is_scalar:
        vals = gen.hessian(axes[0])
        return float(np.min(vals)), float(np.max(vals))
    lo_val, hi_val = math.inf, -math.inf
    for point in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, gen.dimension):
        eig = np.linalg.eigvalsh(gen.hessian(point))
        lo_val = min(lo_val, float(eig[0]))
        hi_val = max(hi_val, float(eig[-1]))
    return lo_val, hi_val
