"""Double-exponential quadrature on finite, semi-infinite and contour domains.

All integrands are called with numpy arrays and must be vectorized.  The
semi-infinite rule is the exp-sinh substitution
``x = lower + scale * exp(pi/2 * sinh(tau))``; finite intervals use tanh-sinh;
vertical lines in the complex plane use a sinh-mapped trapezoidal rule.  Each
rule halves its step until two successive levels agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInputError, NonConvergenceError

ABS_FLOOR = 1e-300
_HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class QuadResult:
    """Value, error estimate and bookkeeping of one quadrature call."""

    value: float | complex
    abs_error: float
    evaluations: int
    converged: bool = True

    def __post_init__(self):
        if not self.abs_error >= 0.0:
            raise InvalidInputError("abs_error must be non-negative")
        if self.evaluations < 1:
            raise InvalidInputError("evaluations must be >= 1")

    def __float__(self):
        return float(np.real(self.value))

    @property
    def abs_error_estimate(self) -> float:
        return self.abs_error


def _check_tol(rel_tol):
    if not 0.0 < rel_tol < 1.0:
        raise InvalidInputError(f"rel_tol must lie in (0, 1), got {rel_tol!r}")


def _evaluate(f, x):
    with np.errstate(all="ignore"):
        y = np.asarray(f(x))
    if y.shape != np.shape(x):
        y = np.broadcast_to(y, np.shape(x))
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("integrand returned non-finite values")
    return y


def _de_sum(f, nodes_weights, tau_lo, tau_hi, rel_tol, max_level, h0, abs_floor):
    """Level-doubling driver shared by the real-line rules.

    ``nodes_weights(tau)`` returns abscissae and Jacobian weights for an array
    of ``tau`` values.
    """
    n_lo = math.floor(tau_lo / h0)
    n_hi = math.ceil(tau_hi / h0)
    tau = h0 * np.arange(n_lo, n_hi + 1, dtype=float)
    x, w = nodes_weights(tau)
    terms = w * _evaluate(f, x)
    total = terms.sum()
    edge = abs(terms[0]) + abs(terms[-1])
    evals = tau.size
    estimate = h0 * total
    h = h0
    err = math.inf
    d_prev = None
    for level in range(1, max_level + 1):
        h *= 0.5
        # odd multiples of the new step inside the original range
        k = np.arange(2 ** level * n_lo + 1, 2 ** level * n_hi, 2)
        tau = h * k
        x, w = nodes_weights(tau)
        terms = w * _evaluate(f, x)
        evals += tau.size
        total = total + terms.sum()
        new = h * total
        d = abs(new - estimate)
        # each level roughly doubles the correct digits, so the error of the
        # new estimate is about d**2 / d_prev
        err = d if d_prev is None or d >= d_prev else d * d / d_prev
        err += h * edge
        d_prev = d
        estimate = new
        if level >= 2 and err <= max(rel_tol * abs(estimate), abs_floor):
            return estimate, err, evals, True
    return estimate, err, evals, False


def _finish(value, err, evals, ok, raise_on_failure, what):
    res = QuadResult(value, float(err), int(evals), ok)
    if not ok and raise_on_failure:
        raise NonConvergenceError(f"{what}: tolerance not met (error estimate {err:.3e})", res)
    return res


def integrate_semi_infinite(
    f: Callable[[np.ndarray], np.ndarray],
    lower: float = 0.0,
    rel_tol: float = 1e-8,
    *,
    scale: float = 1.0,
    max_level: int = 9,
    tau_range: tuple[float, float] = (-6.0, 4.0),
    abs_floor: float = ABS_FLOOR,
    raise_on_failure: bool = True,
) -> QuadResult:
    """Integrate ``f`` over ``[lower, inf)`` with the exp-sinh rule.

    ``scale`` should be of the order of the integrand's characteristic width;
    the rule is insensitive to it within a few decades.
    """
    _check_tol(rel_tol)
    if scale <= 0:
        raise InvalidInputError("scale must be positive")

    def nodes_weights(tau):
        e = np.exp(_HALF_PI * np.sinh(tau))
        return lower + scale * e, scale * e * _HALF_PI * np.cosh(tau)

    value, err, evals, ok = _de_sum(
        f, nodes_weights, tau_range[0], tau_range[1], rel_tol, max_level, 0.5, abs_floor
    )
    return _finish(float(value), err, evals, ok, raise_on_failure, "integrate_semi_infinite")


def integrate_finite(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    *,
    max_level: int = 9,
    abs_floor: float = ABS_FLOOR,
    raise_on_failure: bool = True,
) -> QuadResult:
    """Integrate ``f`` over ``[a, b]`` with the tanh-sinh rule."""
    _check_tol(rel_tol)
    if a == b:
        return QuadResult(0.0, 0.0, 1)
    if a > b:
        r = integrate_finite(f, b, a, rel_tol, max_level=max_level, abs_floor=abs_floor,
                             raise_on_failure=raise_on_failure)
        return QuadResult(-r.value, r.abs_error, r.evaluations, r.converged)
    half = 0.5 * (b - a)

    def nodes_weights(tau):
        u = _HALF_PI * np.sinh(tau)
        # distance to the nearer endpoint, computed without cancellation
        comp = 2.0 / (1.0 + np.exp(2.0 * np.abs(u)))
        x = np.where(u < 0, a + half * comp, b - half * comp)
        w = half * _HALF_PI * np.cosh(tau) / np.cosh(u) ** 2
        return x, w

    value, err, evals, ok = _de_sum(f, nodes_weights, -3.5, 3.5, rel_tol, max_level, 0.5, abs_floor)
    return _finish(float(value), err, evals, ok, raise_on_failure, "integrate_finite")


def integrate_2d(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    rel_tol: float = 1e-6,
    *,
    scale_outer: float = 1.0,
    scale_inner: float = 1.0,
    raise_on_failure: bool = True,
) -> QuadResult:
    """Integrate ``f(t, x)`` over the quadrant ``t > 0, x > 0``.

    Nested exp-sinh rules; the inner tolerance is ten times tighter than the
    outer one.  ``f`` receives a scalar ``t`` and an array ``x``.
    """
    _check_tol(rel_tol)
    inner_tol = rel_tol / 10.0
    counter = [0]
    inner = []  # (value, error) per outer node

    def outer(t_values):
        out = np.empty(np.shape(t_values))
        for i, t in enumerate(np.ravel(t_values)):
            r = integrate_semi_infinite(lambda x: f(t, x), 0.0, inner_tol, scale=scale_inner,
                                        raise_on_failure=False)
            counter[0] += r.evaluations
            inner.append((abs(r.value), r.abs_error))
            out.flat[i] = r.value
        return out

    r = integrate_semi_infinite(outer, 0.0, rel_tol, scale=scale_outer, raise_on_failure=False)
    # inner rules are judged against the largest inner value: far-tail nodes
    # need not resolve their own tiny values to full relative accuracy
    peak = max(v for v, _ in inner)
    inner_ok = all(e <= max(inner_tol * peak, ABS_FLOOR) for _, e in inner)
    worst = max(e for _, e in inner)
    res = QuadResult(r.value, r.abs_error + worst, max(counter[0], 1), r.converged and inner_ok)
    if not res.converged and raise_on_failure:
        raise NonConvergenceError("integrate_2d: tolerance not met", res)
    return res


def _trapezoid_levels(eval_grid, t_max, rel_tol, h0, max_level, abs_floor):
    """Nested trapezoid rule on ``[-t_max, t_max]^d`` in the mapped variable.

    ``eval_grid(tau_1d, weights_1d)`` returns the weighted sum over the full
    tensor grid built from the 1-D node set, the number of evaluations and
    the sum of moduli.  Successive levels converge roughly quadratically, so
    the error of level n is estimated as ``d_n**2 / d_(n-1)`` once two
    differences are available.
    """
    m = max(2, int(math.ceil(t_max / h0)))
    prev = None
    d_prev = None
    err = math.inf
    evals = 0
    for level in range(max_level + 1):
        n = m * 2 ** level
        tau = np.linspace(-t_max, t_max, 2 * n + 1)
        wts = np.full(tau.shape, t_max / n)
        wts[0] *= 0.5
        wts[-1] *= 0.5
        value, count, scale = eval_grid(tau, wts)
        evals += count
        if prev is not None:
            d = abs(value - prev)
            err = d
            if d_prev is not None and d < d_prev:
                err = min(d, d * d / d_prev)
            if err <= max(rel_tol * max(abs(value), 1e-3 * scale), abs_floor):
                return value, err, evals, True
            d_prev = d
        prev = value
    return value, err, evals, False


def _hermitian_sum(vals):
    """Sum of a centrally symmetric grid given only its first half (C order).

    ``vals`` holds the entries up to and including the centre of a grid
    whose entries satisfy ``v[-1 - i] == conj(v[i])``.
    """
    return 2.0 * vals[:-1].real.sum() + vals[-1].real


def integrate_vertical_line(
    g: Callable[[np.ndarray], np.ndarray],
    real_part: float,
    half_height: float = 40.0,
    rel_tol: float = 1e-10,
    *,
    scale: float = 1.0,
    max_doublings: int = 4,
    max_level: int = 7,
    hermitian: bool = False,
    abs_floor: float = ABS_FLOOR,
    raise_on_failure: bool = True,
) -> QuadResult:
    """Compute ``(1/2 pi i) * integral of g(s) ds`` along ``Re(s) = real_part``.

    The line is truncated at ``|Im s| <= half_height``; the height doubles
    until the change in value falls below tolerance.  Along the line the
    variable ``Im s = scale * sinh(tau)`` is integrated with the trapezoid
    rule, so ``scale`` should match the width of the integrand's central peak.
    With ``hermitian=True`` the integrand is assumed to satisfy
    ``g(conj(s)) == conj(g(s))``; only half the nodes are evaluated and the
    result is real.
    """
    _check_tol(rel_tol)
    if half_height <= 0 or scale <= 0:
        raise InvalidInputError("half_height and scale must be positive")

    def eval_grid(tau, wts):
        if hermitian:
            half = tau.size // 2 + 1
            tau, wts = tau[:half], wts[:half]
        t = scale * np.sinh(tau)
        vals = _evaluate(g, real_part + 1j * t) * (wts * scale * np.cosh(tau))
        total = _hermitian_sum(vals) if hermitian else vals.sum()
        mass = np.abs(vals).sum() * (2.0 if hermitian else 1.0)
        return total / (2.0 * math.pi), tau.size, mass / (2.0 * math.pi)

    height = half_height
    previous = None
    evals = 0
    tail_changes = []
    for _ in range(max_doublings + 1):
        t_max = math.asinh(height / scale)
        value, err, n, ok = _trapezoid_levels(eval_grid, t_max, rel_tol, 0.25, max_level, abs_floor)
        evals += n
        if previous is not None:
            change = abs(value - previous)
            tail_changes.append(change)
            if ok and change <= max(rel_tol * abs(value), abs_floor, 1e-15 * abs(previous)):
                return QuadResult(complex(value), float(err + change), evals, True)
        previous = value
        height *= 2.0
    res = QuadResult(complex(value), float(err + (tail_changes[-1] if tail_changes else 0.0)), evals, False)
    if raise_on_failure:
        raise NonConvergenceError("integrate_vertical_line: integrand does not decay fast enough", res)
    return res


def integrate_vertical_plane(
    g: Callable[[np.ndarray, np.ndarray], np.ndarray],
    real_parts: tuple[float, float],
    transform: np.ndarray,
    half_width: float,
    rel_tol: float = 1e-9,
    *,
    max_level: int = 5,
    h0: float = 0.25,
    hermitian: bool = False,
    abs_floor: float = ABS_FLOOR,
    raise_on_failure: bool = True,
) -> QuadResult:
    """Twofold Mellin-Barnes integral ``(1/2 pi i)^2 * iint g(s, w) ds dw``.

    The imaginary parts are ``(Im s, Im w) = transform @ sinh(tau)`` with
    ``tau`` on the square ``[-half_width, half_width]^2``, starting from step
    ``h0`` and halving it.  ``hermitian``
    has the same meaning as in :func:`integrate_vertical_line`.
    """
    _check_tol(rel_tol)
    transform = np.asarray(transform, dtype=float)
    jac = abs(np.linalg.det(transform))
    c1, c2 = real_parts

    def eval_grid(tau, wts):
        v = np.sinh(tau)
        dv = np.cosh(tau) * wts
        v1, v2 = np.meshgrid(v, v, indexing="ij")
        w12 = np.outer(dv, dv)
        v1, v2, w12 = v1.ravel(), v2.ravel(), w12.ravel()
        if hermitian:
            # the grid is point-symmetric about its centre, which sits at index size // 2
            half = v1.size // 2 + 1
            v1, v2, w12 = v1[:half], v2[:half], w12[:half]
        t1 = transform[0, 0] * v1 + transform[0, 1] * v2
        t2 = transform[1, 0] * v1 + transform[1, 1] * v2
        vals = _evaluate(lambda _: g(c1 + 1j * t1, c2 + 1j * t2), t1) * (w12 * jac)
        norm = 4.0 * math.pi ** 2
        total = _hermitian_sum(vals) if hermitian else vals.sum()
        mass = np.abs(vals).sum() * (2.0 if hermitian else 1.0)
        return total / norm, vals.size, mass / norm

    value, err, evals, ok = _trapezoid_levels(eval_grid, half_width, rel_tol, h0, max_level, abs_floor)
    res = QuadResult(complex(value), float(err), evals, ok)
    if not ok and raise_on_failure:
        raise NonConvergenceError("integrate_vertical_plane: tolerance not met", res)
    return res
