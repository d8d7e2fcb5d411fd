"""Special functions on numpy arrays: log-gamma, Gauss 2F1 and Fox H-functions.

The H-functions are evaluated from their Mellin-Barnes integrals.  The
contour is a vertical line (or pair of lines) through the real saddle point of
the integrand's modulus, which keeps the integrand free of cancellation and
lets results far below 1 keep full relative accuracy.  The integrand is
normalized by its modulus at the saddle before exponentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .errors import ContourError, InvalidInputError, PoleError
from .quadrature import integrate_vertical_line, integrate_vertical_plane

_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# log of the smallest positive subnormal, with a margin for the prefactor
_UNDERFLOW_LOG = -760.0


def _lanczos(z):
    # valid for Re z >= 0.5
    zm = z - 1.0
    acc = np.full(z.shape, _LANCZOS_COEF[0], dtype=complex)
    for i in range(1, _LANCZOS_COEF.size):
        acc += _LANCZOS_COEF[i] / (zm + i)
    t = zm + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (zm + 0.5) * np.log(t) - t + np.log(acc)


def ln_gamma_complex(z):
    """Principal branch of log Gamma for complex (array) arguments.

    Lanczos approximation (g=7, 9 terms) for ``Re z >= 0.5``; smaller real
    parts are lifted with ``lnG(z) = lnG(z+1) - log z``, which keeps the
    branch cut on the negative real axis.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    re = z.real
    poles = (z.imag == 0) & (re <= 0) & (re == np.round(re))
    if np.any(poles):
        raise PoleError(f"log-gamma pole at {z[poles][0]}")
    shift = np.maximum(0, np.ceil(0.5 - re)).astype(int)
    n_max = int(shift.max(initial=0))
    out = np.empty(z.shape, dtype=complex)
    if n_max == 0:
        out = _lanczos(z)
    else:
        correction = np.zeros(z.shape, dtype=complex)
        todo = np.nonzero(shift > 0)[0]
        zz = z[todo]
        sh = shift[todo]
        for k in range(n_max):
            active = k < sh
            correction[todo[active]] += np.log(zz[active] + k)
        out = _lanczos(z + shift) - correction
    return out[0] if not shape else out.reshape(shape)


def gauss_2f1(a: float, b: float, c: float, x):
    """Gauss hypergeometric function 2F1(a, b; c; x) for real ``x <= 0``.

    The series is summed directly on ``[-1/2, 0]``; ``[-2, -1/2)`` goes through
    the Pfaff transformation to ``x/(x-1)``; below ``-2`` the ``1/x``
    connection formula is used, which needs ``a - b`` non-integer.
    """
    if c <= 0 and c == round(c):
        raise InvalidInputError("c must not be a non-positive integer")
    x = np.asarray(x, dtype=float)
    if np.any(x > 0):
        raise InvalidInputError("gauss_2f1 is implemented for x <= 0 only")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)

    near = x >= -0.5
    out[near] = _series(a, b, c, x[near])

    mid = (x < -0.5) & (x >= -2.0)
    if np.any(mid):
        xm = x[mid]
        out[mid] = (1.0 - xm) ** (-a) * _series(a, c - b, c, xm / (xm - 1.0))

    far = x < -2.0
    if np.any(far):
        if abs(a - b - round(a - b)) < 1e-12:
            raise InvalidInputError("a - b integer with x < -2 is not supported")
        xf = x[far]
        g, rg = math.gamma, _rgamma
        c1 = g(c) * g(b - a) * rg(b) * rg(c - a)
        c2 = g(c) * g(a - b) * rg(a) * rg(c - b)
        inv = 1.0 / xf
        out[far] = (c1 * (-xf) ** (-a) * _series(a, a - c + 1.0, a - b + 1.0, inv)
                    + c2 * (-xf) ** (-b) * _series(b, b - c + 1.0, b - a + 1.0, inv))
    return float(out[0]) if scalar else out


def _rgamma(x: float) -> float:
    """1/Gamma(x), zero at the poles."""
    if x <= 0 and x == round(x):
        return 0.0
    return 1.0 / math.gamma(x)


def _series(a, b, c, x, max_terms=5000):
    x = np.asarray(x, dtype=float)
    total = np.ones_like(x)
    term = np.ones_like(x)
    for n in range(max_terms):
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * x
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


@dataclass(frozen=True)
class FoxHParams:
    """Parameters of H^{m,n}_{p,q}: upper pairs (a_i, A_i), lower pairs (b_j, B_j)."""

    m: int
    n: int
    upper: tuple[tuple[float, float], ...] = ()
    lower: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple((float(a), float(A)) for a, A in self.upper))
        object.__setattr__(self, "lower", tuple((float(b), float(B)) for b, B in self.lower))
        p, q = len(self.upper), len(self.lower)
        if not (0 <= self.n <= p and 0 <= self.m <= q):
            raise InvalidInputError(f"need n <= p and m <= q, got m={self.m} n={self.n} p={p} q={q}")
        if any(A <= 0 for _, A in self.upper) or any(B <= 0 for _, B in self.lower):
            raise InvalidInputError("all A_i and B_j must be strictly positive")
        lo, hi = self.strip()
        if not lo < hi:
            raise ContourError(f"no contour separates the pole families (strip {lo}, {hi})")
        if self.decay_rate() <= 0:
            raise ContourError("Mellin-Barnes integrand does not decay on vertical lines")

    def strip(self) -> tuple[float, float]:
        """Open interval of Re(s) separating left and right pole families."""
        lo = max((-b / B for b, B in self.lower[: self.m]), default=-math.inf)
        hi = min(((1.0 - a) / A for a, A in self.upper[: self.n]), default=math.inf)
        return lo, hi

    def decay_rate(self) -> float:
        """Exponent a* of the |Im s| decay: |integrand| ~ exp(-pi a* |t| / 2)."""
        num = sum(A for _, A in self.upper[: self.n]) + sum(B for _, B in self.lower[: self.m])
        den = sum(A for _, A in self.upper[self.n:]) + sum(B for _, B in self.lower[self.m:])
        return num - den

    def log_kernel(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros(s.shape, dtype=complex)
        for j, (b, B) in enumerate(self.lower):
            if j < self.m:
                out += ln_gamma_complex(b + B * s)
            else:
                out -= ln_gamma_complex(1.0 - b - B * s)
        for i, (a, A) in enumerate(self.upper):
            if i < self.n:
                out += ln_gamma_complex(1.0 - a - A * s)
            else:
                out -= ln_gamma_complex(a + A * s)
        return out


def _saddle_1d(phi, lo, hi):
    """Minimize a convex-ish real function on the open interval (lo, hi)."""
    if math.isinf(lo) or math.isinf(hi):
        # bracket an interior minimum by stepping outward from a finite anchor
        anchor = hi - 1.0 if math.isinf(lo) and not math.isinf(hi) else (
            lo + 1.0 if not math.isinf(lo) else 0.0)
        left = anchor - 1.0 if math.isinf(lo) else lo
        right = anchor + 1.0 if math.isinf(hi) else hi
        step = 1.0
        while math.isinf(lo) and phi(left) < phi(left + 0.5 * step):
            step *= 2.0
            left -= step
        step = 1.0
        while math.isinf(hi) and phi(right) < phi(right - 0.5 * step):
            step *= 2.0
            right += step
        lo_b, hi_b = left, right
    else:
        lo_b, hi_b = lo, hi
    width = hi_b - lo_b
    eps = 1e-12 * max(1.0, width, abs(lo_b), abs(hi_b))
    r = optimize.minimize_scalar(phi, bounds=(lo_b + eps, hi_b - eps), method="bounded",
                                 options={"xatol": 1e-10 * max(1.0, width)})
    return float(r.x)


def fox_h(params: FoxHParams, z: float, rel_tol: float = 1e-10) -> float:
    """Univariate Fox H-function H^{m,n}_{p,q}[z] for real ``z > 0``."""
    if not z > 0:
        raise InvalidInputError("fox_h requires z > 0")
    log_z = math.log(z)
    lo, hi = params.strip()

    def phi(sigma):
        return float(params.log_kernel(complex(sigma)).real) - sigma * log_z

    sigma = _saddle_1d(phi, lo, hi)
    peak = phi(sigma)
    # curvature of the modulus sets the width of the central peak in Im(s)
    d = 1e-4 * max(1.0, abs(sigma))
    d = min(d, 0.25 * (sigma - lo), 0.25 * (hi - sigma))
    curv = (phi(sigma + d) - 2.0 * peak + phi(sigma - d)) / (d * d)
    width = 1.0 / math.sqrt(curv) if curv > 0 else 1.0
    rate = 0.5 * math.pi * params.decay_rate()
    if peak + math.log(width + 1.0) < _UNDERFLOW_LOG:
        return 0.0
    height = width * math.sqrt(2.0 * 45.0) + 45.0 / rate

    def g(s):
        return np.exp(params.log_kernel(s) - s * log_z - peak)

    res = integrate_vertical_line(g, sigma, height, rel_tol, scale=width, max_level=10,
                                  hermitian=True)
    return float(res.value.real) * math.exp(peak)


def h11_exponential(c: float) -> FoxHParams:
    """H^{1,0}_{0,1} with lower pair (0, c): equals exp(-z^(1/c)) / c."""
    return FoxHParams(1, 0, (), ((0.0, c),))


def h11_association(beta: float) -> FoxHParams:
    """H^{1,1}_{1,1} with pairs (0, 1/2) and (0, beta) used by the association laws."""
    return FoxHParams(1, 1, ((0.0, 0.5),), ((0.0, beta),))


@dataclass(frozen=True)
class BivariateHParams:
    """Exponent triple of the bivariate H-function.

    ``beta_k`` multiplies the coupling Gamma factor, ``beta_k1`` and
    ``beta_k2`` the per-variable factors.  ``k_index`` is a label (1 or 4)
    recording which triple of the exponent table it came from.
    """

    k_index: int
    beta_k: float
    beta_k1: float
    beta_k2: float

    def __post_init__(self):
        if self.k_index not in (1, 4):
            raise InvalidInputError("k_index must be 1 or 4")
        for b in (self.beta_k, self.beta_k1, self.beta_k2):
            if not 0.0 < b <= 1.0:
                raise InvalidInputError(f"beta values must lie in (0, 1], got {b}")

    @property
    def betas(self):
        return self.beta_k, self.beta_k1, self.beta_k2

    def log_kernel(self, s, w):
        b0, b1, b2 = self.betas
        return (ln_gamma_complex(b1 * s) + ln_gamma_complex(b2 * w)
                + ln_gamma_complex(b0 * (2.0 - s - w)))


def _bivariate_saddle(params: BivariateHParams, log_x: float, log_y: float):
    b0, b1, b2 = params.betas

    def phi(v):
        s, w = v
        r = 2.0 - s - w
        if s <= 0 or w <= 0 or r <= 0:
            return math.inf
        return (special.gammaln(b1 * s) + special.gammaln(b2 * w) + special.gammaln(b0 * r)
                - s * log_x - w * log_y)

    def grad_hess(v):
        s, w = v
        r = 2.0 - s - w
        p0 = special.digamma(b0 * r)
        t0 = special.polygamma(1, b0 * r)
        g = np.array([b1 * special.digamma(b1 * s) - b0 * p0 - log_x,
                      b2 * special.digamma(b2 * w) - b0 * p0 - log_y])
        h = np.array([[b1 * b1 * special.polygamma(1, b1 * s) + b0 * b0 * t0, b0 * b0 * t0],
                      [b0 * b0 * t0, b2 * b2 * special.polygamma(1, b2 * w) + b0 * b0 * t0]])
        return g, h

    v = np.array([2.0 / 3.0, 2.0 / 3.0])
    f = phi(v)
    for _ in range(200):
        g, h = grad_hess(v)
        step = -np.linalg.solve(h, g)
        lam = 1.0
        while True:
            cand = v + lam * step
            fc = phi(cand)
            if fc <= f + 1e-4 * lam * g @ step or lam < 1e-12:
                break
            lam *= 0.5
        if lam < 1e-12:
            break
        v, f = cand, fc
        if np.max(np.abs(lam * step)) < 1e-13 * max(1.0, np.max(np.abs(v))):
            break
    _, h = grad_hess(v)
    return v, f, h


def fox_h_bivariate(params: BivariateHParams, x: float, y: float, rel_tol: float = 1e-9) -> float:
    """Bivariate H-function

        (2 pi i)^-2 iint Gamma(b1 s) Gamma(b2 w) Gamma(2 b0 - b0 s - b0 w) x^-s y^-w ds dw

    with ``(b0, b1, b2) = (beta_k, beta_k1, beta_k2)``.  For positive
    arguments it equals ``(b0 b1 b2)^-1 * int_0^inf u exp(-u^(1/b0))
    exp(-(x u)^(1/b1)) exp(-(y u)^(1/b2)) du``.
    """
    if not (x > 0 and y > 0):
        raise InvalidInputError("fox_h_bivariate requires x > 0 and y > 0")
    lx, ly = math.log(x), math.log(y)
    (c1, c2), peak, hess = _bivariate_saddle(params, lx, ly)
    if peak < _UNDERFLOW_LOG:
        return 0.0
    chol = np.linalg.cholesky(hess)
    # t = A v maps the unit Gaussian in v onto the saddle's Gaussian in t
    transform = np.linalg.inv(chol).T
    b0, b1, b2 = params.betas
    rate = 0.5 * math.pi * min(b1 + b0, b2 + b0, (b1 + b2) / math.sqrt(2.0))
    reach = 50.0 / rate
    v_reach = reach * np.linalg.norm(chol.T, 2)
    half_width = math.asinh(max(v_reach, 8.0))

    def g(s, w):
        return np.exp(params.log_kernel(s, w) - s * lx - w * ly - peak)

    res = integrate_vertical_plane(g, (c1, c2), transform, half_width, rel_tol, hermitian=True)
    return float(res.value.real) * math.exp(peak)
