"""Joint uplink/downlink association probabilities.

Two independent routes are provided: the H-function closed forms and a
direct one-dimensional quadrature over the nearest Scell distance.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import InvalidInputError, ProbabilityRangeError
from .model import AssociationCase, NetworkConfig, derive
from .quadrature import integrate_semi_infinite
from .specfun import fox_h, h11_association

CLAMP_SLACK = 1e-9


@lru_cache(maxsize=4096)
def _h(beta: float, z: float, rel_tol: float) -> float:
    return fox_h(h11_association(beta), z, rel_tol)


def _check_range(p: float, strict: bool) -> float:
    if -CLAMP_SLACK <= p <= 1.0 + CLAMP_SLACK:
        return min(max(p, 0.0), 1.0)
    if strict:
        raise ProbabilityRangeError(f"probability {p!r} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def _case(case) -> AssociationCase:
    try:
        return AssociationCase(case)
    except ValueError:
        raise InvalidInputError(f"unknown association case {case!r}") from None


def prob_case_closed(cfg: NetworkConfig, case, *, rel_tol: float = 1e-8, strict: bool = True) -> float:
    """Probability of an association case from the H-function closed forms.

    With ``c = alpha_m / (2 alpha_s)`` and ``H(z) = H^{1,1}_{1,1}[z | (0,1/2); (0,c)]``:
    Case 1 is ``1 - c H(z1)``, Case 2 is ``c (H(z1) - H(z2))``, Case 4 is
    ``c H(z2)`` and Case 3 is exactly zero.

    Results within 1e-9 of [0, 1] are clamped; larger excursions raise
    :class:`ProbabilityRangeError` when ``strict`` (else they are clamped too).
    """
    case = _case(case)
    if case is AssociationCase.CASE3:
        return 0.0
    d = derive(cfg)
    c = d.beta5
    tol = rel_tol * 1e-2
    if case is AssociationCase.CASE1:
        p = 1.0 - c * _h(c, d.z1, tol)
    elif case is AssociationCase.CASE2:
        p = 0.0 if d.z1 == d.z2 else c * (_h(c, d.z1, tol) - _h(c, d.z2, tol))
    else:
        p = c * _h(c, d.z2, tol)
    return _check_range(p, strict)


def prob_mcell_coupled(cfg: NetworkConfig, *, rel_tol: float = 1e-8, strict: bool = True) -> float:
    """Probability that the downlink (hence the coupled link) is served by an Mcell."""
    d = derive(cfg)
    c = d.beta5
    return _check_range(1.0 - c * _h(c, d.z2, rel_tol * 1e-2), strict)


def _ul_scell_given_xs(cfg, x):
    # P(uplink prefers the Scell at distance x) = P(no Mcell inside the biased radius)
    d = derive(cfg)
    return np.exp(-(d.xi1 * x) ** (2.0 * cfg.alpha_s / cfg.alpha_m))


def _dl_scell_given_xs(cfg, x):
    d = derive(cfg)
    return np.exp(-(d.xi3 * x) ** (2.0 * cfg.alpha_s / cfg.alpha_m))


def prob_case_quadrature(cfg: NetworkConfig, case, *, rel_tol: float = 1e-10) -> float:
    """Association probability by direct integration over the nearest Scell distance.

    For example ``Pr(Case 1) = 1 - int f_XS(x) exp(-(xi1 x)^(2 alpha_s/alpha_m)) dx``
    with ``f_XS(x) = 2 pi lambda_s x exp(-pi lambda_s x^2)``.
    """
    case = _case(case)
    if case is AssociationCase.CASE3:
        return 0.0
    lam = cfg.lambda_s

    def f_xs(x):
        return 2.0 * math.pi * lam * x * np.exp(-math.pi * lam * x * x)

    scale = 1.0 / math.sqrt(math.pi * lam)

    def integral(g):
        return integrate_semi_infinite(lambda x: f_xs(x) * g(cfg, x), 0.0, rel_tol, scale=scale).value

    if case is AssociationCase.CASE1:
        p = 1.0 - integral(_ul_scell_given_xs)
    elif case is AssociationCase.CASE2:
        p = integral(lambda c, x: _ul_scell_given_xs(c, x) - _dl_scell_given_xs(c, x))
    else:
        p = integral(_dl_scell_given_xs)
    return _check_range(p, True)
