"""Serving-distance laws conditioned on the association case.

Each supported (case, tier) pair has a density of the form
``g(x) * f_k(x) / Pr(case)`` where ``f_k(x) = 2 pi lambda_k x exp(-pi lambda_k x^2)``
is the nearest-BS law of tier ``k`` and ``g`` the probability that the other
tier's nearest BS produces the given case.  CDFs and samples come from a
Gauss-Legendre table of the density.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .association import prob_case_closed, prob_mcell_coupled, prob_case_quadrature
from .errors import UnsupportedPairError, ZeroProbabilityCaseError
from .model import AssociationCase, NetworkConfig, Tier, derive

SUPPORTED = {
    (AssociationCase.CASE1, Tier.MCELL),
    (AssociationCase.CASE2, Tier.MCELL),
    (AssociationCase.CASE2, Tier.SCELL),
    (AssociationCase.CASE4, Tier.SCELL),
}
# Label for the coupled-mode Mcell law (downlink decides the tier).
COUPLED = "coupled"

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_TABLE_PANELS = 600
_TAIL = 1e-12


def _key(case, tier):
    tier = Tier(tier) if not isinstance(tier, Tier) else tier
    if case == COUPLED:
        if tier is not Tier.MCELL:
            raise UnsupportedPairError("coupled law is only defined for the Mcell tier")
        return COUPLED, tier
    case = AssociationCase(case)
    if (case, tier) not in SUPPORTED:
        raise UnsupportedPairError(f"no serving-distance law for ({case.name}, {tier.name})")
    return case, tier


def nearest_pdf(lam: float, x):
    """Density of the nearest point of a PPP of intensity ``lam`` in the plane."""
    x = np.asarray(x, dtype=float)
    return 2.0 * math.pi * lam * x * np.exp(-math.pi * lam * x * x)


def joint_density(cfg: NetworkConfig, case, tier, x):
    """Unnormalized density ``Pr(case) * pdf(x)``; needs no association probability."""
    case, tier = _key(case, tier)
    d = derive(cfg)
    x = np.asarray(x, dtype=float)
    if tier is Tier.MCELL:
        p = 2.0 * cfg.alpha_m / cfg.alpha_s

        def guard(xi):
            return np.exp(-(xi * x) ** p)

        base = nearest_pdf(cfg.lambda_m, x)
        if case == COUPLED:
            return guard(d.xi4) * base
        if case is AssociationCase.CASE1:
            return guard(d.xi6) * base
        return (guard(d.xi4) - guard(d.xi6)) * base
    p = 2.0 * cfg.alpha_s / cfg.alpha_m

    def guard(xi):
        return np.exp(-(xi * x) ** p)

    base = nearest_pdf(cfg.lambda_s, x)
    if case is AssociationCase.CASE2:
        return (guard(d.xi1) - guard(d.xi3)) * base
    return guard(d.xi3) * base


def _probability(cfg, case, method="closed"):
    if case == COUPLED:
        if method == "closed":
            return prob_mcell_coupled(cfg)
        return prob_case_quadrature(cfg, AssociationCase.CASE1) + prob_case_quadrature(cfg, AssociationCase.CASE2)
    if method == "closed":
        return prob_case_closed(cfg, case)
    return prob_case_quadrature(cfg, case)


def _normalizer(cfg, case):
    p = _probability(cfg, case)
    if p <= 0.0:
        raise ZeroProbabilityCaseError(f"{case} has zero probability for this configuration")
    return p


def pdf(cfg: NetworkConfig, case, tier, x):
    """Serving-distance density (per metre) given the association case.

    ``case`` is an :class:`AssociationCase` (or ``COUPLED`` for the coupled
    Mcell law); ``tier`` the serving tier whose distance is described.
    """
    case, tier = _key(case, tier)
    out = joint_density(cfg, case, tier, x) / _normalizer(cfg, case)
    return float(out) if np.ndim(out) == 0 else out


def x_max(cfg: NetworkConfig, case, tier) -> float:
    """Distance beyond which the conditional law has mass below 1e-12."""
    case, tier = _key(case, tier)
    p = _normalizer(cfg, case)
    lam = cfg.density(tier)
    return math.sqrt(-math.log(_TAIL * min(p, 1.0)) / (math.pi * lam))


@lru_cache(maxsize=128)
def _table(cfg: NetworkConfig, case, tier):
    xm = x_max(cfg, case, tier)
    # panels uniform in x^2 resolve the Rayleigh-like bulk and the tail alike
    edges = xm * np.sqrt(np.linspace(0.0, 1.0, _TABLE_PANELS + 1))
    a, b = edges[:-1], edges[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    mass = (joint_density(cfg, case, tier, nodes) * _GL_WEIGHTS).sum(axis=1) * half
    cum = np.concatenate(([0.0], np.cumsum(mass)))
    return edges, cum / _normalizer(cfg, case)


def _partial(cfg, case, tier, a, b):
    """Vectorized Gauss-Legendre integral of the pdf over [a, b] (short intervals)."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[..., None] + half[..., None] * _GL_NODES
    vals = joint_density(cfg, case, tier, nodes)
    return (vals * _GL_WEIGHTS).sum(axis=-1) * half / _normalizer(cfg, case)


def cdf(cfg: NetworkConfig, case, tier, x):
    """Conditional distribution function of the serving distance."""
    case, tier = _key(case, tier)
    x = np.asarray(x, dtype=float)
    edges, cum = _table(cfg, case, tier)
    xc = np.clip(x, 0.0, edges[-1])
    i = np.clip(np.searchsorted(edges, xc, side="right") - 1, 0, edges.size - 2)
    out = cum[i] + _partial(cfg, case, tier, edges[i], xc)
    out = np.where(x >= edges[-1], 1.0, np.clip(out, 0.0, 1.0))
    return float(out) if out.ndim == 0 else out


def sample(cfg: NetworkConfig, case, tier, rng: np.random.Generator, size=None):
    """Draw serving distances by inverse-CDF bisection."""
    case, tier = _key(case, tier)
    u = rng.random(size)
    uu = np.atleast_1d(u)
    edges, cum = _table(cfg, case, tier)
    target = uu * cum[-1]
    i = np.clip(np.searchsorted(cum, target, side="right") - 1, 0, edges.size - 2)
    lo, hi = edges[i].copy(), edges[i + 1].copy()
    base = cum[i]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = base + _partial(cfg, case, tier, edges[i], mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    x = 0.5 * (lo + hi)
    return float(x[0]) if np.ndim(u) == 0 else x


def mean(cfg: NetworkConfig, case, tier) -> float:
    """Mean serving distance from the tabulated law."""
    case, tier = _key(case, tier)
    edges, _ = _table(cfg, case, tier)
    a, b = edges[:-1], edges[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = nodes * joint_density(cfg, case, tier, nodes)
    return float((vals * _GL_WEIGHTS).sum(axis=1).dot(half) / _normalizer(cfg, case))


def quantile(cfg: NetworkConfig, case, tier, q: float) -> float:
    """Inverse CDF at probability ``q`` by bisection."""
    case, tier = _key(case, tier)
    edges, cum = _table(cfg, case, tier)
    lo, hi = 0.0, float(edges[-1])
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if cdf(cfg, case, tier, mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
