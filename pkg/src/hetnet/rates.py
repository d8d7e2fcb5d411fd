"""Average user rates and spectral efficiencies.

The closed form writes the conditional coverage probability at threshold
``theta = e^t - 1`` through the bivariate H-function and integrates it over
``t``.  The quadrature oracle integrates elementary exponentials over the
serving distance and ``t`` instead, normalized by the quadrature route of the
association probabilities, so it shares no H-function code with the closed
form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import distances
from .association import prob_case_closed, prob_case_quadrature, prob_mcell_coupled
from .errors import InvalidInputError, ZeroProbabilityCaseError
from .model import AssociationCase, LinkDirection, NetworkConfig, Tier, derive
from .quadrature import integrate_2d, integrate_semi_infinite
from .specfun import BivariateHParams, fox_h_bivariate, gauss_2f1


class ServingMode(enum.Enum):
    CASE1 = "case1"
    CASE2 = "case2"
    CASE4 = "case4"
    COUPLED_MCELL = "coupled_mcell"
    COUPLED_SCELL = "coupled_scell"


@dataclass(frozen=True)
class RateQuery:
    """Association case (or coupled-mode tier) and link direction of a rate."""

    case_or_mode: ServingMode
    direction: LinkDirection

    def __post_init__(self):
        mode = self.case_or_mode
        if isinstance(mode, AssociationCase):
            if mode is AssociationCase.CASE3:
                raise InvalidInputError("Case 3 has zero probability; no rate is defined")
            mode = ServingMode(f"case{int(mode)}")
        object.__setattr__(self, "case_or_mode", ServingMode(mode))
        object.__setattr__(self, "direction", LinkDirection(self.direction))

    @property
    def effective_mode(self) -> ServingMode:
        # the coupled Scell rate is the Case 4 rate
        if self.case_or_mode is ServingMode.COUPLED_SCELL:
            return ServingMode.CASE4
        return self.case_or_mode

    @property
    def tier(self) -> Tier:
        """Tier serving this query's link."""
        mode = self.effective_mode
        if mode is ServingMode.CASE4:
            return Tier.SCELL
        if mode is ServingMode.CASE2:
            return Tier.SCELL if self.direction is LinkDirection.UL else Tier.MCELL
        return Tier.MCELL


ALL_QUERIES = tuple(
    RateQuery(m, d)
    for m in (ServingMode.CASE1, ServingMode.CASE2, ServingMode.CASE4,
              ServingMode.COUPLED_MCELL)
    for d in (LinkDirection.UL, LinkDirection.DL)
)


def big_g(cfg_or_alpha_m, t):
    """Interference exponent ``G(t) = d theta/(1-d) 2F1(1, 1-d; 2-d; -theta)``.

    ``d = 2/alpha_m`` and ``theta = e^t - 1``.  Accepts a config or ``alpha_m``.
    """
    alpha_m = getattr(cfg_or_alpha_m, "alpha_m", cfg_or_alpha_m)
    if not alpha_m > 2:
        raise InvalidInputError("G(t) diverges for alpha_m <= 2")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidInputError("t must be non-negative")
    d = 2.0 / alpha_m
    theta = np.expm1(t)
    out = d * theta / (1.0 - d) * gauss_2f1(1.0, 1.0 - d, 2.0 - d, -theta)
    return float(out) if out.ndim == 0 else out


def interference_guard(cfg: NetworkConfig, direction, x, t):
    """Laplace functional ``exp(-pi lambda_int x^2 G(t))`` of co-tier interference.

    Interferers lie beyond the serving distance ``x``; ``lambda_int`` is
    ``lambda_iu`` on the uplink and ``lambda_m`` on the downlink.
    """
    lam = cfg.interferer_density(LinkDirection(direction))
    x = np.asarray(x, dtype=float)
    if lam == 0:
        return np.ones(np.broadcast(x, np.asarray(t)).shape) if np.ndim(x) or np.ndim(t) else 1.0
    out = np.exp(-math.pi * lam * x * x * big_g(cfg, t))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# closed form


def _structure(cfg: NetworkConfig, q: RateQuery):
    """Return (k, signed first arguments, second argument fn, base density).

    The conditional coverage mass at threshold t is
    ``2 pi lam beta_k beta_k1 beta_k2 xi^-2 sum_j sign_j H(k; a_j/xi, b(t)/xi)``.
    """
    d = derive(cfg)
    mode, direction = q.effective_mode, q.direction
    if q.tier is Tier.SCELL:
        k = 4
        b = lambda t: d.xi2  # noqa: E731
        lam = cfg.lambda_s
        terms = [(1.0, d.xi3)] if mode is ServingMode.CASE4 else [(1.0, d.xi1), (-1.0, d.xi3)]
    else:
        k = 1
        lam_int = cfg.interferer_density(direction)
        b = lambda t: d.xi5(t, lam_int)  # noqa: E731
        lam = cfg.lambda_m
        if mode is ServingMode.CASE1:
            terms = [(1.0, d.xi6)]
        elif mode is ServingMode.CASE2:
            terms = [(1.0, d.xi4), (-1.0, d.xi6)]
        else:
            terms = [(1.0, d.xi4)]
    betas = d.betas[k - 1:k + 2]
    return BivariateHParams(k, *betas), terms, b, lam


def _typical_distance(cfg, tier):
    return 1.0 / math.sqrt(math.pi * cfg.density(tier))


def _t_scales(cfg, q):
    """Lower cut-off and characteristic width of the outer threshold integral.

    Below the cut-off the coverage equals its threshold-zero value to about
    1e-9 relative.  The width is where ``t * coverage(t)`` carries its mass:
    order one when the link is weak (coverage then falls like
    ``theta^(-2/alpha)``), ``log(1 + theta_c)`` when a typical link is strong.
    """
    d = derive(cfg)
    tier = q.tier
    alpha = cfg.alpha(tier)
    x_hi = math.sqrt(-math.log(1e-12) / (math.pi * cfg.density(tier)))
    x_typ = _typical_distance(cfg, tier)
    per_theta = d.link_scale(tier, q.direction, math.log(2.0))  # xi at theta = 1
    theta_floor = (1e-2 / (x_hi * per_theta)) ** alpha
    theta_c = (1.0 / (x_typ * per_theta)) ** alpha
    if tier is Tier.MCELL and cfg.interferer_density(q.direction) > 0:
        theta_floor = min(theta_floor, 1e-6)
        theta_c = min(theta_c, 1.0)
    t_floor = math.log1p(theta_floor)
    scale = max(math.log1p(theta_c), 1.0)
    return t_floor, scale


def _rate_mass_closed(cfg: NetworkConfig, q: RateQuery, rel_tol: float) -> float:
    """``Pr(case) * rate / W`` from the closed form."""
    params, terms, b_fn, lam = _structure(cfg, q)
    d = derive(cfg)
    prefactor = 2.0 * math.pi * lam * params.beta_k * params.beta_k1 * params.beta_k2
    if len(terms) == 2 and terms[0][1] == terms[1][1]:
        return 0.0
    t_floor, scale = _t_scales(cfg, q)
    h_tol = max(rel_tol * 1e-2, 1e-10)
    # coverage mass at threshold zero is the case probability itself
    if q.effective_mode is ServingMode.CASE4:
        p0 = prob_case_closed(cfg, AssociationCase.CASE4)
    elif q.effective_mode is ServingMode.CASE2:
        p0 = prob_case_closed(cfg, AssociationCase.CASE2)
    elif q.effective_mode is ServingMode.CASE1:
        p0 = prob_case_closed(cfg, AssociationCase.CASE1)
    else:
        p0 = prob_mcell_coupled(cfg)

    # H(k; x, y) <= H(k; 0, 0) = beta_k Gamma(2 beta_k) / (beta_k beta_k1 beta_k2)
    bound = 2.0 * math.pi * lam * params.beta_k * math.gamma(2.0 * params.beta_k) * len(terms)

    def coverage(t_values):
        out = np.empty(np.shape(t_values))
        for i, t in enumerate(np.ravel(t_values)):
            if t < t_floor:
                out.flat[i] = p0
                continue
            with np.errstate(over="ignore"):
                xi = float(d.link_scale(q.tier, q.direction, t))
            if not bound / (xi * xi) > 1e-16 * p0:
                # coverage never exceeds bound / xi^2, negligible this far out
                out.flat[i] = 0.0
                continue
            b = float(b_fn(t))
            acc = 0.0
            for sign, a in terms:
                acc += sign * fox_h_bivariate(params, a / xi, b / xi, h_tol)
            out.flat[i] = prefactor * acc / (xi * xi)
        return out

    r = integrate_semi_infinite(coverage, 0.0, rel_tol, scale=scale)
    return max(float(r.value), 0.0)


def _probability(cfg, q: RateQuery, method: str) -> float:
    mode = q.effective_mode
    if mode is ServingMode.COUPLED_MCELL:
        if method == "closed":
            return prob_mcell_coupled(cfg)
        return prob_case_quadrature(cfg, AssociationCase.CASE1) + prob_case_quadrature(cfg, AssociationCase.CASE2)
    case = AssociationCase(int(mode.value[-1]))
    if method == "closed":
        return prob_case_closed(cfg, case)
    return prob_case_quadrature(cfg, case)


def _bandwidth(cfg, q):
    return cfg.bandwidth(q.tier)


def avg_rate_closed(cfg: NetworkConfig, q: RateQuery, *, rel_tol: float = 1e-6) -> float:
    """Average rate (nats/s) of the queried link, conditioned on its case."""
    p = _probability(cfg, q, "closed")
    if p <= 0.0:
        raise ZeroProbabilityCaseError(f"{q.case_or_mode.value} has zero probability")
    return _bandwidth(cfg, q) * _rate_mass_closed(cfg, q, rel_tol) / p


# ---------------------------------------------------------------------------
# quadrature oracle


def _distance_key(q: RateQuery):
    mode = q.effective_mode
    if mode is ServingMode.COUPLED_MCELL:
        return distances.COUPLED
    return AssociationCase(int(mode.value[-1]))


def _rate_mass_quadrature(cfg: NetworkConfig, q: RateQuery, rel_tol: float) -> float:
    tier = q.tier
    alpha = cfg.alpha(tier)
    ratio = cfg.noise(tier) / cfg.power(tier, q.direction)
    key = _distance_key(q)
    interfered = tier is Tier.MCELL
    _, scale = _t_scales(cfg, q)

    def integrand(t, x):
        theta = math.expm1(t) if t < 700.0 else math.inf
        if math.isinf(theta):
            return np.zeros_like(x)
        val = np.exp(-theta * ratio * x ** alpha) * distances.joint_density(cfg, key, tier, x)
        if interfered:
            val = val * interference_guard(cfg, q.direction, x, t)
        return val

    r = integrate_2d(integrand, rel_tol, scale_outer=scale,
                     scale_inner=_typical_distance(cfg, tier))
    return max(float(r.value), 0.0)


def avg_rate_quadrature(cfg: NetworkConfig, q: RateQuery, *, rel_tol: float = 1e-7) -> float:
    """Same quantity as :func:`avg_rate_closed` from elementary integrands only."""
    p = _probability(cfg, q, "quadrature")
    if p <= 0.0:
        raise ZeroProbabilityCaseError(f"{q.case_or_mode.value} has zero probability")
    return _bandwidth(cfg, q) * _rate_mass_quadrature(cfg, q, rel_tol) / p


# ---------------------------------------------------------------------------
# spectral efficiency


@dataclass(frozen=True)
class SpectralEfficiencyReport:
    """Decoupled and coupled spectral efficiencies (nats/s/Hz) with components.

    ``components`` maps ``(mode, direction)`` names to ``(rate / W, Pr)``;
    the rate entry is ``nan`` when its case has zero probability.
    """

    se_ul_decoupled: float
    se_dl_decoupled: float
    se_ul_coupled: float
    se_dl_coupled: float
    components: dict = field(default_factory=dict)

    @property
    def ul_gain(self) -> float:
        return self.se_ul_decoupled - self.se_ul_coupled


def spectral_efficiency(cfg: NetworkConfig, *, rel_tol: float = 1e-6,
                        method: str = "closed") -> SpectralEfficiencyReport:
    """Average spectral efficiency of both access modes in both directions.

    Each term ``(rate_i / W) * Pr(case i)`` is evaluated as a single coverage
    mass, so cases with zero probability contribute zero without dividing by it.
    """
    if method not in ("closed", "quadrature"):
        raise InvalidInputError("method must be 'closed' or 'quadrature'")
    mass_fn = _rate_mass_closed if method == "closed" else _rate_mass_quadrature
    masses, comps = {}, {}
    for q in ALL_QUERIES:
        m = mass_fn(cfg, q, rel_tol)
        p = _probability(cfg, q, method)
        masses[q.case_or_mode, q.direction] = m
        comps[f"{q.case_or_mode.value}_{q.direction.value}"] = (m / p if p > 0 else math.nan, p)
    ul, dl = LinkDirection.UL, LinkDirection.DL
    c4 = ServingMode.CASE4
    report = SpectralEfficiencyReport(
        se_ul_decoupled=masses[ServingMode.CASE1, ul] + masses[ServingMode.CASE2, ul] + masses[c4, ul],
        se_dl_decoupled=masses[ServingMode.CASE1, dl] + masses[ServingMode.CASE2, dl] + masses[c4, dl],
        se_ul_coupled=masses[ServingMode.COUPLED_MCELL, ul] + masses[c4, ul],
        se_dl_coupled=masses[ServingMode.COUPLED_MCELL, dl] + masses[c4, dl],
        components=comps,
    )
    return report
