"""Network configuration, unit conversion and derived scale constants."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError


class AssociationCase(enum.IntEnum):
    """Joint (uplink, downlink) serving tiers."""

    CASE1 = 1  # UL Mcell, DL Mcell
    CASE2 = 2  # UL Scell, DL Mcell
    CASE3 = 3  # UL Mcell, DL Scell, never happens without shadowing
    CASE4 = 4  # UL Scell, DL Scell

    @classmethod
    def from_tiers(cls, ul: "Tier", dl: "Tier") -> "AssociationCase":
        return _CASE_OF_TIERS[(ul, dl)]

    @property
    def ul_tier(self) -> "Tier":
        return _TIERS_OF_CASE[self][0]

    @property
    def dl_tier(self) -> "Tier":
        return _TIERS_OF_CASE[self][1]


class Tier(enum.Enum):
    MCELL = "M"
    SCELL = "S"


class LinkDirection(enum.Enum):
    UL = "UL"
    DL = "DL"


_TIERS_OF_CASE = {
    AssociationCase.CASE1: (Tier.MCELL, Tier.MCELL),
    AssociationCase.CASE2: (Tier.SCELL, Tier.MCELL),
    AssociationCase.CASE3: (Tier.MCELL, Tier.SCELL),
    AssociationCase.CASE4: (Tier.SCELL, Tier.SCELL),
}
_CASE_OF_TIERS = {v: k for k, v in _TIERS_OF_CASE.items()}


def db_to_linear(x_db):
    """Convert dB (or dBm, dBi) to a linear ratio (or mW)."""
    if np.ndim(x_db):
        return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)
    return 10.0 ** (float(x_db) / 10.0)


@dataclass(frozen=True)
class NetworkConfig:
    """Physical parameters of the two-tier network.

    Powers are in dBm, gains in dBi, densities in BS per square metre and
    distances in metres.  ``lambda_iu`` defaults to ``lambda_m`` and ``mu``
    (simulation disk radius) to ``10 / sqrt(pi * lambda_m)``.  ``lambda_u``
    (UE density) is carried for completeness but enters no formula.
    """

    p_m_dbm: float = 46.0
    p_s_dbm: float = 20.0
    q_m_dbm: float = 20.0
    q_s_dbm: float = 20.0
    g_m_dbi: float = 0.0
    g_s_dbi: float = 18.0
    alpha_m: float = 3.0
    alpha_s: float = 4.0
    lambda_m: float = 1e-6
    lambda_s: float = 1e-5
    lambda_iu: float | None = None
    noise_m_dbm: float = 0.0
    noise_s_dbm: float = 0.0
    w_m: float = 1.0
    w_s: float = 1.0
    mu: float | None = None
    shadow_sigma_db: float = 0.0
    lambda_u: float | None = None

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None and not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ConfigError(f"{f.name} must be a finite number, got {v!r}")
        if self.lambda_iu is None:
            object.__setattr__(self, "lambda_iu", self.lambda_m)
        if self.mu is None and self.lambda_m > 0:
            object.__setattr__(self, "mu", 10.0 / math.sqrt(math.pi * self.lambda_m))
        if not (self.lambda_m > 0 and self.lambda_s > 0):
            raise ConfigError("BS densities must be positive")
        if self.lambda_iu < 0:
            raise ConfigError("lambda_iu must be non-negative")
        if self.lambda_u is not None and self.lambda_u <= 0:
            raise ConfigError("lambda_u must be positive when given")
        if not self.alpha_m > 2:
            raise ConfigError("alpha_m must exceed 2")
        if not self.alpha_s >= 2:
            raise ConfigError("alpha_s must be at least 2")
        if not (self.w_m > 0 and self.w_s > 0 and self.mu > 0):
            raise ConfigError("bandwidths and mu must be positive")
        if self.shadow_sigma_db < 0:
            raise ConfigError("shadow_sigma_db must be non-negative")
        if not self.pbar_m > self.pbar_s:
            raise ConfigError("Mcell downlink power P_M*G_M must exceed P_S*G_S")
        # Q_S/Q_M >= P_S/P_M, compared in dB to avoid rounding at equality
        q_ratio_db = (self.q_s_dbm + self.g_s_dbi) - (self.q_m_dbm + self.g_m_dbi)
        p_ratio_db = (self.p_s_dbm + self.g_s_dbi) - (self.p_m_dbm + self.g_m_dbi)
        if q_ratio_db < p_ratio_db - 1e-12:
            raise ConfigError("need Qbar_S/Qbar_M >= Pbar_S/Pbar_M (otherwise Case 3 has mass)")

    @property
    def pbar_m(self) -> float:
        return db_to_linear(self.p_m_dbm + self.g_m_dbi)

    @property
    def pbar_s(self) -> float:
        return db_to_linear(self.p_s_dbm + self.g_s_dbi)

    @property
    def qbar_m(self) -> float:
        return db_to_linear(self.q_m_dbm + self.g_m_dbi)

    @property
    def qbar_s(self) -> float:
        return db_to_linear(self.q_s_dbm + self.g_s_dbi)

    @property
    def noise_m(self) -> float:
        return db_to_linear(self.noise_m_dbm)

    @property
    def noise_s(self) -> float:
        return db_to_linear(self.noise_s_dbm)

    def alpha(self, tier: Tier) -> float:
        return self.alpha_m if tier is Tier.MCELL else self.alpha_s

    def density(self, tier: Tier) -> float:
        return self.lambda_m if tier is Tier.MCELL else self.lambda_s

    def bandwidth(self, tier: Tier) -> float:
        return self.w_m if tier is Tier.MCELL else self.w_s

    def noise(self, tier: Tier) -> float:
        return self.noise_m if tier is Tier.MCELL else self.noise_s

    def power(self, tier: Tier, direction: LinkDirection) -> float:
        """Effective transmit power times gain of the link served by ``tier``."""
        if direction is LinkDirection.UL:
            return self.qbar_m if tier is Tier.MCELL else self.qbar_s
        return self.pbar_m if tier is Tier.MCELL else self.pbar_s

    def interferer_density(self, direction: LinkDirection) -> float:
        """Density of co-tier interferers seen on an Mcell link."""
        return self.lambda_iu if direction is LinkDirection.UL else self.lambda_m

    def with_ratio(self, ratio: float) -> "NetworkConfig":
        """Copy with ``lambda_s = ratio * lambda_m``."""
        return replace(self, lambda_s=ratio * self.lambda_m)

    def replace(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)


LOS = NetworkConfig(alpha_s=2.0)
NLOS = NetworkConfig(alpha_s=4.0)


@dataclass(frozen=True)
class DerivedParams:
    """Scale constants and exponent ratios shared by the closed forms.

    ``xi1`` .. ``xi6`` (without ``xi5``, which depends on the rate threshold)
    are composite inverse lengths; ``z1 = xi1/xi2`` and ``z2 = xi3/xi2`` are the
    arguments of the association H-functions.
    """

    cfg: NetworkConfig = field(repr=False)
    z1: float
    z2: float
    xi1: float
    xi2: float
    xi3: float
    xi4: float
    xi6: float
    betas: tuple[float, float, float, float, float, float]

    @property
    def beta1(self):
        return self.betas[0]

    @property
    def beta2(self):
        return self.betas[1]

    @property
    def beta3(self):
        return self.betas[2]

    @property
    def beta4(self):
        return self.betas[3]

    @property
    def beta5(self):
        return self.betas[4]

    @property
    def beta6(self):
        return self.betas[5]

    def xi5(self, t, lambda_int: float | None = None):
        """``sqrt(pi * (lambda_m + lambda_int * G(t)))``; ``lambda_int`` defaults to ``lambda_iu``."""
        from .rates import big_g

        lam = self.cfg.lambda_iu if lambda_int is None else lambda_int
        return np.sqrt(math.pi * (self.cfg.lambda_m + lam * big_g(self.cfg, t)))

    def link_scale(self, tier: Tier, direction: LinkDirection, t):
        """``(theta * noise / power)^(1/alpha)`` with ``theta = e^t - 1``."""
        cfg = self.cfg
        theta = np.expm1(t)
        return (theta * cfg.noise(tier) / cfg.power(tier, direction)) ** (1.0 / cfg.alpha(tier))


def derive(cfg: NetworkConfig) -> DerivedParams:
    """Compute the derived constants of ``cfg``."""
    am, as_ = cfg.alpha_m, cfg.alpha_s
    pi_m = math.pi * cfg.lambda_m
    pi_s = math.pi * cfg.lambda_s
    xi1 = pi_m ** (am / (2 * as_)) * (cfg.qbar_m / cfg.qbar_s) ** (1 / as_)
    xi2 = math.sqrt(pi_s)
    xi3 = pi_m ** (am / (2 * as_)) * (cfg.pbar_m / cfg.pbar_s) ** (1 / as_)
    xi4 = pi_s ** (as_ / (2 * am)) * (cfg.pbar_s / cfg.pbar_m) ** (1 / am)
    xi6 = pi_s ** (as_ / (2 * am)) * (cfg.qbar_s / cfg.qbar_m) ** (1 / am)
    betas = (1 / am, as_ / (2 * am), 0.5, 1 / as_, am / (2 * as_), 0.5)
    return DerivedParams(cfg, xi1 / xi2, xi3 / xi2, xi1, xi2, xi3, xi4, xi6, betas)
