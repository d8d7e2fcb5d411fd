import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetnet.errors import ConfigError
from hetnet.model import (
    LOS,
    NLOS,
    AssociationCase,
    LinkDirection,
    NetworkConfig,
    Tier,
    db_to_linear,
    derive,
)


def test_db_conversion():
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(46.0) == pytest.approx(39810.717, rel=1e-6)
    np.testing.assert_allclose(db_to_linear([10.0, 20.0]), [10.0, 100.0])


def test_defaults_and_profiles():
    cfg = NetworkConfig()
    assert cfg.pbar_m == pytest.approx(10 ** 4.6)
    assert cfg.pbar_s == pytest.approx(10 ** 3.8)
    assert cfg.qbar_m == pytest.approx(100.0)
    assert cfg.qbar_s == pytest.approx(10 ** 3.8)
    assert cfg.lambda_iu == cfg.lambda_m
    assert cfg.mu == pytest.approx(10 / math.sqrt(math.pi * cfg.lambda_m))
    assert LOS.alpha_s == 2.0 and NLOS.alpha_s == 4.0


def test_tier_accessors():
    cfg = NetworkConfig()
    assert cfg.power(Tier.MCELL, LinkDirection.DL) == cfg.pbar_m
    assert cfg.power(Tier.SCELL, LinkDirection.UL) == cfg.qbar_s
    assert cfg.alpha(Tier.SCELL) == cfg.alpha_s
    assert cfg.interferer_density(LinkDirection.DL) == cfg.lambda_m
    assert cfg.with_ratio(7).lambda_s == pytest.approx(7 * cfg.lambda_m)


def test_case_tiers_round_trip():
    for case in AssociationCase:
        assert AssociationCase.from_tiers(case.ul_tier, case.dl_tier) is case
    assert AssociationCase.CASE2.ul_tier is Tier.SCELL and AssociationCase.CASE2.dl_tier is Tier.MCELL


@pytest.mark.parametrize("kw", [
    {"lambda_m": 0.0},
    {"lambda_s": -1.0},
    {"alpha_m": 2.0},
    {"alpha_s": 1.5},
    {"p_m_dbm": 10.0},               # Mcell DL power below the Scell's
    {"q_s_dbm": -10.0},              # would give Case 3 a positive probability
    {"noise_m_dbm": float("nan")},
    {"shadow_sigma_db": -1.0},
    {"w_m": 0.0},
])
def test_invalid_configs(kw):
    with pytest.raises(ConfigError):
        NetworkConfig(**kw)


def test_power_ordering_boundary_is_valid():
    # equal bias ratios put the configuration on the z1 = z2 boundary
    cfg = NetworkConfig(q_m_dbm=46.0, q_s_dbm=20.0)
    d = derive(cfg)
    assert d.z1 == pytest.approx(d.z2, rel=1e-12)


def test_derived_constants_by_hand():
    cfg = NLOS.with_ratio(10)
    d = derive(cfg)
    pim, pis = math.pi * cfg.lambda_m, math.pi * cfg.lambda_s
    assert d.xi1 == pytest.approx(pim ** (3 / 8) * (cfg.qbar_m / cfg.qbar_s) ** 0.25)
    assert d.xi2 == pytest.approx(math.sqrt(pis))
    assert d.xi3 == pytest.approx(pim ** (3 / 8) * (cfg.pbar_m / cfg.pbar_s) ** 0.25)
    assert d.xi4 == pytest.approx(pis ** (2 / 3) * (cfg.pbar_s / cfg.pbar_m) ** (1 / 3))
    assert d.betas == pytest.approx((1 / 3, 2 / 3, 0.5, 0.25, 3 / 8, 0.5))
    assert d.xi5(0.0) == pytest.approx(math.sqrt(pim))


@settings(max_examples=80, deadline=None)
@given(st.floats(0.5, 100), st.floats(2.0, 4.0), st.floats(2.2, 4.0), st.floats(0, 30))
def test_z_ordering(ratio, alpha_s, alpha_m, q_s_gain):
    # the power-ordering invariant puts z1 at or below z2
    cfg = NetworkConfig(alpha_s=alpha_s, alpha_m=alpha_m, q_s_dbm=20 + q_s_gain).with_ratio(ratio)
    d = derive(cfg)
    assert d.z1 <= d.z2 * (1 + 1e-12)


def test_link_scale():
    cfg = NetworkConfig()
    d = derive(cfg)
    t = 1.0
    expect = (math.expm1(t) * cfg.noise_s / cfg.qbar_s) ** (1 / cfg.alpha_s)
    assert d.link_scale(Tier.SCELL, LinkDirection.UL, t) == pytest.approx(expect)


def test_config_is_hashable_and_frozen():
    cfg = NetworkConfig()
    assert hash(cfg) == hash(NetworkConfig())
    with pytest.raises(Exception):
        cfg.alpha_m = 4.0
