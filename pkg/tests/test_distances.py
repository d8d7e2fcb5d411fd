import math

import numpy as np
import pytest
from scipy import integrate, stats

from hetnet import distances
from hetnet.errors import UnsupportedPairError, ZeroProbabilityCaseError
from hetnet.model import LOS, NLOS, AssociationCase, NetworkConfig, Tier

PAIRS = sorted(distances.SUPPORTED, key=lambda p: (p[0], p[1].value)) + [(distances.COUPLED, Tier.MCELL)]


@pytest.mark.parametrize("base", [LOS, NLOS], ids=["LOS", "NLOS"])
@pytest.mark.parametrize("case,tier", PAIRS)
def test_pdf_normalized(base, case, tier):
    cfg = base.with_ratio(10)
    top = distances.x_max(cfg, case, tier)
    mass, _ = integrate.quad(lambda x: distances.pdf(cfg, case, tier, x), 0, top, limit=400, epsabs=1e-13)
    assert mass == pytest.approx(1.0, abs=1e-6)
    assert distances.cdf(cfg, case, tier, top) == 1.0


@pytest.mark.parametrize("case,tier", PAIRS)
def test_cdf_monotone_and_quantile_inverse(case, tier):
    cfg = NLOS.with_ratio(5)
    xs = np.linspace(0, distances.x_max(cfg, case, tier), 200)
    F = distances.cdf(cfg, case, tier, xs)
    assert np.all(np.diff(F) >= -1e-15)
    q = distances.quantile(cfg, case, tier, 0.3)
    assert distances.cdf(cfg, case, tier, q) == pytest.approx(0.3, abs=1e-9)


@pytest.mark.parametrize("case,tier", PAIRS)
def test_samples_follow_cdf(case, tier):
    cfg = NLOS.with_ratio(10)
    rng = np.random.default_rng(5)
    x = distances.sample(cfg, case, tier, rng, 3000)
    result = stats.kstest(x, lambda v: distances.cdf(cfg, case, tier, v))
    assert result.pvalue > 1e-3
    assert x.mean() == pytest.approx(distances.mean(cfg, case, tier), rel=0.05)


def test_sum_of_joint_densities_is_nearest_law():
    # the Case 1 and Case 2 Mcell laws partition the coupled one
    cfg = NLOS.with_ratio(10)
    x = np.linspace(1, 2000, 50)
    a = distances.joint_density(cfg, 1, Tier.MCELL, x) + distances.joint_density(cfg, 2, Tier.MCELL, x)
    np.testing.assert_allclose(a, distances.joint_density(cfg, distances.COUPLED, Tier.MCELL, x), rtol=1e-12)


def test_nearest_pdf():
    lam = 1e-5
    assert distances.nearest_pdf(lam, 0.0) == 0.0
    mass, _ = integrate.quad(lambda x: distances.nearest_pdf(lam, x), 0, np.inf)
    assert mass == pytest.approx(1.0, rel=1e-10)


def test_los_contracts_tail():
    q_los = distances.quantile(LOS.with_ratio(10), 2, Tier.MCELL, 0.99)
    q_nlos = distances.quantile(NLOS.with_ratio(10), 2, Tier.MCELL, 0.99)
    assert q_los < q_nlos


def test_unsupported_pairs():
    with pytest.raises(UnsupportedPairError):
        distances.pdf(NLOS, AssociationCase.CASE1, Tier.SCELL, 10.0)
    with pytest.raises(UnsupportedPairError):
        distances.pdf(NLOS, AssociationCase.CASE3, Tier.MCELL, 10.0)
    with pytest.raises(UnsupportedPairError):
        distances.pdf(NLOS, distances.COUPLED, Tier.SCELL, 10.0)


def test_zero_probability_case():
    cfg = NetworkConfig(q_m_dbm=46.0, q_s_dbm=20.0)
    with pytest.raises(ZeroProbabilityCaseError):
        distances.pdf(cfg, 2, Tier.SCELL, 10.0)


def test_scalar_and_array_shapes():
    cfg = NLOS.with_ratio(10)
    assert isinstance(distances.pdf(cfg, 1, Tier.MCELL, 100.0), float)
    assert distances.pdf(cfg, 1, Tier.MCELL, np.ones(4)).shape == (4,)
    assert isinstance(distances.sample(cfg, 4, Tier.SCELL, np.random.default_rng(0)), float)
    assert not math.isnan(distances.mean(cfg, 4, Tier.SCELL))
