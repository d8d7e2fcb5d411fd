import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from hetnet import distances, montecarlo as mc
from hetnet.association import prob_case_closed
from hetnet.errors import InvalidInputError
from hetnet.model import LOS, NLOS, AssociationCase, Tier
from hetnet.rates import big_g


def test_sample_ppp_moments():
    rng = np.random.default_rng(1)
    radius = 100.0
    density = 100 / (math.pi * radius ** 2)
    counts = []
    inner = total = 0
    for _ in range(10_000):
        pts = mc.sample_ppp(density, radius, rng)
        counts.append(len(pts))
        r = np.hypot(pts[:, 0], pts[:, 1])
        assert np.all(r <= radius)
        inner += int((r <= radius / 2).sum())
        total += r.size
    assert abs(np.mean(counts) - 100) < 3 * math.sqrt(100 / 10_000)
    frac = inner / total
    assert abs(frac - 0.25) < 3 * math.sqrt(0.25 * 0.75 / total)


def test_sample_ppp_determinism_and_errors():
    a = mc.sample_ppp(1e-3, 50.0, np.random.default_rng(9))
    b = mc.sample_ppp(1e-3, 50.0, np.random.default_rng(9))
    np.testing.assert_array_equal(a, b)
    with pytest.raises(InvalidInputError):
        mc.sample_ppp(0.0, 10.0, np.random.default_rng(0))


def test_associate_rules():
    cfg = NLOS.with_ratio(10)
    assert mc.associate(cfg, 10.0, 5000.0) is AssociationCase.CASE1
    assert mc.associate(cfg, 5000.0, 10.0) is AssociationCase.CASE4
    with pytest.raises(InvalidInputError):
        mc.associate(cfg, 0.0, 10.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1, 1e4), st.floats(1, 1e4), st.floats(-12, 12), st.floats(-12, 12))
def test_associate_never_case3(xm, xs, sm, ss):
    # shadowing is reciprocal, so the power ordering still rules Case 3 out
    assert mc.associate(NLOS, xm, xs, (sm, ss)) is not AssociationCase.CASE3


def test_associate_vectorized():
    cfg = LOS.with_ratio(5)
    xm = np.array([10.0, 800.0, 3000.0])
    xs = np.array([900.0, 300.0, 20.0])
    cases = mc.associate(cfg, xm, xs)
    assert [mc.associate(cfg, a, b) for a, b in zip(xm, xs)] == list(cases)


def test_thread_count_invariance():
    cfg = NLOS.with_ratio(10)
    a = mc.simulate(cfg, 5000, seed=3, threads=1)
    b = mc.simulate(cfg, 5000, seed=3, threads=4)
    assert a.case_frequency(2) == b.case_frequency(2)
    assert a.spectral_efficiency("se_ul_decoupled") == b.spectral_efficiency("se_ul_decoupled")
    c = mc.simulate(cfg, 5000, seed=4)
    assert a.case_frequency(2) != c.case_frequency(2)


def test_merge_equals_union():
    cfg = NLOS.with_ratio(5)
    whole = mc.simulate(cfg, 3 * 512, seed=8, block_size=512)
    left = mc.simulate(cfg, 512, seed=8, block_size=512)
    right = mc.simulate(cfg, 2 * 512, seed=8, block_size=512, first_block=1)
    merged = right.merge(left)
    assert merged.n_realizations == whole.n_realizations
    assert list(merged.case_counts) == list(whole.case_counts)
    for name in ("se_ul_decoupled", "se_dl_coupled"):
        assert merged.spectral_efficiency(name) == whole.spectral_efficiency(name)
    assert merged.mean_rate(1, "DL") == whole.mean_rate(1, "DL")
    with pytest.raises(InvalidInputError):
        merged.merge(left)


def test_counts_and_case3():
    res = mc.simulate(LOS.with_ratio(2), 4000, seed=1)
    assert res.case_counts.sum() == res.n_realizations == 4000
    assert res.case_counts[2] == 0
    shadowed = mc.simulate(LOS.with_ratio(2), 4000, seed=1, shadowing=True)
    assert shadowed.case_counts[2] == 0


def test_frequencies_match_closed_form():
    cfg = NLOS.with_ratio(10)
    res = mc.simulate(cfg, 50_000, seed=21)
    for case in (1, 2, 4):
        p, ci = res.case_frequency(case)
        assert abs(p - prob_case_closed(cfg, case)) <= ci


def test_paired_uplink_gain_nonnegative():
    res = mc.simulate(NLOS.with_ratio(10), 20_000, seed=2)
    dec, _ = res.spectral_efficiency("se_ul_decoupled")
    cpl, _ = res.spectral_efficiency("se_ul_coupled")
    assert dec >= cpl
    assert res.spectral_efficiency("se_dl_decoupled") == res.spectral_efficiency("se_dl_coupled")
    gain, _ = res.ul_gain
    assert gain == pytest.approx(dec - cpl, rel=1e-9, abs=1e-15)


def test_distance_samples_match_law():
    cfg = NLOS.with_ratio(10)
    res = mc.simulate(cfg, 20_000, seed=6, collect_distances=True)
    for case, tier in [(1, Tier.MCELL), (2, Tier.SCELL), ("coupled", Tier.MCELL)]:
        x = res.distance_samples(case, tier)
        assert stats.kstest(x, lambda v: distances.cdf(cfg, case, tier, v)).pvalue > 1e-3
    with pytest.raises(InvalidInputError):
        res.distance_samples(1, Tier.SCELL)
    with pytest.raises(InvalidInputError):
        mc.simulate(cfg, 10, seed=0).distance_samples(1, Tier.MCELL)


def test_mean_rate_modes():
    res = mc.simulate(NLOS.with_ratio(10), 5000, seed=5)
    assert res.mean_rate("coupled_scell", "UL") == res.mean_rate(4, "UL")
    m, ci = res.mean_rate("coupled_mcell", "DL")
    assert m > 0 and ci > 0


def test_resampling_with_tiny_disk():
    cfg = NLOS.with_ratio(1).replace(mu=400.0)
    res = mc.simulate(cfg, 2000, seed=0)
    assert res.resamples > 0
    assert res.n_realizations == 2000


def test_empirical_laplace_matches_pgfl():
    lam, x, t = 1e-6, 300.0, 1.0
    m, se = mc.empirical_laplace(lam, 3.0, x, t, 20_000, seed=4, radius=2e4)
    assert abs(m - math.exp(-math.pi * lam * x * x * big_g(3.0, t))) < 3 * se


def test_invalid_arguments():
    with pytest.raises(InvalidInputError):
        mc.simulate(NLOS, 0)
    with pytest.raises(InvalidInputError):
        mc.empirical_laplace(1e-6, 3.0, 100.0, 1.0, 10, radius=50.0)
