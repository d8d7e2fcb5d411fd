"""Monte Carlo simulation of the two-tier network around a typical UE.

Realizations are processed in fixed-size blocks.  Block ``b`` draws from a
generator seeded by ``(seed, b)``, so results do not depend on how blocks are
spread over threads, and tallies from disjoint block ranges merge exactly.
Only distances to the origin matter for every quantity computed here, so
base stations are drawn as radii.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .model import AssociationCase, LinkDirection, NetworkConfig, Tier

BLOCK_SIZE = 1024
CI_SIGMAS = 3.0
DEFAULT_SHADOW_SIGMA_DB = 4.0
# Scell disk radius (in units of the tier's mean nearest distance) when the
# whole Scell process is needed; about 100 BS per realization
_SCELL_DISK = 10.0

_CASES = (1, 2, 3, 4)
_DISTANCE_KEYS = ((1, "M"), (2, "M"), (2, "S"), (4, "S"), ("coupled", "M"))
_SE_NAMES = ("se_ul_decoupled", "se_dl_decoupled", "se_ul_coupled", "se_dl_coupled")


def _generator(seed: int, block: int) -> np.random.Generator:
    seed = int(seed)
    return np.random.default_rng(np.random.SeedSequence([abs(seed), int(seed < 0), int(block)]))


def sample_ppp(density: float, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP on the disk of given radius centred at the origin, as an (N, 2) array."""
    if not (density > 0 and radius > 0):
        raise InvalidInputError("density and radius must be positive")
    n = rng.poisson(density * math.pi * radius * radius)
    r = radius * np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


def associate(cfg: NetworkConfig, xm, xs, shadow_db=(0.0, 0.0)):
    """Association case from the serving distances of both tiers.

    ``shadow_db`` holds the (Mcell, Scell) shadowing offsets in dB of the
    candidate links.  Uplink and downlink each pick the tier with the larger
    biased received power; ties go to the Mcell.  Works elementwise on arrays.
    """
    xm = np.asarray(xm, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if np.any(xm <= 0) or np.any(xs <= 0):
        raise InvalidInputError("distances must be positive")
    sm = 10.0 ** (np.asarray(shadow_db[0], dtype=float) / 10.0)
    ss = 10.0 ** (np.asarray(shadow_db[1], dtype=float) / 10.0)
    gm = sm * xm ** -cfg.alpha_m
    gs = ss * xs ** -cfg.alpha_s
    cases = _cases_from_gains(cfg, gm, gs)
    if cases.ndim == 0:
        return AssociationCase(int(cases))
    return cases


def _cases_from_gains(cfg, gm, gs):
    ul_m = cfg.qbar_m * gm >= cfg.qbar_s * gs
    dl_m = cfg.pbar_m * gm >= cfg.pbar_s * gs
    return np.where(ul_m, np.where(dl_m, 1, 3), np.where(dl_m, 2, 4))


@dataclass(frozen=True)
class BlockTally:
    """Sufficient statistics of one block of realizations."""

    n: int
    resamples: int
    case_counts: np.ndarray        # int, index = case number (0 unused)
    rate_sum: np.ndarray           # (5, 2): case x (UL, DL)
    rate_sumsq: np.ndarray
    coupled_m_count: int
    coupled_m_sum: np.ndarray      # (2,): UL, DL on the Mcell when DL picks the Mcell
    coupled_m_sumsq: np.ndarray
    se_sum: np.ndarray             # (4,) in _SE_NAMES order
    se_sumsq: np.ndarray
    gain_sum: float                # paired decoupled - coupled uplink rate
    gain_sumsq: float
    interference_sum: np.ndarray   # (2,): mean UL, DL interference power on Mcell links (mW)
    distances: dict = field(default_factory=dict)


def _ragged_strongest(rng, counts, radius, alpha, sigma_db):
    """Draw uniform radii for each realization and locate its strongest BS.

    Returns per-point radii, per-point shadow gains, the index of each
    realization's first point and the index of its strongest point.
    """
    total = int(counts.sum())
    r = radius * np.sqrt(rng.random(total))
    shadow = 10.0 ** (rng.normal(0.0, sigma_db, total) / 10.0) if sigma_db > 0 else np.ones(total)
    gain = shadow * r ** -alpha
    row = np.repeat(np.arange(counts.size), counts)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    order = np.lexsort((-gain, row))
    best = order[starts]
    return r, shadow, gain, starts, best


def _poisson_nonempty(rng, mean, size):
    counts = rng.poisson(mean, size)
    resamples = 0
    empty = counts == 0
    while np.any(empty):
        resamples += int(empty.sum())
        counts[empty] = rng.poisson(mean, int(empty.sum()))
        empty = counts == 0
    return counts, resamples


def _simulate_block(cfg: NetworkConfig, seed: int, block: int, n: int, sigma_db: float,
                    collect_distances: bool) -> BlockTally:
    rng = _generator(seed, block)
    mu = cfg.mu
    am, as_ = cfg.alpha_m, cfg.alpha_s

    # Mcell tier: the whole process is needed for downlink interference
    counts_m, resamples = _poisson_nonempty(rng, cfg.lambda_m * math.pi * mu * mu, n)
    r_m, sh_m, gain_m, starts_m, best_m = _ragged_strongest(rng, counts_m, mu, am, sigma_db)
    xm = r_m[best_m]
    gm = gain_m[best_m]
    fade = rng.exponential(1.0, r_m.size)
    i_dl = np.add.reduceat(cfg.pbar_m * fade * gain_m, starts_m) - cfg.pbar_m * fade[best_m] * gm

    # Scell tier: noise limited, so only the serving BS matters
    if sigma_db > 0:
        radius_s = min(mu, _SCELL_DISK / math.sqrt(math.pi * cfg.lambda_s))
        counts_s, extra = _poisson_nonempty(rng, cfg.lambda_s * math.pi * radius_s ** 2, n)
        resamples += extra
        r_s, _, gain_s, _, best_s = _ragged_strongest(rng, counts_s, radius_s, as_, sigma_db)
        xs = r_s[best_s]
        gs = gain_s[best_s]
    else:
        # nearest point of a PPP: pi lambda X^2 ~ Exp(1); beyond mu the disk is empty
        xs = np.sqrt(rng.exponential(1.0, n) / (math.pi * cfg.lambda_s))
        empty = xs > mu
        while np.any(empty):
            resamples += int(empty.sum())
            xs[empty] = np.sqrt(rng.exponential(1.0, int(empty.sum())) / (math.pi * cfg.lambda_s))
            empty = xs > mu
        gs = xs ** -as_

    cases = _cases_from_gains(cfg, gm, gs)
    ul_m = (cases == 1) | (cases == 3)
    dl_m = (cases == 1) | (cases == 2)

    # uplink interferers: fresh PPP of UEs around the serving Mcell, outside radius xm
    annulus = np.maximum(mu * mu - xm * xm, 0.0)
    counts_u = rng.poisson(cfg.lambda_iu * math.pi * annulus)
    row_u = np.repeat(np.arange(n), counts_u)
    r_u = np.sqrt(xm[row_u] ** 2 + annulus[row_u] * rng.random(row_u.size))
    g_u = rng.exponential(1.0, row_u.size)
    if sigma_db > 0:
        g_u = g_u * 10.0 ** (rng.normal(0.0, sigma_db, row_u.size) / 10.0)
    i_ul = np.bincount(row_u, weights=cfg.qbar_m * g_u * r_u ** -am, minlength=n)

    h = rng.exponential(1.0, (4, n))
    rate_ul_m = np.log1p(cfg.qbar_m * h[0] * gm / (i_ul + cfg.noise_m))
    rate_dl_m = np.log1p(cfg.pbar_m * h[1] * gm / (i_dl + cfg.noise_m))
    rate_ul_s = np.log1p(cfg.qbar_s * h[2] * gs / cfg.noise_s)
    rate_dl_s = np.log1p(cfg.pbar_s * h[3] * gs / cfg.noise_s)

    ul_dec = np.where(ul_m, rate_ul_m, rate_ul_s)
    dl = np.where(dl_m, rate_dl_m, rate_dl_s)
    ul_cpl = np.where(dl_m, rate_ul_m, rate_ul_s)

    case_counts = np.bincount(cases, minlength=5).astype(np.int64)
    rate_sum = np.zeros((5, 2))
    rate_sumsq = np.zeros((5, 2))
    for c in _CASES:
        m = cases == c
        rate_sum[c] = ul_dec[m].sum(), dl[m].sum()
        rate_sumsq[c] = (ul_dec[m] ** 2).sum(), (dl[m] ** 2).sum()
    se = np.stack((ul_dec, dl, ul_cpl, dl))
    gain = ul_dec - ul_cpl

    distances = {}
    if collect_distances:
        distances = {
            (1, "M"): xm[cases == 1],
            (2, "M"): xm[cases == 2],
            (2, "S"): xs[cases == 2],
            (4, "S"): xs[cases == 4],
            ("coupled", "M"): xm[dl_m],
        }
    return BlockTally(
        n=n,
        resamples=resamples,
        case_counts=case_counts,
        rate_sum=rate_sum,
        rate_sumsq=rate_sumsq,
        coupled_m_count=int(dl_m.sum()),
        coupled_m_sum=np.array([rate_ul_m[dl_m].sum(), rate_dl_m[dl_m].sum()]),
        coupled_m_sumsq=np.array([(rate_ul_m[dl_m] ** 2).sum(), (rate_dl_m[dl_m] ** 2).sum()]),
        se_sum=se.sum(axis=1),
        se_sumsq=(se ** 2).sum(axis=1),
        gain_sum=float(gain.sum()),
        gain_sumsq=float((gain ** 2).sum()),
        interference_sum=np.array([i_ul.sum(), i_dl.sum()]),
        distances=distances,
    )


def _exact_sum(arrays):
    """Correctly rounded elementwise sum, hence independent of order."""
    stacked = np.stack([np.asarray(a, dtype=float) for a in arrays])
    flat = stacked.reshape(stacked.shape[0], -1)
    out = np.array([math.fsum(flat[:, j]) for j in range(flat.shape[1])])
    return out.reshape(stacked.shape[1:])


def _mean_ci(total, total_sq, count):
    if count == 0:
        return math.nan, math.nan
    mean = total / count
    if count < 2:
        return mean, math.inf
    var = max(total_sq / count - mean * mean, 0.0) * count / (count - 1)
    return mean, CI_SIGMAS * math.sqrt(var / count)


@dataclass(frozen=True)
class McResult:
    """Monte Carlo tallies keyed by block index.

    Summary statistics are computed on demand with correctly rounded sums, so
    merging results of disjoint block ranges reproduces a single run exactly.
    Confidence half-widths are ``CI_SIGMAS`` standard errors.
    """

    seed: int
    block_size: int
    blocks: dict = field(default_factory=dict)

    @property
    def n_realizations(self) -> int:
        return sum(b.n for b in self.blocks.values())

    @property
    def resamples(self) -> int:
        """Realizations redrawn because a tier had no BS in the disk."""
        return sum(b.resamples for b in self.blocks.values())

    def merge(self, other: "McResult") -> "McResult":
        if other.seed != self.seed or other.block_size != self.block_size:
            raise InvalidInputError("can only merge results with the same seed and block size")
        overlap = self.blocks.keys() & other.blocks.keys()
        if overlap:
            raise InvalidInputError(f"blocks {sorted(overlap)} present in both results")
        return McResult(self.seed, self.block_size, {**self.blocks, **other.blocks})

    def _ordered(self):
        return [self.blocks[k] for k in sorted(self.blocks)]

    def _total(self, name):
        return _exact_sum([getattr(b, name) for b in self._ordered()])

    @property
    def case_counts(self) -> np.ndarray:
        """Counts of Cases 1-4 (entry ``i - 1`` is Case ``i``)."""
        return sum((b.case_counts for b in self._ordered()), np.zeros(5, dtype=np.int64))[1:]

    def case_frequency(self, case) -> tuple[float, float]:
        """Empirical probability of ``case`` and its binomial CI half-width."""
        case = AssociationCase(case)
        n = self.n_realizations
        p = self.case_counts[int(case) - 1] / n
        return float(p), CI_SIGMAS * math.sqrt(p * (1.0 - p) / n)

    def mean_rate(self, mode, direction) -> tuple[float, float]:
        """Mean ln(1 + SINR) of the serving link in a case or coupled mode.

        ``mode`` is an association case, a ``ServingMode`` or its value
        (``"coupled_mcell"``, ``"coupled_scell"``; the latter equals Case 4).
        """
        direction = LinkDirection(direction)
        j = 0 if direction is LinkDirection.UL else 1
        mode = getattr(mode, "value", mode)
        if isinstance(mode, str) and mode.startswith("case"):
            mode = int(mode[4:])
        if mode == "coupled_scell":
            mode = 4
        if mode == "coupled_mcell":
            count = sum(b.coupled_m_count for b in self._ordered())
            return _mean_ci(self._total("coupled_m_sum")[j], self._total("coupled_m_sumsq")[j], count)
        c = int(AssociationCase(mode))
        count = int(self.case_counts[c - 1])
        return _mean_ci(self._total("rate_sum")[c, j], self._total("rate_sumsq")[c, j], count)

    def spectral_efficiency(self, name: str) -> tuple[float, float]:
        """Mean of one of ``se_ul_decoupled``, ``se_dl_decoupled``, ``se_ul_coupled``, ``se_dl_coupled``."""
        j = _SE_NAMES.index(name)
        return _mean_ci(self._total("se_sum")[j], self._total("se_sumsq")[j], self.n_realizations)

    @property
    def ul_gain(self) -> tuple[float, float]:
        """Paired decoupling gain of the uplink rate."""
        return _mean_ci(self._total("gain_sum"), self._total("gain_sumsq"), self.n_realizations)

    @property
    def mean_interference(self) -> dict:
        """Average UL and DL interference power (mW) on the Mcell links."""
        tot = self._total("interference_sum")
        n = self.n_realizations
        return {"UL": float(tot[0] / n), "DL": float(tot[1] / n)}

    def distance_samples(self, case, tier) -> np.ndarray:
        """Serving distances of realizations in ``case`` (or ``"coupled"``) on ``tier``."""
        tier = Tier(tier).value
        key = (case if case == "coupled" else int(AssociationCase(case)), tier)
        if key not in _DISTANCE_KEYS:
            raise InvalidInputError(f"no distance samples for {key}")
        parts = [b.distances[key] for b in self._ordered() if key in b.distances]
        if not parts:
            raise InvalidInputError("distances were not collected")
        return np.concatenate(parts)


def simulate(cfg: NetworkConfig, n: int, seed: int = 0, *, shadowing: bool = False,
             collect_distances: bool = False, threads: int = 1, block_size: int = BLOCK_SIZE,
             first_block: int = 0) -> McResult:
    """Run ``n`` independent realizations around a typical UE at the origin.

    With ``shadowing`` every BS-UE link (and every uplink interferer link)
    gets an independent lognormal gain of ``cfg.shadow_sigma_db`` dB
    (``DEFAULT_SHADOW_SIGMA_DB`` when that is zero), identical on uplink and
    downlink; each tier then serves from its strongest, not nearest, BS.
    Results are bit-identical for any ``threads``.
    """
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    if block_size < 1 or first_block < 0:
        raise InvalidInputError("block_size must be positive and first_block non-negative")
    sigma = 0.0
    if shadowing:
        sigma = cfg.shadow_sigma_db if cfg.shadow_sigma_db > 0 else DEFAULT_SHADOW_SIGMA_DB
    n_blocks = -(-n // block_size)
    jobs = [(first_block + i, min(block_size, n - i * block_size)) for i in range(n_blocks)]

    def run(job):
        b, count = job
        return b, _simulate_block(cfg, seed, b, count, sigma, collect_distances)

    if threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            tallies = dict(pool.map(run, jobs))
    else:
        tallies = dict(map(run, jobs))
    return McResult(int(seed), block_size, tallies)


def empirical_laplace(lam: float, alpha: float, x: float, t: float, n: int, seed: int = 0, *,
                      radius: float, tail_mean: bool = True,
                      block_size: int = 256) -> tuple[float, float]:
    """Estimate ``E[exp(-theta x^alpha I)]`` for PPP interference beyond distance ``x``.

    ``I = sum g_j r_j^-alpha`` over a PPP of intensity ``lam`` outside radius
    ``x`` with unit-mean exponential ``g_j``; ``theta = e^t - 1``.  Points are
    drawn on the annulus ``x < r < radius``.  With ``tail_mean`` the field
    beyond ``radius`` enters through its mean ``2 pi lam radius^(2-alpha)/(alpha-2)``
    (Campbell), which leaves an error of second order in the tail instead of
    the first-order bias of plain truncation.  Returns the sample mean and its
    standard error.
    """
    if not (radius > x > 0 and lam >= 0 and n >= 1 and alpha > 2):
        raise InvalidInputError("need radius > x > 0, lam >= 0, n >= 1 and alpha > 2")
    s = math.expm1(t) * x ** alpha
    area = math.pi * (radius * radius - x * x)
    tail = 2.0 * math.pi * lam * radius ** (2.0 - alpha) / (alpha - 2.0) if tail_mean else 0.0
    total = []
    total_sq = []
    for b in range(-(-n // block_size)):
        rng = _generator(seed, b)
        count = min(block_size, n - b * block_size)
        k = rng.poisson(lam * area, count)
        row = np.repeat(np.arange(count), k)
        r2 = x * x + (radius * radius - x * x) * rng.random(row.size)
        g = rng.exponential(1.0, row.size)
        interference = np.bincount(row, weights=g * r2 ** (-alpha / 2.0), minlength=count)
        v = np.exp(-s * (interference + tail))
        total.append(v.sum())
        total_sq.append((v * v).sum())
    mean = math.fsum(total) / n
    var = max(math.fsum(total_sq) / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return mean, math.sqrt(var / n)
