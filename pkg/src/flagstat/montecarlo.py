"""Monte Carlo checks of the limit laws at desk scale.

Replicate ``k`` of a run draws from a Philox stream keyed only by
``(seed, k)``, so results are identical whatever the number of worker
threads (``FLAGSTAT_THREADS``, 0 or unset meaning one per CPU).
"""

import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, FlagstatError
from .inference import (
    CovModel,
    _holonomy_block,
    _psi,
    _sym,
    anderson_statistics,
    confidence_region_contains,
    dof,
    g_statistic,
    pivotal_statistic,
    sample_covariance,
)
from .matcore import chi2_cdf, chi2_pdf, chi2_quantile, haar_orthogonal

__all__ = [
    "McConfig",
    "McResult",
    "HaarCheck",
    "replicate_rng",
    "sample_gaussian",
    "replicate_pivotal",
    "ks_distance",
    "ks_two_sample",
    "coverage_rate",
    "clt_block_check",
    "haar_check",
    "histogram_csv",
    "seeded_model",
]

logger = logging.getLogger(__name__)

_REFERENCE_DOMAIN = 1


@dataclass(frozen=True)
class McConfig:
    model: CovModel
    n: int
    reps: int
    alpha: float = 0.05
    seed: int = 0
    denominator: str = "n"
    bins: int = 50

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("sample size must be at least 2")
        if self.reps < 1:
            raise DomainError("need at least one replicate")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie in (0, 1)")

    def to_dict(self):
        m = self.model
        return {
            "d": m.flag_type.d,
            "type": list(m.flag_type.multiplicities),
            "lambdas": list(m.lambdas),
            "gamma": m.gamma.tolist(),
            "n": self.n,
            "reps": self.reps,
            "alpha": self.alpha,
            "seed": self.seed,
            "denominator": self.denominator,
        }


@dataclass
class McResult:
    config: McConfig
    statistics: np.ndarray
    truncation_count: int
    failures: int
    dof: int
    ks_distance: float
    coverage: float
    bin_edges: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)

    @property
    def mean(self):
        return float(np.mean(self.statistics)) if self.statistics.size else math.nan

    @property
    def variance(self):
        if self.statistics.size < 2:
            return math.nan
        return float(np.var(self.statistics, ddof=1))

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "dof": self.dof,
            "reps_completed": int(self.statistics.size),
            "failures": self.failures,
            "truncation_count": self.truncation_count,
            "ks_distance": None if math.isnan(self.ks_distance) else self.ks_distance,
            "mean": self.mean if self.statistics.size else None,
            "variance": None if math.isnan(self.variance) else self.variance,
            "coverage": self.coverage,
            "statistics": self.statistics.tolist(),
            "histogram": {"edges": self.bin_edges.tolist(), "counts": self.counts.tolist()},
        }

    def to_json(self):
        return json.dumps(self.to_dict())


def replicate_rng(seed, k, domain=0):
    """Counter-based generator for replicate ``k`` of the run seeded by ``seed``."""
    ss = np.random.SeedSequence([int(seed), int(domain)], spawn_key=(int(k),))
    return np.random.Generator(np.random.Philox(ss))


def sample_gaussian(model, n, rng):
    """``n`` iid rows from N(0, Sigma), built as ``Gamma Delta^{1/2} z``."""
    z = rng.standard_normal((n, model.flag_type.d))
    return (z * np.sqrt(model.delta_diagonal)) @ model.gamma.T


def _threads():
    raw = os.environ.get("FLAGSTAT_THREADS", "0")
    try:
        value = int(raw)
    except ValueError:
        raise DomainError(f"FLAGSTAT_THREADS must be an integer, got {raw!r}")
    if value < 0:
        raise DomainError("FLAGSTAT_THREADS must be non-negative")
    return value or (os.cpu_count() or 1)


def _map_replicates(fn, reps):
    workers = min(_threads(), reps)
    if workers <= 1:
        return [fn(k) for k in range(reps)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(reps)))


def _sample_cov(cfg, k):
    X = sample_gaussian(cfg.model, cfg.n, replicate_rng(cfg.seed, k))
    return sample_covariance(X, cfg.denominator)


def ks_distance(samples, dof):
    """Sup distance between the empirical CDF of ``samples`` and chi-square(dof)."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    m = x.size
    if m == 0:
        raise DomainError("no samples")
    F = np.array([chi2_cdf(dof, v) for v in x])
    upper = np.arange(1, m + 1) / m - F
    lower = F - np.arange(0, m) / m
    return float(max(upper.max(), lower.max()))


def ks_two_sample(a, b):
    """Two-sample Kolmogorov-Smirnov distance."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise DomainError("no samples")
    grid = np.concatenate([a, b])
    Fa = np.searchsorted(a, grid, side="right") / a.size
    Fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(Fa - Fb)))


def replicate_pivotal(cfg):
    """Distribution of the pivotal statistic under the model.

    Each replicate samples data, forms the covariance and evaluates the
    statistic against the model's eigenvectors.  Replicates failing with a
    domain error are counted in ``failures`` and dropped.
    """
    model = cfg.model
    ft = model.flag_type
    df = dof(ft)
    crit = chi2_quantile(df, 1.0 - cfg.alpha) if df else 0.0

    def one(k):
        try:
            rep = pivotal_statistic(model.gamma, _sample_cov(cfg, k), ft, cfg.n)
        except FlagstatError as exc:
            logger.debug("replicate %d failed: %s", k, exc)
            return None
        return rep

    reports = _map_replicates(one, cfg.reps)
    done = [r for r in reports if r is not None]
    stats = np.array([r.statistic for r in done])
    truncations = sum(r.truncation_applied for r in done)
    covered = sum((not r.truncation_applied) and r.statistic <= crit for r in done)

    upper = chi2_quantile(df, 0.999) if df else 1.0
    counts, edges = np.histogram(stats, bins=cfg.bins, range=(0.0, upper))
    ks = ks_distance(stats, df) if (df and stats.size > 1) else math.nan
    return McResult(
        config=cfg,
        statistics=stats,
        truncation_count=int(truncations),
        failures=cfg.reps - len(done),
        dof=df,
        ks_distance=ks,
        coverage=covered / len(done) if done else math.nan,
        bin_edges=edges,
        counts=counts,
    )


def histogram_csv(result):
    """Histogram table: bin_left, bin_right, count, chi2_density_at_midpoint."""
    buf = io.StringIO()
    buf.write("bin_left,bin_right,count,chi2_density_at_midpoint\n")
    edges, counts = result.bin_edges, result.counts
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        dens = chi2_pdf(result.dof, 0.5 * (lo + hi)) if result.dof else math.nan
        buf.write(f"{lo:.17g},{hi:.17g},{int(c)},{dens:.17g}\n")
    return buf.getvalue()


def coverage_rate(cfg):
    """Fraction of replicates whose confidence region contains the true flag."""
    model = cfg.model
    truth = model.flag

    def one(k):
        try:
            return confidence_region_contains(truth, _sample_cov(cfg, k), model.flag_type,
                                              cfg.n, cfg.alpha)
        except FlagstatError as exc:
            logger.debug("replicate %d failed: %s", k, exc)
            return None

    hits = [h for h in _map_replicates(one, cfg.reps) if h is not None]
    if not hits:
        raise DomainError("every replicate failed")
    return sum(hits) / len(hits)


def clt_block_check(cfg, i, j):
    """Empirical variances of the (i, j) blocks of F_n, U_n and G_n^i.

    Returns a dict with the pooled entry variances (``var_F``, ``var_U``,
    ``var_G``) and their limits ``sigma2 = l_i l_j / (l_i - l_j)^2`` and
    ``s2 = l_i l_j``.  Block indices are zero based.
    """
    model = cfg.model
    ft = model.flag_type
    if i == j:
        raise DomainError("block check requires i != j")
    bi, bj = ft.blocks[i], ft.blocks[j]

    def one(k):
        S = _sample_cov(cfg, k)
        try:
            an = anderson_statistics(model, S, cfg.n)
            G, cut = g_statistic(model.gamma, S, ft, cfg.n, i)
        except FlagstatError:
            return None
        return an.off_block(i, j).ravel(), an.U[bi, bj].ravel(), (None if cut else G[bi, bj].ravel())

    rows = [r for r in _map_replicates(one, cfg.reps) if r is not None]
    F = np.concatenate([r[0] for r in rows])
    U = np.concatenate([r[1] for r in rows])
    G = np.concatenate([r[2] for r in rows if r[2] is not None])
    li, lj = model.lambdas[i], model.lambdas[j]
    return {
        "var_F": float(np.mean(F ** 2) - np.mean(F) ** 2),
        "var_U": float(np.mean(U ** 2) - np.mean(U) ** 2),
        "var_G": float(np.mean(G ** 2) - np.mean(G) ** 2),
        "sigma2": li * lj / (li - lj) ** 2,
        "s2": li * lj,
        "replicates": len(rows),
    }


@dataclass
class HaarCheck:
    samples: np.ndarray = field(repr=False)
    reference: np.ndarray = field(repr=False)
    entry_ks: np.ndarray
    trace_ks: float
    reference_ks: float
    plus_frequency: float
    truncation_count: int
    orthogonality_error: float


def haar_check(cfg, i):
    """Compare H_n^i draws with conditional-Haar reference draws on O(q_i).

    ``entry_ks`` holds entrywise two-sample KS distances, ``trace_ks`` the KS
    distance of the traces, and ``reference_ks`` the largest entrywise
    distance between two independent reference ensembles (a calibration of
    the sampler).  For q_i = 1, ``plus_frequency`` is the share of draws
    equal to +1.
    """
    model = cfg.model
    ft = model.flag_type
    b = ft.blocks[i]
    q = b.stop - b.start

    def one(k):
        S = _sample_cov(cfg, k)
        T = _sym(model.gamma.T @ S @ model.gamma)
        try:
            return _holonomy_block(_psi(T), ft, i)
        except FlagstatError:
            return None

    rows = [r for r in _map_replicates(one, cfg.reps) if r is not None]
    H = np.array([r[0] for r in rows])
    truncations = sum(r[1] for r in rows)
    m = len(rows)
    ref = np.array([haar_orthogonal(q, replicate_rng(cfg.seed, k, _REFERENCE_DOMAIN),
                                    conditional=True) for k in range(m)])
    ref2 = np.array([haar_orthogonal(q, replicate_rng(cfg.seed, k, _REFERENCE_DOMAIN + 1),
                                     conditional=True) for k in range(m)])

    entry_ks = np.array([[ks_two_sample(H[:, a, c], ref[:, a, c]) for c in range(q)]
                         for a in range(q)])
    ref_ks = max(ks_two_sample(ref2[:, a, c], ref[:, a, c]) for a in range(q) for c in range(q))
    trace_ks = ks_two_sample(np.trace(H, axis1=1, axis2=2), np.trace(ref, axis1=1, axis2=2))
    ortho = max(np.linalg.norm(h.T @ h - np.eye(q)) for h in H)
    plus = float(np.mean(np.abs(H[:, 0, 0] - 1.0) < 1e-12)) if q == 1 else math.nan
    return HaarCheck(H, ref, entry_ks, trace_ks, ref_ks, plus, int(truncations), float(ortho))


_MODEL_DOMAIN = 7


def seeded_model(flag_type, lambdas, seed):
    """Model whose eigenvector matrix is a Haar draw fixed by ``seed``."""
    return CovModel.random(flag_type, lambdas, replicate_rng(seed, 0, _MODEL_DOMAIN))
