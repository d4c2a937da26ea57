"""Sample statistics for the flag of principal subspaces of a covariance matrix.

The central object is the pivotal statistic

    T_n = n/4 * sum_i || K_i Log_{P0^i}(Gamma' P_i(S_n) Gamma) K_i ||_F^2

which is asymptotically chi-square with ``(d^2 - sum q_i^2) / 2`` degrees of
freedom when Gamma spans the true eigenspaces of the Gaussian covariance.
Blocks whose sample eigenspace falls in the cut locus of the reference are
truncated (contribute zero) and flagged in the report.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CutLocusError, DegenerateScalingError, DomainError
from .flag import (
    BlockScaling,
    Flag,
    FlagType,
    _check_gaps,
    _check_orthogonal,
    _log_unchecked,
    _sym,
    as_flag_type,
    flag_from_orthogonal,
    k_discrepancy_flags,
    orthogonal_from_flag,
    standard_flag,
)
from .matcore import chi2_quantile, chi2_sf, eigvec_map_psi, sym_eig_desc
from .stiefel import _transport

__all__ = [
    "CovModel",
    "SampleSpectrum",
    "AndersonStats",
    "PivotalReport",
    "sample_covariance",
    "sample_spectrum",
    "anderson_statistics",
    "g_statistic",
    "h_statistic",
    "dof",
    "khat_scaling",
    "pivotal_statistic",
    "confidence_region_statistic",
    "confidence_region_contains",
    "flag_hypothesis_test",
    "tyler_dof_comparison",
]

RANK_TOL = 1e-8
DELTA_SNAP_TOL = 1e-12


@dataclass(frozen=True)
class CovModel:
    """Spectral covariance model ``Sigma = Gamma Diag(l_1 I_{q_1}, ...) Gamma'``."""

    gamma: np.ndarray = field(repr=False)
    lambdas: tuple
    flag_type: FlagType

    def __post_init__(self):
        ft = as_flag_type(self.flag_type)
        object.__setattr__(self, "flag_type", ft)
        lambdas = tuple(float(x) for x in self.lambdas)
        if len(lambdas) != ft.r:
            raise DomainError(f"need {ft.r} eigenvalues for type {ft}, got {len(lambdas)}")
        if any(x <= 0 for x in lambdas):
            raise DomainError("eigenvalues must be positive")
        if any(a <= b for a, b in zip(lambdas, lambdas[1:])):
            raise DomainError("eigenvalues must be strictly decreasing")
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "gamma", _check_orthogonal(self.gamma, ft.d))

    @classmethod
    def random(cls, flag_type, lambdas, rng):
        """Model with a Haar-distributed eigenvector matrix."""
        from .matcore import haar_orthogonal

        ft = as_flag_type(flag_type)
        return cls(haar_orthogonal(ft.d, rng), lambdas, ft)

    @property
    def delta_diagonal(self):
        return np.repeat(self.lambdas, self.flag_type.multiplicities)

    @property
    def delta(self):
        return np.diag(self.delta_diagonal)

    @property
    def sigma(self):
        return _sym(self.gamma @ self.delta @ self.gamma.T)

    @property
    def flag(self):
        """The flag of principal subspaces of Sigma."""
        return flag_from_orthogonal(self.gamma, self.flag_type)


@dataclass(frozen=True)
class SampleSpectrum:
    sigma_hat: np.ndarray = field(repr=False)
    n: int
    eigvals: np.ndarray
    eigvecs: np.ndarray = field(repr=False)
    block_means: np.ndarray


@dataclass(frozen=True)
class AndersonStats:
    T: np.ndarray
    U: np.ndarray
    E: np.ndarray
    flag_type: FlagType
    n: int

    def diag_block(self, i):
        """``E^(i,i)``."""
        b = self.flag_type.blocks[i]
        return self.E[b, b]

    def off_block(self, i, j):
        """``F^(i,j) = sqrt(n) E^(i,j)``."""
        if i == j:
            raise DomainError("off-diagonal block requires i != j")
        bi, bj = self.flag_type.blocks[i], self.flag_type.blocks[j]
        return math.sqrt(self.n) * self.E[bi, bj]


@dataclass(frozen=True)
class PivotalReport:
    statistic: float
    dof: int
    p_value: float
    truncated: tuple
    alpha: float = None
    decision: str = None

    @property
    def truncation_applied(self):
        return any(self.truncated)

    def to_dict(self):
        return {
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "truncated": list(self.truncated),
            "alpha": self.alpha,
            "decision": self.decision,
        }


def sample_covariance(data, denominator="n"):
    """Mean-centred sample covariance with denominator ``n`` or ``n-1``."""
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise DomainError(f"data must be a 2-d array, got {X.ndim}-d")
    n = X.shape[0]
    if n < 2:
        raise DomainError("need at least two samples")
    if denominator not in ("n", "n-1"):
        raise DomainError(f"denominator must be 'n' or 'n-1', got {denominator!r}")
    Xc = X - X.mean(axis=0)
    S = Xc.T @ Xc / (n if denominator == "n" else n - 1)
    return _sym(S)


def sample_spectrum(sigma_hat, n, flag_type):
    ft = as_flag_type(flag_type)
    mu, V = sym_eig_desc(sigma_hat)
    if mu.size != ft.d:
        raise DomainError(f"covariance has dimension {mu.size}, flag type expects {ft.d}")
    means = np.array([mu[b].mean() for b in ft.blocks])
    return SampleSpectrum(np.asarray(sigma_hat, dtype=float), int(n), mu, V, means)


def anderson_statistics(model, sigma_hat, n):
    """``T_n = Gamma' S Gamma``, ``U_n = sqrt(n)(T_n - Delta)`` and ``E_n = psi(T_n)``.

    A ``T_n`` equal to Delta up to round-off is treated as Delta itself, so
    that ``E_n = I``.
    """
    gamma = model.gamma
    T = _sym(gamma.T @ np.asarray(sigma_hat, dtype=float) @ gamma)
    delta = model.delta
    E = _psi(T)
    U = math.sqrt(n) * (T - delta)
    return AndersonStats(T, U, E, model.flag_type, int(n))


def _psi(T):
    # a T that is a sorted diagonal up to round-off is treated as exactly diagonal
    D = np.diag(np.diag(T))
    tol = DELTA_SNAP_TOL * np.linalg.norm(T)
    if np.all(np.diff(np.diag(T)) <= tol) and np.linalg.norm(T - D) <= tol:
        return np.eye(T.shape[0])
    return eigvec_map_psi(T)


def _block_split(E, ft, i):
    """Projector, rank flag and frame of the i-th column block of ``E``."""
    b = ft.blocks[i]
    frame = E[:, b]
    smin = np.linalg.svd(E[b, b], compute_uv=False)[-1]
    return _sym(frame @ frame.T), smin < RANK_TOL, frame


def _reference_split(gamma, sigma_hat, ft):
    # Gamma' P_i(S) Gamma for every block, plus the rank-criterion flags
    mu, V = sym_eig_desc(sigma_hat)
    _check_gaps(mu, ft)
    W = gamma.T @ V
    out = []
    for b in ft.blocks:
        frame = W[:, b]
        smin = np.linalg.svd(frame[b, :], compute_uv=False)[-1]
        out.append((_sym(frame @ frame.T), smin < RANK_TOL))
    return mu, out


def g_statistic(gamma, sigma_hat, flag_type, n, i):
    """``G_n^i = sqrt(n) Log_{P0^i}(Gamma' P_i(S) Gamma)``, or zero when truncated.

    Truncation happens when ``E_n^(i,i)`` is rank deficient, which is exactly
    the cut-locus condition for the log.

    Returns
    -------
    G : (d, d) ndarray
    truncated : bool
    """
    ft = as_flag_type(flag_type)
    gamma = _check_orthogonal(gamma, ft.d)
    _, blocks = _reference_split(gamma, sigma_hat, ft)
    R, truncated = blocks[i]
    if truncated:
        return np.zeros((ft.d, ft.d)), True
    P0 = standard_flag(ft)[i]
    return math.sqrt(n) * _log_unchecked(P0, R), False


def h_statistic(gamma, sigma_hat, flag_type, n, i):
    """Holonomy statistic ``H_n^i`` valued in O(q_i); identity when truncated.

    The i-th column block of ``E_n = psi(Gamma' S Gamma)`` is transported
    along the geodesic from its span to ``P0^i`` and the rows of block i are
    returned.
    """
    ft = as_flag_type(flag_type)
    gamma = _check_orthogonal(gamma, ft.d)
    T = _sym(gamma.T @ np.asarray(sigma_hat, dtype=float) @ gamma)
    return _holonomy_block(_psi(T), ft, i)


def _holonomy_block(E, ft, i):
    b = ft.blocks[i]
    q = b.stop - b.start
    R, truncated, frame = _block_split(E, ft, i)
    if truncated:
        return np.eye(q), True
    P0 = standard_flag(ft)[i]
    moved = _transport(frame, _log_unchecked(R, P0))
    return moved[b, :], False


def dof(flag_type):
    """Degrees of freedom ``(d^2 - sum q_i^2) / 2``."""
    ft = as_flag_type(flag_type)
    return (ft.d ** 2 - sum(q * q for q in ft.multiplicities)) // 2


def tyler_dof_comparison(flag_type):
    """``(sum_i q_i (d - q_i), dof)``: separate-subspace total vs whole-flag dof."""
    ft = as_flag_type(flag_type)
    separate = sum(q * (ft.d - q) for q in ft.multiplicities)
    return separate, dof(ft)


def _sigma_table(means):
    lam = np.asarray(means, dtype=float)
    diff = np.abs(lam[:, None] - lam[None, :])
    with np.errstate(divide="ignore"):
        sigma = np.sqrt(np.outer(lam, lam)) / diff
    np.fill_diagonal(sigma, 1.0)
    return sigma


def khat_scaling(spectrum, flag_type):
    """Estimated scalings with ``sigma_ij = sqrt(l_i l_j) / |l_i - l_j|``.

    ``l_i`` are the block means of the sample eigenvalues.
    """
    ft = as_flag_type(flag_type)
    means = np.asarray(spectrum.block_means if isinstance(spectrum, SampleSpectrum) else spectrum,
                       dtype=float)
    if means.size != ft.r:
        raise DomainError(f"need {ft.r} block means, got {means.size}")
    if np.any(means <= 0):
        raise DegenerateScalingError("block eigenvalue estimates must be positive")
    if np.any(np.diff(means) >= 0):
        raise DegenerateScalingError("block eigenvalue estimates are not strictly decreasing")
    return BlockScaling(ft, _sigma_table(means))


def _p_value(statistic, df):
    return 1.0 if df == 0 else chi2_sf(df, statistic)


def _reference_orthogonal(reference, ft):
    if isinstance(reference, Flag):
        if reference.flag_type != ft:
            raise DomainError("reference flag has a different type")
        return orthogonal_from_flag(reference)
    return _check_orthogonal(reference, ft.d)


def pivotal_statistic(reference, sigma_hat, flag_type, n):
    """Pivotal statistic for a hypothesized eigenvector matrix (or flag).

    Parameters
    ----------
    reference : (d, d) ndarray or Flag
        Orthogonal matrix Gamma, or the flag it spans.
    sigma_hat : (d, d) ndarray
        Sample covariance.
    flag_type : FlagType or sequence of int
    n : int
        Sample size.

    Returns
    -------
    PivotalReport
        Statistic, degrees of freedom, asymptotic p-value and per-block
        truncation flags.
    """
    ft = as_flag_type(flag_type)
    if n < 2:
        raise DomainError("need at least two samples")
    gamma = _reference_orthogonal(reference, ft)
    mu, blocks = _reference_split(gamma, sigma_hat, ft)
    K = khat_scaling(np.array([mu[b].mean() for b in ft.blocks]), ft)
    P0 = standard_flag(ft)

    total = 0.0
    truncated = []
    for i, (R, cut) in enumerate(blocks):
        truncated.append(bool(cut))
        if cut:
            continue
        k = K.diagonal(i)
        log = _log_unchecked(P0[i], R)
        total += np.linalg.norm(k[:, None] * log * k[None, :]) ** 2
    statistic = 0.25 * n * total
    df = dof(ft)
    return PivotalReport(float(statistic), df, float(_p_value(statistic, df)), tuple(truncated))


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return float(alpha)


def _critical_value(ft, alpha):
    df = dof(ft)
    return 0.0 if df == 0 else chi2_quantile(df, 1.0 - alpha)


def confidence_region_statistic(candidate, sigma_hat, flag_type, n):
    """``n/4 * D_K(candidate, F(S))^2``, or ``None`` when a component is in the cut locus.

    Returns
    -------
    statistic : float or None
    cut_index : int or None
    """
    from .flag import flag_of_eigenspaces

    ft = as_flag_type(flag_type)
    sample_flag = flag_of_eigenspaces(sigma_hat, ft)
    spectrum = sample_spectrum(sigma_hat, n, ft)
    K = khat_scaling(spectrum, ft)
    try:
        value = k_discrepancy_flags(K, candidate, sample_flag)
    except CutLocusError as exc:
        return None, exc.index
    return 0.25 * n * value ** 2, None


def confidence_region_contains(candidate, sigma_hat, flag_type, n, alpha):
    """Whether a flag lies in the asymptotic (1 - alpha) confidence region.

    Candidates in the cut locus of the sample flag are reported outside.
    """
    alpha = _check_alpha(alpha)
    ft = as_flag_type(flag_type)
    statistic, _ = confidence_region_statistic(candidate, sigma_hat, ft, n)
    if statistic is None:
        return False
    return statistic <= _critical_value(ft, alpha)


def flag_hypothesis_test(q0, data, flag_type, alpha, denominator="n"):
    """Test ``H0: pi(q0) = F(Sigma)`` at asymptotic level alpha.

    Returns
    -------
    decision : {"accept", "reject"}
    report : PivotalReport
    """
    alpha = _check_alpha(alpha)
    ft = as_flag_type(flag_type)
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[1] != ft.d:
        raise DomainError(f"data must have {ft.d} columns")
    sigma_hat = sample_covariance(X, denominator)
    report = pivotal_statistic(q0, sigma_hat, ft, X.shape[0])
    inside = (not report.truncation_applied) and report.statistic <= _critical_value(ft, alpha)
    decision = "accept" if inside else "reject"
    return decision, PivotalReport(report.statistic, report.dof, report.p_value,
                                   report.truncated, alpha, decision)
