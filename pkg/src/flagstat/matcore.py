"""Dense linear algebra and special-function kernels.

Everything here works on small dense real matrices (d up to a few dozen).
The symmetric eigensolver is a cyclic Jacobi iteration, chosen for the
orthogonality of its eigenvectors rather than for speed.
"""

import math

import numpy as np
import scipy.linalg

from .exceptions import ConvergenceError, CutLocusError, DomainError

__all__ = [
    "sym_eig_desc",
    "eigvec_map_psi",
    "expm",
    "logm_rotation",
    "chi2_cdf",
    "chi2_sf",
    "chi2_pdf",
    "chi2_quantile",
    "gammainc_regularized",
    "haar_orthogonal",
]

EPS = np.finfo(float).eps

SYMMETRY_TOL = 1e-12
PSI_GAP_TOL = 1e-10
PSI_ZERO_TOL = 1e-12
ROTATION_CUT_TOL = 1e-9


def _as_square(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"{name} must be a square 2-d array, got shape {a.shape}")
    return a


def _check_symmetric(S, tol=SYMMETRY_TOL):
    S = _as_square(S, "symmetric matrix")
    scale = max(np.linalg.norm(S), np.finfo(float).tiny)
    if np.linalg.norm(S - S.T) > tol * scale:
        raise DomainError("matrix is not symmetric")
    return S


def sym_eig_desc(S, max_sweeps=60):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    S : (d, d) array_like
        Symmetric matrix.
    max_sweeps : int
        Iteration budget, counted in full sweeps over the upper triangle.

    Returns
    -------
    mu : (d,) ndarray
        Eigenvalues in non-increasing order.
    V : (d, d) ndarray
        Orthogonal matrix with ``S = V @ diag(mu) @ V.T``.

    Ties are ordered stably, so an already-diagonal input with non-increasing
    entries returns the identity as its eigenvector matrix.
    """
    S = _check_symmetric(S)
    A = 0.5 * (S + S.T)
    d = A.shape[0]
    V = np.eye(d)
    target = EPS * np.linalg.norm(A)

    for _ in range(max_sweeps):
        off = np.linalg.norm(A[np.triu_indices(d, 1)])
        if off <= target:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c

                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                A[p, q] = A[q, p] = 0.0

                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise ConvergenceError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")

    mu = np.diag(A).copy()
    order = np.argsort(-mu, kind="stable")
    return mu[order], V[:, order]


def _is_sorted_diagonal(S):
    return np.count_nonzero(S - np.diag(np.diag(S))) == 0 and np.all(np.diff(np.diag(S)) <= 0)


def eigvec_map_psi(S):
    """Eigenvector matrix with a deterministic column-sign convention.

    Column ``k`` is the unit eigenvector of the k-th largest eigenvalue whose
    k-th entry is non-negative.  If that entry is numerically zero the sign is
    fixed by the largest-magnitude entry instead.  A diagonal matrix with
    non-increasing entries maps to the identity.

    Raises
    ------
    DomainError
        If ``S`` has (numerically) repeated eigenvalues and is not a sorted
        diagonal matrix.
    """
    S = _check_symmetric(S)
    d = S.shape[0]
    if _is_sorted_diagonal(S):
        return np.eye(d)

    mu, V = sym_eig_desc(S)
    scale = max(np.max(np.abs(mu)), np.finfo(float).tiny)
    gaps = -np.diff(mu)
    if gaps.size and np.min(gaps) < PSI_GAP_TOL * scale:
        raise DomainError("eigenvector map undefined: repeated eigenvalues")

    for k in range(d):
        col = V[:, k]
        pivot = col[k]
        if abs(pivot) < PSI_ZERO_TOL:
            pivot = col[np.argmax(np.abs(col))]
        if pivot < 0:
            V[:, k] = -col
    return V


def expm(A):
    """Matrix exponential (Pade approximation with scaling and squaring)."""
    return scipy.linalg.expm(_as_square(A))


def logm_rotation(Q, tol=ROTATION_CUT_TOL):
    """Principal logarithm of a rotation matrix, as a skew-symmetric matrix.

    Works block by block on the real Schur form: every 2x2 rotation block
    ``[[c, -s], [s, c]]`` contributes ``[[0, -t], [t, 0]]`` with
    ``t = atan2(s, c)`` and every ``+1`` eigenvalue contributes zero.

    Raises
    ------
    CutLocusError
        If an eigenvalue lies within ``tol`` of ``-1``; the principal
        logarithm is not defined there.
    DomainError
        If ``Q`` is not special orthogonal.
    """
    Q = _as_square(Q, "rotation")
    d = Q.shape[0]
    if np.linalg.norm(Q.T @ Q - np.eye(d)) > 1e-8:
        raise DomainError("matrix is not orthogonal")
    if np.linalg.det(Q) < 0:
        raise DomainError("matrix has determinant -1; no real logarithm")

    T, Z = scipy.linalg.schur(Q, output="real")
    L = np.zeros_like(T)
    k = 0
    while k < d:
        if k + 1 < d and abs(T[k + 1, k]) > 1e-14:
            c = 0.5 * (T[k, k] + T[k + 1, k + 1])
            s = 0.5 * (T[k + 1, k] - T[k, k + 1])
            if math.hypot(c + 1.0, s) < tol:
                raise CutLocusError("rotation has an eigenvalue at -1")
            t = math.atan2(s, c)
            L[k, k + 1] = -t
            L[k + 1, k] = t
            k += 2
        else:
            if T[k, k] < 0 and abs(T[k, k] + 1.0) < 0.5:
                raise CutLocusError("rotation has an eigenvalue at -1")
            k += 1

    X = Z @ L @ Z.T
    return 0.5 * (X - X.T)


# -- chi-square distribution ------------------------------------------------

_GAMMA_ITMAX = 10000


def _gamma_series(a, x):
    # P(a, x) by its power series, valid for x < a + 1
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_GAMMA_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            break
    else:
        raise ConvergenceError("incomplete gamma series did not converge")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_contfrac(a, x):
    # Q(a, x) by modified Lentz continued fraction, valid for x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_ITMAX):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    else:
        raise ConvergenceError("incomplete gamma continued fraction did not converge")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammainc_regularized(a, x, upper=False):
    """Regularized incomplete gamma P(a, x), or Q(a, x) when ``upper``."""
    if a <= 0:
        raise DomainError("shape parameter must be positive")
    if x < 0:
        raise DomainError("argument must be non-negative")
    if x == 0:
        return 1.0 if upper else 0.0
    if math.isinf(x):
        return 0.0 if upper else 1.0
    if x < a + 1.0:
        p = _gamma_series(a, x)
        return 1.0 - p if upper else p
    q = _gamma_contfrac(a, x)
    return q if upper else 1.0 - q


def _check_dof(dof):
    if dof <= 0 or int(dof) != dof:
        raise DomainError(f"degrees of freedom must be a positive integer, got {dof}")
    return int(dof)


def chi2_cdf(dof, x):
    dof = _check_dof(dof)
    if x <= 0:
        return 0.0
    return gammainc_regularized(0.5 * dof, 0.5 * x)


def chi2_sf(dof, x):
    """Upper tail probability of the chi-square law with ``dof`` degrees of freedom."""
    dof = _check_dof(dof)
    if x <= 0:
        return 1.0
    return gammainc_regularized(0.5 * dof, 0.5 * x, upper=True)


def chi2_pdf(dof, x):
    dof = _check_dof(dof)
    if x < 0:
        return 0.0
    k = 0.5 * dof
    if x == 0:
        if dof == 1:
            return math.inf
        return 0.5 if dof == 2 else 0.0
    return math.exp((k - 1.0) * math.log(x) - 0.5 * x - k * math.log(2.0) - math.lgamma(k))


def chi2_quantile(dof, p):
    """Quantile of order ``p`` of the chi-square law.

    Newton iteration on the CDF (or on the survival function in the upper
    tail), safeguarded by a bisection bracket.
    """
    dof = _check_dof(dof)
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")

    use_upper = p > 0.5
    target = 1.0 - p if use_upper else p

    def resid(x):
        if use_upper:
            return target - chi2_sf(dof, x)
        return chi2_cdf(dof, x) - target

    # Wilson-Hilferty starting point
    z = _normal_quantile(p)
    h = 2.0 / (9.0 * dof)
    x = max(dof * (1.0 - h + z * math.sqrt(h)) ** 3, 1e-8)

    lo, hi = 0.0, max(2.0 * x, dof + 10.0)
    while resid(hi) < 0:
        lo, hi = hi, 2.0 * hi

    for _ in range(200):
        f = resid(x)
        if f == 0.0:
            return x
        if f < 0:
            lo = x
        else:
            hi = x
        dens = chi2_pdf(dof, x)
        step = f / dens if dens > 0 else math.inf
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * max(1.0, x) or hi - lo <= 1e-15 * max(1.0, hi):
            return x_new
        x = x_new
    raise ConvergenceError("chi-square quantile iteration did not converge")


def _normal_quantile(p):
    # Acklam's rational approximation; only a starting guess for Newton
    a = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
         1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
    b = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
         6.680131188771972e01, -1.328068155288572e01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
         -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
         3.754408661907416e00)
    plow = 0.02425
    if p < plow:
        q = math.sqrt(-2 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1)
    if p > 1 - plow:
        return -_normal_quantile(1 - p)
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1)


# -- random orthogonal matrices ---------------------------------------------

def haar_orthogonal(q, rng, conditional=False):
    """Draw a q x q orthogonal matrix from the Haar measure on O(q).

    The draw is the Q factor of a Gaussian matrix with the signs of R's
    diagonal folded into Q.  With ``conditional=True`` each column is then
    reflected so the diagonal is positive; because column sign flips preserve
    Haar measure this samples the Haar law conditioned on a positive diagonal.
    """
    if q < 1:
        raise DomainError("dimension must be at least 1")
    G = rng.standard_normal((q, q))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    Q = Q * signs
    if conditional:
        dsign = np.sign(np.diag(Q))
        dsign[dsign == 0] = 1.0
        Q = Q * dsign
    return Q
