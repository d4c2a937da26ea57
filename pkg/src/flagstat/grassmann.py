"""The Grassmannian G(q, d) represented by rank-q orthogonal projectors."""

import numpy as np

from .exceptions import CutLocusError, DomainError
from .matcore import expm, logm_rotation, sym_eig_desc

__all__ = [
    "check_projector",
    "projector_basis",
    "projector_from_frame",
    "is_tangent",
    "in_cut_locus",
    "principal_cosines",
    "grass_log",
    "grass_exp",
    "grass_dist",
]

PROJECTOR_TOL = 1e-10
TRACE_TOL = 1e-8
FRAME_TOL = 1e-10
TANGENT_TOL = 1e-10
CUT_TOL = 1e-8


def check_projector(P, q=None, tol=PROJECTOR_TOL):
    """Validate a rank-q orthogonal projector and return it as a float array."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DomainError(f"projector must be square, got shape {P.shape}")
    if np.linalg.norm(P - P.T) > tol:
        raise DomainError("projector is not symmetric")
    if np.linalg.norm(P @ P - P) > tol * max(1.0, np.sqrt(P.shape[0])):
        raise DomainError("projector is not idempotent")
    rank = np.trace(P)
    if abs(rank - round(rank)) > TRACE_TOL:
        raise DomainError(f"projector trace {rank} is not an integer")
    if q is not None and round(rank) != q:
        raise DomainError(f"projector has rank {round(rank)}, expected {q}")
    return P


def projector_basis(P):
    """Orthonormal basis (d x q) of the range of a projector.

    Eigenvectors of ``P`` whose eigenvalue exceeds 1/2.
    """
    mu, V = sym_eig_desc(0.5 * (P + P.T))
    return V[:, mu > 0.5]


def projector_from_frame(U, tol=FRAME_TOL):
    """The projector ``U U'`` onto the span of an orthonormal frame."""
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.ndim != 2 or U.shape[1] > U.shape[0]:
        raise DomainError(f"frame must be a d x q array with q <= d, got shape {U.shape}")
    q = U.shape[1]
    if np.linalg.norm(U.T @ U - np.eye(q)) > tol:
        raise DomainError("frame columns are not orthonormal")
    P = U @ U.T
    return 0.5 * (P + P.T)


def is_tangent(P, delta, tol=TANGENT_TOL):
    """True when ``delta`` is a symmetric solution of ``delta P + P delta = delta``."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape != P.shape:
        return False
    scale = max(1.0, np.linalg.norm(delta))
    if np.linalg.norm(delta - delta.T) > tol * scale:
        return False
    return np.linalg.norm(delta @ P + P @ delta - delta) <= tol * scale


def principal_cosines(P, R):
    """Singular values of ``Y'Z`` for orthonormal bases Y, Z of rg(P), rg(R).

    These are the cosines of the principal angles, in decreasing order.
    """
    Y = projector_basis(P)
    Z = projector_basis(R)
    if Y.shape != Z.shape:
        raise DomainError(f"rank mismatch: {Y.shape[1]} vs {Z.shape[1]}")
    if Y.shape[1] == 0:
        return np.zeros(0)
    return np.linalg.svd(Y.T @ Z, compute_uv=False)


def in_cut_locus(P, R, tol=CUT_TOL):
    """Whether R lies in the cut locus of P, i.e. ``rank(Y'Z) < q``.

    The relation is symmetric in its arguments.
    """
    P = check_projector(P)
    R = check_projector(R)
    if P.shape != R.shape:
        raise DomainError("projectors live in different dimensions")
    cosines = principal_cosines(P, R)
    return bool(cosines.size) and cosines[-1] < tol


def _log_unchecked(P, R):
    d = P.shape[0]
    eye = np.eye(d)
    M = (eye - 2.0 * R) @ (eye - 2.0 * P)
    # polar step: M is orthogonal in exact arithmetic
    u, _, vt = np.linalg.svd(M)
    omega = 0.5 * logm_rotation(u @ vt)
    delta = omega @ P - P @ omega
    return 0.5 * (delta + delta.T)


def grass_log(P, R):
    """Riemannian logarithm of R at P.

    ``Log_P(R) = [Omega, P]`` with ``Omega = log((I - 2R)(I - 2P)) / 2``.

    Raises
    ------
    CutLocusError
        If R is in the cut locus of P.
    """
    P = check_projector(P)
    R = check_projector(R)
    if in_cut_locus(P, R):
        raise CutLocusError("target projector lies in the cut locus of the base point")
    return _log_unchecked(P, R)


def grass_exp(P, delta):
    """Riemannian exponential ``exp([delta, P]) P exp(-[delta, P])``."""
    P = check_projector(P)
    delta = np.asarray(delta, dtype=float)
    if not is_tangent(P, delta, tol=1e-8):
        raise DomainError("tangent vector is not based at the given projector")
    A = delta @ P - P @ delta
    E = expm(A)
    R = E @ P @ E.T
    return 0.5 * (R + R.T)


def grass_dist(P, R):
    """Frobenius norm of ``grass_log(P, R)``."""
    return float(np.linalg.norm(grass_log(P, R)))
