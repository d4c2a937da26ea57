"""Orthonormal frames, holonomy between Grassmann fibers, geodesic decomposition."""

import numpy as np

from .exceptions import CutLocusError, DomainError
from .grassmann import check_projector, grass_log, in_cut_locus, projector_from_frame
from .matcore import expm

__all__ = ["check_frame", "holonomy", "geodesic_decomposition"]

FRAME_TOL = 1e-10
FIBER_TOL = 1e-8


def check_frame(U, tol=FRAME_TOL):
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.ndim != 2 or U.shape[1] > U.shape[0]:
        raise DomainError(f"frame must be a d x q array with q <= d, got shape {U.shape}")
    if np.linalg.norm(U.T @ U - np.eye(U.shape[1])) > tol:
        raise DomainError("frame columns are not orthonormal")
    return U


def _transport(U, delta):
    q = U.shape[1]
    DU = delta @ U
    C = U.T @ delta @ DU
    C = 0.5 * (C + C.T)
    block = np.zeros((2 * q, 2 * q))
    block[:q, q:] = -C
    block[q:, :q] = np.eye(q)
    E = expm(block)
    return np.hstack([U, DU]) @ E[:, :q]


def holonomy(P, R, U):
    """Transport a frame of rg(P) to a frame of rg(R).

    The frame follows the horizontal lift of the minimizing geodesic from P
    to R.  With ``delta = Log_P(R)`` and ``C = U' delta^2 U`` the result is
    ``[U, delta U] expm([[0, -C], [I, 0]])[:, :q]``.

    Raises
    ------
    DomainError
        If U does not span rg(P).
    CutLocusError
        If R is in the cut locus of P.
    """
    P = check_projector(P)
    R = check_projector(R)
    U = check_frame(U)
    if U.shape[0] != P.shape[0]:
        raise DomainError("frame and projector dimensions differ")
    if np.linalg.norm(U @ U.T - P) > FIBER_TOL:
        raise DomainError("frame does not span the range of the base projector")
    delta = grass_log(P, R)
    return _transport(U, delta)


def geodesic_decomposition(U, R):
    """Split a frame into its subspace and a transported frame of rg(R).

    Returns ``(P, V)`` with ``P = U U'`` and ``V = holonomy(P, R, U)``;
    ``holonomy(R, P, V)`` recovers ``U``.
    """
    U = check_frame(U)
    R = check_projector(R, q=U.shape[1])
    P = projector_from_frame(U)
    if in_cut_locus(P, R):
        raise CutLocusError("frame span lies in the cut locus of the reference projector")
    return P, holonomy(P, R, U)
