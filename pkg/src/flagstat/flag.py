"""Flags of mutually orthogonal subspaces, stored as lists of projectors."""

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CutLocusError, DomainError, GapError
from .grassmann import _log_unchecked, check_projector, grass_log, projector_basis
from .matcore import sym_eig_desc

__all__ = [
    "FlagType",
    "Flag",
    "BlockScaling",
    "standard_flag",
    "flag_from_orthogonal",
    "orthogonal_from_flag",
    "flag_of_eigenspaces",
    "group_action",
    "extrinsic_distance",
    "k_discrepancy",
    "k_discrepancy_flags",
    "flag_to_json",
    "flag_from_json",
]

FLAG_TOL = 1e-10
ORTHO_TOL = 1e-10
GAP_TOL = 1e-10
CUT_TOL = 1e-8


@dataclass(frozen=True)
class FlagType:
    """Multiplicities ``(q_1, ..., q_r)`` of a flag; ``d = sum(q_i)``."""

    multiplicities: tuple

    def __post_init__(self):
        mult = tuple(int(q) for q in self.multiplicities)
        if len(mult) < 1:
            raise DomainError("flag type needs at least one block")
        if any(q < 1 for q in mult):
            raise DomainError(f"multiplicities must be positive, got {mult}")
        object.__setattr__(self, "multiplicities", mult)

    @classmethod
    def parse(cls, text):
        """Build from a comma separated string such as ``"1,1,2"``."""
        try:
            mult = tuple(int(tok) for tok in str(text).split(",") if tok.strip())
        except ValueError as exc:
            raise DomainError(f"cannot parse flag type {text!r}") from exc
        return cls(mult)

    @property
    def d(self):
        return sum(self.multiplicities)

    @property
    def r(self):
        return len(self.multiplicities)

    @property
    def offsets(self):
        """Cumulative sums ``(0, q_1, q_1 + q_2, ..., d)``."""
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.multiplicities)]))

    @property
    def blocks(self):
        """Index slices of the blocks beta_1, ..., beta_r."""
        off = self.offsets
        return tuple(slice(off[i], off[i + 1]) for i in range(self.r))

    def __str__(self):
        return ",".join(str(q) for q in self.multiplicities)


def as_flag_type(flag_type):
    if isinstance(flag_type, FlagType):
        return flag_type
    if isinstance(flag_type, str):
        return FlagType.parse(flag_type)
    return FlagType(tuple(flag_type))


@dataclass(frozen=True)
class Flag:
    """A flag of type ``flag_type``: r mutually orthogonal projectors summing to I."""

    flag_type: FlagType
    projectors: tuple = field(repr=False)

    def __post_init__(self):
        ft = as_flag_type(self.flag_type)
        object.__setattr__(self, "flag_type", ft)
        projs = tuple(np.asarray(P, dtype=float) for P in self.projectors)
        object.__setattr__(self, "projectors", projs)
        if len(projs) != ft.r:
            raise DomainError(f"expected {ft.r} projectors, got {len(projs)}")
        for P, q in zip(projs, ft.multiplicities):
            if P.shape != (ft.d, ft.d):
                raise DomainError(f"projector shape {P.shape} does not match d={ft.d}")
            check_projector(P, q=q)
        self.check()

    def check(self, tol=FLAG_TOL):
        """Raise DomainError unless the components are orthogonal and sum to I."""
        d = self.flag_type.d
        if np.linalg.norm(sum(self.projectors) - np.eye(d)) > tol:
            raise DomainError("flag components do not sum to the identity")
        for i, Pi in enumerate(self.projectors):
            for Pj in self.projectors[i + 1:]:
                if np.linalg.norm(Pi @ Pj) > tol:
                    raise DomainError("flag components are not mutually orthogonal")
        return self

    def __len__(self):
        return len(self.projectors)

    def __getitem__(self, i):
        return self.projectors[i]

    def __iter__(self):
        return iter(self.projectors)


def _check_orthogonal(Q, d=None, tol=ORTHO_TOL):
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise DomainError(f"orthogonal matrix must be square, got shape {Q.shape}")
    if d is not None and Q.shape[0] != d:
        raise DomainError(f"orthogonal matrix has size {Q.shape[0]}, expected {d}")
    if np.linalg.norm(Q.T @ Q - np.eye(Q.shape[0])) > tol:
        raise DomainError("matrix is not orthogonal")
    return Q


def _sym(A):
    return 0.5 * (A + A.T)


def standard_flag(flag_type):
    """The flag of coordinate block projectors ``Diag(0, ..., I_{q_i}, ..., 0)``."""
    ft = as_flag_type(flag_type)
    projs = []
    for b in ft.blocks:
        P = np.zeros((ft.d, ft.d))
        P[b, b] = np.eye(b.stop - b.start)
        projs.append(P)
    return Flag(ft, tuple(projs))


def flag_from_orthogonal(Q, flag_type):
    """Flag spanned by consecutive column blocks of an orthogonal matrix."""
    ft = as_flag_type(flag_type)
    Q = _check_orthogonal(Q, ft.d)
    return Flag(ft, tuple(_sym(Q[:, b] @ Q[:, b].T) for b in ft.blocks))


def orthogonal_from_flag(F):
    """An orthogonal matrix whose column blocks span the components of ``F``."""
    Q = np.hstack([projector_basis(P) for P in F.projectors])
    # re-orthonormalize across blocks without mixing them beyond round-off
    u, _, vt = np.linalg.svd(Q)
    return u @ vt


def flag_of_eigenspaces(S, flag_type, tol=GAP_TOL):
    """Flag of eigenspaces of a symmetric matrix, grouped by decreasing eigenvalue.

    Raises
    ------
    GapError
        If the eigenvalues on either side of a block boundary are too close
        to separate the blocks.
    """
    ft = as_flag_type(flag_type)
    S = np.asarray(S, dtype=float)
    if S.shape != (ft.d, ft.d):
        raise DomainError(f"matrix shape {S.shape} does not match flag dimension {ft.d}")
    mu, V = sym_eig_desc(S)
    _check_gaps(mu, ft, tol)
    return Flag(ft, tuple(_sym(V[:, b] @ V[:, b].T) for b in ft.blocks))


def _check_gaps(mu, ft, tol=GAP_TOL):
    scale = max(float(np.max(np.abs(mu))), 1.0)
    for k in ft.offsets[1:-1]:
        if (mu[k - 1] - mu[k]) / scale <= tol:
            raise GapError(f"spectral gap at position {k} is below tolerance")


def group_action(Q, F):
    """Componentwise conjugation ``(Q P_i Q')``."""
    Q = _check_orthogonal(Q, F.flag_type.d)
    return Flag(F.flag_type, tuple(_sym(Q @ P @ Q.T) for P in F.projectors))


def extrinsic_distance(F, G):
    """Root sum of squared Frobenius norms of the componentwise Grassmann logs."""
    if F.flag_type != G.flag_type:
        raise DomainError("flags have different types")
    total = 0.0
    for i, (P, R) in enumerate(zip(F.projectors, G.projectors)):
        try:
            total += np.linalg.norm(grass_log(P, R)) ** 2
        except CutLocusError as exc:
            raise CutLocusError(f"component {i} lies in the cut locus", index=i) from exc
    return float(np.sqrt(total))


@dataclass(frozen=True)
class BlockScaling:
    """Per-component diagonal scalings ``K^1, ..., K^r``.

    ``K^i`` equals ``1 / sigma[i, j]`` on block j and the identity on block i.
    """

    flag_type: FlagType
    sigma: np.ndarray = field(repr=False)

    def __post_init__(self):
        ft = as_flag_type(self.flag_type)
        object.__setattr__(self, "flag_type", ft)
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (ft.r, ft.r):
            raise DomainError(f"sigma table must be {ft.r} x {ft.r}")
        off = ~np.eye(ft.r, dtype=bool)
        if np.any(~np.isfinite(sigma[off])) or np.any(sigma[off] <= 0):
            raise DomainError("block scales must be positive and finite")
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def identity(cls, flag_type):
        ft = as_flag_type(flag_type)
        return cls(ft, np.ones((ft.r, ft.r)))

    def diagonal(self, i):
        """Diagonal of ``K^i`` as a length-d vector."""
        ft = self.flag_type
        diag = np.empty(ft.d)
        for j, b in enumerate(ft.blocks):
            diag[b] = 1.0 if j == i else 1.0 / self.sigma[i, j]
        return diag

    @property
    def matrices(self):
        return tuple(np.diag(self.diagonal(i)) for i in range(self.flag_type.r))


def _component_cut(Q, R_basis, block, tol=CUT_TOL):
    # rank(Y'Z) with Y = I_d^{(i)} in the rotated chart, i.e. rank(Q_i' Z)
    cosines = np.linalg.svd(Q[:, block].T @ R_basis, compute_uv=False)
    return cosines[-1] < tol


def k_discrepancy(K, Q, R):
    """Scaled discrepancy between an orthogonal matrix and a flag.

    ``sqrt(sum_i || K^i Log_{P0^i}(Q' R_i Q) K^i ||_F^2)``, evaluated in the
    chart at the standard flag.  The value depends on Q only through the flag
    its column blocks span.

    Raises
    ------
    CutLocusError
        If ``Q' R_i Q`` is in the cut locus of ``P0^i`` for some i; the
        error's ``index`` names the first such component.
    """
    ft = R.flag_type
    if K.flag_type != ft:
        raise DomainError("scaling and flag have different types")
    Q = _check_orthogonal(Q, ft.d)
    P0 = standard_flag(ft)
    total = 0.0
    for i, (b, Ri) in enumerate(zip(ft.blocks, R.projectors)):
        if _component_cut(Q, projector_basis(Ri), b):
            raise CutLocusError(f"component {i} lies in the cut locus", index=i)
        log = _log_unchecked(P0[i], _sym(Q.T @ Ri @ Q))
        k = K.diagonal(i)
        total += np.linalg.norm(k[:, None] * log * k[None, :]) ** 2
    return float(np.sqrt(total))


def k_discrepancy_flags(K, P, R):
    """K-discrepancy between two flags, through any Q spanning ``P``."""
    if P.flag_type != R.flag_type:
        raise DomainError("flags have different types")
    return k_discrepancy(K, orthogonal_from_flag(P), R)


def flag_to_json(F):
    """Serialize a flag as ``{"type": [...], "projectors": [rows...]}``."""
    doc = {
        "type": list(F.flag_type.multiplicities),
        "projectors": [P.tolist() for P in F.projectors],
    }
    return json.dumps(doc)


def flag_from_json(text):
    try:
        doc = json.loads(text)
        ft = FlagType(tuple(doc["type"]))
        projs = tuple(np.array(P, dtype=float) for P in doc["projectors"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed flag document: {exc}") from exc
    return Flag(ft, projs)
