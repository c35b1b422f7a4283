"""Norm abstraction: primal evaluation, dual evaluation, and ball projection.

Six concrete kinds: l1, l2, sup, nuclear, spectral, and the design-induced
norm K(x) = min{|b|_1 : x = A b} for a full-row-rank design A. Matrix norms
act on vectors of length l*m flattened column-major, so a single vector
interface serves both the regression and the matrix application.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tunefree import solvers

_VECTOR_TAGS = ("l1", "l2", "sup")
_MATRIX_TAGS = ("nuclear", "spectral")
_ALL_TAGS = _VECTOR_TAGS + _MATRIX_TAGS + ("design",)


@dataclass(frozen=True, eq=False)
class NormKind:
    tag: str
    shape: tuple[int, int] | None = None
    design: np.ndarray | None = None

    def __post_init__(self):
        if self.tag not in _ALL_TAGS:
            raise ValueError(f"unknown norm tag {self.tag!r}")

    @property
    def ambient_dim(self):
        """Dimension the norm acts on, or None if it accepts any length."""
        if self.tag in _MATRIX_TAGS:
            return self.shape[0] * self.shape[1]
        if self.tag == "design":
            return self.design.shape[0]
        return None


def l1_kind():
    return NormKind("l1")


def l2_kind():
    return NormKind("l2")


def sup_kind():
    return NormKind("sup")


def nuclear_kind(rows, cols):
    if rows < 1 or cols < 1:
        raise ValueError("matrix norms need positive dimensions")
    return NormKind("nuclear", shape=(int(rows), int(cols)))


def spectral_kind(rows, cols):
    if rows < 1 or cols < 1:
        raise ValueError("matrix norms need positive dimensions")
    return NormKind("spectral", shape=(int(rows), int(cols)))


def design_kind(A):
    """Norm induced by the design A: minimal l1 representation cost.

    A must have full row rank so that every x is representable and the norm
    is finite; rank-deficient designs are rejected here rather than letting
    evaluations return +inf.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("design must be a 2-D array")
    if not solvers.has_full_row_rank(A):
        raise ValueError("design matrix must have full row rank")
    return NormKind("design", design=A)


@dataclass(frozen=True, eq=False)
class NormPair:
    K: NormKind
    Ktilde: NormKind

    def __post_init__(self):
        dk, dt = self.K.ambient_dim, self.Ktilde.ambient_dim
        if dk is not None and dt is not None and dk != dt:
            raise ValueError(f"norms act on different dimensions: {dk} vs {dt}")


def _check_vec(kind, x):
    x = np.asarray(x, dtype=float).ravel()
    dim = kind.ambient_dim
    if dim is not None and x.size != dim:
        raise ValueError(f"vector length {x.size} does not match ambient dimension {dim}")
    return x


def _as_mat(kind, x):
    return x.reshape(kind.shape, order="F")


def norm_eval(kind, x):
    x = _check_vec(kind, x)
    if kind.tag == "l1":
        return float(np.abs(x).sum())
    if kind.tag == "l2":
        return float(np.linalg.norm(x))
    if kind.tag == "sup":
        return float(np.abs(x).max()) if x.size else 0.0
    if kind.tag == "nuclear":
        return float(np.linalg.svd(_as_mat(kind, x), compute_uv=False).sum())
    if kind.tag == "spectral":
        s = np.linalg.svd(_as_mat(kind, x), compute_uv=False)
        return float(s[0]) if s.size else 0.0
    # design: minimal l1 representation cost, delegated to basis pursuit
    return solvers.basis_pursuit(kind.design, x).objective


def dual_norm_eval(kind, x):
    """Evaluate the dual norm via the closed-form dual pairs.

    l1 <-> sup, l2 <-> l2, nuclear <-> spectral; the dual of the design norm
    is the maximum of |x . A_j| over columns A_j (each column is an extreme
    feasible direction of the unit ball).
    """
    x = _check_vec(kind, x)
    if kind.tag == "l1":
        return norm_eval(sup_kind(), x)
    if kind.tag == "sup":
        return norm_eval(l1_kind(), x)
    if kind.tag == "l2":
        return norm_eval(l2_kind(), x)
    if kind.tag == "nuclear":
        return norm_eval(spectral_kind(*kind.shape), x)
    if kind.tag == "spectral":
        return norm_eval(nuclear_kind(*kind.shape), x)
    return float(np.abs(x @ kind.design).max())


def _project_l1(x, radius):
    if np.abs(x).sum() <= radius:
        return x.copy()
    if radius == 0.0:
        return np.zeros_like(x)
    # Sorted soft-threshold (water filling on the simplex of magnitudes).
    mag = np.abs(x)
    u = np.sort(mag)[::-1]
    cumsum = np.cumsum(u)
    counts = np.arange(1, u.size + 1)
    active = np.nonzero(u - (cumsum - radius) / counts > 0)[0]
    rho = active[-1]
    theta = (cumsum[rho] - radius) / (rho + 1)
    return np.sign(x) * np.maximum(mag - theta, 0.0)


def project_ball(kind, x, radius):
    """Euclidean projection of x onto {v : K(v) <= radius}.

    Supported kinds: l1, l2, nuclear (the ones the projection property
    tests exercise).
    The projection is unique because the ball is closed and convex.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    x = _check_vec(kind, x)
    if kind.tag == "l1":
        return _project_l1(x, radius)
    if kind.tag == "l2":
        nrm = np.linalg.norm(x)
        if nrm <= radius:
            return x.copy()
        return x * (radius / nrm)
    if kind.tag == "nuclear":
        M = _as_mat(kind, x)
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
        s_proj = _project_l1(s, radius)
        return ((U * s_proj) @ Vt).ravel(order="F")
    raise ValueError(f"projection not supported for norm kind {kind.tag!r}")
