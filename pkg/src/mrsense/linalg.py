"""Dense linear-algebra kernels with explicit numerical contracts.

Every routine here operates on plain numpy arrays and is a pure function of
its inputs, so all of them are safe to call concurrently.  Eigen and SVD
work is delegated to LAPACK; the greedy column-pivoted QR is implemented
directly because its pivot order and tie-breaking are part of the contract.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg


class DegenerateInputError(ValueError):
    """Raised when an input matrix carries no usable signal (e.g. all zeros)."""


class BranchCutError(ValueError):
    """Raised when the principal matrix square root is ambiguous."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative kernel fails to meet its residual contract."""


@dataclass(frozen=True)
class SvdTruncation:
    """Rank-selection rule for a truncated SVD.

    Exactly one of ``rank`` (keep a fixed number of singular values),
    ``energy`` (keep the smallest rank capturing this fraction of squared
    Frobenius norm) or ``threshold`` (keep singular values above an absolute
    cutoff) must be set.  ``cap`` optionally limits the rank on top of the
    chosen rule.
    """

    rank: int | None = None
    energy: float | None = None
    threshold: float | None = None
    cap: int | None = None

    def __post_init__(self):
        chosen = [x is not None for x in (self.rank, self.energy, self.threshold)]
        if sum(chosen) != 1:
            raise ValueError("exactly one of rank/energy/threshold must be set")
        if self.rank is not None and self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.energy is not None and not 0.0 < self.energy <= 1.0:
            raise ValueError("energy fraction must be in (0, 1]")
        if self.threshold is not None and self.threshold <= 0.0:
            raise ValueError("singular-value threshold must be positive")
        if self.cap is not None and self.cap < 1:
            raise ValueError("cap must be >= 1")

    @classmethod
    def fixed_rank(cls, r: int, cap: int | None = None) -> "SvdTruncation":
        return cls(rank=r, cap=cap)

    @classmethod
    def energy_fraction(cls, tau: float, cap: int | None = None) -> "SvdTruncation":
        return cls(energy=tau, cap=cap)

    @classmethod
    def sv_threshold(cls, t: float, cap: int | None = None) -> "SvdTruncation":
        return cls(threshold=t, cap=cap)


def truncated_svd(a: np.ndarray, trunc: SvdTruncation):
    """Truncated SVD ``a ~ U @ diag(s) @ V.T`` with rank chosen per `trunc`.

    Returns ``(U, s, V)`` where U, V have orthonormal columns and s is
    positive and nonincreasing.  With an energy-fraction rule the retained
    rank is the smallest r such that the discarded squared singular values
    are at most ``(1 - energy)`` of the total.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if not np.any(a):
        raise DegenerateInputError("degenerate input: zero matrix")
    u, s, vt = np.linalg.svd(a, full_matrices=False)

    positive = int(np.count_nonzero(s > s[0] * np.finfo(float).eps * max(a.shape)))
    positive = max(positive, 1)
    if trunc.rank is not None:
        r = trunc.rank
        if r > len(s):
            warnings.warn(
                f"requested rank {r} exceeds min(rows, cols)={len(s)}; clamping",
                RuntimeWarning,
            )
            r = len(s)
    elif trunc.energy is not None:
        total = float(np.sum(s**2))
        cum = np.cumsum(s**2)
        r = int(np.searchsorted(cum, trunc.energy * total - 1e-15 * total) + 1)
    else:
        r = int(np.count_nonzero(s > trunc.threshold))
        if r == 0:
            raise DegenerateInputError(
                "singular-value threshold removed every component"
            )
    if r > positive:
        if trunc.rank is not None:
            warnings.warn(
                f"requested rank {r} exceeds numerical rank {positive}; clamping",
                RuntimeWarning,
            )
        r = positive
    if trunc.cap is not None:
        r = min(r, trunc.cap)
    return u[:, :r], s[:r], vt[:r].T


def dense_eig(a: np.ndarray):
    """Eigendecomposition of a small dense square matrix.

    Returns ``(values, vectors)`` with unit-norm eigenvector columns in a
    deterministic order (decreasing |lambda|, then decreasing real part,
    then decreasing imaginary part, which keeps conjugate pairs adjacent
    with the positive-imaginary member first).  Each vector's phase is
    fixed so that its largest-magnitude entry is real and positive.

    Intended for the reduced r x r operators, not full-state matrices.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    try:
        vals, vecs = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceError(f"eigensolver did not converge: {exc}") from exc

    order = np.lexsort((-vals.imag, -vals.real, -np.abs(vals)))
    vals = vals[order]
    vecs = vecs[:, order]

    norms = np.linalg.norm(vecs, axis=0)
    vecs = vecs / norms
    for k in range(vecs.shape[1]):
        i = int(np.argmax(np.abs(vecs[:, k])))
        pivot = vecs[i, k]
        if pivot != 0:
            vecs[:, k] *= np.conj(pivot) / abs(pivot)

    a_norm = np.linalg.norm(a, 2)
    resid = np.linalg.norm(a @ vecs - vecs * vals[None, :], axis=0)
    bound = 1e-8 * max(a_norm, np.finfo(float).tiny)
    if np.any(resid > bound):
        raise ConvergenceError(
            f"eigenpair residual {resid.max():.3e} exceeds bound {bound:.3e}"
        )
    return vals, vecs


def pivoted_qr(a: np.ndarray, p: int):
    """Greedy column-pivoted QR: repeatedly pick the residual column of
    maximal 2-norm, then remove its orthogonal projection from the rest.

    Returns ``(pivots, r_diag)`` where ``pivots`` are 0-based column
    indices in selection order and ``r_diag[k]`` is the residual norm of
    pivot k at selection time (the |R_kk| of the factorization).  Ties in
    residual norm (within 1e-12 relative) break toward the lowest column
    index.  If every remaining residual column is exactly zero before p
    pivots are found, the pivot list is truncated with a warning.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    n_cols = a.shape[1]
    if not 1 <= p <= n_cols:
        raise ValueError(f"p must be in [1, {n_cols}], got {p}")

    work = a.copy()
    q_basis = np.empty((a.shape[0], 0))
    pivots: list[int] = []
    r_diag: list[float] = []
    norms2 = np.einsum("ij,ij->j", work, work)
    for _ in range(p):
        if pivots:
            norms2[pivots] = -1.0
        best = float(norms2.max())
        if best <= 0.0:
            # Residual columns are identically zero: rank exhausted.
            warnings.warn(
                f"rank deficiency: only {len(pivots)} of {p} pivots available",
                RuntimeWarning,
            )
            break
        candidates = np.flatnonzero(norms2 >= best * (1.0 - 2e-12))
        j = int(candidates.min())
        col = work[:, j].copy()
        rkk = float(np.linalg.norm(col))
        # One reorthogonalization pass against the selected basis.
        if q_basis.shape[1]:
            col -= q_basis @ (q_basis.T @ col)
        nrm = np.linalg.norm(col)
        if nrm == 0.0:
            warnings.warn(
                f"rank deficiency: only {len(pivots)} of {p} pivots available",
                RuntimeWarning,
            )
            break
        q = col / nrm
        work -= np.outer(q, q @ work)
        work[:, j] = 0.0
        q_basis = np.column_stack([q_basis, q])
        pivots.append(j)
        r_diag.append(rkk)
        norms2 = np.einsum("ij,ij->j", work, work)
    return np.array(pivots, dtype=int), np.array(r_diag, dtype=float)


def principal_sqrt(a: np.ndarray, *, rel_tol: float = 1e-8) -> np.ndarray:
    """Principal matrix square root of a square matrix.

    The result B satisfies ``||B @ B - a||_F <= rel_tol * ||a||_F`` and has
    its spectrum in the closed right half-plane.  If any eigenvalue of `a`
    lies on the closed negative real axis (within tolerance) the principal
    branch is ambiguous and a BranchCutError is raised.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    w = np.linalg.eigvals(a)
    scale = float(np.abs(w).max()) if w.size else 0.0
    if scale == 0.0:
        raise BranchCutError("branch ambiguity: zero spectrum")
    near_axis = np.abs(w.imag) <= 1e-10 * np.maximum(np.abs(w), scale * 1e-6)
    nonpositive = w.real <= scale * 1e-12
    if np.any(near_axis & nonpositive):
        raise BranchCutError(
            "branch ambiguity: eigenvalue on the closed negative real axis"
        )
    b, _err = scipy.linalg.sqrtm(a, disp=False)
    b = np.asarray(b, dtype=complex)
    resid = np.linalg.norm(b @ b - a) / np.linalg.norm(a)
    if not np.isfinite(resid) or resid > rel_tol:
        raise ConvergenceError(f"matrix square root residual {resid:.3e} too large")
    return b


def least_squares(a: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution of ``a @ x = y``.

    Uses the SVD pseudoinverse with singular values below
    ``1e-12 * s_max`` treated as zero, so rank deficiency is handled
    without error.
    """
    a = np.asarray(a)
    y = np.asarray(y)
    if a.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    x, *_ = np.linalg.lstsq(a, y, rcond=1e-12)
    return x
