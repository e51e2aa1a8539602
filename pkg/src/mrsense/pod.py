"""Proper orthogonal decomposition baseline: variance-ranked spatial modes."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dmd import SnapshotMatrix
from .mrdmd import ModeColumn, ModeLibrary


@dataclass(frozen=True)
class PodResult:
    """Orthonormal spatial modes with their variance spectrum.

    `eigenvalues` holds the full spectrum (squared singular values divided
    by m - 1) even when fewer modes are retained, so variance-explained
    fractions are computable from the result alone.
    """

    modes: np.ndarray  # (n, r) orthonormal columns
    eigenvalues: np.ndarray  # full spectrum, nonincreasing
    mean: np.ndarray | None  # subtracted mean, if centering was requested

    @property
    def rank(self) -> int:
        return self.modes.shape[1]

    def variance_explained(self, k: int) -> float:
        total = float(np.sum(self.eigenvalues))
        if total == 0.0:
            return 1.0
        return float(np.sum(self.eigenvalues[:k]) / total)


def compute_pod(data: SnapshotMatrix, r: int, center: bool = False) -> PodResult:
    """Leading r POD modes of (optionally mean-centered) snapshot data."""
    if r < 1:
        raise ValueError("r must be >= 1")
    x = data.data
    m = data.n_snapshots
    if r > min(x.shape):
        raise ValueError(f"r={r} exceeds min(n, m)={min(x.shape)}")
    mean = None
    if center:
        mean = x.mean(axis=1)
        x = x - mean[:, None]
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    eigenvalues = s**2 / (m - 1)
    rank = int(np.count_nonzero(s > s[0] * np.finfo(float).eps * max(x.shape)))
    rank = max(rank, 1)
    if r > rank:
        warnings.warn(
            f"requested {r} POD modes but numerical rank is {rank}; clamping",
            RuntimeWarning,
        )
        r = rank
    return PodResult(modes=u[:, :r], eigenvalues=eigenvalues, mean=mean)


def pod_library(pod: PodResult) -> ModeLibrary:
    """Wrap POD modes as a mode library so the sensing and estimation
    pipelines accept them interchangeably with multiresolution modes."""
    matrix = pod.modes.astype(complex)
    columns = tuple(
        ModeColumn(
            level=1,
            bin=1,
            k=k,
            omega=0j,
            amplitude=float(np.sqrt(pod.eigenvalues[k])),
            t_start=0.0,
            t_end=0.0,
        )
        for k in range(pod.rank)
    )
    return ModeLibrary(matrix=matrix, columns=columns, dt=1.0)
