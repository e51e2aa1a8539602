"""Recursive multiresolution DMD over halving time bins.

Each node of the binary hierarchy fits a DMD to its bin's residual data
(the original data minus every coarser level's slow reconstruction), keeps
the modes oscillating slowly relative to the bin duration, subtracts their
reconstruction, and hands the residual to its two children.  Leaf nodes
keep every mode surviving truncation.  The retained modes across all nodes
form the mode library used for sensor design and estimation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dmd import DmdResult, SnapshotMatrix, dmd_reconstruct, exact_dmd, fb_dmd
from .linalg import DegenerateInputError, SvdTruncation

TWO_PI = 2.0 * np.pi

_REPEAT_OVERLAP = 0.999


class ResolutionError(ValueError):
    """Raised when a bin has too few snapshots for the requested depth."""


@dataclass(frozen=True)
class MrDmdNode:
    """One (level, bin) cell: its time support and retained slow modes."""

    level: int
    bin: int  # 1-based within the level
    t_start: float
    t_end: float
    slow: DmdResult | None
    input_norm: float
    residual_norm: float
    input_data: np.ndarray | None = None
    residual_data: np.ndarray | None = None

    @property
    def n_slow(self) -> int:
        return 0 if self.slow is None else self.slow.rank


@dataclass(frozen=True)
class MrDmdTree:
    """Complete binary hierarchy of per-bin DMD results."""

    levels: int
    t0: float
    t1: float
    dt: float
    nodes: tuple[MrDmdNode, ...]  # level-major, bin ascending; 2^L - 1 nodes

    def node(self, level: int, bin: int) -> MrDmdNode:
        if not (1 <= level <= self.levels and 1 <= bin <= 2 ** (level - 1)):
            raise KeyError(f"no node ({level}, {bin})")
        return self.nodes[2 ** (level - 1) - 1 + bin - 1]

    @property
    def span(self) -> float:
        return self.t1 - self.t0

    def bin_of(self, level: int, t: float) -> int:
        """Bin index containing time t at this level (right-closed bins)."""
        width = self.span / 2 ** (level - 1)
        j = int(np.ceil((t - self.t0) / width - 1e-9 * self.dt / width))
        return min(max(j, 1), 2 ** (level - 1))


@dataclass(frozen=True)
class ModeColumn:
    """Per-column metadata of the flattened mode library."""

    level: int
    bin: int
    k: int  # mode index within the source node
    omega: complex
    amplitude: float  # |b|
    t_start: float
    t_end: float
    repeat: bool = False

    @property
    def frequency(self) -> float:
        return self.omega.imag / TWO_PI


@dataclass(frozen=True)
class ModeLibrary:
    """Flattened matrix of retained modes with per-column metadata."""

    matrix: np.ndarray  # (n, M) complex
    columns: tuple[ModeColumn, ...]
    dt: float

    def __post_init__(self):
        if self.matrix.shape[1] != len(self.columns):
            raise ValueError("metadata length must match column count")

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([c.frequency for c in self.columns])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c.amplitude for c in self.columns])

    def subset(self, idx) -> "ModeLibrary":
        idx = list(idx)
        return ModeLibrary(
            matrix=self.matrix[:, idx],
            columns=tuple(self.columns[i] for i in idx),
            dt=self.dt,
        )


def slow_cutoff(rho: float, t_start: float, t_end: float) -> float:
    """Frequency below which a mode counts as slow for a bin: at most rho
    completed cycles over the bin duration."""
    return rho / (t_end - t_start)


def _split_indices(times, t_start, t_mid, dt):
    # Right-closed bins: the boundary snapshot stays with the left child.
    tol = 1e-9 * dt
    left = np.flatnonzero(times <= t_mid + tol)
    right = np.flatnonzero(times > t_mid + tol)
    return left, right


def mrdmd_decompose(
    data: SnapshotMatrix,
    levels: int,
    trunc: SvdTruncation | None = None,
    rho: float = 1.0,
    method: str = "fb",
    stride: int = 1,
    delays: int = 2,
    keep_data: bool = False,
) -> MrDmdTree:
    """Decompose snapshots into the multiresolution hierarchy.

    Parameters
    ----------
    levels:
        Depth L of the hierarchy (2^L - 1 nodes).
    trunc:
        Per-bin SVD truncation; defaults to the library-wide default.
    rho:
        Slow-mode budget in cycles per bin (default 1).
    method:
        "fb" for forward-backward DMD per bin (default), "exact" otherwise.
    stride:
        Optional snapshot decimation applied to each bin's DMD fit only;
        subtraction still happens at full resolution.
    keep_data:
        Retain each node's input and residual matrices for diagnostics.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if method not in ("fb", "exact"):
        raise ValueError("method must be 'fb' or 'exact'")
    if data.n_snapshots < 2**levels * 4:
        raise ResolutionError(
            "insufficient resolution for requested levels: "
            f"need at least {2**levels * 4} snapshots, got {data.n_snapshots}"
        )
    fit = fb_dmd if method == "fb" else exact_dmd
    t0 = data.t0
    t1 = data.times[-1]
    span = t1 - t0
    nodes: dict[tuple[int, int], MrDmdNode] = {}

    def recurse(level, bin_j, segment, times):
        if segment.shape[1] < 4:
            raise ResolutionError(
                "insufficient resolution for requested levels: bin "
                f"({level},{bin_j}) has {segment.shape[1]} snapshots"
            )
        width = span / 2 ** (level - 1)
        t_start = t0 + (bin_j - 1) * width
        t_end = t0 + bin_j * width
        window = SnapshotMatrix(segment[:, ::stride], data.dt * stride, t0=times[0])
        input_norm = float(np.linalg.norm(segment))
        slow = None
        if input_norm > 0.0:
            result = fit(window, trunc, delays=delays)
            cutoff = slow_cutoff(rho, t_start, t_end)
            if level == levels:
                keep = np.arange(result.rank)
            else:
                # Slow means at most rho cycles over the bin, where growth
                # and decay count toward the budget (|log lambda| modulus),
                # so runaway exponential fits are never subtracted.
                keep = np.flatnonzero(result.cycle_rates <= cutoff * (1 + 1e-12))
            if keep.size:
                slow = result.subset(keep)
        if slow is not None:
            residual = segment - dmd_reconstruct(slow, times)
        else:
            residual = segment
        nodes[(level, bin_j)] = MrDmdNode(
            level=level,
            bin=bin_j,
            t_start=t_start,
            t_end=t_end,
            slow=slow,
            input_norm=input_norm,
            residual_norm=float(np.linalg.norm(residual)),
            input_data=segment.copy() if keep_data else None,
            residual_data=residual.copy() if keep_data else None,
        )
        if level < levels:
            t_mid = 0.5 * (t_start + t_end)
            left, right = _split_indices(times, t_start, t_mid, data.dt)
            recurse(level + 1, 2 * bin_j - 1, residual[:, left], times[left])
            recurse(level + 1, 2 * bin_j, residual[:, right], times[right])

    recurse(1, 1, data.data, data.times)
    ordered = tuple(
        nodes[(lvl, j)]
        for lvl in range(1, levels + 1)
        for j in range(1, 2 ** (lvl - 1) + 1)
    )
    return MrDmdTree(levels=levels, t0=t0, t1=t1, dt=data.dt, nodes=ordered)


def mrdmd_reconstruct(tree: MrDmdTree, times) -> np.ndarray:
    """Sum the per-level slow reconstructions of the bins containing each
    time.  Times must lie within the decomposed span; bins are right-closed
    so a boundary time belongs to the earlier bin."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    tol = 1e-9 * tree.dt
    if np.any(times < tree.t0 - tol) or np.any(times > tree.t1 + tol):
        raise ValueError("time outside the decomposed span")
    n = next(nd.slow.modes.shape[0] for nd in tree.nodes if nd.slow is not None)
    out = np.zeros((n, times.size))
    for level in range(1, tree.levels + 1):
        bins = np.array([tree.bin_of(level, t) for t in times])
        for j in np.unique(bins):
            node = tree.node(level, int(j))
            if node.slow is None:
                continue
            sel = np.flatnonzero(bins == j)
            out[:, sel] += dmd_reconstruct(node.slow, times[sel])
    return out


def build_library(tree: MrDmdTree) -> ModeLibrary:
    """Flatten every retained node mode into a deterministic library.

    Column order is level-major, bin-minor, amplitude-descending (ties
    break toward positive frequency, then the node-local mode index).
    Columns that nearly duplicate a column of an adjacent same-level bin
    (|<phi_a, phi_b>| > 0.999) are flagged as repeats but kept.
    """
    blocks = []
    columns = []
    for node in tree.nodes:
        if node.slow is None:
            continue
        res = node.slow
        order = sorted(
            range(res.rank),
            key=lambda k: (-abs(res.amplitudes[k]), -res.omegas[k].imag, k),
        )
        for k in order:
            blocks.append(res.modes[:, k])
            columns.append(
                ModeColumn(
                    level=node.level,
                    bin=node.bin,
                    k=k,
                    omega=complex(res.omegas[k]),
                    amplitude=float(abs(res.amplitudes[k])),
                    t_start=node.t_start,
                    t_end=node.t_end,
                )
            )
    if not blocks:
        raise DegenerateInputError("empty tree: no retained modes")
    matrix = np.column_stack(blocks)

    repeat = np.zeros(len(columns), dtype=bool)
    by_cell: dict[tuple[int, int], list[int]] = {}
    for i, col in enumerate(columns):
        by_cell.setdefault((col.level, col.bin), []).append(i)
    for (level, bin_j), left_idx in by_cell.items():
        right_idx = by_cell.get((level, bin_j + 1))
        if not right_idx:
            continue
        overlap = np.abs(matrix[:, left_idx].conj().T @ matrix[:, right_idx])
        hits = np.argwhere(overlap > _REPEAT_OVERLAP)
        for a, b in hits:
            repeat[left_idx[a]] = True
            repeat[right_idx[b]] = True
    columns = tuple(
        ModeColumn(
            level=c.level,
            bin=c.bin,
            k=c.k,
            omega=c.omega,
            amplitude=c.amplitude,
            t_start=c.t_start,
            t_end=c.t_end,
            repeat=bool(repeat[i]),
        )
        for i, c in enumerate(columns)
    )
    return ModeLibrary(matrix=matrix, columns=columns, dt=tree.dt)


@dataclass(frozen=True)
class AmplitudeCell:
    """Aggregate amplitude statistics of one (level, bin) node."""

    level: int
    bin: int
    t_start: float
    t_end: float
    n_modes: int
    mean_amplitude: float
    modes: tuple[tuple[float, float], ...]  # (frequency, |b|) pairs


def amplitude_map(tree: MrDmdTree) -> list[AmplitudeCell]:
    """One row per (level, bin) with mode frequencies and amplitude stats,
    in a plain serializable form for tabulation and plotting."""
    rows = []
    for node in tree.nodes:
        if node.slow is None:
            rows.append(
                AmplitudeCell(
                    level=node.level,
                    bin=node.bin,
                    t_start=node.t_start,
                    t_end=node.t_end,
                    n_modes=0,
                    mean_amplitude=0.0,
                    modes=(),
                )
            )
            continue
        amps = np.abs(node.slow.amplitudes)
        freqs = node.slow.frequencies
        rows.append(
            AmplitudeCell(
                level=node.level,
                bin=node.bin,
                t_start=node.t_start,
                t_end=node.t_end,
                n_modes=int(amps.size),
                mean_amplitude=float(np.mean(amps)),
                modes=tuple(
                    (float(f), float(a)) for f, a in zip(freqs, amps)
                ),
            )
        )
    return rows
