"""Exact and forward-backward dynamic mode decomposition on a snapshot window.

A DMD fit expresses column snapshots x_k of a window as
``x(t) = Re( sum_k b_k * phi_k * exp(omega_k * (t - t0)) )`` where the
continuous exponents are ``omega_k = log(lambda_k) / dt``.  With this
scaling the oscillation frequency in cycles per time unit is
``Im(omega)/(2*pi)`` and the growth rate is ``Re(omega)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    BranchCutError,
    DegenerateInputError,
    SvdTruncation,
    dense_eig,
    least_squares,
    principal_sqrt,
    truncated_svd,
)

# Near-lossless energy rule: slow standing oscillations put almost all of a
# conjugate pair's energy in one singular direction, so an aggressive energy
# cutoff (e.g. 0.99) silently deletes the partner direction and with it the
# ability to represent the oscillation.  The cap still bounds noise rank.
DEFAULT_TRUNCATION = SvdTruncation.energy_fraction(1.0 - 1e-9, cap=10)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SnapshotMatrix:
    """Uniformly sampled state snapshots: columns of `data` are states."""

    data: np.ndarray  # (n, m) float64
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError("snapshot data must be a 2-D matrix")
        if data.shape[1] < 2:
            raise ValueError("need at least 2 snapshots")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not np.all(np.isfinite(data)):
            raise ValueError("snapshot data must be finite")
        object.__setattr__(self, "data", data)

    @property
    def n_states(self) -> int:
        return self.data.shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.data.shape[1])


@dataclass(frozen=True)
class DmdResult:
    """Modes, discrete eigenvalues, continuous exponents and amplitudes.

    Mode columns are unit 2-norm; amplitudes carry the scale.  Invariant:
    ``exp(omegas * dt) == lambdas`` and for real input windows the
    eigenvalue multiset is closed under complex conjugation.
    """

    modes: np.ndarray  # (n, r) complex, unit-norm columns
    lambdas: np.ndarray  # (r,) complex
    omegas: np.ndarray  # (r,) complex, log(lambda)/dt
    amplitudes: np.ndarray  # (r,) complex
    dt: float
    t0: float = 0.0

    @property
    def rank(self) -> int:
        return self.lambdas.shape[0]

    @property
    def frequencies(self) -> np.ndarray:
        """Oscillation frequencies in cycles per time unit."""
        return self.omegas.imag / TWO_PI

    @property
    def growth_rates(self) -> np.ndarray:
        return self.omegas.real

    @property
    def cycle_rates(self) -> np.ndarray:
        """Modulus of the continuous exponent in cycles per time unit.

        Combines oscillation and growth: a neutral oscillation at f cycles
        per unit has cycle rate f, a pure trend (lambda = 1) has 0, and a
        rapidly growing or decaying fit has a large cycle rate even when
        it barely oscillates.  This is the measure the multiresolution
        slow/fast split uses.
        """
        return np.abs(self.omegas) / TWO_PI

    def subset(self, idx) -> "DmdResult":
        idx = np.asarray(idx, dtype=int)
        return DmdResult(
            modes=self.modes[:, idx],
            lambdas=self.lambdas[idx],
            omegas=self.omegas[idx],
            amplitudes=self.amplitudes[idx],
            dt=self.dt,
            t0=self.t0,
        )


def _fix_phases(modes: np.ndarray) -> np.ndarray:
    """Normalize columns to unit norm with the dominant entry real-positive."""
    modes = modes.copy()
    for k in range(modes.shape[1]):
        nrm = np.linalg.norm(modes[:, k])
        if nrm == 0:
            continue
        modes[:, k] /= nrm
        i = int(np.argmax(np.abs(modes[:, k])))
        pivot = modes[i, k]
        if pivot != 0:
            modes[:, k] *= np.conj(pivot) / abs(pivot)
    return modes


def _delay_embed(data: np.ndarray, d: int) -> np.ndarray:
    """Stack d consecutive snapshots per column (Hankel embedding).

    Standing oscillations in real data occupy a single spatial direction,
    which a first-order snapshot map cannot rotate; stacking d >= 2 shifts
    restores the rank needed for conjugate eigenvalue pairs.
    """
    n, m = data.shape
    cols = m - d + 1
    out = np.empty((n * d, cols))
    for i in range(d):
        out[i * n : (i + 1) * n] = data[:, i : i + cols]
    return out


def _amplitudes(modes, lambdas, window, amplitude_fit):
    if amplitude_fit == "first":
        return least_squares(modes, window.data[:, 0].astype(complex))
    if amplitude_fit == "joint":
        # Fit b against all snapshots at once by accumulating the normal
        # equations of the stacked system Phi diag(lambda^k) b = x_{k+1}.
        r = modes.shape[1]
        gram = np.zeros((r, r), dtype=complex)
        rhs = np.zeros(r, dtype=complex)
        powers = np.ones(r, dtype=complex)
        phi_h_phi = modes.conj().T @ modes
        for k in range(window.n_snapshots):
            dk = np.diag(powers)
            gram += dk.conj() @ phi_h_phi @ dk
            rhs += dk.conj() @ (modes.conj().T @ window.data[:, k])
            powers = powers * lambdas
        return least_squares(gram, rhs)
    raise ValueError(f"unknown amplitude_fit {amplitude_fit!r}")


def _finish(modes, lambdas, window, amplitude_fit):
    # Discard numerically zero eigenvalues; their continuous exponent is
    # undefined and they carry no forward dynamics.
    keep = np.abs(lambdas) > 1e-14 * max(np.abs(lambdas).max(), 1.0)
    if not np.all(keep):
        warnings.warn("dropping zero eigenvalues from DMD spectrum", RuntimeWarning)
        lambdas = lambdas[keep]
        modes = modes[:, keep]
    if lambdas.size == 0:
        raise DegenerateInputError("rank collapsed to zero in DMD")
    modes = _fix_phases(modes)
    omegas = np.log(lambdas) / window.dt
    b = _amplitudes(modes, lambdas, window, amplitude_fit)
    return DmdResult(
        modes=modes,
        lambdas=lambdas,
        omegas=omegas,
        amplitudes=b,
        dt=window.dt,
        t0=window.t0,
    )


def _lift_modes(xp, v, s, vecs, n):
    """Exact-DMD mode lifting, keeping the physical (first) block of a
    delay-embedded stack and falling back to the projected modes for any
    eigenvector that lifts to numerically nothing."""
    modes = (xp @ (v / s) @ vecs)[:n, :]
    dead = np.linalg.norm(modes, axis=0) <= 1e-13 * max(np.abs(s).max(), 1.0)
    return modes, dead


def exact_dmd(
    window: SnapshotMatrix,
    trunc: SvdTruncation | None = None,
    amplitude_fit: str = "first",
    delays: int = 2,
) -> DmdResult:
    """Exact DMD of a snapshot window.

    The reduced operator ``U.T @ X' @ V / s`` is eigendecomposed and the
    eigenvectors are lifted through ``X' @ V / s`` to full-state modes;
    amplitudes solve ``min || Phi b - x_1 ||_2`` against the first snapshot
    (or jointly over all snapshots with ``amplitude_fit="joint"``).

    ``delays`` controls the Hankel stacking depth of the snapshot matrices
    (clamped to the window length); the default of 2 lets standing
    oscillations in spatially low-rank real data produce proper conjugate
    eigenvalue pairs.  The returned modes are always physical (n-dim).
    """
    trunc = trunc or DEFAULT_TRUNCATION
    n = window.n_states
    d = max(1, min(delays, window.n_snapshots - 1))
    emb = _delay_embed(window.data, d)
    x = emb[:, :-1]
    xp = emb[:, 1:]
    u, s, v = truncated_svd(x, trunc)
    atilde = u.T @ xp @ v / s
    vals, vecs = dense_eig(atilde)
    modes, dead = _lift_modes(xp, v, s, vecs, n)
    if np.any(dead):
        modes[:, dead] = (u @ vecs)[:n, dead]
    return _finish(modes, vals, window, amplitude_fit)


def fb_dmd(
    window: SnapshotMatrix,
    trunc: SvdTruncation | None = None,
    amplitude_fit: str = "first",
    delays: int = 2,
) -> DmdResult:
    """Forward-backward DMD: debiases eigenvalues of noisy data.

    Both the forward map (X -> X') and the backward map (X' -> X) are
    reduced in the forward POD basis; the combined operator is the
    principal square root of ``A_f @ inv(A_b)``.  If the backward operator
    is singular or the square root's branch is ambiguous, the forward
    result is returned with a warning.
    """
    trunc = trunc or DEFAULT_TRUNCATION
    n = window.n_states
    d = max(1, min(delays, window.n_snapshots - 1))
    emb = _delay_embed(window.data, d)
    x = emb[:, :-1]
    xp = emb[:, 1:]
    u, s, v = truncated_svd(x, trunc)
    xr = (s[:, None] * v.T).astype(complex)  # U.T @ X
    xpr = (u.T @ xp).astype(complex)
    at_f = xpr @ v / s
    # Backward reduced operator solves A_b @ X'_r = X_r in least squares.
    at_b = least_squares(xpr.T, xr.T).T
    try:
        sb = np.linalg.svd(at_b, compute_uv=False)
        if sb[-1] <= 1e-12 * sb[0]:
            raise np.linalg.LinAlgError("backward operator singular")
        product = at_f @ np.linalg.inv(at_b)
        atilde = principal_sqrt(product)
    except (np.linalg.LinAlgError, BranchCutError) as exc:
        warnings.warn(
            f"forward-backward debiasing unavailable ({exc}); "
            "falling back to exact DMD",
            RuntimeWarning,
        )
        return exact_dmd(window, trunc, amplitude_fit, delays)
    vals, vecs = dense_eig(atilde)
    modes, dead = _lift_modes(xp, v, s, vecs, n)
    if np.any(dead):
        modes[:, dead] = (u @ vecs)[:n, dead]
    return _finish(modes, vals, window, amplitude_fit)


def dmd_reconstruct(res: DmdResult, times) -> np.ndarray:
    """Evaluate the DMD expansion at the requested times.

    Returns the real part of ``Phi @ diag(b) @ exp(omega (t - t0))`` as an
    (n, len(times)) matrix.  Times may lie inside or beyond the fitted
    window; extrapolation follows the fitted exponentials.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    rel = times[None, :] - res.t0
    dynamics = res.amplitudes[:, None] * np.exp(res.omegas[:, None] * rel)
    return np.real(res.modes @ dynamics)
