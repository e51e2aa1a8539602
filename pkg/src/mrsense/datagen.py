"""Synthetic data generators: the three-band Gaussian video, a layered
multiscale surrogate field, smooth random coefficient processes, and
seeded noise injection.

All generators are pure functions of (spec, seed); reruns are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dmd import SnapshotMatrix

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class GaussianMode:
    """Spatial bump exp(-((x-cx)^2 + (y-cy)^2) / width) scaled by weight."""

    center: tuple[float, float]
    width: float
    weight: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")


@dataclass(frozen=True)
class VideoMode:
    shape: GaussianMode
    frequency: float  # cycles per time unit
    window: tuple[float, float]  # active interval, inclusive


@dataclass(frozen=True)
class VideoSpec:
    """Planar video built from Gaussian sources oscillating in overlapping
    time windows."""

    grid: tuple[int, int] = (80, 80)
    extent: tuple[float, float] = (-5.0, 5.0)
    span: float = 10.0
    dt: float = 0.01
    modes: tuple[VideoMode, ...] = ()

    def __post_init__(self):
        if self.span <= 0 or self.dt <= 0:
            raise ValueError("span and dt must be positive")
        for m in self.modes:
            a, b = m.window
            if not (0.0 <= a <= b <= self.span):
                raise ValueError("mode windows must lie inside [0, span]")

    @property
    def n_states(self) -> int:
        return self.grid[0] * self.grid[1]

    @property
    def n_snapshots(self) -> int:
        return int(round(self.span / self.dt)) + 1

    def coordinates(self):
        """Flattened (x, y) coordinates of the grid, row-major."""
        nx, ny = self.grid
        lo, hi = self.extent
        x = np.linspace(lo, hi, nx)
        y = np.linspace(lo, hi, ny)
        xx, yy = np.meshgrid(x, y, indexing="xy")
        return xx.ravel(), yy.ravel()

    def spatial_modes(self) -> np.ndarray:
        """The generating spatial fields as columns (peak value = weight)."""
        xx, yy = self.coordinates()
        cols = []
        for m in self.modes:
            cx, cy = m.shape.center
            d2 = (xx - cx) ** 2 + (yy - cy) ** 2
            cols.append(m.shape.weight * np.exp(-d2 / m.shape.width))
        return np.column_stack(cols)


def three_band_video_spec(dt: float = 0.01, span: float = 10.0) -> VideoSpec:
    """Default three-source video: 5.55, 0.9 and 0.15 cycles/unit sources
    active on [0,5], [2.5,7.5] and [0,10] respectively.

    Grid, centers and widths are package defaults chosen so the fastest
    source is sampled ~18x per cycle.
    """
    centers = ((-2.0, -2.0), (0.0, 2.0), (2.0, -2.0))
    return VideoSpec(
        grid=(80, 80),
        extent=(-5.0, 5.0),
        span=span,
        dt=dt,
        modes=(
            VideoMode(GaussianMode(centers[0], 1.5), 5.55, (0.0, 5.0)),
            VideoMode(GaussianMode(centers[1], 1.5), 0.9, (2.5, 7.5)),
            VideoMode(GaussianMode(centers[2], 1.5), 0.15, (0.0, span)),
        ),
    )


def generate_video(spec: VideoSpec) -> SnapshotMatrix:
    """Render the video: each snapshot is the real part of the stated
    superposition sampled at t = k * dt."""
    times = np.arange(spec.n_snapshots) * spec.dt
    shapes = spec.spatial_modes()
    coeffs = np.zeros((len(spec.modes), times.size))
    for i, m in enumerate(spec.modes):
        a, b = m.window
        active = (times >= a - 1e-12) & (times <= b + 1e-12)
        coeffs[i, active] = np.cos(TWO_PI * m.frequency * times[active])
    return SnapshotMatrix(shapes @ coeffs, dt=spec.dt, t0=0.0)


def generate_test_coefficients(
    k: int, m: int, seed: int, width: float = 10.0, dt: float = 1.0
) -> np.ndarray:
    """Smooth random coefficient series: white noise convolved with a
    Gaussian kernel, normalized to zero mean and unit sample variance.

    `width` is the time lag (in the units implied by `dt`) at which the
    sample autocorrelation drops to about exp(-1/2).
    """
    if k < 1 or m < 1:
        raise ValueError("k and m must be >= 1")
    rng = np.random.default_rng(seed)
    lag = max(width / dt, 1e-9)  # e^{-1/2} autocorrelation lag in samples
    tau = lag / np.sqrt(2.0)  # kernel std in samples
    half = int(np.ceil(4 * tau))
    kernel = np.exp(-0.5 * (np.arange(-half, half + 1) / tau) ** 2)
    pad = kernel.size
    raw = rng.standard_normal((k, m + 2 * pad))
    out = np.empty((k, m))
    for i in range(k):
        smooth = np.convolve(raw[i], kernel, mode="same")[pad : pad + m]
        smooth -= smooth.mean()
        std = smooth.std()
        out[i] = smooth / std if std > 0 else smooth
    return out


def add_noise(data, sigma: float, seed: int):
    """Add i.i.d. zero-mean Gaussian noise of standard deviation sigma.

    Accepts a SnapshotMatrix or a plain array and returns the same kind.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if isinstance(data, SnapshotMatrix):
        noisy = add_noise(data.data, sigma, seed)
        return SnapshotMatrix(noisy, dt=data.dt, t0=data.t0)
    arr = np.asarray(data, dtype=float)
    if sigma == 0:
        return arr.copy()
    rng = np.random.default_rng(seed)
    return arr + sigma * rng.standard_normal(arr.shape)


@dataclass(frozen=True)
class BurstMode:
    shape: GaussianMode
    frequency: float
    windows: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class MultiscaleFieldSpec:
    """Layered surrogate field: a static background, a persistent global
    oscillation, and a localized mode active only in given sub-windows."""

    grid: tuple[int, int] = (40, 40)
    extent: tuple[float, float] = (-5.0, 5.0)
    span: float = 16.0
    dt: float = 1.0 / 32.0
    background: GaussianMode = field(
        default_factory=lambda: GaussianMode((0.0, 0.0), 30.0, 1.0)
    )
    oscillation: VideoMode = field(
        default_factory=lambda: VideoMode(
            GaussianMode((-1.5, 1.0), 3.0, 1.0), 1.0, (0.0, 16.0)
        )
    )
    burst: BurstMode = field(
        default_factory=lambda: BurstMode(
            GaussianMode((2.0, -1.5), 2.0, 0.6),
            0.5,
            ((4.0, 6.0), (12.0, 14.0)),
        )
    )

    @property
    def n_states(self) -> int:
        return self.grid[0] * self.grid[1]

    @property
    def n_snapshots(self) -> int:
        return int(round(self.span / self.dt)) + 1

    def coordinates(self):
        nx, ny = self.grid
        lo, hi = self.extent
        x = np.linspace(lo, hi, nx)
        y = np.linspace(lo, hi, ny)
        xx, yy = np.meshgrid(x, y, indexing="xy")
        return xx.ravel(), yy.ravel()


@dataclass(frozen=True)
class MultiscaleField:
    """A rendered surrogate field plus its generating components.

    `parts` maps component name to (spatial pattern, time coefficients);
    the snapshots equal the sum of the outer products, so every component
    is retrievable for scoring."""

    snapshots: SnapshotMatrix
    parts: dict[str, tuple[np.ndarray, np.ndarray]]


def _bump(spec, shape: GaussianMode) -> np.ndarray:
    xx, yy = spec.coordinates()
    cx, cy = shape.center
    d2 = (xx - cx) ** 2 + (yy - cy) ** 2
    return shape.weight * np.exp(-d2 / shape.width)


def generate_multiscale_field(spec: MultiscaleFieldSpec) -> MultiscaleField:
    """Render the layered surrogate deterministically."""
    times = np.arange(spec.n_snapshots) * spec.dt

    bg_space = _bump(spec, spec.background)
    bg_time = np.ones_like(times)

    osc_space = _bump(spec, spec.oscillation.shape)
    a, b = spec.oscillation.window
    osc_time = np.where(
        (times >= a - 1e-12) & (times <= b + 1e-12),
        np.cos(TWO_PI * spec.oscillation.frequency * times),
        0.0,
    )

    burst_space = _bump(spec, spec.burst.shape)
    burst_time = np.zeros_like(times)
    for a, b in spec.burst.windows:
        active = (times >= a - 1e-12) & (times <= b + 1e-12)
        burst_time[active] = np.cos(TWO_PI * spec.burst.frequency * times[active])

    parts = {
        "background": (bg_space, bg_time),
        "oscillation": (osc_space, osc_time),
        "burst": (burst_space, burst_time),
    }
    data = sum(space[:, None] * coef[None, :] for space, coef in parts.values())
    return MultiscaleField(
        snapshots=SnapshotMatrix(data, dt=spec.dt, t0=0.0), parts=parts
    )
