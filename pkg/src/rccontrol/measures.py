"""Attractor measures: largest Lyapunov exponent, correlation dimension,
bounding-cuboid volume.

All estimators work on the full state-space trajectory directly (no delay
embedding: the full state is available here) and are pure functions of their
inputs.  Exponents are reported per unit model time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backends
from .dynamics import Trajectory
from .errors import (
    ContractViolationError,
    DegenerateInputError,
    DegenerateScalingError,
    InsufficientDataError,
    RCControlError,
)


@dataclass(frozen=True)
class LyapunovConfig:
    """Neighbor-divergence settings.

    ``theiler_window`` of None derives the minimum temporal neighbor
    separation from the mean orbital period (mean spacing of maxima of the
    first coordinate).  The exponent is the line slope fitted to the mean
    log-divergence curve on steps [fit_lo, fit_hi].
    """

    theiler_window: int | None = None
    follow_steps: int = 150
    fit_lo: int = 5
    fit_hi: int = 60
    max_points: int = 2000

    def __post_init__(self):
        if not 0 <= self.fit_lo < self.fit_hi <= self.follow_steps:
            raise ContractViolationError(
                "need 0 <= fit_lo < fit_hi <= follow_steps")
        if self.max_points < 1:
            raise ContractViolationError("max_points must be >= 1")
        if self.theiler_window is not None and self.theiler_window < 0:
            raise ContractViolationError("theiler_window must be >= 0")


@dataclass(frozen=True)
class CorrDimConfig:
    """Pair-counting settings; the radius grid spans the configured quantiles
    of the sampled pairwise-distance distribution."""

    n_radii: int = 24
    radius_lo_q: float = 0.05
    radius_hi_q: float = 0.50
    max_points: int = 4000

    def __post_init__(self):
        if self.n_radii < 2:
            raise ContractViolationError("n_radii must be >= 2")
        if not 0.0 < self.radius_lo_q < self.radius_hi_q < 1.0:
            raise ContractViolationError(
                "need 0 < radius_lo_q < radius_hi_q < 1")
        if self.max_points < 2:
            raise ContractViolationError("max_points must be >= 2")


@dataclass(frozen=True)
class MeasureResult:
    """Attractor characterization triple."""

    lambda_max: float
    corr_dim: float
    volume: float


def _as_points(data) -> np.ndarray:
    if isinstance(data, Trajectory):
        pts = data.samples
    else:
        pts = np.asarray(data, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ContractViolationError("points must form a (n, dim) array")
    return np.ascontiguousarray(pts)


def _mean_period_steps(x: np.ndarray) -> int:
    """Mean spacing between local maxima, in steps; 1 when none exist."""
    if x.shape[0] < 3:
        return 1
    interior = (x[1:-1] > x[:-2]) & (x[1:-1] >= x[2:])
    idx = np.flatnonzero(interior) + 1
    if idx.shape[0] < 2:
        return 1
    period = (idx[-1] - idx[0]) / (idx.shape[0] - 1)
    return max(1, int(round(period)))


def largest_lyapunov(traj: Trajectory, cfg: LyapunovConfig | None = None) -> float:
    """Largest Lyapunov exponent via mean nearest-neighbor divergence.

    For up to ``max_points`` reference points, the nearest neighbor outside
    the Theiler window is tracked for ``follow_steps``; the slope of the mean
    log-distance curve over the fit window, divided by the sampling step,
    estimates the exponent per unit time.
    """
    cfg = cfg or LyapunovConfig()
    pts = _as_points(traj)
    n = pts.shape[0]
    if np.all(pts == pts[0]):
        raise DegenerateInputError("all trajectory points are identical")
    theiler = cfg.theiler_window
    if theiler is None:
        theiler = _mean_period_steps(pts[:, 0])
    limit = n - cfg.follow_steps
    if limit < 2 or limit <= theiler + 1:
        raise InsufficientDataError(
            "trajectory too short for the requested follow/theiler settings")
    n_ref = min(cfg.max_points, limit)
    ref_idx = np.unique(np.linspace(0, limit - 1, n_ref).astype(np.int64))
    sum_log, counts, skipped = _backends.rosenstein_curve(
        pts, ref_idx, theiler, cfg.follow_steps)
    if skipped == ref_idx.shape[0]:
        raise InsufficientDataError("no admissible neighbor pairs found")
    ks = np.arange(cfg.fit_lo, cfg.fit_hi + 1)
    good = counts[ks] > 0
    if good.sum() < 2:
        raise InsufficientDataError("divergence curve undefined on the fit window")
    ks = ks[good]
    curve = sum_log[ks] / counts[ks]
    slope = np.polyfit(ks, curve, 1)[0]
    return float(slope / traj.dt)


def correlation_integral(points, r: float) -> float:
    """Fraction of ordered pairs (i != j) closer than ``r``.

    Exact for any size: every pair enters the count (no subsampling), so
    results match a brute-force double loop bit-for-bit.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if n < 2:
        raise ContractViolationError("correlation integral needs >= 2 points")
    if r < 0:
        raise ContractViolationError("radius must be >= 0")
    if r == 0.0:
        return 0.0
    counts = _backends.corr_counts(pts, np.array([float(r)]))
    return float(2 * int(counts[0])) / (n * (n - 1))


def correlation_dimension(traj, cfg: CorrDimConfig | None = None) -> float:
    """Power-law exponent of the correlation integral over a radius grid.

    Points are thinned to ``max_points`` (uniform stride), the radius grid is
    log-spaced between the configured pairwise-distance quantiles, and the
    slope of log C(r) against log r is fitted over radii where
    0 < C(r) < 1.
    """
    cfg = cfg or CorrDimConfig()
    pts = _as_points(traj)
    n = pts.shape[0]
    if n < 8:
        raise InsufficientDataError("too few points for a distance distribution")
    if n > cfg.max_points:
        idx = np.unique(np.linspace(0, n - 1, cfg.max_points).astype(np.int64))
        pts = np.ascontiguousarray(pts[idx])
        n = pts.shape[0]
    # quantile calibration on a thinned subset; counting uses all kept points
    q_idx = np.unique(np.linspace(0, n - 1, min(n, 1024)).astype(np.int64))
    qp = pts[q_idx]
    diffs = qp[:, None, :] - qp[None, :, :]
    dist = np.sqrt((diffs * diffs).sum(axis=2))[np.triu_indices(qp.shape[0], k=1)]
    lo = float(np.quantile(dist, cfg.radius_lo_q))
    hi = float(np.quantile(dist, cfg.radius_hi_q))
    if hi <= 0.0:
        raise DegenerateScalingError("all sampled pairwise distances are zero")
    if lo <= 0.0:
        positive = dist[dist > 0]
        lo = float(positive.min())
    if lo >= hi:
        raise DegenerateScalingError("radius quantiles collapse to a point")
    radii = np.geomspace(lo, hi, cfg.n_radii)
    counts = _backends.corr_counts(pts, radii)
    c_vals = 2.0 * counts.astype(np.float64) / (n * (n - 1))
    usable = (counts > 0) & (c_vals < 1.0)
    if usable.sum() < 2:
        raise DegenerateScalingError(
            "fewer than two radii with usable correlation values")
    slope = np.polyfit(np.log(radii[usable]), np.log(c_vals[usable]), 1)[0]
    return float(slope)


def bounding_volume(traj) -> float:
    """Volume of the axis-aligned cuboid covering the samples."""
    pts = _as_points(traj)
    if pts.shape[0] < 1:
        raise ContractViolationError("bounding volume needs at least one point")
    extents = pts.max(axis=0) - pts.min(axis=0)
    return float(np.prod(extents))


def measure_attractor(traj: Trajectory, lcfg: LyapunovConfig | None = None,
                      ccfg: CorrDimConfig | None = None) -> MeasureResult:
    """Bundle the three measures; failures carry the measure name."""
    def labeled(label, fn, *args):
        try:
            return fn(*args)
        except RCControlError as err:
            err.args = (f"[{label}] {err.args[0] if err.args else ''}",) + err.args[1:]
            raise

    return MeasureResult(
        lambda_max=labeled("largest_lyapunov", largest_lyapunov, traj, lcfg),
        corr_dim=labeled("correlation_dimension", correlation_dimension, traj, ccfg),
        volume=labeled("bounding_volume", bounding_volume, traj),
    )
