"""Coarse-grained information transport on the Bloch square.

Cells are half-open rectangles tiling [0,1] x [0,2pi). Per step, the weight
change of a particle is booked as sink/source at its arrival cell and its
motion as flux weighted by the departure weight; with that split, the discrete
continuity balance Delta mu = (sigma - F) dt is an arithmetic identity rather
than an approximation, so verifying it checks the bookkeeping, not the model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ValidationError
from .gqs import TWO_PI, GeometricQuantumState, pairwise_fs_distances

CONTINUITY_PASS_TOL = 1e-8
MIN_FIT_STEPS = 10
DEFAULT_LINKAGE_EPS = 0.05
DEFAULT_WEIGHT_CUT = 1e-6
PLATEAU_WINDOW = 50
PLATEAU_REL_TOL = 0.01


@dataclass(frozen=True)
class CellGrid:
    """Uniform n_p x n_phi tiling of the chart; indices half-open, phi wrapped."""

    n_p: int
    n_phi: int

    def __post_init__(self) -> None:
        if self.n_p < 1 or self.n_phi < 1:
            raise ValidationError(f"grid needs positive cell counts, got {self.n_p}x{self.n_phi}")

    @property
    def delta_p(self) -> float:
        return 1.0 / self.n_p

    @property
    def delta_phi(self) -> float:
        return TWO_PI / self.n_phi

    @property
    def n_cells(self) -> int:
        return self.n_p * self.n_phi

    def cell_indices(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Row/column cell index per point; p = 1 clamps into the top row."""
        pts = np.asarray(points, dtype=float)
        i = np.minimum((pts[:, 0] * self.n_p).astype(np.int64), self.n_p - 1)
        frac = (pts[:, 1] / TWO_PI) % 1.0
        k = np.minimum((frac * self.n_phi).astype(np.int64), self.n_phi - 1)
        return i, k

    def flat_indices(self, points: np.ndarray) -> np.ndarray:
        i, k = self.cell_indices(points)
        return i * self.n_phi + k


def coarse_grain(gqs: GeometricQuantumState, grid: CellGrid) -> np.ndarray:
    """Cell masses mu[i, k] = total weight of particles inside the cell.

    Coordinate-undefined particles sit parked at the chart origin and land in
    cell (0, 0); their weight is below the extraction floor by construction.
    """
    flat = grid.flat_indices(gqs.points)
    mu = np.bincount(flat, weights=gqs.weights, minlength=grid.n_cells)
    return mu.reshape(grid.n_p, grid.n_phi)


class StepFields(NamedTuple):
    flux: np.ndarray
    sigma: np.ndarray
    flux_vector: np.ndarray


def step_fields(gqs_t: GeometricQuantumState, gqs_next: GeometricQuantumState,
                grid: CellGrid, dt: float) -> StepFields:
    """One-step flux and sink/source fields from two aligned swarm snapshots.

    sigma[C] dt = sum of weight changes of particles arriving in C;
    flux[C] dt  = departure-weighted occupancy loss of C (net outflow positive).
    """
    if gqs_t.n_particles != gqs_next.n_particles:
        raise ValidationError("snapshots have different particle counts")
    if not (np.isfinite(dt) and dt > 0):
        raise ValidationError(f"dt must be positive, got {dt!r}")
    c_old = grid.flat_indices(gqs_t.points)
    c_new = grid.flat_indices(gqs_next.points)
    w_old = gqs_t.weights
    w_new = gqs_next.weights
    n = grid.n_cells

    arrived_new = np.bincount(c_new, weights=w_new, minlength=n)
    arrived_old = np.bincount(c_new, weights=w_old, minlength=n)
    departed_old = np.bincount(c_old, weights=w_old, minlength=n)
    sigma = (arrived_new - arrived_old) / dt
    flux = (departed_old - arrived_old) / dt

    dp = gqs_next.points[:, 0] - gqs_t.points[:, 0]
    dphi = gqs_next.points[:, 1] - gqs_t.points[:, 1]
    dphi = (dphi + np.pi) % TWO_PI - np.pi  # shortest signed representative
    jp = np.bincount(c_old, weights=w_old * dp, minlength=n) / dt
    jphi = np.bincount(c_old, weights=w_old * dphi, minlength=n) / dt

    shape = (grid.n_p, grid.n_phi)
    return StepFields(flux=flux.reshape(shape), sigma=sigma.reshape(shape),
                      flux_vector=np.stack([jp.reshape(shape), jphi.reshape(shape)], axis=-1))


@dataclass
class CoarseFields:
    """Stacked per-step fields: mu has T+1 snapshots, the rest T transitions."""

    grid: CellGrid
    dt: float
    mu: np.ndarray
    flux: np.ndarray
    sigma: np.ndarray
    flux_vector: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.flux.shape[0]


def accumulate_fields(snapshots: Sequence[GeometricQuantumState], grid: CellGrid,
                      dt: float) -> CoarseFields:
    if len(snapshots) < 2:
        raise ValidationError("need at least two snapshots to form transitions")
    counts = {s.n_particles for s in snapshots}
    if len(counts) != 1:
        raise ValidationError(f"snapshots disagree on particle count: {sorted(counts)}")
    steps = len(snapshots) - 1
    mu = np.empty((steps + 1, grid.n_p, grid.n_phi))
    flux = np.empty((steps, grid.n_p, grid.n_phi))
    sigma = np.empty((steps, grid.n_p, grid.n_phi))
    flux_vector = np.empty((steps, grid.n_p, grid.n_phi, 2))
    for t, snap in enumerate(snapshots):
        mu[t] = coarse_grain(snap, grid)
    for t in range(steps):
        out = step_fields(snapshots[t], snapshots[t + 1], grid, dt)
        flux[t], sigma[t], flux_vector[t] = out.flux, out.sigma, out.flux_vector
    return CoarseFields(grid=grid, dt=dt, mu=mu, flux=flux, sigma=sigma,
                        flux_vector=flux_vector)


@dataclass(frozen=True)
class ContinuityReport:
    max_residual: float
    max_mu_sum_error: float
    max_sigma_sum: float
    max_flux_sum: float
    passed: bool


def check_continuity(fields: CoarseFields) -> ContinuityReport:
    """Residual of Delta mu = (sigma - flux) dt per cell, plus global sums."""
    balance = (fields.sigma - fields.flux) * fields.dt
    residual = float(np.max(np.abs(np.diff(fields.mu, axis=0) - balance))) if fields.n_steps else 0.0
    mu_err = float(np.max(np.abs(fields.mu.sum(axis=(1, 2)) - 1.0)))
    sig_sum = float(np.max(np.abs(fields.sigma.sum(axis=(1, 2))))) if fields.n_steps else 0.0
    flux_sum = float(np.max(np.abs(fields.flux.sum(axis=(1, 2))))) if fields.n_steps else 0.0
    tol = CONTINUITY_PASS_TOL
    return ContinuityReport(
        max_residual=residual, max_mu_sum_error=mu_err, max_sigma_sum=sig_sum,
        max_flux_sum=flux_sum,
        passed=residual < tol and mu_err < tol and sig_sum < tol and flux_sum < tol)


@dataclass(frozen=True)
class DiffusionFit:
    gamma_p: float
    gamma_phi: float
    gamma_loss: float
    residual: float


def _neighbor_features(mu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Discrete Laplacian stencils: reflecting closure in p, wrap in phi."""
    padded = np.pad(mu, ((0, 0), (1, 1), (0, 0)), mode="edge")
    f_p = padded[:, :-2, :] + padded[:, 2:, :] - 2.0 * mu
    f_phi = np.roll(mu, 1, axis=2) + np.roll(mu, -1, axis=2) - 2.0 * mu
    return f_p, f_phi


def fit_diffusion(fields: CoarseFields, t_start: int = 100) -> DiffusionFit:
    """Least-squares rates for the nearest-neighbour exchange model of mu.

    The loss rate is tied to 2(gamma_p + gamma_phi), which is equivalent to
    fitting the two Laplacian stencils; negative rates clamp to zero with a
    warning since the model is dissipative by assumption.
    """
    usable = fields.mu.shape[0] - 1 - t_start
    if usable < MIN_FIT_STEPS:
        raise ValidationError(
            f"diffusion fit needs at least {MIN_FIT_STEPS} steps after t_start, got {usable}")
    mu = fields.mu[t_start:]
    rate = np.diff(mu, axis=0) / fields.dt
    f_p, f_phi = _neighbor_features(mu[:-1])
    design = np.column_stack([f_p.ravel(), f_phi.ravel()])
    target = rate.ravel()
    coef, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    gamma_p, gamma_phi = float(coef[0]), float(coef[1])
    if gamma_p < 0.0 or gamma_phi < 0.0:
        warnings.warn(
            f"diffusion rates ({gamma_p:.3g}, {gamma_phi:.3g}) clamped to be nonnegative",
            UserWarning, stacklevel=2)
        gamma_p = max(gamma_p, 0.0)
        gamma_phi = max(gamma_phi, 0.0)
    model = design @ np.array([gamma_p, gamma_phi])
    target_rms = float(np.sqrt(np.mean(target ** 2)))
    err_rms = float(np.sqrt(np.mean((target - model) ** 2)))
    residual = err_rms / target_rms if target_rms > 0.0 else 0.0
    return DiffusionFit(gamma_p=gamma_p, gamma_phi=gamma_phi,
                        gamma_loss=2.0 * (gamma_p + gamma_phi), residual=residual)


def time_average_mu(fields: CoarseFields, t_start: int = 100) -> np.ndarray:
    """Mean cell mass over the snapshots after the transient, mu[t_start+1:]."""
    if not 0 <= t_start < fields.mu.shape[0] - 1:
        raise ValidationError(
            f"t_start must leave at least one retained snapshot, got {t_start}")
    return fields.mu[t_start + 1:].mean(axis=0)


def shannon_entropy(mu: np.ndarray) -> float:
    """Entropy of the cell-mass distribution in nats; zero-mass cells drop out."""
    pos = mu[mu > 0.0]
    return float(-np.sum(pos * np.log(pos))) + 0.0  # +0.0 folds -0.0 into 0.0


def entropy_series(fields: CoarseFields) -> np.ndarray:
    return np.array([shannon_entropy(fields.mu[t]) for t in range(fields.mu.shape[0])])


def plateau_step(series: np.ndarray, window: int = PLATEAU_WINDOW,
                 rel_tol: float = PLATEAU_REL_TOL):
    """First index whose trailing window varies by less than rel_tol relatively.

    Returns None when the series never settles (or is shorter than the window).
    """
    series = np.asarray(series, dtype=float)
    for t in range(window, series.shape[0]):
        chunk = series[t - window:t + 1]
        span = float(np.max(chunk) - np.min(chunk))
        level = float(np.max(np.abs(chunk)))
        if span == 0.0 or span <= rel_tol * level:
            return t
    return None


def cluster_count(gqs: GeometricQuantumState, linkage_eps: float = DEFAULT_LINKAGE_EPS,
                  weight_cut: float = DEFAULT_WEIGHT_CUT) -> int:
    """Connected components of the proximity graph on the heavy particles.

    Edges join particles closer than linkage_eps in projective distance;
    single linkage, so touching chains merge.
    """
    keep = gqs.weights >= weight_cut
    m = int(np.count_nonzero(keep))
    if m == 0:
        return 0
    dist = pairwise_fs_distances(gqs.chis[keep])
    adjacent = dist < linkage_eps
    seen = np.zeros(m, dtype=bool)
    components = 0
    for start in range(m):
        if seen[start]:
            continue
        components += 1
        stack = [start]
        seen[start] = True
        while stack:
            node = stack.pop()
            neighbors = np.flatnonzero(adjacent[node] & ~seen)
            seen[neighbors] = True
            stack.extend(neighbors.tolist())
    return components
