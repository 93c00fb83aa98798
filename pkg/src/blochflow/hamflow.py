"""Hamiltonian mechanics on the qubit chart: energy surfaces, brackets, flows.

(p, phi) are canonically conjugate, so the expected energy E(p, phi) generates
dp/dt = dE/dphi, dphi/dt = -dE/dp (hbar = 1). The chart is singular at the two
poles; every numerical-derivative routine keeps a margin away from them, and
the integrator truncates trajectories that try to cross.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericGateError, ValidationError
from .gqs import TWO_PI, BlochPoint, GeometricQuantumState

FD_STEP = 1e-6
POLE_MARGIN = 1e-5
AREA_DRIFT_TOL = 0.01
ENERGY_HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class EnergyFunction:
    """Expected-energy surface of a fixed 2x2 Hermitian generator."""

    h: np.ndarray

    def __post_init__(self) -> None:
        h = np.asarray(self.h, dtype=np.complex128)
        if h.shape != (2, 2):
            raise ValidationError(f"generator must be 2x2, got shape {h.shape}")
        if np.max(np.abs(h - h.conjugate().T)) > ENERGY_HERMITICITY_TOL:
            raise ValidationError("generator is not Hermitian")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def is_diagonal(self) -> bool:
        return self.h[0, 1] == 0.0

    @property
    def omega(self) -> float:
        """Advection frequency. Diagonal generators keep their label order;
        otherwise the sorted eigenvalue gap (labels are then conventional)."""
        if self.is_diagonal:
            return float((self.h[1, 1] - self.h[0, 0]).real)
        evals = np.linalg.eigvalsh(self.h)
        return float(evals[1] - evals[0])


def _energy_values(h: np.ndarray, p, phi):
    cross = np.exp(1j * np.asarray(phi)) * h[0, 1]
    return ((1.0 - p) * h[0, 0].real + p * h[1, 1].real
            + 2.0 * np.sqrt(p * (1.0 - p)) * cross.real)


def energy(ef: EnergyFunction, z: BlochPoint) -> float:
    return float(_energy_values(ef.h, z.p, z.phi))


def _check_margin(p: float, what: str) -> None:
    if p < POLE_MARGIN or 1.0 - p < POLE_MARGIN:
        raise DomainError(f"{what} needs p at least {POLE_MARGIN} from the poles, got p={p}")


def poisson_bracket(f, g, z: BlochPoint) -> float:
    """Canonical bracket df/dp dg/dphi - dg/dp df/dphi by central differences.

    f and g are callables (p, phi) -> real, smooth near z.
    """
    _check_margin(z.p, "poisson_bracket")
    s = FD_STEP
    df_dp = (f(z.p + s, z.phi) - f(z.p - s, z.phi)) / (2.0 * s)
    dg_dp = (g(z.p + s, z.phi) - g(z.p - s, z.phi)) / (2.0 * s)
    df_dphi = (f(z.p, z.phi + s) - f(z.p, z.phi - s)) / (2.0 * s)
    dg_dphi = (g(z.p, z.phi + s) - g(z.p, z.phi - s)) / (2.0 * s)
    return float(df_dp * dg_dphi - dg_dp * df_dphi)


class _PoleCrossing(Exception):
    pass


def _field_values(h: np.ndarray, p, phi):
    """Analytic (dp/dt, dphi/dt). Callers keep p inside the margin when h01 != 0."""
    gap = (h[1, 1] - h[0, 0]).real
    if h[0, 1] == 0.0:
        zero = np.zeros_like(np.asarray(p, dtype=float))
        return zero, zero - gap
    root = np.sqrt(p * (1.0 - p))
    cross = np.exp(1j * np.asarray(phi)) * h[0, 1]
    dp = -2.0 * root * cross.imag
    dphi = -gap - (1.0 - 2.0 * p) / root * cross.real
    return dp, dphi


def hamiltonian_field(ef: EnergyFunction, z: BlochPoint) -> tuple[float, float]:
    if not ef.is_diagonal:
        if z.p < POLE_MARGIN or 1.0 - z.p < POLE_MARGIN:
            raise DomainError("chart field is singular at the poles for off-diagonal generators")
    dp, dphi = _field_values(ef.h, z.p, z.phi)
    return float(dp), float(dphi)


def divergence_vH(ef: EnergyFunction, z: BlochPoint) -> float:
    """d(dp/dt)/dp + d(dphi/dt)/dphi by central differences of the analytic field."""
    _check_margin(z.p, "divergence_vH")
    s = FD_STEP
    dp_hi, _ = _field_values(ef.h, z.p + s, z.phi)
    dp_lo, _ = _field_values(ef.h, z.p - s, z.phi)
    _, dphi_hi = _field_values(ef.h, z.p, z.phi + s)
    _, dphi_lo = _field_values(ef.h, z.p, z.phi - s)
    return float((dp_hi - dp_lo + dphi_hi - dphi_lo) / (2.0 * s))


def _guarded_field(h: np.ndarray, p: np.ndarray, phi: np.ndarray, interacting: bool):
    if interacting and (np.min(p) < POLE_MARGIN or np.max(p) > 1.0 - POLE_MARGIN):
        raise _PoleCrossing
    return _field_values(h, p, phi)


def _rk4_many(h: np.ndarray, p0: np.ndarray, phi0: np.ndarray, dt: float,
              steps: int) -> tuple[np.ndarray, np.ndarray, bool]:
    """Classical fixed-step RK4 over a batch of chart points; phi accumulates unwrapped.

    Returns (p, phi) arrays of shape (completed+1, n) and a truncation flag set
    when any point reached the pole margin of an off-diagonal generator.
    """
    interacting = h[0, 1] != 0.0
    n = p0.shape[0]
    ps = np.empty((steps + 1, n))
    phis = np.empty((steps + 1, n))
    ps[0], phis[0] = p0, phi0
    p = np.array(p0, dtype=float)
    phi = np.array(phi0, dtype=float)
    half = 0.5 * dt
    for step in range(steps):
        try:
            k1p, k1f = _guarded_field(h, p, phi, interacting)
            k2p, k2f = _guarded_field(h, p + half * k1p, phi + half * k1f, interacting)
            k3p, k3f = _guarded_field(h, p + half * k2p, phi + half * k2f, interacting)
            k4p, k4f = _guarded_field(h, p + dt * k3p, phi + dt * k3f, interacting)
        except _PoleCrossing:
            return ps[:step + 1], phis[:step + 1], True
        p = p + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        phi = phi + (dt / 6.0) * (k1f + 2.0 * k2f + 2.0 * k3f + k4f)
        if interacting and (np.min(p) < POLE_MARGIN or np.max(p) > 1.0 - POLE_MARGIN):
            return ps[:step + 1], phis[:step + 1], True
        ps[step + 1] = p
        phis[step + 1] = phi
    return ps, phis, False


@dataclass(frozen=True)
class Trajectory:
    """Flow line samples; phi is stored unwrapped and reduced mod 2pi on output."""

    ps: np.ndarray
    phis_unwrapped: np.ndarray
    dt: float
    truncated: bool = False

    @property
    def n_samples(self) -> int:
        return self.ps.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt

    @property
    def phis_wrapped(self) -> np.ndarray:
        return self.phis_unwrapped % TWO_PI

    @property
    def points(self) -> list[BlochPoint]:
        wrapped = self.phis_wrapped
        return [BlochPoint(float(np.clip(self.ps[n], 0.0, 1.0)), float(wrapped[n]))
                for n in range(self.n_samples)]


def integrate_flow(ef: EnergyFunction, z0: BlochPoint, dt: float, steps: int) -> Trajectory:
    if not (np.isfinite(dt) and dt > 0):
        raise ValidationError(f"dt must be positive, got {dt!r}")
    if steps < 0:
        raise ValidationError("steps must be nonnegative")
    ps, phis, truncated = _rk4_many(ef.h, np.array([z0.p]), np.array([z0.phi]), dt, steps)
    return Trajectory(ps=ps[:, 0], phis_unwrapped=phis[:, 0], dt=dt, truncated=truncated)


def _embed_rows(p: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return np.column_stack([np.sqrt(1.0 - p).astype(np.complex128),
                            np.sqrt(p) * np.exp(1j * phi)])


def check_rigidity(ef: EnergyFunction, points, dt: float, steps: int) -> float:
    """Max drift over pairs and times of the pairwise projective distances."""
    if len(points) < 2:
        raise ValidationError("rigidity needs at least 2 points")
    p0 = np.array([z.p for z in points])
    phi0 = np.array([z.phi for z in points])
    ps, phis, truncated = _rk4_many(ef.h, p0, phi0, dt, steps)
    if truncated:
        raise NumericGateError("a trajectory reached the pole margin; rigidity not certified")
    kets = np.stack([_embed_rows(np.clip(ps[t], 0.0, 1.0), phis[t]) for t in range(ps.shape[0])])
    overlap = np.abs(np.einsum("tai,tbi->tab", kets.conjugate(), kets))
    rows, cols = np.triu_indices(len(points), k=1)
    dist = np.arccos(np.clip(overlap[:, rows, cols], 0.0, 1.0))
    return float(np.max(np.abs(dist - dist[0])))


@dataclass(frozen=True)
class LiouvilleReport:
    max_weight_drift: float
    max_area_drift: float
    tracer_eps: float
    passed: bool


def liouville_check(ef: EnergyFunction, gqs0: GeometricQuantumState, dt: float,
                    steps: int, tracer_eps: float = 1e-4) -> LiouvilleReport:
    """Incompressibility check: advection never touches weights, and the chart
    area of a small tracer triangle riding with each particle stays constant.
    """
    live = gqs0.coordinate_defined
    p0 = gqs0.points[live, 0]
    phi0 = gqs0.points[live, 1]
    m = p0.shape[0]
    if m == 0:
        raise ValidationError("no coordinate-defined particles to check")
    # offset tracers toward the interior so pole particles stay chartable
    dp = np.where(p0 <= 0.5, tracer_eps, -tracer_eps)
    p_all = np.concatenate([p0, p0 + dp, p0])
    phi_all = np.concatenate([phi0, phi0, phi0 + tracer_eps])
    ps, phis, truncated = _rk4_many(ef.h, p_all, phi_all, dt, steps)
    if truncated:
        raise NumericGateError("a tracer reached the pole margin; volume check not certified")
    a = np.abs((ps[:, m:2 * m] - ps[:, :m]) * (phis[:, 2 * m:] - phis[:, :m])
               - (ps[:, 2 * m:] - ps[:, :m]) * (phis[:, m:2 * m] - phis[:, :m])) * 0.5
    drift = float(np.max(np.abs(a / a[0] - 1.0)))
    return LiouvilleReport(max_weight_drift=0.0, max_area_drift=drift,
                           tracer_eps=tracer_eps, passed=drift < AREA_DRIFT_TOL)


def advect_gqs(ef: EnergyFunction, gqs0: GeometricQuantumState, dt: float,
               steps: int) -> list[GeometricQuantumState]:
    """Transport the swarm along the flow: points move, weights stay put.

    Coordinate-undefined particles stay parked at the chart origin.
    """
    live = gqs0.coordinate_defined
    ps, phis, truncated = _rk4_many(ef.h, gqs0.points[live, 0], gqs0.points[live, 1], dt, steps)
    if truncated:
        raise NumericGateError("a particle reached the pole margin during advection")
    snapshots = []
    for n in range(steps + 1):
        points = np.array(gqs0.points)
        points[live, 0] = np.clip(ps[n], 0.0, 1.0)
        points[live, 1] = phis[n] % TWO_PI
        chis = np.array(gqs0.chis)
        chis[live] = _embed_rows(points[live, 0], points[live, 1])
        snapshots.append(GeometricQuantumState(
            weights=gqs0.weights, chis=chis, points=points,
            coordinate_defined=gqs0.coordinate_defined, time=gqs0.time + n * dt))
    return snapshots
