"""Weighted particle swarms on the qubit's projective state space.

Conditioning a joint pure state on an environment basis vector leaves the
system in a pure state with a weight; the collection of these weighted points
is the system's geometric state. Coordinates are the probability-phase chart
(p, phi), ket = sqrt(1-p)|0> + sqrt(p) e^{i phi}|1>, so p = 1 is the |1> pole.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .spinchain import JointState

TWO_PI = 2.0 * np.pi
WEIGHT_FLOOR = 1e-14
POLE_P_TOL = 1e-12
CHI_NORM_TOL = 1e-8
WEIGHT_SUM_TOL = 1e-7  # loosest consumer: kinetic ensembles drift up to this


@dataclass(frozen=True)
class BlochPoint:
    """Chart point; phi reduced mod 2pi, gauge-fixed to 0 at the poles."""

    p: float
    phi: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.p) and 0.0 <= self.p <= 1.0):
            raise ValidationError(f"p must lie in [0, 1], got {self.p!r}")
        if not np.isfinite(self.phi):
            raise ValidationError(f"phi must be finite, got {self.phi!r}")
        phi = self.phi % TWO_PI
        if self.p < POLE_P_TOL or 1.0 - self.p < POLE_P_TOL:
            phi = 0.0
        object.__setattr__(self, "phi", float(phi))
        object.__setattr__(self, "p", float(self.p))


def embed(z: BlochPoint) -> np.ndarray:
    """Chart inverse: the unit ket with real nonnegative |0> amplitude."""
    return np.array([np.sqrt(1.0 - z.p), np.sqrt(z.p) * np.exp(1j * z.phi)],
                    dtype=np.complex128)


def to_bloch(chi) -> BlochPoint:
    chi = np.asarray(chi, dtype=np.complex128)
    if chi.shape != (2,):
        raise ValidationError(f"chi must be a complex 2-vector, got shape {chi.shape}")
    norm = np.linalg.norm(chi)
    if abs(norm - 1.0) > CHI_NORM_TOL:
        raise ValidationError(f"chi is not normalized (norm {norm})")
    p = min(max(abs(chi[1]) ** 2, 0.0), 1.0)
    if p < POLE_P_TOL or 1.0 - p < POLE_P_TOL:
        return BlochPoint(round(p), 0.0)
    phi = (np.angle(chi[1]) - np.angle(chi[0])) % TWO_PI
    return BlochPoint(p, phi)


def _chart_coords(chis: np.ndarray) -> np.ndarray:
    """Vectorized chart coordinates for unit rows; poles gauge-fixed to phi=0."""
    p = np.clip(np.abs(chis[:, 1]) ** 2, 0.0, 1.0)
    phi = (np.angle(chis[:, 1]) - np.angle(chis[:, 0])) % TWO_PI
    at_pole = (p < POLE_P_TOL) | (1.0 - p < POLE_P_TOL)
    phi[at_pole] = 0.0
    p[at_pole] = np.round(p[at_pole])
    return np.column_stack([p, phi])


@dataclass(frozen=True)
class GeometricQuantumState:
    """Finite weighted mixture of pure-state points.

    weights[a] is the probability mass on particle a, chis[a] its unit ket and
    points[a] = (p, phi) its chart coordinates. Particles whose weight is at or
    below WEIGHT_FLOOR keep their mass but carry no meaningful coordinates;
    they are parked at (0, 0) and flagged in coordinate_defined.
    """

    weights: np.ndarray
    chis: np.ndarray
    points: np.ndarray
    coordinate_defined: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        chis = np.asarray(self.chis, dtype=np.complex128)
        pts = np.asarray(self.points, dtype=float)
        defined = np.asarray(self.coordinate_defined, dtype=bool)
        n = w.shape[0]
        if w.ndim != 1 or chis.shape != (n, 2) or pts.shape != (n, 2) or defined.shape != (n,):
            raise ValidationError("inconsistent particle array shapes")
        if np.any(w < 0.0):
            raise ValidationError("negative particle weight")
        total = w.sum()
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValidationError(f"weights sum to {total!r}, not 1")
        live = defined & (w > WEIGHT_FLOOR)
        norms = np.linalg.norm(chis[live], axis=1)
        if norms.size and np.max(np.abs(norms - 1.0)) > CHI_NORM_TOL:
            raise ValidationError("particle ket not normalized")
        for name, arr in (("weights", w), ("chis", chis),
                          ("points", pts), ("coordinate_defined", defined)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_particles(self) -> int:
        return self.weights.shape[0]

    @property
    def n_coordinate_undefined(self) -> int:
        return int(np.count_nonzero(~self.coordinate_defined))

    def particles(self):
        """Iterate (weight, BlochPoint, chi) rows; undefined rows sit at the chart origin."""
        for a in range(self.n_particles):
            yield (float(self.weights[a]),
                   BlochPoint(self.points[a, 0], self.points[a, 1]),
                   self.chis[a])


def gqs_from_columns(columns: np.ndarray, time: float = 0.0) -> GeometricQuantumState:
    """Build the particle swarm from joint-amplitude columns (shape (2, d_E))."""
    weights = np.einsum("ja,ja->a", columns.conjugate(), columns).real
    n = weights.shape[0]
    chis = np.zeros((n, 2), dtype=np.complex128)
    positive = weights > 0.0
    chis[positive] = columns.T[positive] / np.sqrt(weights[positive])[:, None]
    chis[~positive, 0] = 1.0
    defined = weights > WEIGHT_FLOOR
    points = np.zeros((n, 2))
    points[defined] = _chart_coords(chis[defined])
    return GeometricQuantumState(weights=weights, chis=chis, points=points,
                                 coordinate_defined=defined, time=time)


def extract_gqs(state: JointState) -> GeometricQuantumState:
    """One particle per environment basis index: weight = column mass, ket = column direction."""
    return gqs_from_columns(state.amplitudes, time=state.time)


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.entries, dtype=np.complex128)
        if m.shape != (2, 2):
            raise ValidationError(f"density matrix must be 2x2, got {m.shape}")
        if np.max(np.abs(m - m.conjugate().T)) > 1e-12:
            raise ValidationError("density matrix not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-12:
            raise ValidationError("density matrix trace differs from 1")
        if np.min(np.linalg.eigvalsh(m)) < -1e-10:
            raise ValidationError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)


def density_matrix(gqs: GeometricQuantumState) -> DensityMatrix:
    rho = np.einsum("a,ai,aj->ij", gqs.weights, gqs.chis, gqs.chis.conjugate())
    return DensityMatrix(0.5 * (rho + rho.conjugate().T))


def expectation(gqs: GeometricQuantumState, observable) -> float:
    obs = np.asarray(observable, dtype=np.complex128)
    if obs.shape != (2, 2):
        raise ValidationError(f"observable must be 2x2, got shape {obs.shape}")
    if np.max(np.abs(obs - obs.conjugate().T)) > 1e-10:
        raise ValidationError("observable is not Hermitian")
    value = np.einsum("a,ai,ij,aj->", gqs.weights, gqs.chis.conjugate(), obs, gqs.chis)
    return float(value.real)


def fs_distance(a: BlochPoint, b: BlochPoint) -> float:
    """Projective distance arccos|<a|b>|, in [0, pi/2]."""
    overlap = abs(np.vdot(embed(a), embed(b)))
    return float(np.arccos(np.clip(overlap, 0.0, 1.0)))


def fs_distance_chart(a: BlochPoint, b: BlochPoint) -> float:
    """Same distance from the expanded coordinate formula; cross-check route."""
    cross = 2.0 * np.sqrt(a.p * (1.0 - a.p) * b.p * (1.0 - b.p)) * np.cos(a.phi - b.phi)
    overlap_sq = 1.0 - (a.p + b.p) + 2.0 * a.p * b.p + cross
    return float(np.arccos(np.sqrt(np.clip(overlap_sq, 0.0, 1.0))))


def pairwise_fs_distances(chis: np.ndarray) -> np.ndarray:
    """Distance matrix for unit rows; used by cluster analysis."""
    overlap = np.abs(chis.conjugate() @ chis.T)
    return np.arccos(np.clip(overlap, 0.0, 1.0))
