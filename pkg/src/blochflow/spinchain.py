"""Dense spin-ring Hamiltonians and exact unitary evolution of joint pure states.

One distinguished qubit (the open system) sits on a periodic chain of qubits
coupled by sigma^z sigma^z bonds in a uniform magnetic field, hbar = 1. Joint
amplitudes are kept as a 2 x d_E matrix whose columns are indexed by the
environment's computational basis: the system occupies the most significant
bit of the joint index and environment sites fill bits 0, 1, ... in chain
order (little-endian).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericGateError, ResourceLimitError, ValidationError

MAX_ENV_QUBITS = 14
HERMITICITY_TOL = 1e-10
STATE_NORM_TOL = 1e-10
UNITARITY_TOL = 1e-9
KET_NORM_TOL = 1e-8

_COUPLING_REACHES = {"nearest": (1,), "next_nearest": (1, 2)}


def pauli() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    sx = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    sy = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
    sz = np.array([[1, 0], [0, -1]], dtype=np.complex128)
    return sx, sy, sz


@dataclass(frozen=True)
class HamiltonianSpec:
    """Parameters of the ring: environment size, coupling, field, topology.

    n_env = 0 degenerates to a single field-only site (useful for closed-form
    checks); the normal operating range is 1..MAX_ENV_QUBITS.
    """

    n_env: int
    j_z: float = 1.0
    field: tuple[float, float, float] = (1.0, 0.0, 0.5)
    coupling_range: str = "nearest"
    boundary: str = "periodic"
    system_site: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.n_env, (int, np.integer)) or self.n_env < 0:
            raise ValidationError(f"n_env must be a nonnegative integer, got {self.n_env!r}")
        if self.n_env > MAX_ENV_QUBITS:
            raise ResourceLimitError(
                f"n_env={self.n_env} exceeds the dense-matrix limit of {MAX_ENV_QUBITS}")
        if len(self.field) != 3 or not all(np.isfinite(c) for c in self.field):
            raise ValidationError(f"field must be 3 finite reals, got {self.field!r}")
        if not np.isfinite(self.j_z):
            raise ValidationError("j_z must be finite")
        if self.coupling_range not in _COUPLING_REACHES:
            raise ValidationError(f"unknown coupling_range {self.coupling_range!r}")
        if self.boundary != "periodic":
            raise ValidationError(f"unsupported boundary {self.boundary!r}")
        if not 0 <= self.system_site < self.n_sites:
            raise ValidationError(
                f"system_site {self.system_site} outside chain of {self.n_sites} sites")

    @property
    def n_sites(self) -> int:
        return self.n_env + 1

    @property
    def dim_env(self) -> int:
        return 2 ** self.n_env

    @property
    def dim_total(self) -> int:
        return 2 ** self.n_sites


def bond_pairs(spec: HamiltonianSpec) -> list[tuple[int, int]]:
    """Ring bonds (k, k+reach mod L) per coupling reach; self-pairs from small rings drop out."""
    pairs = []
    for reach in _COUPLING_REACHES[spec.coupling_range]:
        for k in range(spec.n_sites):
            other = (k + reach) % spec.n_sites
            if other != k:
                pairs.append((k, other))
    return pairs


def site_bit_positions(spec: HamiltonianSpec) -> list[int]:
    """Joint-index bit owned by each chain site: system gets the top bit, env sites bits 0..n_env-1."""
    bits = [0] * spec.n_sites
    bits[spec.system_site] = spec.n_env
    next_bit = 0
    for site in range(spec.n_sites):
        if site != spec.system_site:
            bits[site] = next_bit
            next_bit += 1
    return bits


def embed_at_bit(op: np.ndarray, bit: int, n_bits: int) -> np.ndarray:
    """Place a single-qubit operator on one bit of an n_bits register."""
    upper = np.eye(2 ** (n_bits - 1 - bit), dtype=np.complex128)
    lower = np.eye(2 ** bit, dtype=np.complex128)
    return np.kron(np.kron(upper, op), lower)


def build_hamiltonian(spec: HamiltonianSpec) -> np.ndarray:
    sx, sy, sz = pauli()
    n = spec.n_sites
    bits = site_bit_positions(spec)
    h = np.zeros((spec.dim_total, spec.dim_total), dtype=np.complex128)
    for a, b in bond_pairs(spec):
        h += spec.j_z * (embed_at_bit(sz, bits[a], n) @ embed_at_bit(sz, bits[b], n))
    bx, by, bz = spec.field
    local_field = bx * sx + by * sy + bz * sz
    for site in range(n):
        h += embed_at_bit(local_field, bits[site], n)
    # symmetrize so Hermiticity holds bit-exactly despite summation rounding
    return 0.5 * (h + h.conjugate().T)


@dataclass(frozen=True)
class JointState:
    """Pure state of system plus environment as the amplitude matrix psi[j, alpha]."""

    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        if amp.ndim != 2 or amp.shape[0] != 2:
            raise ValidationError(f"amplitudes must have shape (2, d_E), got {amp.shape}")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > STATE_NORM_TOL:
            raise ValidationError(f"state norm {norm!r} deviates from 1 beyond {STATE_NORM_TOL}")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def d_s(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def d_e(self) -> int:
        return self.amplitudes.shape[1]


def product_state(system_ket, env_kets) -> JointState:
    """Tensor a system ket with per-site environment kets (env ket i owns column bit i)."""
    sys_ket = _checked_ket(system_ket, "system ket")
    env = np.array([1.0], dtype=np.complex128)
    for i, raw in enumerate(env_kets):
        ket = _checked_ket(raw, f"environment ket {i}")
        env = np.kron(ket, env)
    return JointState(np.outer(sys_ket, env))


def _checked_ket(raw, label: str) -> np.ndarray:
    ket = np.asarray(raw, dtype=np.complex128)
    if ket.shape != (2,):
        raise ValidationError(f"{label} must be a complex 2-vector, got shape {ket.shape}")
    norm = np.linalg.norm(ket)
    if abs(norm - 1.0) > KET_NORM_TOL:
        raise ValidationError(f"{label} is not normalized (norm {norm})")
    return ket


@dataclass(frozen=True)
class Propagator:
    """One fixed time step of the total unitary, with the spectral data that built it."""

    u: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    dt: float


def make_propagator(h: np.ndarray, dt: float) -> Propagator:
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError(f"Hamiltonian must be square, got shape {h.shape}")
    if np.max(np.abs(h - h.conjugate().T)) > HERMITICITY_TOL:
        raise ValidationError("Hamiltonian is not Hermitian within tolerance")
    if not (np.isfinite(dt) and dt > 0):
        raise ValidationError(f"dt must be positive, got {dt!r}")
    evals, evecs = np.linalg.eigh(h)
    u = (evecs * np.exp(-1j * evals * dt)) @ evecs.conjugate().T
    _spot_check_unitarity(u)
    return Propagator(u=u, eigenvalues=evals, eigenvectors=evecs, dt=dt)


def _spot_check_unitarity(u: np.ndarray) -> None:
    norms = np.linalg.norm(u, axis=0)
    if np.max(np.abs(norms - 1.0)) > UNITARITY_TOL:
        raise NumericGateError("propagator columns are not unit norm")
    dim = u.shape[0]
    rng = np.random.default_rng(0)
    pairs = rng.integers(0, dim, size=(min(32, dim * (dim - 1) // 2 + 1), 2))
    for i, j in pairs:
        if i != j and abs(np.vdot(u[:, i], u[:, j])) > UNITARITY_TOL:
            raise NumericGateError("propagator columns are not orthogonal")


def evolve(state: JointState, prop: Propagator, steps: int) -> list[JointState]:
    """Apply the step unitary repeatedly; returns steps+1 snapshots including t=0."""
    if steps < 0:
        raise ValidationError("steps must be nonnegative")
    if prop.u.shape[0] != state.amplitudes.size:
        raise ValidationError(
            f"propagator dim {prop.u.shape[0]} does not match state size {state.amplitudes.size}")
    shape = state.amplitudes.shape
    vec = state.amplitudes.reshape(-1)
    snapshots = [state]
    for n in range(1, steps + 1):
        vec = prop.u @ vec
        snapshots.append(JointState(vec.reshape(shape), time=state.time + n * prop.dt))
    return snapshots
