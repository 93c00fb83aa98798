"""Independent reference routines the tests compare the library against.

Everything here deliberately takes a different route than the library code:
site-ordered Kronecker products instead of bit-position embeddings, Taylor
series with scaling and squaring instead of spectral decomposition, reshape
traces instead of weighted outer products, rotation formulas instead of chart
integration. If a test passes, two unrelated constructions agreed.
"""

from __future__ import annotations

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
ID2 = np.eye(2, dtype=np.complex128)


def kron_sites(ops_by_site: dict[int, np.ndarray], n_sites: int, system_site: int) -> np.ndarray:
    """Tensor a per-site operator dictionary into the joint basis.

    Joint index convention: system qubit is the most significant bit,
    environment sites take bits 0,1,... in increasing chain order. np.kron
    puts its first factor at the top, so the factor order is the system
    followed by the environment sites in decreasing chain order.
    """
    env = [s for s in range(n_sites) if s != system_site]
    order = [system_site] + list(reversed(env))
    out = np.array([[1.0 + 0j]])
    for s in order:
        out = np.kron(out, ops_by_site.get(s, ID2))
    return out


def ring_bonds(n_sites: int, reach: int) -> list[tuple[int, int]]:
    """Bond list (k, k+reach mod L); degenerate self-pairs are dropped."""
    pairs = []
    for k in range(n_sites):
        other = (k + reach) % n_sites
        if other != k:
            pairs.append((k, other))
    return pairs


def chain_hamiltonian(n_env: int, j_z: float, field: tuple[float, float, float],
                      coupling_range: str = "nearest", system_site: int = 0) -> np.ndarray:
    """Ring-of-qubits Hamiltonian assembled site by site via kron_sites."""
    n_sites = n_env + 1
    dim = 2 ** n_sites
    h = np.zeros((dim, dim), dtype=np.complex128)
    reaches = [1] if coupling_range == "nearest" else [1, 2]
    for reach in reaches:
        for a, b in ring_bonds(n_sites, reach):
            h += j_z * kron_sites({a: SZ, b: SZ}, n_sites, system_site)
    bx, by, bz = field
    for s in range(n_sites):
        h += kron_sites({s: bx * SX + by * SY + bz * SZ}, n_sites, system_site)
    return h


def taylor_unitary(h: np.ndarray, t: float, order: int = 16, max_arg: float = 0.05) -> np.ndarray:
    """exp(-i h t) by Taylor summation with scaling and squaring.

    The argument is halved until ||h|| * t is below max_arg, where the
    truncated series is accurate to well under 1e-15.
    """
    norm = np.linalg.norm(h, ord=np.inf)
    squarings = 0
    scaled_t = t
    while abs(norm * scaled_t) > max_arg:
        scaled_t /= 2.0
        squarings += 1
    dim = h.shape[0]
    u = np.eye(dim, dtype=np.complex128)
    term = np.eye(dim, dtype=np.complex128)
    for k in range(1, order + 1):
        term = term @ (-1j * scaled_t * h) / k
        u = u + term
    for _ in range(squarings):
        u = u @ u
    return u


def reshape_partial_trace(amplitudes: np.ndarray) -> np.ndarray:
    """System reduced density matrix by reshaping the joint projector and tracing."""
    vec = amplitudes.reshape(-1)
    rho = np.outer(vec, vec.conjugate())
    d_e = amplitudes.shape[1]
    return np.trace(rho.reshape(2, d_e, 2, d_e), axis1=1, axis2=3)


def bloch_vector(p: float, phi: float) -> np.ndarray:
    r = 2.0 * np.sqrt(p * (1.0 - p))
    return np.array([r * np.cos(phi), r * np.sin(phi), 1.0 - 2.0 * p])


def bloch_coords(n: np.ndarray) -> tuple[float, float]:
    p = 0.5 * (1.0 - n[2])
    phi = float(np.arctan2(n[1], n[0]) % (2.0 * np.pi))
    return float(p), phi


def rotate_bloch(n0: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """Rodrigues rotation of a Bloch vector about axis b by angle |b| t.

    Reference solution of dn/dt = b x n, the Bloch form of the Schroedinger
    equation for the generator (bx sx + by sy + bz sz) / 2.
    """
    theta = np.linalg.norm(b) * t
    if theta == 0.0:
        return n0.copy()
    k = b / np.linalg.norm(b)
    return (n0 * np.cos(theta) + np.cross(k, n0) * np.sin(theta)
            + k * np.dot(k, n0) * (1.0 - np.cos(theta)))


def central_difference(f, x: float, step: float = 1e-6) -> float:
    return (f(x + step) - f(x - step)) / (2.0 * step)


def overlap_sq_from_chart(pa: float, phia: float, pb: float, phib: float) -> float:
    """|<a|b>|^2 expanded in chart coordinates (algebraic cross-check)."""
    cross = 2.0 * np.sqrt(pa * (1.0 - pa)) * np.sqrt(pb * (1.0 - pb)) * np.cos(phia - phib)
    return 1.0 - (pa + pb) + 2.0 * pa * pb + cross


def forward_diffusion(mu0: np.ndarray, gamma_p: float, gamma_phi: float,
                      dt: float, steps: int) -> np.ndarray:
    """Explicit nearest-neighbour exchange on the cell grid.

    phi wraps around, the p edges are closed by substituting the cell's own
    mass for the missing neighbour, and the loss rate 2(gamma_p + gamma_phi)
    keeps total mass exactly conserved.
    """
    loss = 2.0 * (gamma_p + gamma_phi)
    out = np.empty((steps + 1,) + mu0.shape)
    out[0] = mu0
    mu = mu0.astype(float).copy()
    for n in range(steps):
        padded = np.pad(mu, ((1, 1), (0, 0)), mode="edge")
        gain_p = padded[:-2, :] + padded[2:, :]
        gain_phi = np.roll(mu, 1, axis=1) + np.roll(mu, -1, axis=1)
        mu = mu + dt * (gamma_p * gain_p + gamma_phi * gain_phi - loss * mu)
        out[n + 1] = mu
    return out


def analytic_weight_rate(v: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """Exact d x_alpha / dt from the coupling blocks: 2 Im <Phi_a| sum_b V_ab |Phi_b>."""
    coupled = np.einsum("abij,bj->ai", v, phis)
    return 2.0 * np.einsum("ai,ai->a", phis.conjugate(), coupled).imag


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conjugate().T)


def random_joint_state(rng: np.random.Generator, n_env: int) -> np.ndarray:
    amp = rng.normal(size=(2, 2 ** n_env)) + 1j * rng.normal(size=(2, 2 ** n_env))
    return amp / np.linalg.norm(amp)
