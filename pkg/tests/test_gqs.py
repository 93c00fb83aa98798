from __future__ import annotations

import numpy as np
import pytest

from blochflow.errors import ValidationError
from blochflow.gqs import (
    WEIGHT_FLOOR,
    BlochPoint,
    GeometricQuantumState,
    density_matrix,
    embed,
    expectation,
    extract_gqs,
    fs_distance,
    fs_distance_chart,
    to_bloch,
)
from blochflow.spinchain import JointState, product_state

import oracles


def test_to_bloch_basis_states():
    z = to_bloch(np.array([1.0, 0.0]))
    assert (z.p, z.phi) == (0.0, 0.0)
    z = to_bloch(np.array([1.0, 1j]) / np.sqrt(2))
    assert z.p == pytest.approx(0.5, abs=1e-15)
    assert z.phi == pytest.approx(np.pi / 2, abs=1e-15)


def test_to_bloch_inverts_embedding():
    rng = np.random.default_rng(21)
    for _ in range(100):
        p = rng.uniform(1e-6, 1.0 - 1e-6)
        phi = rng.uniform(0.0, 2.0 * np.pi)
        z = to_bloch(embed(BlochPoint(p, phi)))
        assert abs(z.p - p) < 1e-12
        assert abs(z.phi - phi) < 1e-12 or abs(z.phi - phi + 2 * np.pi) < 1e-12


def test_to_bloch_pole_gauge_and_validation():
    assert to_bloch(np.array([0.0, np.exp(0.7j)])).phi == 0.0
    assert to_bloch(np.array([0.0, np.exp(0.7j)])).p == 1.0
    with pytest.raises(ValidationError):
        to_bloch(np.zeros(2))
    with pytest.raises(ValidationError):
        to_bloch(np.array([1.0, 1.0]))


def test_bloch_point_normalizes_phi():
    z = BlochPoint(0.5, 2.0 * np.pi + 0.25)
    assert z.phi == pytest.approx(0.25, abs=1e-12)
    with pytest.raises(ValidationError):
        BlochPoint(1.2, 0.0)
    assert BlochPoint(1.0, 3.0).phi == 0.0


def test_extract_product_state_is_north_pole_delta():
    state = product_state([0, 1], [[1, 0], [0, 1]])
    g = extract_gqs(state)
    live = np.flatnonzero(g.weights > 1e-12)
    assert live.tolist() == [0b10]
    assert g.weights[live[0]] == pytest.approx(1.0, abs=1e-12)
    assert g.points[live[0], 0] == pytest.approx(1.0, abs=1e-14)


def test_extract_bell_state_two_particles():
    amp = np.zeros((2, 2), dtype=complex)
    amp[0, 0] = amp[1, 1] = 1 / np.sqrt(2)
    g = extract_gqs(JointState(amp))
    np.testing.assert_allclose(g.weights, [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(g.points[:, 0], [0.0, 1.0], atol=1e-15)


def test_extract_flags_negligible_columns():
    amp = np.zeros((2, 2), dtype=complex)
    amp[0, 0] = np.sqrt(1.0 - 1e-16)
    amp[1, 1] = 1e-8
    g = extract_gqs(JointState(amp))
    assert g.coordinate_defined[0]
    assert not g.coordinate_defined[1]
    assert g.weights[1] == pytest.approx(1e-16, rel=1e-6)
    assert g.weights[1] <= WEIGHT_FLOOR
    np.testing.assert_allclose(g.points[1], [0.0, 0.0], atol=0.0)
    assert g.n_coordinate_undefined == 1


def test_density_matrix_closed_forms():
    g = GeometricQuantumState(
        weights=np.array([1.0]),
        chis=np.array([[1.0, 0.0]], dtype=complex),
        points=np.array([[0.0, 0.0]]),
        coordinate_defined=np.array([True]),
    )
    np.testing.assert_allclose(density_matrix(g).entries, np.diag([1.0, 0.0]), atol=1e-15)

    g = GeometricQuantumState(
        weights=np.array([0.5, 0.5]),
        chis=np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex),
        points=np.array([[0.0, 0.0], [1.0, 0.0]]),
        coordinate_defined=np.array([True, True]),
    )
    np.testing.assert_allclose(density_matrix(g).entries, np.eye(2) / 2, atol=1e-15)


def test_density_matrix_equals_partial_trace():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n_env = int(rng.integers(1, 5))
        amp = oracles.random_joint_state(rng, n_env)
        rho = density_matrix(extract_gqs(JointState(amp))).entries
        want = oracles.reshape_partial_trace(amp)
        assert np.max(np.abs(rho - want)) < 1e-12


def test_density_matrix_exact_with_negligible_columns():
    amp = np.zeros((2, 4), dtype=complex)
    amp[0, 0] = np.sqrt(0.5)
    amp[1, 1] = np.sqrt(0.5 - 2e-16)
    amp[0, 2] = 1e-8   # below the weight floor once squared
    amp[1, 3] = 1e-8
    state = JointState(amp)
    rho = density_matrix(extract_gqs(state)).entries
    want = oracles.reshape_partial_trace(state.amplitudes)
    assert np.max(np.abs(rho - want)) < 1e-15


def test_expectation_closed_forms_and_oracle():
    rng = np.random.default_rng(13)
    for _ in range(25):
        amp = oracles.random_joint_state(rng, 3)
        g = extract_gqs(JointState(amp))
        assert expectation(g, np.eye(2)) == pytest.approx(1.0, abs=1e-12)
        rho = density_matrix(g).entries
        for obs in (oracles.SX, oracles.SY, oracles.SZ):
            assert expectation(g, obs) == pytest.approx(np.trace(rho @ obs).real, abs=1e-12)

    p = 0.3
    g = GeometricQuantumState(
        weights=np.array([1.0]),
        chis=embed(BlochPoint(p, 1.1)).reshape(1, 2),
        points=np.array([[p, 1.1]]),
        coordinate_defined=np.array([True]),
    )
    assert expectation(g, oracles.SZ) == pytest.approx(1.0 - 2.0 * p, abs=1e-14)
    with pytest.raises(ValidationError):
        expectation(g, np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_povm_indistinguishable_decompositions():
    # same density matrix from different particle decompositions
    half = 1 / np.sqrt(2)
    comp = GeometricQuantumState(
        weights=np.array([0.5, 0.5]),
        chis=np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex),
        points=np.array([[0.0, 0.0], [1.0, 0.0]]),
        coordinate_defined=np.array([True, True]),
    )
    diag = GeometricQuantumState(
        weights=np.array([0.5, 0.5]),
        chis=np.array([[half, half], [half, -half]], dtype=complex),
        points=np.array([[0.5, 0.0], [0.5, np.pi]]),
        coordinate_defined=np.array([True, True]),
    )
    rng = np.random.default_rng(17)
    observables = [oracles.SX, oracles.SY, oracles.SZ, oracles.random_hermitian(rng, 2)]
    for obs in observables:
        assert expectation(comp, obs) == pytest.approx(expectation(diag, obs), abs=1e-10)


def test_fs_distance_endpoints_and_chart_formula():
    a = BlochPoint(0.0, 0.0)
    b = BlochPoint(1.0, 0.0)
    assert fs_distance(a, a) == 0.0
    assert fs_distance(a, b) == pytest.approx(np.pi / 2, abs=1e-15)

    rng = np.random.default_rng(29)
    for _ in range(100):
        pa, pb = rng.uniform(0, 1, size=2)
        fa, fb = rng.uniform(0, 2 * np.pi, size=2)
        za, zb = BlochPoint(pa, fa), BlochPoint(pb, fb)
        d = fs_distance(za, zb)
        overlap_sq = oracles.overlap_sq_from_chart(za.p, za.phi, zb.p, zb.phi)
        want = np.arccos(np.sqrt(np.clip(overlap_sq, 0.0, 1.0)))
        assert abs(d - want) < 1e-10
        assert abs(d - fs_distance_chart(za, zb)) < 1e-10


def test_fs_distance_is_a_metric_on_samples():
    rng = np.random.default_rng(31)
    pts = [BlochPoint(rng.uniform(0, 1), rng.uniform(0, 2 * np.pi)) for _ in range(12)]
    for a in pts:
        for b in pts:
            assert fs_distance(a, b) == fs_distance(b, a)
            assert 0.0 <= fs_distance(a, b) <= np.pi / 2 + 1e-15
            for c in pts:
                assert fs_distance(a, c) <= fs_distance(a, b) + fs_distance(b, c) + 1e-12


def test_gqs_validation():
    with pytest.raises(ValidationError):
        GeometricQuantumState(
            weights=np.array([0.7, 0.7]),
            chis=np.eye(2, dtype=complex),
            points=np.zeros((2, 2)),
            coordinate_defined=np.array([True, True]),
        )
    with pytest.raises(ValidationError):
        GeometricQuantumState(
            weights=np.array([1.5, -0.5]),
            chis=np.eye(2, dtype=complex),
            points=np.zeros((2, 2)),
            coordinate_defined=np.array([True, True]),
        )
