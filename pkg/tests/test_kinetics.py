"""Per-particle dynamics: operator decomposition, coupled integration, rates.

The load-bearing check is kinetic-vs-global equivalence: integrating the
coupled per-particle equations must reproduce the exactly evolved joint state
column by column. Operator assembly is checked by reassembling the full
generator from the decomposed parts.
"""

import numpy as np
import pytest

import oracles
from blochflow.errors import NumericGateError, ResourceLimitError, ValidationError
from blochflow.gqs import extract_gqs
from blochflow.kinetics import (
    PhiEnsemble,
    build_kinetic_operators,
    decompose_hamiltonian,
    ensemble_to_gqs,
    kinetic_evolve,
    xdot,
)
from blochflow.spinchain import (
    HamiltonianSpec,
    JointState,
    build_hamiltonian,
    evolve,
    make_propagator,
)


def _ops_for(spec: HamiltonianSpec):
    h_s, h_e, inter = decompose_hamiltonian(spec)
    return build_kinetic_operators(h_s, h_e, inter)


def _random_ensemble(rng: np.random.Generator, n_env: int) -> PhiEnsemble:
    amp = oracles.random_joint_state(rng, n_env)
    return PhiEnsemble(phis=amp.T.copy(), time=0.0)


# ---------------------------------------------------------------- decompose


def test_decompose_reassembles_full_generator():
    cases = [
        HamiltonianSpec(n_env=1, j_z=1.0, field=(1.0, 0.0, 0.5)),
        HamiltonianSpec(n_env=2, j_z=1.0, field=(1.0, 0.0, 0.5)),
        HamiltonianSpec(n_env=3, j_z=-1.0, field=(0.3, 0.2, 0.7)),
        HamiltonianSpec(n_env=4, j_z=0.8, field=(1.0, 0.0, 0.5), coupling_range="next_nearest"),
        HamiltonianSpec(n_env=3, j_z=1.0, field=(1.0, 0.0, 0.5), system_site=2),
    ]
    for spec in cases:
        h_s, h_e, inter = decompose_hamiltonian(spec)
        d_e = spec.dim_env
        total = np.kron(h_s, np.eye(d_e)) + np.kron(np.eye(2), h_e)
        for a, b in inter.terms:
            total = total + np.kron(a, b)
        assert np.max(np.abs(total - build_hamiltonian(spec))) < 1e-12


def test_decompose_term_count_and_system_part():
    spec = HamiltonianSpec(n_env=2, j_z=2.0, field=(0.4, 0.1, -0.3))
    h_s, _, inter = decompose_hamiltonian(spec)
    assert inter.count == 2
    sx, sy, sz = oracles.SX, oracles.SY, oracles.SZ
    assert np.array_equal(h_s, 0.4 * sx + 0.1 * sy + (-0.3) * sz)
    for a, _ in inter.terms:
        assert np.array_equal(a, 2.0 * sz)


def test_decompose_next_nearest_couples_four_sites():
    spec = HamiltonianSpec(n_env=4, j_z=1.0, field=(0.0, 0.0, 0.0), coupling_range="next_nearest")
    _, _, inter = decompose_hamiltonian(spec)
    assert inter.count == 4


def test_decompose_all_zero():
    spec = HamiltonianSpec(n_env=2, j_z=0.0, field=(0.0, 0.0, 0.0))
    h_s, h_e, inter = decompose_hamiltonian(spec)
    assert inter.count == 0 and inter.terms == []
    assert not h_s.any() and not h_e.any()


# ------------------------------------------------------------ operator build


def test_operator_hermiticity_relations():
    spec = HamiltonianSpec(n_env=3, j_z=1.0, field=(1.0, 0.0, 0.5))
    ops = _ops_for(spec)
    for alpha in range(spec.dim_env):
        h = ops.h_alpha[alpha]
        assert np.max(np.abs(h - h.conjugate().T)) <= 1e-15
    swapped = np.transpose(ops.v.conjugate(), (1, 0, 3, 2))
    assert np.max(np.abs(swapped - ops.v)) <= 1e-15


def test_interaction_free_reduction():
    spec = HamiltonianSpec(n_env=2, j_z=0.0, field=(0.7, 0.0, 0.2))
    h_s, h_e, inter = decompose_hamiltonian(spec)
    assert inter.count == 0
    ops = build_kinetic_operators(h_s, h_e, inter)
    eye = np.eye(2)
    for alpha in range(4):
        assert np.max(np.abs(ops.h_alpha[alpha] - (h_s + h_e[alpha, alpha] * eye))) < 1e-14
        for beta in range(4):
            if beta != alpha:
                assert np.max(np.abs(ops.v[alpha, beta] - h_e[alpha, beta] * eye)) < 1e-14


def test_diagonal_env_no_interaction_decouples():
    spec = HamiltonianSpec(n_env=2, j_z=0.0, field=(0.0, 0.0, 0.9))
    ops = _ops_for(spec)
    assert np.max(np.abs(ops.v)) == 0.0


def test_block_reassembly_matches_full_minus_system():
    spec = HamiltonianSpec(n_env=2, j_z=1.0, field=(1.0, 0.0, 0.5))
    h_s, h_e, inter = decompose_hamiltonian(spec)
    ops = build_kinetic_operators(h_s, h_e, inter)
    d_e = spec.dim_env
    blocks = np.array(ops.v)
    for alpha in range(d_e):
        blocks[alpha, alpha] = ops.h_alpha[alpha] - h_s
    # joint index n = j * d_E + alpha, so block (alpha, beta) lands at [j d_E + alpha, j' d_E + beta]
    full = np.transpose(blocks, (2, 0, 3, 1)).reshape(2 * d_e, 2 * d_e)
    expected = build_hamiltonian(spec) - np.kron(h_s, np.eye(d_e))
    assert np.max(np.abs(full - expected)) < 1e-12


def test_build_rejects_mismatched_dimensions():
    spec = HamiltonianSpec(n_env=2, j_z=1.0, field=(1.0, 0.0, 0.5))
    h_s, h_e, inter = decompose_hamiltonian(spec)
    with pytest.raises(ValidationError):
        build_kinetic_operators(h_s, h_e[:2, :2], inter)


def test_build_gates_large_environments():
    d_big = 512
    with pytest.raises(ResourceLimitError):
        build_kinetic_operators(np.zeros((2, 2)), np.zeros((d_big, d_big)),
                                decompose_hamiltonian(
                                    HamiltonianSpec(n_env=1, j_z=0.0, field=(0.0, 0.0, 0.0)))[2])


# ---------------------------------------------------------------- ensembles


def test_phi_ensemble_validation():
    with pytest.raises(ValidationError):
        PhiEnsemble(phis=np.zeros((4, 3), dtype=complex), time=0.0)
    bad = np.zeros((4, 2), dtype=complex)
    bad[0, 0] = 0.7
    with pytest.raises(ValidationError):
        PhiEnsemble(phis=bad, time=0.0)


def test_ensemble_to_gqs_single_live_particle():
    phis = np.zeros((4, 2), dtype=complex)
    phis[0] = (0.0, 1.0)
    g = ensemble_to_gqs(PhiEnsemble(phis=phis, time=0.25))
    assert g.time == 0.25
    assert g.weights[0] == 1.0
    assert np.all(g.weights[1:] == 0.0)
    assert g.points[0, 0] == 1.0 and g.points[0, 1] == 0.0
    assert g.coordinate_defined[0] and not g.coordinate_defined[1:].any()


def test_ensemble_to_gqs_matches_global_extraction():
    rng = np.random.default_rng(811)
    for _ in range(10):
        amp = oracles.random_joint_state(rng, 3)
        state = JointState(amplitudes=amp, time=0.0)
        via_ensemble = ensemble_to_gqs(PhiEnsemble(phis=amp.T.copy(), time=0.0))
        direct = extract_gqs(state)
        assert np.max(np.abs(via_ensemble.weights - direct.weights)) < 1e-12
        assert np.max(np.abs(via_ensemble.chis - direct.chis)) < 1e-12
        assert np.max(np.abs(via_ensemble.points - direct.points)) < 1e-12


# --------------------------------------------------------------- integration


def test_kinetic_matches_global_evolution():
    spec = HamiltonianSpec(n_env=3, j_z=1.0, field=(1.0, 0.0, 0.5))
    dt, steps = 0.005, 100
    rng = np.random.default_rng(97)
    amp = oracles.random_joint_state(rng, 3)

    ops = _ops_for(spec)
    ens = kinetic_evolve(ops, PhiEnsemble(phis=amp.T.copy(), time=0.0), dt, steps)

    prop = make_propagator(build_hamiltonian(spec), dt)
    states = evolve(JointState(amplitudes=amp, time=0.0), prop, steps)

    assert len(ens) == steps + 1
    worst = 0.0
    for snap, state in zip(ens, states):
        diff = np.linalg.norm(snap.phis - state.amplitudes.T, axis=1)
        worst = max(worst, float(np.max(diff)))
    assert worst < 1e-7
    assert ens[-1].time == pytest.approx(steps * dt)


def test_zero_hamiltonian_keeps_ensemble_constant():
    spec = HamiltonianSpec(n_env=2, j_z=0.0, field=(0.0, 0.0, 0.0))
    ops = _ops_for(spec)
    ens0 = _random_ensemble(np.random.default_rng(5), 2)
    out = kinetic_evolve(ops, ens0, 0.01, 20)
    for snap in out:
        assert np.array_equal(snap.phis, ens0.phis)


def test_decoupled_weights_constant_and_phases_exact():
    spec = HamiltonianSpec(n_env=2, j_z=0.0, field=(0.0, 0.0, 0.6))
    ops = _ops_for(spec)
    ens0 = _random_ensemble(np.random.default_rng(31), 2)
    dt, steps = 0.01, 50
    out = kinetic_evolve(ops, ens0, dt, steps)
    x0 = np.einsum("ai,ai->a", ens0.phis.conjugate(), ens0.phis).real
    for snap in out:
        x = np.einsum("ai,ai->a", snap.phis.conjugate(), snap.phis).real
        assert np.max(np.abs(x - x0)) < 1e-12
    for alpha in range(4):
        u = oracles.taylor_unitary(ops.h_alpha[alpha], steps * dt)
        assert np.max(np.abs(out[-1].phis[alpha] - u @ ens0.phis[alpha])) < 1e-10


def test_global_normalization_preserved_long_run():
    spec = HamiltonianSpec(n_env=3, j_z=1.0, field=(1.0, 0.0, 0.5))
    ops = _ops_for(spec)
    ens0 = _random_ensemble(np.random.default_rng(113), 3)
    out = kinetic_evolve(ops, ens0, 0.005, 500)
    for snap in out:
        total = np.einsum("ai,ai->", snap.phis.conjugate(), snap.phis).real
        assert abs(total - 1.0) < 1e-8
    g = ensemble_to_gqs(out[-1])
    assert abs(np.sum(g.weights) - 1.0) < 1e-8


def test_norm_drift_gate_suggests_smaller_dt():
    spec = HamiltonianSpec(n_env=3, j_z=1.0, field=(1.0, 0.0, 0.5))
    ops = _ops_for(spec)
    ens0 = _random_ensemble(np.random.default_rng(7), 3)
    with pytest.raises(NumericGateError, match="dt"):
        kinetic_evolve(ops, ens0, 0.5, 10)


def test_kinetic_evolve_validates_inputs():
    spec = HamiltonianSpec(n_env=2, j_z=1.0, field=(1.0, 0.0, 0.5))
    ops = _ops_for(spec)
    ens0 = _random_ensemble(np.random.default_rng(3), 2)
    with pytest.raises(ValidationError):
        kinetic_evolve(ops, ens0, -0.1, 5)
    with pytest.raises(ValidationError):
        kinetic_evolve(ops, ens0, 0.01, -1)
    with pytest.raises(ValidationError):
        kinetic_evolve(ops, _random_ensemble(np.random.default_rng(3), 3), 0.01, 5)


# --------------------------------------------------------------------- rates


def test_xdot_sums_to_zero_and_validates():
    spec = HamiltonianSpec(n_env=3, j_z=1.0, field=(1.0, 0.0, 0.5))
    ops = _ops_for(spec)
    ens0 = _random_ensemble(np.random.default_rng(41), 3)
    out = kinetic_evolve(ops, ens0, 0.005, 4)
    rates = xdot(out[0], out[1], 0.005)
    assert rates.shape == (8,)
    assert abs(float(np.sum(rates))) < 1e-8
    with pytest.raises(ValidationError):
        xdot(out[0], _random_ensemble(np.random.default_rng(2), 2), 0.005)
    with pytest.raises(ValidationError):
        xdot(out[0], out[1], 0.0)


def test_xdot_zero_when_decoupled():
    spec = HamiltonianSpec(n_env=2, j_z=0.0, field=(0.0, 0.0, 0.9))
    ops = _ops_for(spec)
    out = kinetic_evolve(ops, _random_ensemble(np.random.default_rng(19), 2), 0.01, 10)
    assert np.max(np.abs(xdot(out[0], out[-1], 0.1))) < 1e-12


def test_xdot_matches_analytic_rate_at_second_order():
    spec = HamiltonianSpec(n_env=3, j_z=1.0, field=(1.0, 0.0, 0.5))
    ops = _ops_for(spec)
    ens0 = _random_ensemble(np.random.default_rng(59), 3)
    dt = 0.005
    out = kinetic_evolve(ops, ens0, dt, 60)
    k = 30
    analytic = oracles.analytic_weight_rate(ops.v, out[k].phis)

    err_1 = np.max(np.abs(xdot(out[k - 1], out[k + 1], 2 * dt) - analytic))
    err_2 = np.max(np.abs(xdot(out[k - 2], out[k + 2], 4 * dt) - analytic))
    assert err_1 < 5e-4
    assert 2.5 < err_2 / err_1 < 6.5
