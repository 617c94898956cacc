import numpy as np
import pytest

from qsl_lab.coherence import affinity
from qsl_lab.dynamics import (
    DampingBasis,
    LindbladModel,
    affinity_closed_form_markovian,
    build_superoperator,
    damping_basis_evolution,
    evolve_lindblad,
    evolve_path,
    evolve_unitary,
    first_passage_time,
    qubit_evolution_closed_form,
    sqrt_evolution_diagnostic,
    squeezed_vacuum_model,
)
from qsl_lab.errors import BadUnitVector, BasisMismatch, NotReached
from qsl_lab.operator_core import (
    PAULI_Z,
    SIGMA_MINUS,
    Observable,
    QuantumState,
    bloch_hamiltonian,
    bloch_to_state,
    random_observable,
    random_state,
    state_to_bloch,
)


def test_evolve_unitary_basics():
    rho = random_state(2, 2, 1)
    H = random_observable(2, 2)
    assert np.allclose(evolve_unitary(rho, H, 0.0).matrix, rho.matrix, atol=1e-12)
    diag = QuantumState(np.diag([0.7, 0.3]))
    assert np.allclose(evolve_unitary(diag, Observable(PAULI_Z), 1.3).matrix,
                       diag.matrix, atol=1e-12)
    # spectrum is preserved
    out = evolve_unitary(rho, H, 0.9)
    assert np.allclose(np.sort(out.eigenvalues), np.sort(rho.eigenvalues), atol=1e-10)


def test_case1_rotation_angle():
    rho = bloch_to_state([1, 0, 0])
    H = bloch_hamiltonian([0, 0, 1])
    out = evolve_unitary(rho, H, np.pi / 2)
    r_out = state_to_bloch(out.matrix)
    assert abs(np.dot(r_out, [1, 0, 0]) - np.cos(np.pi)) < 1e-10  # r.r' = cos 2a


def test_closed_form_matches_matrix_evolution():
    rng = np.random.default_rng(0)
    for _ in range(100):
        r = rng.normal(size=3)
        r *= rng.uniform(0, 1) / np.linalg.norm(r)
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        a = rng.uniform(0, 2 * np.pi)
        got = qubit_evolution_closed_form(r, n, a)
        expected = state_to_bloch(
            evolve_unitary(bloch_to_state(r), bloch_hamiltonian(n), a).matrix)
        assert np.linalg.norm(got - expected) < 1e-10


def test_closed_form_trivial_axes():
    assert np.allclose(qubit_evolution_closed_form([0.3, 0, 0.4], [0, 0, 1], 0.0),
                       [0.3, 0, 0.4])
    n = np.array([0, 0, 1.0])
    assert np.allclose(qubit_evolution_closed_form(0.5 * n, n, 1.7), 0.5 * n, atol=1e-12)
    with pytest.raises(BadUnitVector):
        qubit_evolution_closed_form([0, 0, 0.5], [0, 0, 0.9], 1.0)


def test_case3_bloch_target():
    # a with cos 2a = -3/5, sin 2a = 4/5 carries r to the published r'
    a = np.arctan2(4 / 5, -3 / 5) / 2
    got = qubit_evolution_closed_form(
        [0, 0, 0.5], [1 / np.sqrt(2), 1 / np.sqrt(3), -1 / np.sqrt(6)], a)
    target = np.array([-4 * np.sqrt(3) / 15, np.sqrt(2) / 15, -1 / 6])
    assert np.linalg.norm(got - target) < 1e-10


def test_superoperator_matches_direct_action():
    L, _ = squeezed_vacuum_model(0.3, 0.5, 0.2, w_eq=0.1, rabi=0.7)
    S = build_superoperator(L)
    rng = np.random.default_rng(5)
    for _ in range(20):
        X = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        assert np.abs((S @ X.reshape(-1)).reshape(2, 2) - L.apply(X)).max() < 1e-12
    # Tr is a left null vector: column sums over diagonal entries vanish
    tr_row = np.eye(2).reshape(-1)
    assert np.abs(tr_row @ S).max() < 1e-10


def test_amplitude_damping_fixed_point():
    L = LindbladModel(None, (SIGMA_MINUS,), np.array([[0.8]]))
    ground = np.diag([1.0, 0.0]).astype(complex)
    assert np.abs(L.apply(ground)).max() < 1e-12
    out = evolve_lindblad(QuantumState(np.diag([0.2, 0.8])), L, 30.0)
    assert np.allclose(out.matrix, ground, atol=1e-8)


def test_lindblad_reductions():
    rho = random_state(2, 2, 8)
    H = random_observable(2, 9)
    L = LindbladModel(H, (SIGMA_MINUS,), np.array([[0.0]]))
    assert np.allclose(evolve_lindblad(rho, L, 0.0).matrix, rho.matrix, atol=1e-10)
    assert np.allclose(evolve_lindblad(rho, L, 0.7).matrix,
                       evolve_unitary(rho, H, 0.7).matrix, atol=1e-9)


def test_semigroup_property():
    L, _ = squeezed_vacuum_model(0.4, 0.6, 0.1, w_eq=0.2)
    rho = random_state(2, 2, 10)
    one = evolve_lindblad(evolve_lindblad(rho, L, 0.3), L, 0.5)
    two = evolve_lindblad(rho, L, 0.8)
    assert np.abs(one.matrix - two.matrix).max() < 1e-9


def test_simple_decay_bloch_component():
    L, _ = squeezed_vacuum_model(0.0, 0.45, 0.45)
    rho0 = bloch_to_state([1, 0, 0])
    for t in (0.3, 1.0, 2.5):
        r = state_to_bloch(evolve_lindblad(rho0, L, t).matrix)
        assert abs(r[0] - np.exp(-0.9 * t)) < 1e-10
        assert abs(r[1]) < 1e-10 and abs(r[2]) < 1e-10


def test_damping_basis_eigenrelations_and_evolution():
    L, basis = squeezed_vacuum_model(0.25, 0.5, 0.15, w_eq=0.3)
    assert basis.eigenvalues == (0.0, -0.65, -0.35, -0.25)
    rng = np.random.default_rng(2)
    for _ in range(50):
        r = rng.normal(size=3)
        r *= rng.uniform(0, 1) / np.linalg.norm(r)
        rho0 = bloch_to_state(r)
        t = rng.uniform(0, 3)
        a = damping_basis_evolution(rho0, basis, t)
        b = evolve_lindblad(rho0, L, t)
        assert np.abs(a.matrix - b.matrix).max() < 1e-10


def test_damping_basis_stationary_state():
    w_eq = 0.3
    L, basis = squeezed_vacuum_model(0.25, 0.5, 0.15, w_eq=w_eq)
    rho0 = random_state(2, 2, 3)
    out = damping_basis_evolution(rho0, basis, 200.0)
    expected = 0.5 * (np.eye(2) + w_eq * PAULI_Z)
    assert np.allclose(out.matrix, expected, atol=1e-8)
    # and it spans the null space of the superoperator
    S = build_superoperator(L)
    assert np.abs(S @ expected.reshape(-1)).max() < 1e-12


def test_damping_basis_biorthogonality_guard():
    L, basis = squeezed_vacuum_model(0.25, 0.5, 0.15)
    with pytest.raises(BasisMismatch):
        DampingBasis(basis.left_ops, basis.right_ops[::-1], basis.eigenvalues)


def test_affinity_closed_form():
    # simple case: the closed form gives (1 + Lambda1)/2 ...
    L, basis = squeezed_vacuum_model(0.0, 0.45, 0.45)
    assert abs(affinity_closed_form_markovian([1, 0, 0], basis.eigenvalues, 0.0, 0.0)
               - 1.0) < 1e-12
    rho0 = bloch_to_state([1, 0, 0])
    from qsl_lab.dynamics import LindbladPropagator
    prop = LindbladPropagator(L)
    for t in (0.5, 2.0):
        closed = affinity_closed_form_markovian([1, 0, 0], basis.eigenvalues, 0.0, t)
        assert abs(closed - 0.5 * (1 + np.exp(-0.9 * t))) < 1e-12
        # ... which is exactly the semigroup-evolved-sqrt overlap
        s0 = rho0.sqrt()
        semigroup = np.trace(s0 @ (prop.propagator(t) @ s0.reshape(-1)).reshape(2, 2)).real
        assert abs(closed - semigroup) < 1e-12
        # but NOT the spectral affinity: here A_true = sqrt((1 + Lambda1)/2)
        spectral = affinity(rho0, evolve_lindblad(rho0, L, t))
        assert abs(spectral - np.sqrt(closed)) < 1e-10
        assert abs(closed - spectral) > 1e-2  # documented closed-form defect


def test_first_passage_basics():
    rho = bloch_to_state([1, 0, 0])
    H = bloch_hamiltonian([0, 0, 1])
    assert first_passage_time(rho, H, rho, tol=1e-8) == 0.0
    target = evolve_unitary(rho, H, np.pi / 2)
    assert abs(first_passage_time(rho, H, target, tol=1e-8) - np.pi / 2) < 1e-7
    stuck = QuantumState(np.diag([0.9, 0.1]))
    with pytest.raises(NotReached):
        first_passage_time(rho, H, stuck, tol=1e-8, t_max=3.0)


def test_first_passage_lindblad_round_trip():
    L, _ = squeezed_vacuum_model(0.2, 0.5, 0.1)
    rho0 = bloch_to_state([0.6, 0.2, -0.3])
    target = evolve_lindblad(rho0, L, 0.7)
    assert abs(first_passage_time(rho0, L, target, tol=1e-9, t_max=3.0) - 0.7) < 1e-7


def test_evolution_path_trace_and_tags():
    rho = random_state(2, 2, 12)
    H = random_observable(2, 13)
    path = evolve_path(rho, H, np.linspace(0, 2, 9))
    assert path.generator_tag == "unitary"
    for s in path.states:
        assert abs(np.trace(s.matrix).real - 1.0) < 1e-10


def test_sqrt_evolution_diagnostic():
    grid = np.linspace(0.1, 1.5, 6)
    rho = random_state(2, 2, 14)
    H = random_observable(2, 15)
    unitary_L = LindbladModel(H, (SIGMA_MINUS,), np.array([[0.0]]))
    rep = sqrt_evolution_diagnostic(rho, unitary_L, grid)
    assert rep["max_deviation"] < 1e-6  # exactly valid for unitary conjugation

    dephase = LindbladModel(None, (PAULI_Z / np.sqrt(2),), np.array([[0.5]]))
    diag = QuantumState(np.diag([0.7, 0.3]))
    rep = sqrt_evolution_diagnostic(diag, dephase, grid)
    assert rep["max_deviation"] < 1e-6  # commuting structure

    damp = LindbladModel(None, (SIGMA_MINUS,), np.array([[0.8]]))
    rep = sqrt_evolution_diagnostic(random_state(2, 2, 16), damp, grid)
    assert rep["max_deviation"] > 1e-3  # the square-root evolution law fails here
