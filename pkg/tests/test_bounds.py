import numpy as np
import pytest

from qsl_lab.bounds import (
    acos_mixing_lemma,
    alpha_bound,
    alpha_bound_max,
    bargmann_angle,
    bound_report,
    campo_bound,
    campo_chain,
    campo_markovian_bound,
    elimination_inequality_check,
    markovian_bound,
    mixing_inequality_check,
    mt_fidelity_bound,
    qfi_bound,
    simple_case_avg_coherence,
    simple_case_bound_closed_form,
    simple_case_bound_verbatim,
    system_environment_bound,
    tl_bound,
    tl_bound_time_avg,
    u_quantity,
)
from qsl_lab.coherence import wy_coherence
from qsl_lab.dynamics import LindbladModel, evolve_unitary, squeezed_vacuum_model
from qsl_lab.errors import BadAlpha, BadGrid, FrozenState
from qsl_lab.operator_core import (
    PAULI_X,
    PAULI_Z,
    SIGMA_MINUS,
    Observable,
    QuantumState,
    bloch_hamiltonian,
    bloch_to_state,
    random_observable,
    random_state,
    tensor,
)

CASE3_R2 = [-4 * np.sqrt(3) / 15, np.sqrt(2) / 15, -1 / 6]
CASE3_N = [1 / np.sqrt(2), 1 / np.sqrt(3), -1 / np.sqrt(6)]


def case3():
    return (bloch_to_state([0, 0, 0.5]), bloch_hamiltonian(CASE3_N),
            bloch_to_state(CASE3_R2))


def test_bargmann_angle():
    rho = random_state(2, 2, 1)
    assert bargmann_angle(rho, rho) < 1e-7
    up, down = bloch_to_state([0, 0, 1]), bloch_to_state([0, 0, -1])
    assert abs(bargmann_angle(up, down) - np.pi / 2) < 1e-10
    rho1, _, rho2 = case3()
    assert abs(bargmann_angle(rho1, rho2) - np.arccos(0.9107)) < 5e-4


def test_tl_bound_case1():
    rho1 = bloch_to_state([1, 0, 0])
    H = bloch_hamiltonian([0, 0, 1])
    rho2 = evolve_unitary(rho1, H, np.pi / 2)
    assert abs(tl_bound(rho1, H, rho2) - np.pi / (2 * np.sqrt(2))) < 1e-10


def test_tl_bound_case2():
    rho1 = bloch_to_state([1 / np.sqrt(2), 0, 1 / np.sqrt(2)])
    H = bloch_hamiltonian([0, 0, 1])
    rho2 = evolve_unitary(rho1, H, 3 * np.pi / 4)
    tl = tl_bound(rho1, H, rho2)
    assert abs(tl - np.arccos(0.75)) < 1e-7
    assert abs(tl - 0.72) < 5e-3


def test_tl_bound_case3():
    rho1, H, rho2 = case3()
    assert abs(tl_bound(rho1, H, rho2) - 0.90) < 0.01


def test_frozen_state_error():
    diag = QuantumState(np.diag([0.7, 0.3]))
    other = QuantumState(np.diag([0.3, 0.7]))
    with pytest.raises(FrozenState):
        tl_bound(diag, Observable(PAULI_Z), other)
    assert tl_bound(diag, Observable(PAULI_Z), diag) == 0.0


def test_time_avg_reductions():
    rho1, H, rho2 = case3()
    grid = np.linspace(0, 1.1, 101)
    const = tl_bound_time_avg(rho1, lambda t: H, rho2, grid)
    assert abs(const - tl_bound(rho1, H, rho2)) < 1e-10
    # H(t) = g(t) H0 scales the average by the mean of g
    g = lambda t: 1.0 + t
    scaled = tl_bound_time_avg(rho1, lambda t: Observable(g(t) * H.matrix), rho2, grid)
    mean_g = np.trapezoid(g(grid), grid) / grid[-1]
    assert abs(scaled - tl_bound(rho1, H, rho2) / mean_g) < 1e-4
    with pytest.raises(BadGrid):
        tl_bound_time_avg(rho1, lambda t: H, rho2, [0.5, 0.2, 1.0])


def test_time_avg_piecewise():
    plus = QuantumState(np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex))
    tau = 2.0
    grid = np.linspace(0, tau, 401)
    # sigma_z for t < tau/2 then sigma_x (which commutes with |+><+|)
    path = lambda t: Observable(PAULI_Z if t < tau / 2 else PAULI_X)
    rho2 = evolve_unitary(plus, Observable(PAULI_Z), 0.3)
    got = tl_bound_time_avg(plus, path, rho2, grid)
    avg = 0.5 * np.sqrt(wy_coherence(plus, Observable(PAULI_Z)))
    expected = bargmann_angle(plus, rho2) / (np.sqrt(2) * avg)
    assert abs(got - expected) < 1e-2  # Simpson straddles the jump


def test_alpha_bound_reduces_to_tl_at_one():
    for seed in range(25):
        rho1 = random_state(2, 2, seed)
        H = random_observable(2, seed + 300)
        rho2 = evolve_unitary(rho1, H, 0.9)
        assert abs(alpha_bound(rho1, H, rho2, 1.0) - tl_bound(rho1, H, rho2)) < 1e-10


def test_alpha_bound_pure_flat():
    rho1 = random_state(3, 1, 2)
    H = random_observable(3, 3)
    rho2 = evolve_unitary(rho1, H, 0.5)
    v1 = alpha_bound(rho1, H, rho2, 1.0)
    assert abs(alpha_bound(rho1, H, rho2, 2.0) - v1) < 1e-10
    a, v = alpha_bound_max(rho1, H, rho2)
    assert a == 0.25 and abs(v - v1) < 1e-10  # ties go to the smallest alpha
    with pytest.raises(BadAlpha):
        alpha_bound(rho1, H, rho2, -1.0)


def test_alpha_bound_max_brute_force():
    rho1, H, rho2 = case3()
    grid = np.arange(0.25, 4.0 + 1e-9, 0.05)
    a, v = alpha_bound_max(rho1, H, rho2, grid)
    vals = [alpha_bound(rho1, H, rho2, float(x)) for x in grid]
    assert abs(v - max(vals)) < 1e-12
    assert v >= alpha_bound(rho1, H, rho2, 1.0) - 1e-12


def test_mt_and_qfi_bounds():
    rho = random_state(2, 2, 4)
    H = random_observable(2, 5)
    assert mt_fidelity_bound(rho, H, rho) == 0.0
    assert qfi_bound(rho, H, rho) == 0.0
    # pure states: F_Q = 4 (dH)^2, so the printed coefficient-4 form is
    # exactly twice the fidelity bound (and therefore not below it)
    pure = random_state(2, 1, 6)
    target = evolve_unitary(pure, H, 0.8)
    mt = mt_fidelity_bound(pure, H, target)
    qfi = qfi_bound(pure, H, target)
    assert abs(qfi - 2.0 * mt) < 1e-10


def test_campo_chain_and_bound():
    rho1, H, rho2 = case3()
    assert campo_bound(rho1, H, rho1) == 0.0
    for seed in range(30):
        r1 = random_state(2, 2, seed)
        Hr = random_observable(2, seed + 900)
        r2 = evolve_unitary(r1, Hr, 0.6)
        ch = campo_chain(r1, Hr, r2)
        assert ch["sqrtN_over_D"] >= ch["two_over_pi"] - 1e-12
        assert ch["two_over_pi"] >= ch["final"] - 1e-12
        assert abs(ch["final"] - campo_bound(r1, Hr, r2)) < 1e-15


def test_u_quantity_collapse():
    for seed in range(25):
        rho1 = random_state(2, 2, seed)
        H = random_observable(2, seed + 600)
        rho2 = evolve_unitary(rho1, H, 1.1)
        u = u_quantity(rho1, H, rho2)
        assert abs(u - bargmann_angle(rho1, rho2) / np.sqrt(2)) < 1e-10
    up, down = bloch_to_state([0, 0, 1]), bloch_to_state([0, 0, -1])
    assert abs(u_quantity(up, Observable(PAULI_X), down) - np.pi / (2 * np.sqrt(2))) < 1e-10


def test_mixing_inequality_endpoints_and_random():
    rho1 = random_state(2, 2, 7)
    sig1 = random_state(2, 2, 8)
    H = random_observable(2, 9)
    for p in (0.0, 1.0):
        lhs, rhs, ok = mixing_inequality_check(rho1, sig1, p, H, 0.9)
        assert ok and abs(lhs - rhs) < 1e-10
    for seed in range(50):
        d = 2 if seed % 2 else 3
        lhs, rhs, ok = mixing_inequality_check(
            random_state(d, d, seed), random_state(d, d, seed + 5000),
            (seed % 10) / 10.0, random_observable(d, seed + 7000),
            0.1 + 0.05 * seed)
        assert ok


def test_elimination_inequality():
    rho_a = random_state(2, 2, 10)
    rho_b = random_state(2, 1, 11)
    joint = QuantumState(tensor(rho_a.matrix, rho_b.matrix))
    H_a = random_observable(2, 12)
    H_b = Observable(np.zeros((2, 2)))
    lhs, rhs, ok = elimination_inequality_check(joint, H_a, H_b, 0.7)
    assert ok and abs(lhs - rhs) < 1e-9  # inert factor b
    for seed in range(40):
        lhs, rhs, ok = elimination_inequality_check(
            random_state(4, 4, seed), random_observable(2, seed + 1),
            random_observable(2, seed + 2), 0.7)
        assert ok


def test_acos_mixing_lemma_grid():
    grid = np.arange(0.0, 1.0 + 1e-12, 0.05)
    for x in grid:
        for y in grid:
            for p in grid:
                _, _, ok = acos_mixing_lemma(float(x), float(y), float(p))
                assert ok
    lhs, rhs, _ = acos_mixing_lemma(0.4, 0.4, 1.0)
    assert abs(lhs - rhs) < 1e-12


def test_system_environment_bound():
    rho_s = random_state(2, 2, 13)
    gamma = random_state(2, 2, 14)
    H_s = random_observable(2, 15)
    H_se = Observable(tensor(H_s.matrix, np.eye(2)))
    joint = QuantumState(tensor(rho_s.matrix, gamma.matrix))
    tau = 0.8
    U_target = evolve_unitary(joint, H_se, tau)
    from qsl_lab.operator_core import partial_trace
    rho_tau = partial_trace(U_target, (2, 2), "a")
    # decoupled environment reduces to the plain bound
    direct = tl_bound(rho_s, H_s, evolve_unitary(rho_s, H_s, tau))
    assert abs(system_environment_bound(rho_s, gamma, H_se, rho_tau) - direct) < 1e-8
    # generic coupling: bound stays below the actual time
    H_full = random_observable(4, 16)
    rho_tau2 = partial_trace(evolve_unitary(joint, H_full, tau), (2, 2), "a")
    assert system_environment_bound(rho_s, gamma, H_full, rho_tau2) <= tau + 1e-8
    diag = system_environment_bound(rho_s, gamma, H_full, rho_tau2, diagnostics=True)
    assert {"bound", "two_q_se", "two_q_local"} <= set(diag)


def test_markovian_bound_hamiltonian_reduction():
    rho1 = bloch_to_state([0, 0, 0.5])
    H = bloch_hamiltonian(CASE3_N)
    L = LindbladModel(H, (SIGMA_MINUS,), np.array([[0.0]]))
    tau = 1.1071487177940904
    got = markovian_bound(rho1, L, tau)
    want = tl_bound(rho1, H, evolve_unitary(rho1, H, tau))
    assert abs(got - want) < 1e-6


def test_markovian_bound_fixed_point():
    L, _ = squeezed_vacuum_model(0.5, 0.4, 0.1)
    assert markovian_bound(QuantumState(np.eye(2) / 2), L, 1.0) == 0.0


def test_markovian_bound_known_invalid():
    # the quadrature bound built on the printed average is not <= tau
    L, _ = squeezed_vacuum_model(0.0, 0.45, 0.45)
    rho0 = bloch_to_state([1, 0, 0])
    assert markovian_bound(rho0, L, 1.0) > 1.0


def test_campo_markovian_bound_valid():
    L, _ = squeezed_vacuum_model(0.0, 0.45, 0.45)
    rho0 = bloch_to_state([1, 0, 0])
    for tau in (0.5, 1.0, 3.0):
        assert campo_markovian_bound(rho0, L, tau) <= tau + 1e-8


def test_simple_case_closed_forms_consistent():
    # verbatim and corrected variants differ only by the printed 3pi/4 constant
    for tau in (0.5, 1.5, 4.0):
        lam = np.exp(-0.9 * tau)
        verb = simple_case_bound_verbatim(-0.9, tau)
        corr = simple_case_bound_closed_form(-0.9, tau)
        x = 0.5 * lam * np.sqrt(2 - lam**2) + np.arcsin(lam / np.sqrt(2))
        assert abs(verb - 2 * tau * np.arccos((1 + lam) / 2) / abs(x - 0.5 - 0.75 * np.pi)) < 1e-12
        avg = simple_case_avg_coherence(-0.9, tau)
        assert abs(avg - (0.5 + np.pi / 4 - x) / (2 * tau)) < 1e-12
        assert abs(corr * avg - np.arccos((1 + lam) / 2)) < 1e-12
        assert verb <= tau + 1e-9  # the printed curve stays below tau


def test_bound_report_fields_and_digest():
    rho1, H, rho2 = case3()
    rep = bound_report(rho1, H, rho2, actual_time=1.1071487177940904)
    again = bound_report(rho1, H, rho2)
    assert rep.inputs_digest == again.inputs_digest
    d = rep.as_dict()
    assert d["tl"] == rep.tl and d["actual_time"] is not None
    assert rep.tl <= rep.actual_time + 1e-8
    assert rep.tl_alpha_max[1] >= rep.tl_alpha2 - 1e-12
