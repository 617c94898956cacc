"""Speed-limit bounds, inequality checkers, and the comparison chain."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .coherence import (
    affinity,
    clamp_acos_arg,
    lindblad_coherence,
    relative_purity,
    sld_qfi,
    uhlmann_fidelity,
    variance,
    wy_coherence,
)
from .dynamics import LindbladModel, LindbladPropagator, evolve_unitary
from .errors import BadAlpha, BadGrid, DimMismatch, FrozenState
from .operator_core import (
    Observable,
    QuantumState,
    commutator,
    partial_trace,
    tensor,
)

ANGLE_TOL = 1e-12
COHERENCE_TOL = 1e-14
DEFAULT_ALPHA_GRID = np.arange(0.25, 4.0 + 1e-9, 0.05)


def bargmann_angle(rho1: QuantumState, rho2: QuantumState) -> float:
    """Working angle acos A(rho1, rho2); the full geodesic angle is twice this."""
    return float(np.arccos(clamp_acos_arg(affinity(rho1, rho2))))


def _quotient(angle: float, speed_sq: float, scale: float, what: str) -> float:
    """scale * angle / sqrt(speed_sq), with the frozen-pair consistency check."""
    if angle <= ANGLE_TOL:
        return 0.0
    if speed_sq <= COHERENCE_TOL:
        raise FrozenState(f"{what} vanishes while the angle is {angle:.3e}")
    return scale * angle / np.sqrt(speed_sq)


def tl_bound(rho1: QuantumState, H: Observable, rho2: QuantumState) -> float:
    """Coherence speed limit (hbar/sqrt(2)) acos(A) / sqrt(Q(rho1, H))."""
    angle = bargmann_angle(rho1, rho2)
    q = wy_coherence(rho1, H)
    return _quotient(angle, q, H.hbar / np.sqrt(2.0), "coherence Q")


def check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3:
        raise BadGrid("need a 1-D grid with at least 3 nodes")
    if np.any(np.diff(grid) <= 0):
        raise BadGrid("grid must be strictly ascending")
    if grid[0] != 0.0:
        raise BadGrid("grid must start at t = 0")
    return grid


def tl_bound_time_avg(rho1: QuantumState, H_path, rho2: QuantumState, grid) -> float:
    """Time-averaged variant: angle over the mean of sqrt(Q(rho1, H(t))).

    H_path maps a grid node to an Observable; the average is composite
    Simpson over [0, tau].
    """
    grid = check_grid(grid)
    tau = grid[-1]
    vals = np.array([np.sqrt(wy_coherence(rho1, H_path(t))) for t in grid])
    avg = float(simpson(vals, x=grid)) / tau
    angle = bargmann_angle(rho1, rho2)
    hbar = H_path(grid[0]).hbar
    if angle <= ANGLE_TOL:
        return 0.0
    if avg <= 1e-7:
        raise FrozenState(f"time-averaged coherence vanishes, angle {angle:.3e}")
    return hbar / np.sqrt(2.0) * angle / avg


def alpha_bound(rho1: QuantumState, H: Observable, rho2: QuantumState,
                alpha: float) -> float:
    """Spectral-power family bound, written exactly as

        hbar sqrt(Tr rho1^a) acos|Tr(rho1^{a/2} rho2^{a/2}) / Tr rho1^a|
            / sqrt(-Tr[rho1^{a/2}, H]^2).

    At alpha = 1 this reduces to tl_bound identically: the denominator is
    sqrt(2Q) and the prefactor contributes the matching normalization.
    """
    if alpha <= 0:
        raise BadAlpha(f"alpha must be positive, got {alpha}")
    half1 = rho1.power(alpha / 2.0)
    half2 = rho2.power(alpha / 2.0)
    tr_a = float(np.trace(half1 @ half1).real)
    overlap = abs(np.trace(half1 @ half2)) / tr_a
    angle = float(np.arccos(clamp_acos_arg(overlap)))
    c = commutator(half1, H.matrix)
    denom_sq = float(-np.trace(c @ c).real)
    return _quotient(angle, denom_sq, H.hbar * np.sqrt(tr_a), f"alpha={alpha} coherence")


def alpha_bound_max(rho1: QuantumState, H: Observable, rho2: QuantumState,
                    alpha_grid=None) -> tuple[float, float]:
    """(argmax alpha, max bound) over the grid; ties go to the smaller alpha."""
    grid = DEFAULT_ALPHA_GRID if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise BadAlpha("alpha grid must be nonempty and positive")
    best_a, best_v = None, -np.inf
    for a in grid:
        v = alpha_bound(rho1, H, rho2, float(a))
        if v > best_v + 1e-15:
            best_a, best_v = float(a), v
    return best_a, best_v


def mt_fidelity_bound(rho1: QuantumState, H: Observable, rho2: QuantumState) -> float:
    """Mandelstam-Tamm-style bound hbar acos(F) / Delta H."""
    angle = float(np.arccos(clamp_acos_arg(uhlmann_fidelity(rho1, rho2))))
    return _quotient(angle, variance(rho1, H), H.hbar, "variance")


def qfi_bound(rho1: QuantumState, H: Observable, rho2: QuantumState) -> float:
    """Fisher-information bound 4 hbar acos(F) / sqrt(F_Q), coefficient as printed.

    With the SLD convention F_Q = 4 (Delta H)^2 for pure states this sits a
    factor 2 above mt_fidelity_bound and is not a valid lower bound in
    general; it is kept verbatim for the comparison table.
    """
    angle = float(np.arccos(clamp_acos_arg(uhlmann_fidelity(rho1, rho2))))
    return _quotient(angle, sld_qfi(rho1, H), 4.0 * H.hbar, "Fisher information")


def campo_chain(rho1: QuantumState, H: Observable, rho2: QuantumState) -> dict:
    """Relative-purity bound chain: sqrt(N)/D form, 2/pi form, final 4/pi^2 form.

    N = [acos(Tr(rho1 rho2)/Tr rho1^2)]^2 Tr rho1^2,
    D = sqrt(-Tr[rho1, H]^2).
    """
    p2 = rho1.purity()
    f = float(np.trace(rho1.matrix @ rho2.matrix).real) / p2
    theta = float(np.arccos(clamp_acos_arg(f)))
    N = theta**2 * p2
    c = commutator(rho1.matrix, H.matrix)
    D_sq = float(-np.trace(c @ c).real)
    if N <= ANGLE_TOL**2:
        return {"sqrtN_over_D": 0.0, "two_over_pi": 0.0, "final": 0.0, "N": N,
                "D": float(np.sqrt(max(D_sq, 0.0)))}
    if D_sq <= COHERENCE_TOL:
        raise FrozenState(f"commutator speed vanishes while N = {N:.3e}")
    D = float(np.sqrt(D_sq))
    root = H.hbar * np.sqrt(N) / D
    return {"sqrtN_over_D": root, "two_over_pi": 2.0 / np.pi * root,
            "final": 4.0 * H.hbar * N / (np.pi**2 * D), "N": N, "D": D}


def campo_bound(rho1: QuantumState, H: Observable, rho2: QuantumState) -> float:
    """Final relative-purity bound 4 hbar N / (pi^2 D)."""
    return campo_chain(rho1, H, rho2)["final"]


def u_quantity(rho1: QuantumState, H: Observable, rho2: QuantumState) -> float:
    """U = tl_bound * sqrt(Q); algebraically (hbar/sqrt 2) acos A, but computed
    as the product so the collapse stays checkable."""
    angle = bargmann_angle(rho1, rho2)
    if angle <= ANGLE_TOL:
        return 0.0
    return tl_bound(rho1, H, rho2) * np.sqrt(wy_coherence(rho1, H))


def mixing_inequality_check(rho1: QuantumState, sigma1: QuantumState, p: float,
                            H: Observable, t: float) -> tuple[float, float, bool]:
    """U of the p-mixture vs sqrt(p) U_rho + sqrt(1-p) U_sigma after a time t."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0,1], got {p}")
    if rho1.dim != sigma1.dim:
        raise DimMismatch(f"{rho1.dim} vs {sigma1.dim}")
    gamma1 = QuantumState(p * rho1.matrix + (1 - p) * sigma1.matrix)
    lhs = u_quantity(gamma1, H, evolve_unitary(gamma1, H, t))
    rhs = (np.sqrt(p) * u_quantity(rho1, H, evolve_unitary(rho1, H, t))
           + np.sqrt(1 - p) * u_quantity(sigma1, H, evolve_unitary(sigma1, H, t)))
    return lhs, rhs, lhs <= rhs + 1e-9


def elimination_inequality_check(rho_ab: QuantumState, H_a: Observable,
                                 H_b: Observable, t: float) -> tuple[float, float, bool]:
    """U on the reduced a-states vs U on the joint states under H_a x I + I x H_b."""
    da, db = H_a.dim, H_b.dim
    if da * db != rho_ab.dim:
        raise DimMismatch(f"{da}*{db} != {rho_ab.dim}")
    H_ab = Observable(tensor(H_a.matrix, np.eye(db)) + tensor(np.eye(da), H_b.matrix),
                      hbar=H_a.hbar)
    sigma_ab = evolve_unitary(rho_ab, H_ab, t)
    rho_a = partial_trace(rho_ab, (da, db), "a")
    sigma_a = partial_trace(sigma_ab, (da, db), "a")
    lhs = u_quantity(rho_a, H_a, sigma_a)
    rhs = u_quantity(rho_ab, H_ab, sigma_ab)
    return lhs, rhs, lhs <= rhs + 1e-9


def acos_mixing_lemma(x: float, y: float, p: float) -> tuple[float, float, bool]:
    """acos(px + (1-p)y) <= sqrt(p) acos x + sqrt(1-p) acos y on [0,1]^3."""
    lhs = float(np.arccos(clamp_acos_arg(p * x + (1 - p) * y)))
    rhs = float(np.sqrt(p) * np.arccos(clamp_acos_arg(x))
                + np.sqrt(1 - p) * np.arccos(clamp_acos_arg(y)))
    return lhs, rhs, lhs <= rhs + 1e-12


def system_environment_bound(rho0_s: QuantumState, gamma_e: QuantumState,
                             H_se: Observable, rhotau_s: QuantumState,
                             diagnostics: bool = False):
    """Reduced-dynamics bound hbar acos A(rho0_s, rhotau_s) / sqrt(2 Q_SE).

    2 Q_SE = -Tr[sqrt(rho0) x sqrt(gamma), H_SE]^2. With diagnostics=True also
    reports the effective local generator H_s = Tr_E(H_SE (I x gamma)) and
    2 Q(rho0, H_s), whose claimed equality with 2 Q_SE is checked, not assumed.
    """
    ds, de = rho0_s.dim, gamma_e.dim
    if ds * de != H_se.dim:
        raise DimMismatch(f"{ds}*{de} != {H_se.dim}")
    joint_sqrt = tensor(rho0_s.sqrt(), gamma_e.sqrt())
    c = commutator(joint_sqrt, H_se.matrix)
    two_q_se = float(-np.trace(c @ c).real)
    angle = bargmann_angle(rho0_s, rhotau_s)
    bound = _quotient(angle, two_q_se, H_se.hbar, "joint coherence")
    if not diagnostics:
        return bound
    M = tensor(np.eye(ds), gamma_e.matrix)
    T = (H_se.matrix @ M).reshape(ds, de, ds, de)
    H_s_eff = Observable(np.einsum("ijkj->ik", T), hbar=H_se.hbar)
    two_q_local = 2.0 * wy_coherence(rho0_s, H_s_eff)
    return {"bound": bound, "two_q_se": two_q_se, "two_q_local": two_q_local,
            "equal_within_1e-10": abs(two_q_se - two_q_local) <= 1e-10,
            "h_s_effective": H_s_eff.matrix}


def markovian_bound(rho0: QuantumState, L: LindbladModel, tau: float,
                    n_nodes: int = 201, rel_tol: float = 1e-6) -> float:
    """acos A(rho0, rho_tau) over the Simpson time-average of sqrt(2 Q(rho_t, L)).

    The average uses the positive square root of the actually propagated
    rho_t at every node; a doubled grid must agree to rel_tol.
    """
    if tau <= 0:
        raise BadGrid(f"tau must be positive, got {tau}")
    if n_nodes < 5 or n_nodes % 2 == 0:
        raise BadGrid("n_nodes must be an odd integer >= 5")
    prop = LindbladPropagator(L)

    def average(n: int) -> float:
        ts = np.linspace(0.0, tau, n)
        vals = np.array([np.sqrt(2.0 * lindblad_coherence(prop(rho0, t), L)) for t in ts])
        return float(simpson(vals, x=ts)) / tau

    avg = average(n_nodes)
    avg2 = average(2 * n_nodes - 1)
    if abs(avg2 - avg) > rel_tol * max(abs(avg2), 1e-12):
        avg = avg2  # grid not yet converged; keep the finer estimate
    angle = bargmann_angle(rho0, prop(rho0, tau))
    if angle <= ANGLE_TOL:
        return 0.0
    if avg <= 1e-9:
        raise FrozenState(f"averaged Lindblad coherence vanishes, angle {angle:.3e}")
    return angle / avg


def campo_markovian_bound(rho0: QuantumState, L: LindbladModel, tau: float,
                          n_nodes: int = 201) -> float:
    """Relative-purity bound for semigroup dynamics:
    tau >= |1 - f(tau)| sqrt(Tr rho0^2) / avg ||L rho_t||_HS."""
    if tau <= 0:
        raise BadGrid(f"tau must be positive, got {tau}")
    prop = LindbladPropagator(L)
    f = relative_purity(rho0, prop(rho0, tau))
    ts = np.linspace(0.0, tau, n_nodes)
    vals = np.array([np.linalg.norm(L.apply(prop(rho0, t).matrix)) for t in ts])
    avg = float(simpson(vals, x=ts)) / tau
    if avg <= 1e-14:
        return 0.0
    return abs(1.0 - f) * np.sqrt(rho0.purity()) / avg


def _simple_case_lambda(lambda1: float, tau: float) -> float:
    if lambda1 >= 0:
        raise ValueError("decay constant must be negative")
    return float(np.exp(lambda1 * tau))


def simple_case_avg_coherence(lambda1: float, tau: float) -> float:
    """Closed-form time average of sqrt(2Q) for the single-decay channel
    (r = (1,0,0), lambda3 = 0, w_eq = 0), integrating the printed Q(rho_t, L):

        avg = (1/2tau) [ (1/2 + pi/4)
                         - (Lam/2) sqrt(2 - Lam^2) - asin(Lam/sqrt 2) ].
    """
    lam = _simple_case_lambda(lambda1, tau)
    return (0.5 + np.pi / 4.0
            - 0.5 * lam * np.sqrt(2.0 - lam**2)
            - np.arcsin(lam / np.sqrt(2.0))) / (2.0 * tau)


def simple_case_bound_closed_form(lambda1: float, tau: float) -> float:
    """acos[(1 + Lam)/2] over simple_case_avg_coherence."""
    lam = _simple_case_lambda(lambda1, tau)
    return float(np.arccos((1.0 + lam) / 2.0)) / simple_case_avg_coherence(lambda1, tau)


def simple_case_bound_verbatim(lambda1: float, tau: float) -> float:
    """The printed curve formula, kept exactly as written:

        2 tau acos[(1+Lam)/2] /
        | Lam sqrt(1/4 - (Lam/2) sinh(lambda1 tau)) + asin(Lam/sqrt 2)
          - (1/2 + 3pi/4) |.

    The 3pi/4 constant disagrees with the direct integral (pi/4); both
    variants are emitted by the curve command so the discrepancy is visible.
    """
    lam = _simple_case_lambda(lambda1, tau)
    denom = abs(lam * np.sqrt(0.25 - 0.5 * lam * np.sinh(lambda1 * tau))
                + np.arcsin(lam / np.sqrt(2.0)) - (0.5 + 0.75 * np.pi))
    return 2.0 * tau * float(np.arccos((1.0 + lam) / 2.0)) / denom


@dataclass(frozen=True)
class BoundReport:
    tl: float
    tl_alpha2: float
    tl_alpha_max: tuple[float, float]
    mt_fidelity: float
    qfi: float
    campo: float
    actual_time: float | None
    inputs_digest: str

    def as_dict(self) -> dict:
        return {
            "tl": self.tl, "tl_alpha2": self.tl_alpha2,
            "alpha_max": self.tl_alpha_max[0], "tl_alpha_max": self.tl_alpha_max[1],
            "mt_fidelity": self.mt_fidelity, "qfi": self.qfi, "campo": self.campo,
            "actual_time": self.actual_time, "inputs_digest": self.inputs_digest,
        }


def _digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a, dtype=complex).tobytes())
    return h.hexdigest()[:16]


def bound_report(rho1: QuantumState, H: Observable, rho2: QuantumState,
                 actual_time: float | None = None,
                 alpha_grid=None) -> BoundReport:
    """Evaluate every unitary-case bound on one (rho1, H, rho2) triple."""
    return BoundReport(
        tl=tl_bound(rho1, H, rho2),
        tl_alpha2=alpha_bound(rho1, H, rho2, 2.0),
        tl_alpha_max=alpha_bound_max(rho1, H, rho2, alpha_grid),
        mt_fidelity=mt_fidelity_bound(rho1, H, rho2),
        qfi=qfi_bound(rho1, H, rho2),
        campo=campo_bound(rho1, H, rho2),
        actual_time=actual_time,
        inputs_digest=_digest(rho1.matrix, H.matrix, rho2.matrix),
    )
