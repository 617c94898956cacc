"""State propagation: unitary orbits, Lindblad semigroups, damping basis."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import (
    BadUnitVector,
    BasisMismatch,
    DimMismatch,
    InvalidStateProduced,
    NonHermitian,
    NotReached,
)
from .operator_core import (
    PAULI_Z,
    SIGMA_MINUS,
    SIGMA_PLUS,
    Observable,
    QuantumState,
    herm_deviation,
    hermitian_eig,
    hermitianize,
    psd_sqrt,
    unitary_of,
    validate_bloch,
)

REHERM_TOL = 1e-8
STATE_EIG_TOL = 1e-8


@dataclass(frozen=True)
class LindbladModel:
    """Generator L rho = (i/hbar)[rho, H] + (1/2) sum c_ij ([A_i, rho A_j†] + [A_i rho, A_j†]).

    H may be None for a purely dissipative generator. coeffs must be
    Hermitian; a non-PSD coeff matrix only triggers a warning (the map is
    then not guaranteed completely positive).
    """

    H: Observable | None
    jump_ops: tuple
    coeffs: np.ndarray
    hbar: float = 1.0

    def __init__(self, H, jump_ops, coeffs, hbar: float = 1.0) -> None:
        ops = tuple(np.asarray(A, dtype=complex) for A in jump_ops)
        c = np.asarray(coeffs, dtype=complex)
        if c.shape != (len(ops), len(ops)):
            raise DimMismatch(f"coeff matrix {c.shape} vs {len(ops)} jump operators")
        if herm_deviation(c) > 1e-12:
            raise NonHermitian("coefficient matrix must be Hermitian")
        if len(ops) and np.linalg.eigvalsh(hermitianize(c)).min() < -1e-10:
            warnings.warn("coefficient matrix is not PSD; map may not be completely positive",
                          stacklevel=2)
        d = H.dim if H is not None else ops[0].shape[0]
        for A in ops:
            if A.shape != (d, d):
                raise DimMismatch(f"jump operator shape {A.shape} vs dim {d}")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "jump_ops", ops)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "hbar", float(hbar))

    @property
    def dim(self) -> int:
        return self.H.dim if self.H is not None else self.jump_ops[0].shape[0]

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Action of the generator on an operator."""
        X = np.asarray(X, dtype=complex)
        if X.shape != (self.dim, self.dim):
            raise DimMismatch(f"{X.shape} vs dim {self.dim}")
        out = np.zeros_like(X)
        if self.H is not None:
            # (i/hbar)[H, X]: the sign partnering U = exp(+iHt/hbar), so the
            # c = 0 semigroup coincides with unitary conjugation
            Hm = self.H.matrix
            out = out + 1j / self.hbar * (Hm @ X - X @ Hm)
        c = self.coeffs
        for i, Ai in enumerate(self.jump_ops):
            for j, Aj in enumerate(self.jump_ops):
                if c[i, j] == 0:
                    continue
                Ajd = Aj.conj().T
                XAjd = X @ Ajd
                AiX = Ai @ X
                out = out + 0.5 * c[i, j] * (Ai @ XAjd - XAjd @ Ai + AiX @ Ajd - Ajd @ AiX)
        return out


def build_superoperator(L: LindbladModel) -> np.ndarray:
    """d^2 x d^2 matrix of the generator acting on row-major vectorized operators."""
    d = L.dim
    S = np.zeros((d * d, d * d), dtype=complex)
    for k in range(d * d):
        E = np.zeros(d * d, dtype=complex)
        E[k] = 1.0
        S[:, k] = L.apply(E.reshape(d, d)).reshape(-1)
    return S


class LindbladPropagator:
    """Caches exp(t S) evaluation for repeated propagation of one model."""

    def __init__(self, L: LindbladModel) -> None:
        self.model = L
        self.S = build_superoperator(L)
        w, V = np.linalg.eig(self.S)
        cond = np.linalg.cond(V)
        if np.isfinite(cond) and cond < 1e8:
            self._eig = (w, V, np.linalg.inv(V))
        else:
            self._eig = None  # defective generator, fall back to expm

    def propagator(self, t: float) -> np.ndarray:
        if self._eig is not None:
            w, V, Vinv = self._eig
            return (V * np.exp(w * t)) @ Vinv
        return expm(self.S * t)

    def __call__(self, rho0: QuantumState, t: float) -> QuantumState:
        v = self.propagator(t) @ rho0.matrix.reshape(-1)
        M = v.reshape(rho0.dim, rho0.dim)
        if herm_deviation(M) > REHERM_TOL:
            raise InvalidStateProduced(
                f"Hermiticity deviation {herm_deviation(M):.3e} after propagation")
        M = hermitianize(M)
        if np.linalg.eigvalsh(M).min() < -STATE_EIG_TOL:
            raise InvalidStateProduced("negative eigenvalue beyond tolerance (non-CP model?)")
        M = _clip_psd(M)
        return QuantumState(M)


def _clip_psd(M: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(M)
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    return hermitianize((V * w) @ V.conj().T)


def evolve_unitary(rho0: QuantumState, H: Observable, t: float) -> QuantumState:
    """U(t) rho0 U(t)† with U = exp(+iHt/hbar)."""
    U = unitary_of(H, t)
    return QuantumState(hermitianize(U @ rho0.matrix @ U.conj().T))


def evolve_lindblad(rho0: QuantumState, L: LindbladModel, t: float) -> QuantumState:
    """exp(t L) rho0 via the vectorized superoperator."""
    return LindbladPropagator(L)(rho0, t)


def qubit_evolution_closed_form(r, n_hat, a: float, hbar: float = 1.0) -> np.ndarray:
    """Bloch vector after conjugation by U = exp(+i(a/hbar) n.sigma).

    Rotation by angle -2a/hbar about n:
        r' = r cos(2a/hbar) + n (n.r)(1 - cos(2a/hbar)) - (n x r) sin(2a/hbar).
    The n(n.r) and cosine terms match the printed per-component formula;
    the cross term is required for agreement with matrix conjugation
    (verified against evolve_unitary and the worked qubit cases).
    """
    r = validate_bloch(r)
    n = np.asarray(n_hat, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise BadUnitVector(f"|n| = {np.linalg.norm(n)}")
    th = 2.0 * a / hbar
    return r * np.cos(th) + n * np.dot(n, r) * (1.0 - np.cos(th)) - np.cross(n, r) * np.sin(th)


@dataclass(frozen=True)
class DampingBasis:
    """Biorthogonal eigen-operator basis of a Lindblad generator."""

    left_ops: tuple
    right_ops: tuple
    eigenvalues: tuple

    def __init__(self, left_ops, right_ops, eigenvalues,
                 generator: LindbladModel | None = None) -> None:
        left = tuple(np.asarray(M, dtype=complex) for M in left_ops)
        right = tuple(np.asarray(M, dtype=complex) for M in right_ops)
        lam = tuple(float(x) for x in eigenvalues)
        n = len(left)
        if not (len(right) == len(lam) == n):
            raise DimMismatch("left/right/eigenvalue counts differ")
        for i in range(n):
            for j in range(n):
                want = 1.0 if i == j else 0.0
                if abs(np.trace(left[i] @ right[j]) - want) > 1e-10:
                    raise BasisMismatch(f"Tr(L_{i} R_{j}) != {want}")
        if generator is not None:
            for lam_i, R in zip(lam, right):
                if np.abs(generator.apply(R) - lam_i * R).max() > 1e-10:
                    raise BasisMismatch("right operator fails the eigen-relation")
        object.__setattr__(self, "left_ops", left)
        object.__setattr__(self, "right_ops", right)
        object.__setattr__(self, "eigenvalues", lam)


def squeezed_vacuum_model(rate1: float, rate2: float, rate3: float,
                          w_eq: float = 0.0, rabi: float = 0.0,
                          hbar: float = 1.0) -> tuple[LindbladModel, DampingBasis]:
    """Two-level atom in a squeezed vacuum channel.

    Inputs are the rates (1/T1, 1/T2, 1/T3); jump operators are
    (sigma+, sigma-, sigma_z/sqrt(2)) and the coefficient matrix is
    [[r1(1-w)/2, -r3, 0], [-r3, r1(1+w)/2, 0], [0, 0, r2 - r1/2]].
    Decay constants: lambda_1 = -(r2 + r3), lambda_2 = -(r2 - r3),
    lambda_3 = -r1. The basis is the damping basis of the dissipative
    part (rabi = 0); with a drive the table no longer diagonalizes L.
    """
    r1, r2, r3 = float(rate1), float(rate2), float(rate3)
    c = np.array([
        [0.5 * r1 * (1 - w_eq), -r3, 0.0],
        [-r3, 0.5 * r1 * (1 + w_eq), 0.0],
        [0.0, 0.0, r2 - 0.5 * r1],
    ], dtype=complex)
    jumps = (SIGMA_PLUS, SIGMA_MINUS, PAULI_Z / np.sqrt(2))
    H = None
    if rabi != 0.0:
        H = Observable(hbar * rabi / 2 * (SIGMA_MINUS + SIGMA_PLUS), hbar=hbar)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # c is indefinite whenever r3 is large
        model = LindbladModel(H, jumps, c, hbar=hbar)
        dissipative = model if rabi == 0.0 else LindbladModel(None, jumps, c, hbar=hbar)
    eye = np.eye(2, dtype=complex)
    sx = SIGMA_PLUS + SIGMA_MINUS
    left = (eye / np.sqrt(2), sx / np.sqrt(2),
            (SIGMA_PLUS - SIGMA_MINUS) / np.sqrt(2),
            (-w_eq * eye + PAULI_Z) / np.sqrt(2))
    right = ((eye + w_eq * PAULI_Z) / np.sqrt(2), sx / np.sqrt(2),
             (SIGMA_MINUS - SIGMA_PLUS) / np.sqrt(2), PAULI_Z / np.sqrt(2))
    lam = (0.0, -(r2 + r3), -(r2 - r3), -r1)
    basis = DampingBasis(left, right, lam, generator=dissipative)
    return model, basis


def damping_basis_evolution(rho0: QuantumState, basis: DampingBasis, t: float) -> QuantumState:
    """rho_t = sum_i Tr(L_i rho0) exp(lambda_i t) R_i."""
    M = np.zeros_like(rho0.matrix)
    for Li, Ri, lam in zip(basis.left_ops, basis.right_ops, basis.eigenvalues):
        M = M + np.trace(Li @ rho0.matrix) * np.exp(lam * t) * Ri
    if herm_deviation(M) > REHERM_TOL:
        raise InvalidStateProduced("damping-basis propagation lost Hermiticity")
    return QuantumState(_clip_psd(hermitianize(M)))


def affinity_closed_form_markovian(r, eigenvalues, w_eq: float, t: float) -> float:
    """Printed closed-form affinity A(rho_0, rho_t) of the squeezed-vacuum example.

    Numerically identical to Tr(sqrt(rho_0) exp(Lt) sqrt(rho_0)), i.e. it
    presumes the square root follows the semigroup. That law fails even in
    the simple case (r = (1,0,0), lambda_3 = 0, w_eq = 0), so this is a
    documented secondary check, not a substitute for the spectral affinity.
    """
    r = validate_bloch(r)
    lam1, lam2, lam3 = eigenvalues[1], eigenvalues[2], eigenvalues[3]
    rn2 = float(np.dot(r, r))
    m = 1.0 - rn2
    lp, lm = 1.0 + np.sqrt(m), 1.0 - np.sqrt(m)
    L1, L2, L3 = np.exp(lam1 * t), np.exp(lam2 * t), np.exp(lam3 * t)
    return 0.5 * (lp - r[2] * w_eq * (L3 - 1.0)
                  + lm / rn2 * (r[0] ** 2 * L1 + r[1] ** 2 * L2 + r[2] ** 2 * L3))


@dataclass(frozen=True)
class EvolutionPath:
    times: np.ndarray
    states: tuple
    generator_tag: str = field(default="unitary")


def evolve_path(rho0: QuantumState, generator, times) -> EvolutionPath:
    """Propagate rho0 to every node of an ascending time grid."""
    times = np.asarray(times, dtype=float)
    if isinstance(generator, Observable):
        states = tuple(evolve_unitary(rho0, generator, t) for t in times)
        tag = "unitary"
    else:
        prop = LindbladPropagator(generator)
        states = tuple(prop(rho0, t) for t in times)
        tag = "lindblad"
    return EvolutionPath(times=times, states=states, generator_tag=tag)


def first_passage_time(rho0: QuantumState, generator, rho_target: QuantumState,
                       tol: float = 1e-9, t_max: float = 2 * np.pi,
                       scan_nodes: int = 1000) -> float:
    """Earliest t in [0, t_max] with ||rho(t) - rho_target||_F <= tol.

    Dense scan followed by bisection refinement to 1e-10 in t.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    target = rho_target.matrix

    if isinstance(generator, Observable):
        w, V = hermitian_eig(generator)
        rho_eig = V.conj().T @ rho0.matrix @ V
        tgt_eig = V.conj().T @ target @ V

        def dist(t: float) -> float:
            ph = np.exp(1j * w * t / generator.hbar)
            return float(np.linalg.norm(np.outer(ph, ph.conj()) * rho_eig - tgt_eig))
    else:
        prop = LindbladPropagator(generator)

        def dist(t: float) -> float:
            v = prop.propagator(t) @ rho0.matrix.reshape(-1)
            return float(np.linalg.norm(v - target.reshape(-1)))

    ts = np.linspace(0.0, t_max, scan_nodes)
    ds = np.array([dist(t) for t in ts])
    if ds[0] <= tol:
        return 0.0
    # candidate minima of the sampled distance, earliest first
    interior = np.where((ds[1:-1] <= ds[:-2]) & (ds[1:-1] <= ds[2:]))[0] + 1
    candidates = list(interior)
    if ds[-1] < ds[-2]:
        candidates.append(len(ts) - 1)
    for i in candidates:
        lo = ts[max(i - 1, 0)]
        hi = ts[min(i + 1, len(ts) - 1)]
        # golden-section refinement of the local minimum
        gr = (np.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c, d = b - gr * (b - a), a + gr * (b - a)
        fc, fd = dist(c), dist(d)
        while b - a > 1e-12:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - gr * (b - a)
                fc = dist(c)
            else:
                a, c, fc = c, d, fd
                d = a + gr * (b - a)
                fd = dist(d)
        t_min = 0.5 * (a + b)
        if dist(t_min) > tol:
            continue
        # bisect for the earliest crossing below tol
        lo_t, hi_t = ts[max(i - 1, 0)], t_min
        if dist(lo_t) <= tol:
            return float(lo_t)
        while hi_t - lo_t > 1e-10:
            mid = 0.5 * (lo_t + hi_t)
            if dist(mid) <= tol:
                hi_t = mid
            else:
                lo_t = mid
        return float(hi_t)
    raise NotReached(f"target not reached within t_max = {t_max}")


def sqrt_evolution_diagnostic(rho0: QuantumState, L: LindbladModel, t_grid,
                              fd_step: float = 1e-5) -> dict:
    """Compare d/dt sqrt(rho_t) (central differences) with L applied to sqrt(rho_t).

    The claim that they agree is exact for unitary conjugation and for
    commuting (dephasing) structures but not in general; this only
    reports the deviation, it takes no position.
    """
    prop = LindbladPropagator(L)
    devs = []
    for t in np.asarray(t_grid, dtype=float):
        sp = psd_sqrt(prop(rho0, t + fd_step).matrix)
        sm = psd_sqrt(prop(rho0, max(t - fd_step, 0.0)).matrix)
        dt = (t + fd_step) - max(t - fd_step, 0.0)
        lhs = (sp - sm) / dt
        rhs = L.apply(psd_sqrt(prop(rho0, t).matrix))
        devs.append(float(np.linalg.norm(lhs - rhs)))
    return {"times": np.asarray(t_grid, dtype=float), "deviations": np.array(devs),
            "max_deviation": max(devs)}
