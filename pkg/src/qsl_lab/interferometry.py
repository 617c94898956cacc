"""SWAP-test protocol simulation: moments, eigenvalue recovery, alignment,
and end-to-end estimation of coherence, affinity, and the speed limit."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from .coherence import clamp_acos_arg
from .dynamics import evolve_unitary
from .errors import BadN, DimMismatch, IllConditioned, NoConvergence, ZeroShots
from .operator_core import Observable, QuantumState, commutator, hermitianize

DEGENERACY_GAP = 1e-8
EXACT_RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class ShotEstimate:
    """Sampled overlap value 2P - 1 with its binomial standard error."""

    value: float
    shots: int
    std_error: float


@dataclass(frozen=True)
class PreparedState:
    """Aligned sigma1 = U (sqrt(rho1)/Tr sqrt(rho1)) U† and search telemetry."""

    sigma1: QuantumState
    alignment_residual: float
    iterations: int


def swap_test_probability(sigma1: QuantumState, sigma2: QuantumState) -> float:
    """Acceptance probability P = (1 + Tr(sigma1 sigma2)) / 2 of the swap network."""
    if sigma1.dim != sigma2.dim:
        raise DimMismatch(f"{sigma1.dim} vs {sigma2.dim}")
    overlap = float(np.trace(sigma1.matrix @ sigma2.matrix).real)
    return min(1.0, max(0.0, (1.0 + overlap) / 2.0))


def sample_swap_test(sigma1: QuantumState, sigma2: QuantumState,
                     shots: int, seed: int) -> ShotEstimate:
    """Binomial sampling of the swap test; value = 2 P_hat - 1."""
    if shots <= 0:
        raise ZeroShots(f"shots must be positive, got {shots}")
    p = swap_test_probability(sigma1, sigma2)
    rng = np.random.default_rng(seed)
    p_hat = rng.binomial(shots, p) / shots
    return ShotEstimate(value=2.0 * p_hat - 1.0, shots=shots,
                        std_error=2.0 * np.sqrt(p_hat * (1.0 - p_hat) / shots))


def _cyclic_shift(dim: int, n: int) -> np.ndarray:
    """Permutation operator sending factor i to factor i+1 (mod n) on (C^dim)^n."""
    dn = dim**n
    P = np.zeros((dn, dn))
    for idx in range(dn):
        digits = np.unravel_index(idx, (dim,) * n)
        shifted = (digits[-1],) + digits[:-1]
        P[np.ravel_multi_index(shifted, (dim,) * n), idx] = 1.0
    return P


def power_sums(rho: QuantumState, max_n: int) -> list[float]:
    """Moments Tr(rho^n), n = 1..max_n, as expectations of the cyclic shift on rho^(x)n."""
    if not 1 <= max_n <= rho.dim:
        raise BadN(f"max_n {max_n} outside 1..{rho.dim}")
    out = [1.0]
    kron = rho.matrix
    for n in range(2, max_n + 1):
        kron = np.kron(kron, rho.matrix)
        out.append(float(np.trace(_cyclic_shift(rho.dim, n) @ kron).real))
    return out


def eigs_from_power_sums(moments) -> np.ndarray:
    """Invert Newton's identities and extract the spectrum, descending.

    moments[k-1] = Tr(rho^k) for k = 1..d; the first moment must be 1.
    """
    p = np.asarray(moments, dtype=float)
    d = p.size
    if abs(p[0] - 1.0) > 1e-9:
        raise IllConditioned(f"first moment {p[0]} is not 1")
    e = np.zeros(d + 1)
    e[0] = 1.0
    for k in range(1, d + 1):
        acc = 0.0
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * p[i - 1]
        e[k] = acc / k
    coeffs = [(-1) ** k * e[k] for k in range(d + 1)]
    roots = np.roots(coeffs)
    if np.abs(roots.imag).max() > 1e-8:
        raise IllConditioned(f"complex root residue {np.abs(roots.imag).max():.3e}")
    w = roots.real
    if w.min() < -1e-8:
        raise IllConditioned(f"negative recovered eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    return np.sort(w)[::-1]


def prepare_sigma(eigenvalues, u_tilde) -> QuantumState:
    """U diag(sqrt(l_i) / sum sqrt(l_j)) U†."""
    w = np.sqrt(np.clip(np.asarray(eigenvalues, dtype=float), 0.0, None))
    w = w / w.sum()
    U = np.asarray(u_tilde, dtype=complex)
    return QuantumState(hermitianize((U * w) @ U.conj().T))


def _hermitian_basis(d: int) -> list[np.ndarray]:
    """d^2 Hermitian generators: diagonal units plus symmetric/antisymmetric pairs."""
    basis = []
    for i in range(d):
        E = np.zeros((d, d), dtype=complex)
        E[i, i] = 1.0
        basis.append(E)
    for i, j in combinations(range(d), 2):
        S = np.zeros((d, d), dtype=complex)
        S[i, j] = S[j, i] = 1.0
        basis.append(S)
        A = np.zeros((d, d), dtype=complex)
        A[i, j] = -1j
        A[j, i] = 1j
        basis.append(A)
    return basis


def _alignment_targets(rho1: QuantumState) -> np.ndarray:
    """Expected overlaps Tr(rho1^k sigma1) = Tr(rho1^{k+1/2}) / Tr sqrt(rho1), k=1..d-1."""
    w = rho1.eigenvalues
    tr_sqrt = np.sqrt(w).sum()
    return np.array([(w ** (k + 0.5)).sum() / tr_sqrt for k in range(1, rho1.dim)])


def basis_alignment_search(rho1: QuantumState, shots: int | None = None,
                           seed: int = 0, max_iters: int = 2000) -> PreparedState:
    """Find sigma1 whose basis matches rho1 by tuning the preparation unitary.

    The matching conditions are the overlaps Tr(rho1^k sigma1), k = 1..d-1,
    against their spectrum-derived targets; for a nondegenerate spectrum
    these are maximized exactly at alignment, so matching pins the basis.
    In exact mode (shots None) the alignment is solved in closed form from
    the known eigenbasis. In shot mode the tuning loop itself is idealized
    (the knob is turned against exact readout) and the reported residual is
    a sampled swap-test measurement of the k = 1 condition.
    """
    d = rho1.dim
    w = rho1.eigenvalues
    tr_sqrt = float(np.sqrt(w).sum())
    targets = _alignment_targets(rho1)

    gaps = -np.diff(w)
    if d == 1 or (gaps.size and gaps.min() < DEGENERACY_GAP):
        # alignment inside a degenerate subspace is unobservable
        sigma = prepare_sigma(w, rho1.eigenvectors)
        return PreparedState(sigma1=sigma, alignment_residual=0.0, iterations=0)

    def overlaps(sigma: QuantumState) -> np.ndarray:
        return np.array([float(np.trace(rho1.power(k) @ sigma.matrix).real)
                         for k in range(1, d)])

    if shots is None:
        sigma = prepare_sigma(w, rho1.eigenvectors)
        res = float(np.abs(overlaps(sigma) - targets).max())
        return PreparedState(sigma1=sigma, alignment_residual=res, iterations=0)

    basis = _hermitian_basis(d)

    def sigma_of(theta: np.ndarray) -> QuantumState:
        G = sum(t * B for t, B in zip(theta, basis))
        return prepare_sigma(w, expm(1j * G))

    def cost(theta: np.ndarray) -> float:
        return float(np.sum((overlaps(sigma_of(theta)) - targets) ** 2))

    rng = np.random.default_rng(seed)
    best = None
    iters = 0
    for attempt in range(8):
        x0 = np.zeros(d * d) if attempt == 0 else rng.normal(scale=1.0, size=d * d)
        r = minimize(cost, x0, method="Nelder-Mead",
                     options={"maxiter": max_iters, "xatol": 1e-10, "fatol": 1e-16})
        iters += r.nit
        if best is None or r.fun < best.fun:
            best = r
        if best.fun < (EXACT_RESIDUAL_TOL / 10) ** 2:
            break
    if best is None or not np.isfinite(best.fun) or best.fun > 1e-4:
        raise NoConvergence(f"alignment cost stuck at {best.fun if best else np.nan:.3e}")
    sigma = sigma_of(best.x)
    measured = sample_swap_test(sigma, QuantumState(rho1.matrix), shots, seed)
    res = abs(measured.value - targets[0])
    return PreparedState(sigma1=sigma, alignment_residual=res, iterations=iters)


def estimate_fidelity_exact(rho1: QuantumState, rho2: QuantumState) -> float:
    """Fidelity from the prepared sigma1 and rho2 (exact mode only):
    F = Tr sqrt(sigma1^{1/2} rho2 sigma1^{1/2}) * sqrt(Tr sqrt(rho1))-rescaling."""
    prep = basis_alignment_search(rho1)
    tr_sqrt = float(np.sqrt(rho1.eigenvalues).sum())
    s = prep.sigma1.matrix
    # F = Tr sqrt(rho1 rho2) spectrum-wise; rho1 = (tr_sqrt * sigma1)^2
    wv = np.linalg.eigvals(s @ s @ rho2.matrix)
    f = float(np.sqrt(np.clip(wv.real, 0.0, None)).sum()) * tr_sqrt
    return min(1.0, max(0.0, f))


def estimate_tl_from_protocol(rho1: QuantumState, H: Observable, t: float,
                              shots: int | None = None, seed: int = 0,
                              dtau: float = 0.4) -> tuple[float, float]:
    """End-to-end protocol estimate of the speed limit and its error bar.

    Pipeline: moments -> spectrum -> alignment -> overlap measurements ->
    rescaled coherence and affinity -> the bound formula. In shot mode the
    coherence is read off a finite-difference of overlaps at time step dtau,
    W = 2 hbar^2 (Tr sigma1^2 - Tr(sigma1 sigma1(dtau))) / dtau^2, and errors
    propagate to first order; exact mode returns error bar 0.
    """
    eigs = eigs_from_power_sums(power_sums(rho1, rho1.dim))
    tr_sqrt = float(np.sqrt(eigs).sum())
    prep = basis_alignment_search(rho1, shots=shots, seed=seed)
    sigma1 = prep.sigma1
    rho2 = evolve_unitary(rho1, H, t)
    sigma2 = QuantumState(evolve_unitary(sigma1, H, t).matrix)
    hbar = H.hbar

    if shots is None:
        a = float(np.trace(sigma1.matrix @ sigma2.matrix).real) * tr_sqrt**2
        c = commutator(sigma1.matrix, H.matrix)
        w_exact = float(-np.trace(c @ c).real)
        q = w_exact * tr_sqrt**2 / 2.0
        angle = float(np.arccos(clamp_acos_arg(a)))
        if q <= 0:
            return 0.0, 0.0
        return hbar / np.sqrt(2.0) * angle / np.sqrt(q), 0.0

    est_a = sample_swap_test(sigma1, sigma2, shots, seed)
    sigma1_d = evolve_unitary(sigma1, H, dtau)
    est_self = sample_swap_test(sigma1, sigma1, shots, seed + 1)
    est_shift = sample_swap_test(sigma1, sigma1_d, shots, seed + 2)

    a = clamp_acos_arg(est_a.value * tr_sqrt**2)
    w_fd = 2.0 * hbar**2 * (est_self.value - est_shift.value) / dtau**2
    sig_a = est_a.std_error * tr_sqrt**2
    sig_w = 2.0 * hbar**2 / dtau**2 * np.hypot(est_self.std_error, est_shift.std_error)
    sig_q = sig_w * tr_sqrt**2 / 2.0
    # a sampled coherence below its own noise floor is unresolved; flooring
    # at one standard error keeps the estimate finite with an honest bar
    q = max(w_fd * tr_sqrt**2 / 2.0, sig_q, 1e-12)
    angle = float(np.arccos(a))
    tl = hbar / np.sqrt(2.0) * angle / np.sqrt(q)
    dtl_da = -(hbar / np.sqrt(2.0)) / (np.sqrt(max(1.0 - a**2, 1e-12)) * np.sqrt(q))
    dtl_dq = -tl / (2.0 * q)
    err = float(np.hypot(dtl_da * sig_a, dtl_dq * sig_q))
    return tl, err
