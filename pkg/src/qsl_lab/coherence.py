"""Scalar information measures: coherence, affinity, fidelity, variance, QFI."""

from __future__ import annotations

import numpy as np

from .errors import DimMismatch, QslError
from .operator_core import Observable, QuantumState, commutator

IMAG_RESIDUE_TOL = 1e-9
QFI_SUPPORT_TOL = 1e-12


def _real(z: complex) -> float:
    """Real part of a trace quantity; large imaginary residue is an internal error."""
    if abs(np.imag(z)) > IMAG_RESIDUE_TOL:
        raise QslError(f"imaginary residue {np.imag(z):.3e} exceeds {IMAG_RESIDUE_TOL:.0e}")
    return float(np.real(z))


def _check_dims(rho: QuantumState, other) -> None:
    if rho.dim != other.dim:
        raise DimMismatch(f"{rho.dim} vs {other.dim}")


def clamp_acos_arg(x: float) -> float:
    """Clamp to [-1, 1]; roundoff can overshoot by ~1e-15."""
    return min(1.0, max(-1.0, x))


def wy_coherence(rho: QuantumState, H: Observable) -> float:
    """Wigner-Yanase coherence Q(rho, H) = -Tr([sqrt(rho), H]^2) / 2."""
    _check_dims(rho, H)
    c = commutator(rho.sqrt(), H.matrix)
    q = _real(-0.5 * np.trace(c @ c))
    return max(q, 0.0)


def wy_lower_bound(rho: QuantumState, H: Observable) -> float:
    """Commutator quantity -Tr([rho, H]^2) / 2.

    Lower-bounds 2 Q(rho, H) (not Q itself: mixed qubits violate that
    tighter ordering, e.g. purity ~0.9 states with generic H).
    """
    _check_dims(rho, H)
    c = commutator(rho.matrix, H.matrix)
    return max(_real(-0.5 * np.trace(c @ c)), 0.0)


def affinity(rho1: QuantumState, rho2: QuantumState) -> float:
    """A(rho1, rho2) = Tr(sqrt(rho1) sqrt(rho2)), clamped to [0, 1]."""
    _check_dims(rho1, rho2)
    a = _real(np.trace(rho1.sqrt() @ rho2.sqrt()))
    return min(1.0, max(0.0, a))


def uhlmann_fidelity(rho1: QuantumState, rho2: QuantumState) -> float:
    """F = Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))."""
    _check_dims(rho1, rho2)
    s = rho1.sqrt()
    inner = s @ rho2.matrix @ s
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    f = float(np.sqrt(np.clip(w, 0.0, None)).sum())
    return min(1.0, max(0.0, f))


def relative_purity(rho1: QuantumState, rho_t: QuantumState) -> float:
    """f = Tr(rho1 rho_t) / Tr(rho1^2)."""
    _check_dims(rho1, rho_t)
    return _real(np.trace(rho1.matrix @ rho_t.matrix)) / rho1.purity()


def variance(rho: QuantumState, H: Observable) -> float:
    """(Delta H)^2 = Tr(rho H^2) - Tr(rho H)^2."""
    _check_dims(rho, H)
    M = H.matrix
    v = _real(np.trace(rho.matrix @ M @ M)) - _real(np.trace(rho.matrix @ M)) ** 2
    return max(v, 0.0)


def sld_qfi(rho: QuantumState, H: Observable) -> float:
    """SLD quantum Fisher information 2 sum_{jk} (l_j - l_k)^2 / (l_j + l_k) |H_jk|^2.

    Pairs with l_j + l_k <= 1e-12 are skipped (support convention).
    """
    _check_dims(rho, H)
    w = rho.eigenvalues
    V = rho.eigenvectors
    Ht = V.conj().T @ H.matrix @ V
    total = 0.0
    d = rho.dim
    for j in range(d):
        for k in range(d):
            s = w[j] + w[k]
            if s > QFI_SUPPORT_TOL:
                total += 2.0 * (w[j] - w[k]) ** 2 / s * abs(Ht[j, k]) ** 2
    return max(total, 0.0)


def lindblad_coherence(rho: QuantumState, L) -> float:
    """Coherence detected by a Lindblad generator.

    2 Q(rho, L) = Tr((L sqrt(rho))(L sqrt(rho))†) - |Tr(sqrt(rho) L sqrt(rho))|^2,
    with L applied to the positive square root of rho. Returns Q.
    """
    if rho.dim != L.dim:
        raise DimMismatch(f"{rho.dim} vs {L.dim}")
    s = rho.sqrt()
    Ls = L.apply(s)
    two_q = _real(np.trace(Ls @ Ls.conj().T)) - abs(np.trace(s @ Ls)) ** 2
    return max(two_q / 2.0, 0.0)


def chain_diagnostics(rho: QuantumState, H: Observable) -> dict:
    """Compare the variance / QFI / coherence chain in both normalizations.

    Reports whether dH >= sqrt(F_Q)/2 >= sqrt(Q) and the variant with
    sqrt(2Q) hold; the 2Q variant fails for near-pure states.
    """
    dh = float(np.sqrt(variance(rho, H)))
    half_sqrt_fq = float(np.sqrt(sld_qfi(rho, H))) / 2.0
    sq = float(np.sqrt(wy_coherence(rho, H)))
    slack = 1e-10
    return {
        "delta_h": dh,
        "half_sqrt_qfi": half_sqrt_fq,
        "sqrt_q": sq,
        "sqrt_2q": float(np.sqrt(2.0) * sq),
        "chain_q_holds": dh + slack >= half_sqrt_fq >= sq - slack,
        "chain_2q_holds": dh + slack >= half_sqrt_fq >= np.sqrt(2.0) * sq - slack,
    }
