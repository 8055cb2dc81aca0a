"""Quantum reset models: closed forms used as analytic oracles.

A reset model relaxes toward a fixed target state ``T`` at rate ``Gamma``:

    L(rho) = -i[H, rho] + Gamma (T tr(rho) - rho),

realised in Lindblad form by the jump operators
``sqrt(Gamma p_k) |phi_k><e_l|`` over the eigenpairs ``(p_k, phi_k)`` of
``T`` and an orthonormal basis ``{e_l}``.  Everything about these models is
explicit: the spectrum of the generator, the stationary state, the
propagator, and — in the commuting case ``[H, T] = 0`` — the equivalent
classical chain, the law of ``Delta S`` and its moment generating function.
Multi-reservoir versions split ``H`` with weights ``lambda_j`` summing to 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .detailed_balance import DB_TOL
from .entropy import relative_entropy
from .lindblad import (
    Lindbladian,
    Reservoir,
    ReservoirDecomposition,
    superoperator,
    unvectorize,
    vectorize,
)
from .operators import (
    HypothesisViolation,
    SpectralDecomposition,
    check_density_matrix,
    check_gens,
    commutator,
    dagger,
    require_faithful,
    require_hermitian,
    require_same_dim,
    spectral_decompose,
    trace_norm,
)
from .two_time import DeltaDistribution, _aggregate_deltas

__all__ = [
    "QrmSpec",
    "build_qrm",
    "apply_reset",
    "check_bohr",
    "qrm_spectrum",
    "qrm_steady_state",
    "qrm_propagate_closed",
    "qrm_chain_closed",
    "qrm_delta_closed",
    "qrm_mgf_closed",
    "qrm_expected_delta_closed",
    "qrm_ep_closed",
    "build_multi_reservoir",
]


@dataclass
class QrmSpec:
    """Data of one reset coupling: target state, rate, Hamiltonian weight.

    ``lam`` scales the Hamiltonian (``H_eff = lam * hamiltonian``); it is 1
    for a standalone model and the splitting weight in multi-reservoir
    constructions.
    """

    hamiltonian: np.ndarray
    reset_state: np.ndarray
    gamma: float
    lam: float = 1.0
    label: str = ""

    def __post_init__(self):
        self.hamiltonian = require_hermitian(self.hamiltonian, name="hamiltonian")
        self.reset_state = check_density_matrix(self.reset_state, name="reset_state")
        require_same_dim(self.hamiltonian, self.reset_state)
        if self.gamma <= 0:
            raise ValueError(f"reset rate must be positive, got {self.gamma}")

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def effective_hamiltonian(self) -> np.ndarray:
        return self.lam * self.hamiltonian


def build_qrm(spec: QrmSpec) -> Lindbladian:
    """Lindblad realisation of the reset model.

    Jump operators ``sqrt(Gamma p_k) |phi_k><e_l|`` reproduce the dissipator
    ``Gamma (T tr(rho) - rho)``; in particular ``Phi(X) = Gamma tr(T X) I``.
    """
    d = spec.dim
    w, V = np.linalg.eigh(spec.reset_state)
    w = np.clip(w, 0.0, None)
    kraus = []
    for k in range(d):
        if w[k] == 0.0:
            continue
        amp = np.sqrt(spec.gamma * w[k])
        for l in range(d):
            G = np.zeros((d, d), dtype=complex)
            G[:, l] = amp * V[:, k]
            kraus.append(G)
    return Lindbladian(
        hamiltonian=spec.effective_hamiltonian(), kraus=tuple(kraus), label=spec.label
    )


def apply_reset(spec: QrmSpec, rho) -> np.ndarray:
    """Direct action ``-i[H_eff, rho] + Gamma (T tr(rho) - rho)``."""
    rho = np.asarray(rho, dtype=complex)
    H = spec.effective_hamiltonian()
    return (
        -1j * commutator(H, rho)
        + spec.gamma * (spec.reset_state * np.trace(rho) - rho)
    )


def check_bohr(H, gap_tol: float | None = None) -> bool:
    """True iff the nonzero Bohr frequencies of ``H`` are simple.

    Bohr frequencies are the differences of eigenvalues of ``H``; the
    admissibility condition asks that each nonzero difference is attained by
    exactly one ordered pair of distinct eigenvalues.
    """
    H = require_hermitian(H, name="hamiltonian")
    w = np.linalg.eigvalsh(H)
    if gap_tol is None:
        spread = float(w[-1] - w[0]) if len(w) > 1 else 0.0
        gap_tol = 1e-9 * (spread + 1.0)
    diffs = sorted(
        float(w[i] - w[j]) for i in range(len(w)) for j in range(len(w)) if i != j
    )
    nonzero = [x for x in diffs if abs(x) > gap_tol]
    return all(b - a > gap_tol for a, b in zip(nonzero, nonzero[1:]))


def qrm_spectrum(spec: QrmSpec) -> list:
    """Spectrum of the generator with multiplicities: ``[(eigenvalue, m)]``.

    The spectrum is ``{0}`` together with ``{-Gamma - i a}`` for ``a`` in the
    spectrum of ``ad_H_eff``, where ``-Gamma`` (from ``a = 0``) appears with
    multiplicity ``dim ker(ad_H) - 1``.  Total multiplicity is ``d^2``.
    """
    w = np.linalg.eigvalsh(spec.effective_hamiltonian())
    mults: dict = {}
    for i in range(len(w)):
        for j in range(len(w)):
            key = round(float(w[i] - w[j]), 12)
            mults[key] = mults.get(key, 0) + 1
    out = [(0.0 + 0.0j, 1)]
    for a, m in sorted(mults.items()):
        m_eff = m - 1 if abs(a) < 1e-12 else m
        if m_eff > 0:
            out.append((complex(-spec.gamma, -a), m_eff))
    return out


def qrm_steady_state(spec: QrmSpec) -> np.ndarray:
    """Unique stationary state ``Gamma (i ad_H + Gamma)^{-1}(T)``."""
    d = spec.dim
    H = spec.effective_hamiltonian()
    ad = superoperator(lambda X: commutator(H, X), d)
    sol = np.linalg.solve(1j * ad + spec.gamma * np.eye(d * d), spec.gamma * vectorize(spec.reset_state))
    rho = unvectorize(sol)
    return (rho + dagger(rho)) / 2.0


def qrm_propagate_closed(spec: QrmSpec, rho0, t: float) -> np.ndarray:
    """Closed-form ``exp(tL)(rho_0)``.

    ``exp(tL)(rho_0) = rho+ + exp(-t Gamma) U_t (rho_0 - rho+) U_t*`` with
    ``U_t = exp(-i t H_eff)`` (for unit-trace ``rho_0``).
    """
    rho0 = check_density_matrix(rho0, name="rho0")
    require_same_dim(rho0, spec.hamiltonian)
    if t < 0:
        raise ValueError("t must be nonnegative")
    rho_plus = qrm_steady_state(spec)
    w, V = np.linalg.eigh(spec.effective_hamiltonian())
    Ut = (V * np.exp(-1j * t * w)) @ dagger(V)
    out = rho_plus + np.exp(-t * spec.gamma) * (Ut @ (rho0 - rho_plus) @ dagger(Ut))
    return (out + dagger(out)) / 2.0


def _require_commuting(spec: QrmSpec, tol: float = 1e-10) -> None:
    defect = trace_norm(commutator(spec.effective_hamiltonian(), spec.reset_state))
    if defect > tol:
        raise HypothesisViolation(
            f"closed form requires [H, T] = 0 (defect {defect:.3e}); "
            "detailed balance fails otherwise"
        )


def _reset_entropy_levels(spec: QrmSpec) -> SpectralDecomposition:
    """Spectral data of ``S = -log T`` (simple spectrum required)."""
    T = require_faithful(spec.reset_state, name="reset_state")
    dec = spectral_decompose(T)
    if len(dec.values) != spec.dim:
        raise HypothesisViolation("reset state must have simple spectrum")
    order = np.argsort(-np.log(dec.values))
    return SpectralDecomposition(
        values=-np.log(dec.values[order]),
        projectors=tuple(dec.projectors[i] for i in order),
        multiplicities=tuple(dec.multiplicities[i] for i in order),
    )


def qrm_chain_closed(spec: QrmSpec):
    """Classical chain of a commuting reset model: ``(P(t) closure, Q)``.

    ``P_{ss'}(t) = e^{-s'} (1 - e^{-t Gamma}) + e^{-t Gamma} delta_{ss'}``
    and ``Q_{ss'} = Gamma (e^{-s'} - delta_{ss'})``.
    """
    _require_commuting(spec)
    states = _reset_entropy_levels(spec).values
    weights = np.exp(-states)
    d = len(states)
    rates = spec.gamma * (np.tile(weights, (d, 1)) - np.eye(d))

    def transition(t: float) -> np.ndarray:
        if t < 0:
            raise ValueError("t must be nonnegative")
        decay = np.exp(-t * spec.gamma)
        return (1.0 - decay) * np.tile(weights, (d, 1)) + decay * np.eye(d)

    return transition, rates


def qrm_delta_closed(spec: QrmSpec, rho0, t: float, gap_tol: float | None = None) -> DeltaDistribution:
    """Closed-form law of ``Delta S`` for a commuting reset model.

    ``Q(Delta S = s'-s) = (1-e^{-t Gamma}) <rho_0|P_s> e^{-s'}`` off the
    diagonal, and the diagonal carries the extra mass ``e^{-t Gamma}``.
    Requires ``[H, T] = 0``, faithful simple-spectrum ``T`` with generic
    gaps, and a faithful initial state.
    """
    rho0 = require_faithful(check_density_matrix(rho0, name="rho0"))
    require_same_dim(rho0, spec.hamiltonian)
    if t < 0:
        raise ValueError("t must be nonnegative")
    _require_commuting(spec)
    levels = _reset_entropy_levels(spec)
    if not check_gens(levels, gap_tol):
        raise HypothesisViolation("entropy levels must have generic gaps")
    states = levels.values
    pi0 = np.array([float(np.real(np.vdot(rho0, P))) for P in levels.projectors])
    decay = np.exp(-t * spec.gamma)
    matrix = (1.0 - decay) * np.outer(pi0, np.exp(-states)) + decay * np.diag(pi0)
    return _aggregate_deltas(states, matrix, gap_tol)


def qrm_mgf_closed(spec: QrmSpec, rho0, t: float, alpha: float) -> float:
    """Closed-form MGF of a commuting reset model.

    ``E(e^{alpha Delta S}) = tr(Diag_S(rho_0) T^alpha) tr(T^{1-alpha}) (1-e^{-tG}) + e^{-tG}``.
    """
    rho0 = check_density_matrix(rho0, name="rho0")
    require_same_dim(rho0, spec.hamiltonian)
    _require_commuting(spec)
    T = require_faithful(spec.reset_state, name="reset_state")
    w, V = np.linalg.eigh(T)
    Ta = (V * np.power(w, alpha)) @ dagger(V)
    T1a = (V * np.power(w, 1.0 - alpha)) @ dagger(V)
    decay = np.exp(-t * spec.gamma)
    first = float(np.real(np.trace(rho0 @ Ta)))
    # Diag_S(rho_0) and rho_0 have the same trace against functions of T
    return first * float(np.real(np.trace(T1a))) * (1.0 - decay) + decay


def qrm_expected_delta_closed(spec: QrmSpec, rho0, t: float) -> float:
    """``E(Delta S) = (1 - e^{-t Gamma}) <T - Diag_S(rho_0)|S>``."""
    rho0 = check_density_matrix(rho0, name="rho0")
    require_same_dim(rho0, spec.hamiltonian)
    _require_commuting(spec)
    S = _reset_entropy_levels(spec).operator()
    # tr(Diag_S(rho_0) S) = tr(rho_0 S) since S commutes with its projectors
    value = float(np.real(np.trace((spec.reset_state - rho0) @ S)))
    return (1.0 - np.exp(-t * spec.gamma)) * value


def qrm_ep_closed(spec: QrmSpec, rho) -> float:
    """Entropy production of a commuting reset model in state ``rho``.

    ``EP(rho) = Gamma (Ent(T|rho) + Ent(rho|T))`` when ``[H, T] = 0`` (then
    ``rho+ = T``), for faithful ``rho``.
    """
    _require_commuting(spec)
    rho = require_faithful(check_density_matrix(rho))
    T = require_faithful(spec.reset_state, name="reset_state")
    return spec.gamma * (relative_entropy(T, rho) + relative_entropy(rho, T))


def build_multi_reservoir(parts: Sequence[QrmSpec]) -> ReservoirDecomposition:
    """Assemble ``L = sum_j L_j`` from reset couplings sharing one Hamiltonian.

    The weights ``lam_j`` must sum to 1 (negative weights are legal but
    flagged); the total is again a reset model with rate ``Gamma = sum_j
    Gamma_j`` and target ``T = sum_j (Gamma_j/Gamma) T_j``.  Each reservoir
    records the stationary state of its own sub-generator.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("at least one reset coupling is required")
    H = parts[0].hamiltonian
    for p in parts[1:]:
        require_same_dim(H, p.hamiltonian)
        if np.abs(p.hamiltonian - H).max() > 1e-12:
            raise ValueError("all couplings must share the same Hamiltonian")
    lam_sum = sum(p.lam for p in parts)
    if abs(lam_sum - 1.0) > 1e-9:
        raise ValueError(f"Hamiltonian weights must sum to 1, got {lam_sum:.12g}")
    if any(p.lam < 0 for p in parts):
        warnings.warn("negative Hamiltonian weights are unusual", stacklevel=2)

    gamma_total = sum(p.gamma for p in parts)
    target = sum(p.gamma * p.reset_state for p in parts) / gamma_total
    total_spec = QrmSpec(hamiltonian=H, reset_state=target, gamma=gamma_total, lam=1.0)
    reservoirs = []
    for j, p in enumerate(parts):
        lind = build_qrm(p)
        lind.label = p.label or f"reset_{j + 1}"
        reservoirs.append(
            Reservoir(lindbladian=lind, steady_state=qrm_steady_state(p), label=lind.label)
        )
    total = build_qrm(total_spec)
    total.label = "total"
    return ReservoirDecomposition(reservoirs=tuple(reservoirs), total=total)
