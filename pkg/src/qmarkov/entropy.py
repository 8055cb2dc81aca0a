"""Entropy, relative entropy, entropy production and entropy balance.

Entropy production of a state ``rho`` relative to one reservoir
``(L_j, rho_j+)`` — where ``rho_j+`` is a faithful stationary state of the
sub-generator ``L_j`` — is

    EP_j(rho) = <L_j(rho) | log rho_j+ - log rho>,

with the convention ``a * log 0 = 0`` if ``a = 0`` and ``-infinity``
otherwise, so ``EP_j`` takes values in ``[0, +infinity]``.  The entropy
balance equation along the flow of ``L = sum_j L_j`` reads

    d/dt S(rho_t) = EP(rho_t) + sum_j <rho_t | I_j+>,

with entropy fluxes ``I_j+ = L_j^dag(S_j+)`` and ``S_j+ = -log rho_j+``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detailed_balance import kms_state
from .lindblad import (
    Lindbladian,
    ReservoirDecomposition,
    apply_dual,
    apply_generator,
    is_relaxing,
    propagate,
    steady_states,
)
from .operators import (
    FAITHFULNESS_THRESHOLD,
    HypothesisViolation,
    SpectralDecomposition,
    check_density_matrix,
    dagger,
    is_faithful,
    require_faithful,
    require_same_dim,
    spectral_decompose,
    state_log,
    trace_norm,
)

__all__ = [
    "EP_NEGATIVITY_TOL",
    "EntropyFlux",
    "FinitenessScan",
    "von_neumann_entropy",
    "relative_entropy",
    "entropy_observable",
    "ep_component",
    "entropy_production",
    "entropy_flux",
    "entropy_balance_residual",
    "entropy_derivative",
    "finiteness_scan",
]

#: entropy production is nonnegative; values below this raise
EP_NEGATIVITY_TOL = -1e-9


def von_neumann_entropy(rho, threshold: float = FAITHFULNESS_THRESHOLD) -> float:
    """``S(rho) = -tr(rho log rho)``; zero eigenvalues contribute nothing."""
    rho = check_density_matrix(rho)
    w = np.linalg.eigvalsh(rho)
    w = w[w > threshold]
    return float(-np.sum(w * np.log(w)))


def relative_entropy(mu, nu, threshold: float = FAITHFULNESS_THRESHOLD) -> float:
    """``Ent(mu|nu) = tr(mu (log mu - log nu))``; ``+inf`` unless ``ker nu <= ker mu``."""
    mu = check_density_matrix(mu, name="mu")
    nu = check_density_matrix(nu, name="nu")
    require_same_dim(mu, nu)
    wm = np.linalg.eigvalsh(mu)
    term1 = float(np.sum(wm[wm > threshold] * np.log(wm[wm > threshold])))
    wn, Vn = np.linalg.eigh(nu)
    weights = np.real(np.einsum("ik,ij,jk->k", Vn.conj(), mu, Vn))
    term2 = 0.0
    for q, a in zip(wn, weights):
        if q > threshold:
            term2 += a * np.log(q)
        elif a > 1e-12:
            return float("inf")  # mu charges a kernel direction of nu
    return term1 - term2


def entropy_observable(rho_plus) -> SpectralDecomposition:
    """Spectral decomposition of ``S+ = -log rho_plus`` (faithful input)."""
    rho_plus = require_faithful(check_density_matrix(rho_plus))
    dec = spectral_decompose(rho_plus)
    order = np.argsort(-np.log(dec.values))
    return SpectralDecomposition(
        values=-np.log(dec.values[order]),
        projectors=tuple(dec.projectors[i] for i in order),
        multiplicities=tuple(dec.multiplicities[i] for i in order),
    )


def ep_component(rho, lind_j: Lindbladian, rho_j_plus, threshold: float = FAITHFULNESS_THRESHOLD) -> float:
    """Entropy production of ``rho`` relative to one reservoir.

    Returns ``+inf`` when ``L_j(rho)`` carries weight on the kernel of
    ``rho`` (the ``a log 0`` convention).  A finite result below
    ``EP_NEGATIVITY_TOL`` signals a numerical inconsistency and raises.
    """
    rho = check_density_matrix(rho)
    rho_j_plus = require_faithful(check_density_matrix(rho_j_plus, name="rho_j_plus"))
    require_same_dim(rho, rho_j_plus, lind_j.hamiltonian)

    flow = apply_generator(lind_j, rho)
    term1 = float(np.real(np.trace(flow @ state_log(rho_j_plus))))
    w, V = np.linalg.eigh(rho)
    weights = np.real(np.einsum("ik,ij,jk->k", V.conj(), flow, V))
    weight_tol = 1e-12 * max(1.0, trace_norm(flow))
    term2 = 0.0
    for p, a in zip(w, weights):
        if p > threshold:
            term2 += a * np.log(p)
        elif abs(a) > weight_tol:
            return float("inf")
    ep = term1 - term2
    if ep < EP_NEGATIVITY_TOL:
        raise RuntimeError(f"entropy production came out negative ({ep:.3e})")
    return ep


def entropy_production(decomp: ReservoirDecomposition, rho) -> float:
    """Total entropy production ``sum_j EP_j(rho)`` (may be ``+inf``)."""
    total = 0.0
    for res in decomp.reservoirs:
        if res.steady_state is None:
            raise ValueError(
                f"reservoir {res.label or '?'} lacks a stationary state; "
                "entropy production is undefined"
            )
        total += ep_component(rho, res.lindbladian, res.steady_state)
    return total


@dataclass(frozen=True)
class EntropyFlux:
    """Entropy-flux observables of one reservoir.

    ``s_plus = -log rho_j+`` and ``i_plus = L_j^dag(s_plus)``.  When an
    inverse temperature is supplied and ``rho_j+`` is the corresponding Gibbs
    state of ``hamiltonian``, ``q_plus = L_j^dag(H)`` is the heat-flux
    observable and ``kms_defect = |i_plus - beta q_plus|_1`` (which vanishes
    because ``S+ = beta (H - F)`` and constants are annihilated by the dual).
    """

    label: str
    s_plus: np.ndarray
    i_plus: np.ndarray
    beta: float | None = None
    q_plus: np.ndarray | None = None
    kms_defect: float | None = None


def entropy_flux(
    lind_j: Lindbladian,
    rho_j_plus,
    beta: float | None = None,
    hamiltonian: np.ndarray | None = None,
    label: str = "",
) -> EntropyFlux:
    """Build the flux observables ``S+`` and ``I+`` of one reservoir."""
    rho_j_plus = require_faithful(check_density_matrix(rho_j_plus, name="rho_j_plus"))
    require_same_dim(rho_j_plus, lind_j.hamiltonian)
    s_plus = -state_log(rho_j_plus)
    i_plus = apply_dual(lind_j, s_plus)
    q_plus = None
    kms_defect = None
    if beta is not None:
        H = lind_j.hamiltonian if hamiltonian is None else hamiltonian
        q_plus = apply_dual(lind_j, H)
        gibbs, _ = kms_state(H, beta)
        if trace_norm(rho_j_plus - gibbs) <= 1e-8:
            kms_defect = trace_norm(i_plus - beta * q_plus)
    return EntropyFlux(
        label=label or lind_j.label,
        s_plus=s_plus,
        i_plus=i_plus,
        beta=beta,
        q_plus=q_plus,
        kms_defect=kms_defect,
    )


def entropy_balance_residual(
    decomp: ReservoirDecomposition, rho0, t: float, h: float | None = None
) -> float:
    """Defect of the entropy balance at time ``t`` along the flow.

    ``d/dt S(rho_t)`` is estimated by central differences with step ``h``
    (default ``1e-5 * max(1, t)``), and compared against
    ``EP(rho_t) + sum_j tr(rho_t I_j+)``.  Returns ``+inf`` when the
    entropy production is infinite at ``rho_t``.
    """
    rho0 = check_density_matrix(rho0)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if h is None:
        h = 1e-5 * max(1.0, t)
    rho_t = propagate(decomp.total, rho0, t)
    ep = entropy_production(decomp, rho_t)
    if not np.isfinite(ep):
        return float("inf")
    flux = 0.0
    for res in decomp.reservoirs:
        fl = entropy_flux(res.lindbladian, res.steady_state, label=res.label)
        flux += float(np.real(np.trace(rho_t @ fl.i_plus)))
    if t >= h:
        s_hi = von_neumann_entropy(propagate(decomp.total, rho0, t + h))
        s_lo = von_neumann_entropy(propagate(decomp.total, rho0, t - h))
        ds_dt = (s_hi - s_lo) / (2.0 * h)
    else:
        s_hi = von_neumann_entropy(propagate(decomp.total, rho0, t + h))
        s_lo = von_neumann_entropy(rho_t)
        ds_dt = (s_hi - s_lo) / h
    return abs(ds_dt - ep - flux)


def entropy_derivative(lind: Lindbladian, rho, threshold: float = FAITHFULNESS_THRESHOLD) -> float:
    """Analytic ``d/dt S = -tr(L(rho) log rho)``; ``+inf`` off the kernel.

    When ``L(rho)`` has nonzero weight on a kernel direction of ``rho`` the
    derivative diverges (entropy grows out of a zero eigenvalue at infinite
    rate); this is reported with the ``inf`` sentinel.
    """
    rho = check_density_matrix(rho)
    flow = apply_generator(lind, rho)
    w, V = np.linalg.eigh(rho)
    weights = np.real(np.einsum("ik,ij,jk->k", V.conj(), flow, V))
    weight_tol = 1e-10 * max(1.0, trace_norm(flow))
    out = 0.0
    for p, a in zip(w, weights):
        if p > threshold:
            out -= a * np.log(p)
        elif abs(a) > weight_tol:
            return float("inf")
    return out


@dataclass(frozen=True)
class FinitenessScan:
    """Entropy derivative along a time grid, with infinite values flagged."""

    times: np.ndarray
    derivatives: np.ndarray  # may contain +inf
    all_finite: bool
    first_finite_time: float | None

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.derivatives)


def finiteness_scan(lind: Lindbladian, rho0, times) -> FinitenessScan:
    """Scan ``d/dt S(rho_t)`` over a grid; flag where it is infinite.

    Requires a relaxing generator with faithful stationary state.  Finite
    values are reported via central differences; infiniteness is decided by
    the kernel-weight criterion of :func:`entropy_derivative`, which is
    robust where a finite-difference quotient would merely be large.  For a
    faithful ``rho0`` every value must come out finite (it is an error
    otherwise).
    """
    rho0 = check_density_matrix(rho0)
    times = np.asarray(times, dtype=float)
    if times.size == 0 or np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a nonempty strictly increasing nonnegative grid")
    if not is_relaxing(lind):
        raise HypothesisViolation("finiteness scan requires a relaxing generator")
    steady = steady_states(lind)[0]
    if not is_faithful(steady):
        raise HypothesisViolation("finiteness scan requires a faithful stationary state")

    values = []
    for t in times:
        rho_t = propagate(lind, rho0, t)
        sentinel = entropy_derivative(lind, rho_t)
        if not np.isfinite(sentinel):
            values.append(float("inf"))
            continue
        h = 1e-5 * max(1.0, t)
        if t >= h:
            ds = (
                von_neumann_entropy(propagate(lind, rho0, t + h))
                - von_neumann_entropy(propagate(lind, rho0, t - h))
            ) / (2.0 * h)
        else:
            ds = (
                von_neumann_entropy(propagate(lind, rho0, t + h))
                - von_neumann_entropy(rho_t)
            ) / h
        values.append(float(ds))
    derivatives = np.array(values)
    finite = np.isfinite(derivatives)
    all_finite = bool(finite.all())
    if is_faithful(rho0) and not all_finite:
        raise RuntimeError("entropy derivative came out infinite from a faithful initial state")
    first = None
    for k in range(len(times)):
        if finite[k:].all():
            first = float(times[k])
            break
    return FinitenessScan(
        times=times, derivatives=derivatives, all_finite=all_finite, first_finite_time=first
    )
