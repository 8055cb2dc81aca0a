import numpy as np
import pytest

from qmarkov import (
    QrmSpec,
    apply_generator,
    apply_reset,
    build_multi_reservoir,
    build_qrm,
    check_bohr,
    cp_map,
    delta_distribution,
    expected_delta,
    ep_component,
    extract_chain,
    generator_matrix,
    mgf,
    propagate,
    qrm_chain_closed,
    qrm_delta_closed,
    qrm_ep_closed,
    qrm_expected_delta_closed,
    qrm_mgf_closed,
    qrm_propagate_closed,
    qrm_spectrum,
    qrm_steady_state,
    relative_entropy,
)
from qmarkov.entropy import entropy_observable
from qmarkov.operators import HypothesisViolation, random_density, trace_norm

from helpers import greedy_spectrum_residual, random_qrm

RHO0 = np.array([[0.6, 0.2 + 0.1j], [0.2 - 0.1j, 0.4]])


def test_qrm_spec_validation():
    with pytest.raises(ValueError):
        QrmSpec(hamiltonian=np.diag([0.0, 1.0]), reset_state=np.diag([0.75, 0.25]), gamma=-1.0)
    with pytest.raises(ValueError):
        QrmSpec(hamiltonian=np.diag([0.0, 1.0]), reset_state=np.eye(2), gamma=1.0)


@pytest.mark.parametrize("commuting", [True, False])
@pytest.mark.parametrize("dim", [2, 3])
def test_kraus_realisation_matches_direct_action(dim, commuting):
    rng = np.random.default_rng(40 + dim + commuting)
    spec = random_qrm(rng, dim, commuting=commuting)
    lind = build_qrm(spec)
    for _ in range(4):
        X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        assert np.allclose(apply_generator(lind, X), apply_reset(spec, X), atol=1e-12)
    # the CP part sends X to Gamma tr(T X) I
    X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    expected = spec.gamma * np.trace(spec.reset_state @ X) * np.eye(dim)
    assert np.allclose(cp_map(lind, X), expected, atol=1e-12)


def test_check_bohr():
    assert not check_bohr(np.diag([0.0, 1.0, 2.0]))  # gap 1 attained twice
    assert check_bohr(np.diag([0.0, 1.0, 2.5]))
    assert check_bohr(np.diag([0.0, 1.0]))


@pytest.mark.parametrize("commuting", [True, False])
def test_spectrum_closed_form(commuting):
    rng = np.random.default_rng(50 + commuting)
    spec = random_qrm(rng, 3, commuting=commuting)
    lind = build_qrm(spec)
    eigs = np.linalg.eigvals(generator_matrix(lind))
    assert greedy_spectrum_residual(eigs, qrm_spectrum(spec)) < 1e-10


def test_spectrum_multiplicities_sum_to_dimension_squared():
    spec = random_qrm(np.random.default_rng(51), 3, commuting=False)
    assert sum(m for _, m in qrm_spectrum(spec)) == 9


@pytest.mark.parametrize("commuting", [True, False])
def test_steady_state_closed_form(commuting):
    rng = np.random.default_rng(60 + commuting)
    spec = random_qrm(rng, 3, commuting=commuting)
    lind = build_qrm(spec)
    rho_plus = qrm_steady_state(spec)
    assert trace_norm(apply_generator(lind, rho_plus)) < 1e-12
    if commuting:
        assert np.allclose(rho_plus, spec.reset_state, atol=1e-10)
    else:
        assert trace_norm(rho_plus - spec.reset_state) > 1e-3


@pytest.mark.parametrize("t", [0.0, 0.3, 2.0])
@pytest.mark.parametrize("commuting", [True, False])
def test_propagator_closed_form(t, commuting):
    rng = np.random.default_rng(70 + commuting)
    spec = random_qrm(rng, 2, commuting=commuting)
    lind = build_qrm(spec)
    closed = qrm_propagate_closed(spec, RHO0, t)
    assert trace_norm(closed - propagate(lind, RHO0, t)) < 1e-10


def test_chain_closed_form_qubit():
    spec = QrmSpec(
        hamiltonian=np.diag([0.0, 1.0]), reset_state=np.diag([0.75, 0.25]), gamma=1.0
    )
    closure, rates = qrm_chain_closed(spec)
    assert np.allclose(rates, [[-0.25, 0.25], [0.75, -0.75]], atol=1e-14)
    P = closure(0.9)
    assert np.allclose(P.sum(axis=1), 1.0)
    lind = build_qrm(spec)
    chain = extract_chain(lind, np.asarray(spec.reset_state, dtype=complex), RHO0)
    assert np.allclose(chain.rates, rates, atol=1e-12)


def test_closed_forms_require_commuting_pair():
    spec = random_qrm(np.random.default_rng(80), 2, commuting=False)
    with pytest.raises(HypothesisViolation):
        qrm_chain_closed(spec)
    with pytest.raises(HypothesisViolation):
        qrm_mgf_closed(spec, RHO0, 0.5, 0.3)
    with pytest.raises(HypothesisViolation):
        qrm_ep_closed(spec, np.eye(2) / 2.0)


def test_delta_law_closed_form():
    rng = np.random.default_rng(81)
    spec = random_qrm(rng, 3, commuting=True)
    lind = build_qrm(spec)
    rho0 = random_density(rng, 3)
    levels = entropy_observable(qrm_steady_state(spec))
    t = 0.8
    closed = qrm_delta_closed(spec, rho0, t)
    generic = delta_distribution(lind, rho0, levels, t)
    assert np.allclose(closed.support, generic.support, atol=1e-10)
    assert np.allclose(closed.probabilities, generic.probabilities, atol=1e-11)


def test_mgf_and_mean_closed_forms():
    rng = np.random.default_rng(82)
    spec = random_qrm(rng, 2, commuting=True)
    lind = build_qrm(spec)
    rho0 = random_density(rng, 2)
    levels = entropy_observable(qrm_steady_state(spec))
    t = 1.1
    for alpha in (-1.0, 0.0, 0.5):
        assert qrm_mgf_closed(spec, rho0, t, alpha) == pytest.approx(
            mgf(lind, rho0, levels, t, alpha), abs=1e-11
        )
    assert qrm_expected_delta_closed(spec, rho0, t) == pytest.approx(
        expected_delta(lind, rho0, levels, t), abs=1e-11
    )


def test_production_closed_form():
    rng = np.random.default_rng(83)
    spec = random_qrm(rng, 3, commuting=True)
    lind = build_qrm(spec)
    T = qrm_steady_state(spec)
    rho = random_density(rng, 3)
    assert qrm_ep_closed(spec, rho) == pytest.approx(
        ep_component(rho, lind, T), abs=1e-10
    )
    # EP(rho) = Gamma (Ent(T|rho) + Ent(rho|T))
    assert qrm_ep_closed(spec, rho) == pytest.approx(
        spec.gamma * (relative_entropy(spec.reset_state, rho) + relative_entropy(rho, spec.reset_state)),
        abs=1e-12,
    )


def test_multi_reservoir_assembly():
    H = np.diag([0.0, 1.0]).astype(complex)
    parts = [
        QrmSpec(hamiltonian=H, reset_state=np.diag([0.8, 0.2]), gamma=1.0, lam=0.5, label="cold"),
        QrmSpec(hamiltonian=H, reset_state=np.diag([0.6, 0.4]), gamma=0.5, lam=0.5, label="hot"),
    ]
    decomp = build_multi_reservoir(parts)
    # the sum of sub-generators is the total generator
    M_sum = sum(generator_matrix(r.lindbladian) for r in decomp.reservoirs)
    assert np.allclose(generator_matrix(decomp.total), M_sum, atol=1e-13)
    # the total is itself a reset model with summed rate and mixed target
    T_total = np.diag([11.0 / 15.0, 4.0 / 15.0]).astype(complex)
    total_spec = QrmSpec(hamiltonian=H, reset_state=T_total, gamma=1.5)
    X = RHO0
    assert np.allclose(
        apply_generator(decomp.total, X), apply_reset(total_spec, X), atol=1e-12
    )
    # per-reservoir stationary states are recorded
    for res, part in zip(decomp.reservoirs, parts):
        assert np.allclose(res.steady_state, part.reset_state, atol=1e-12)


def test_multi_reservoir_rejects_bad_weights():
    H = np.diag([0.0, 1.0]).astype(complex)
    parts = [
        QrmSpec(hamiltonian=H, reset_state=np.diag([0.8, 0.2]), gamma=1.0, lam=0.7),
        QrmSpec(hamiltonian=H, reset_state=np.diag([0.6, 0.4]), gamma=0.5, lam=0.5),
    ]
    with pytest.raises(ValueError, match="sum to 1"):
        build_multi_reservoir(parts)


def test_multi_reservoir_rejects_mismatched_hamiltonians():
    parts = [
        QrmSpec(hamiltonian=np.diag([0.0, 1.0]), reset_state=np.diag([0.8, 0.2]), gamma=1.0, lam=0.5),
        QrmSpec(hamiltonian=np.diag([0.0, 2.0]), reset_state=np.diag([0.6, 0.4]), gamma=0.5, lam=0.5),
    ]
    with pytest.raises(ValueError):
        build_multi_reservoir(parts)
