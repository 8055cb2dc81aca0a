"""Acceptance suite: one test per headline guarantee of the package.

Each test pins the advertised tolerance of one end-to-end property, so a
``pytest -v`` run prints a single pass/fail line per guarantee.
"""

import csv
import io
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from qmarkov import (
    QrmSpec,
    build_multi_reservoir,
    build_qrm,
    chain_vs_quantum,
    check_db,
    check_pinch_commutation,
    classical_db_check,
    classical_mgf,
    commutation_identities,
    delta_distribution,
    entropy_observable,
    ep_estimator,
    expected_delta,
    expflu,
    extract_chain,
    fagnola_fixture,
    finiteness_scan,
    first_law,
    generator_matrix,
    invariant_vector,
    mgf,
    pinch,
    pinch_commutation_defect,
    propagate,
    qrm_chain_closed,
    qrm_delta_closed,
    qrm_expected_delta_closed,
    qrm_mgf_closed,
    qrm_propagate_closed,
    qrm_spectrum,
    qrm_steady_state,
    random_density,
    random_hermitian,
    relative_entropy,
    spectral_decompose,
    steady_states,
    trace_norm,
    transition_matrix,
    vectorize,
    unvectorize,
)
from helpers import greedy_spectrum_residual, random_db_model, random_lindblad, random_qrm

from scipy.linalg import expm

ROOT = Path(__file__).resolve().parents[1]

SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)

QUBIT_RESET = QrmSpec(
    hamiltonian=np.diag([0.0, 1.0]),
    reset_state=np.diag([0.75, 0.25]),
    gamma=1.0,
)
RHO0 = np.array([[0.6, 0.2 + 0.1j], [0.2 - 0.1j, 0.4]])


def db_model_pool(rng, per_dim_random=9, n_reset=25):
    """>= 50 detailed-balance pairs: Davies-type chains plus commuting resets."""
    models = []
    for dim in (2, 3, 4):
        for _ in range(per_dim_random):
            models.append(random_db_model(rng, dim))
    for k in range(n_reset):
        spec = random_qrm(rng, 2 + k % 3, commuting=True)
        models.append((build_qrm(spec), spec.reset_state))
    return models


def test_01_semigroups_are_cptp_and_compose():
    rng = np.random.default_rng(11)
    count = 0
    for dim in (2, 3, 4):
        for _ in range(36):
            lind = random_lindblad(rng, dim, n_kraus=2)
            M = generator_matrix(lind)
            rho0 = random_density(rng, dim)
            for t in (0.1, 1.0, 10.0):
                P = expm(t * M)
                rho_t = unvectorize(P @ vectorize(rho0))
                assert abs(np.trace(rho_t) - 1.0) < 1e-10
                assert np.linalg.eigvalsh((rho_t + rho_t.conj().T) / 2).min() >= -1e-9
                split = expm(0.4 * t * M) @ expm(0.6 * t * M)
                assert np.abs(P - split).max() < 1e-9
            count += 1
    assert count >= 100


def test_02_detailed_balance_implies_pinch_commutation():
    rng = np.random.default_rng(23)
    models = db_model_pool(rng)
    assert len(models) >= 50
    for lind, rho in models:
        assert check_pinch_commutation(rho, lind) < 1e-9
        unit_defect, ham_defect = commutation_identities(rho, lind)
        assert unit_defect < 1e-9
        assert ham_defect < 1e-9


def test_03_kms_holds_where_gns_fails():
    kappa, omega = 0.6, 1.0
    fixture = fagnola_fixture(kappa, omega)
    assert check_db(fixture.rho, fixture.model, s=0.5).holds
    assert not check_db(fixture.rho, fixture.model, s=1.0).holds
    # scalar oracle for the defect amplitude, evaluated from the raw inputs
    coefficient = -4.0 * omega * kappa / (1.0 - kappa)
    defect = pinch_commutation_defect(fixture.rho, fixture.model, fixture.probe)
    assert np.abs(defect - coefficient * SIGMA_3).max() < 1e-9
    # the defect concentrates on the probe; on sigma_1 it vanishes identically
    on_sigma_1 = pinch_commutation_defect(fixture.rho, fixture.model, SIGMA_1)
    assert np.abs(on_sigma_1).max() < 1e-12


def test_04_expected_variation_decomposes_into_flux_and_production():
    rng = np.random.default_rng(37)
    for dim in (2, 3, 4):
        for _ in range(2):
            lind, rho = random_db_model(rng, dim)
            rho0 = random_density(rng, dim)
            for t in (0.5, 1.0):
                report = expflu(lind, rho, rho0, t, identity_tol=1e-4)
                s_plus = entropy_observable(rho).operator()
                direct = float(
                    np.real(np.trace((propagate(lind, rho0, t) - rho0) @ s_plus))
                )
                assert abs(report.expected - direct) < 1e-9
                assert report.flux_residual < 1e-4
                assert report.balance_residual < 1e-4


def test_05_short_time_statistics_estimate_stationary_production():
    H = np.diag([0.0, 1.0])
    cold = QrmSpec(hamiltonian=H, reset_state=np.diag([0.8, 0.2]), gamma=1.0, lam=0.5)
    hot = QrmSpec(hamiltonian=H, reset_state=np.diag([0.6, 0.4]), gamma=0.5, lam=0.5)
    decomp = build_multi_reservoir([cold, hot])
    rho_plus = np.diag([11.0 / 15.0, 4.0 / 15.0])
    closed = sum(
        spec.gamma
        * (
            relative_entropy(spec.reset_state, rho_plus)
            + relative_entropy(rho_plus, spec.reset_state)
        )
        for spec in (cold, hot)
    )
    assert closed == pytest.approx(0.06538861686744829, rel=1e-12)
    errors = [
        abs(ep_estimator(decomp, rho_plus, t_small=t, richardson=False) - closed)
        for t in (1e-2, 5e-3, 2.5e-3)
    ]
    # halving t halves the error: first-order convergence
    assert 0.4 < errors[1] / errors[0] < 0.6
    assert 0.4 < errors[2] / errors[1] < 0.6
    richardson = ep_estimator(decomp, rho_plus, t_small=2.5e-3, richardson=True)
    assert abs(richardson - closed) / closed < 1e-5


def test_06_extracted_chain_reproduces_quantum_statistics():
    rng = np.random.default_rng(41)
    cases = [(build_qrm(QUBIT_RESET), QUBIT_RESET.reset_state, RHO0)]
    for dim in (2, 3):
        for _ in range(2):
            lind, rho = random_db_model(rng, dim)
            cases.append((lind, rho, random_density(rng, dim)))
    for lind, rho, rho0 in cases:
        chain = extract_chain(lind, rho, rho0)
        observable = entropy_observable(rho)
        assert chain_vs_quantum(chain, lind, rho0, observable, [0.1, 1.0, 10.0]) < 1e-9
        assert np.abs(chain.rates.sum(axis=1)).max() < 1e-10
        assert classical_db_check(chain) < 1e-9
        assert np.abs(invariant_vector(chain) - np.exp(-chain.states)).max() < 1e-10


def test_07_classical_mgf_matches_both_quantum_paths():
    rng = np.random.default_rng(43)
    cases = [(build_qrm(QUBIT_RESET), QUBIT_RESET.reset_state, RHO0)]
    lind3, rho3 = random_db_model(rng, 3)
    cases.append((lind3, rho3, random_density(rng, 3)))
    for lind, rho, rho0 in cases:
        chain = extract_chain(lind, rho, rho0)
        observable = entropy_observable(rho)
        for alpha in (-1.0, -0.5, 0.0, 0.5, 1.0):
            for t in (0.1, 0.5, 1.0, 2.0, 5.0):
                values = (
                    classical_mgf(chain, t, alpha),
                    mgf(lind, rho0, observable, t, alpha, method="direct"),
                    mgf(lind, rho0, observable, t, alpha, method="deformed"),
                )
                assert abs(values[0] - values[1]) < 1e-9
                assert abs(values[0] - values[2]) < 1e-9
                if alpha == 0.0:
                    assert all(abs(v - 1.0) < 1e-12 for v in values)


def symmetric_start(rng, rho):
    """A state whose pinching in the eigenbasis of ``rho`` is ``rho`` itself."""
    dec = spectral_decompose(rho)
    C = random_hermitian(rng, rho.shape[0])
    off = C - pinch(dec, C)
    eta = 0.1 * float(np.linalg.eigvalsh(rho).min()) / max(
        1.0, float(np.linalg.norm(off, 2))
    )
    return rho + eta * off


def test_08_variation_law_is_symmetric_from_pinched_starts():
    rng = np.random.default_rng(47)
    cases = [(build_qrm(QUBIT_RESET), QUBIT_RESET.reset_state)]
    cases.append(random_db_model(rng, 3))
    for lind, rho in cases:
        observable = entropy_observable(rho)
        rho_sym = symmetric_start(rng, rho)
        assert np.abs(pinch(spectral_decompose(rho), rho_sym) - rho).max() < 1e-14
        for t in (0.5, 2.0):
            dist = delta_distribution(lind, rho_sym, observable, t)
            for sigma, p in zip(dist.support, dist.probabilities):
                if sigma > 1e-9:
                    assert abs(p - dist.probability(-sigma)) < 1e-10
            assert abs(expected_delta(lind, rho_sym, observable, t)) < 1e-10
        # generic faithful start: the two tails differ by e^{-sigma} pi(s)/pi(s')
        rho0 = random_density(rng, lind.dim)
        pi0 = first_law(rho0, observable)
        for t in (0.5, 2.0):
            dist = delta_distribution(lind, rho0, observable, t)
            for i in range(len(observable.values)):
                for j in range(i + 1, len(observable.values)):
                    sigma = observable.values[j] - observable.values[i]
                    ratio = dist.probability(sigma) / dist.probability(-sigma)
                    predicted = np.exp(-sigma) * pi0[i] / pi0[j]
                    assert abs(ratio - predicted) / predicted < 1e-8


def test_09_reset_model_closed_forms_match_generic_engine():
    rng = np.random.default_rng(53)
    for dim in (2, 3, 4):
        for commuting in (True, False):
            spec = random_qrm(rng, dim, commuting=commuting)
            lind = build_qrm(spec)
            rho0 = random_density(rng, dim)
            for t in (0.3, 1.7):
                closed = qrm_propagate_closed(spec, rho0, t)
                assert np.abs(closed - propagate(lind, rho0, t)).max() < 1e-9
            eigs = np.linalg.eigvals(generator_matrix(lind))
            assert greedy_spectrum_residual(eigs, qrm_spectrum(spec)) < 1e-9
            steady = steady_states(lind)[0]
            assert trace_norm(qrm_steady_state(spec) - steady) < 1e-9
            if not commuting:
                continue
            observable = entropy_observable(spec.reset_state)
            closure, rates = qrm_chain_closed(spec)
            chain = extract_chain(lind, spec.reset_state, rho0)
            assert np.abs(rates - chain.rates).max() < 1e-9
            for t in (0.3, 1.7):
                assert np.abs(closure(t) - transition_matrix(chain, t)).max() < 1e-9
                dist = qrm_delta_closed(spec, rho0, t)
                generic = delta_distribution(lind, rho0, observable, t)
                assert np.abs(dist.support - generic.support).max() < 1e-9
                assert np.abs(dist.probabilities - generic.probabilities).max() < 1e-9
                assert (
                    abs(qrm_expected_delta_closed(spec, rho0, t) - expected_delta(lind, rho0, observable, t))
                    < 1e-9
                )
                for alpha in (-0.7, 0.4):
                    closed_mgf = qrm_mgf_closed(spec, rho0, t, alpha)
                    for method in ("direct", "deformed"):
                        assert abs(closed_mgf - mgf(lind, rho0, observable, t, alpha, method=method)) < 1e-9
    _, qubit_rates = qrm_chain_closed(QUBIT_RESET)
    expected = np.array([[-0.25, 0.25], [0.75, -0.75]])
    assert np.abs(qubit_rates - expected).max() < 1e-12


def test_10_entropy_functionals_behave():
    rng = np.random.default_rng(59)
    for dim in (2, 3, 4):
        for _ in range(5):
            mu = random_density(rng, dim)
            nu = random_density(rng, dim)
            assert relative_entropy(mu, mu) < 1e-12
            value = relative_entropy(mu, nu)
            assert value >= 0.0
            if trace_norm(mu - nu) > 1e-3:
                # Pinsker: Ent(mu|nu) >= |mu - nu|_1^2 / 2
                assert value > 5e-7
    # monotonicity under the semigroup on a 20-point grid
    for lind in (build_qrm(QUBIT_RESET), random_db_model(rng, 3)[0]):
        mu = random_density(rng, lind.dim)
        nu = random_density(rng, lind.dim)
        values = [
            relative_entropy(propagate(lind, mu, t), propagate(lind, nu, t))
            for t in np.linspace(0.0, 3.0, 20)
        ]
        assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))
    # derivative finiteness on relaxing models
    for lind in (build_qrm(QUBIT_RESET), random_db_model(rng, 3)[0]):
        faithful = random_density(rng, lind.dim)
        scan = finiteness_scan(lind, faithful, [0.0, 0.01, 0.05, 0.1, 1.0])
        assert scan.all_finite
        vec = np.zeros(lind.dim, dtype=complex)
        vec[0] = 1.0
        pure = np.outer(vec, vec.conj())
        scan = finiteness_scan(lind, pure, [0.06, 0.1, 0.5, 1.0, 2.0])
        assert scan.all_finite


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "qmarkov.cli", *args],
        cwd=ROOT,
        capture_output=True,
        text=True,
    )


def test_11_cli_verify_passes_on_bundled_scenarios():
    for name in ("qubit_qrm", "two_reservoir_qrm", "fagnola"):
        result = run_cli("verify", "--scenario", f"scenarios/{name}.json")
        assert result.returncode == 0, result.stderr
    check = run_cli("db-check", "--scenario", "scenarios/fagnola.json")
    assert check.returncode == 0
    rows = list(csv.DictReader(io.StringIO(check.stdout)))
    verdicts = {row["s"]: row["holds"] for row in rows}
    assert verdicts["1"] == "false"
    assert verdicts["0.5"] == "true"
    for args in (
        ("db-check", "--scenario", "scenarios/fagnola.json"),
        ("verify", "--scenario", "scenarios/two_reservoir_qrm.json"),
    ):
        assert run_cli(*args).stdout == run_cli(*args).stdout
