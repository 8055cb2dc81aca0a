import numpy as np
import pytest

from qmarkov import (
    QrmSpec,
    Reservoir,
    ReservoirDecomposition,
    build_multi_reservoir,
    build_qrm,
    delta_distribution,
    ep_estimator,
    expected_delta,
    expflu,
    fagnola_fixture,
    first_law,
    integrate_along_trajectory,
    joint_law,
    mgf,
    multi_reservoir_2tmp,
    propagate,
    relative_entropy,
)
from qmarkov.entropy import entropy_observable
from qmarkov.operators import HypothesisViolation, random_density, spectral_decompose, pinch

from helpers import random_db_model, random_lindblad, random_qrm


def _qubit_reset():
    spec = QrmSpec(
        hamiltonian=np.diag([0.0, 1.0]), reset_state=np.diag([0.75, 0.25]), gamma=1.0
    )
    return spec, build_qrm(spec), np.asarray(spec.reset_state, dtype=complex)


RHO0 = np.array([[0.6, 0.2 + 0.1j], [0.2 - 0.1j, 0.4]])


def test_first_law_probabilities():
    _, _, T = _qubit_reset()
    obs = entropy_observable(T)
    pi = first_law(RHO0, obs)
    assert np.allclose(pi, [0.6, 0.4])
    assert pi.sum() == pytest.approx(1.0)


def test_joint_law_marginals_and_zero_time():
    _, lind, T = _qubit_reset()
    obs = entropy_observable(T)
    law = joint_law(lind, RHO0, obs, 0.7)
    assert np.allclose(law.first_marginal(), first_law(RHO0, obs))
    assert law.matrix.sum() == pytest.approx(1.0)
    assert np.all(law.matrix >= -1e-14)
    at_zero = joint_law(lind, RHO0, obs, 0.0)
    assert np.allclose(at_zero.matrix, np.diag(first_law(RHO0, obs)))


def test_joint_law_conditional_rows():
    _, lind, T = _qubit_reset()
    obs = entropy_observable(T)
    cond = joint_law(lind, RHO0, obs, 0.5).conditional()
    assert np.allclose(cond.sum(axis=1), 1.0)


def test_delta_distribution_mass_and_mean():
    _, lind, T = _qubit_reset()
    obs = entropy_observable(T)
    dist = delta_distribution(lind, RHO0, obs, 0.8)
    assert dist.probabilities.sum() == pytest.approx(1.0)
    assert dist.mean() == pytest.approx(expected_delta(lind, RHO0, obs, 0.8))
    assert np.all(np.diff(dist.support) > 0)


def test_delta_distribution_support_is_outcome_differences():
    _, lind, T = _qubit_reset()
    obs = entropy_observable(T)
    dist = delta_distribution(lind, RHO0, obs, 0.8)
    gap = obs.values[1] - obs.values[0]
    assert np.allclose(dist.support, [-gap, 0.0, gap])
    assert dist.probability(gap) > 0.0
    assert dist.probability(123.0) == 0.0


@pytest.mark.parametrize("alpha", [-1.0, -0.3, 0.0, 0.5, 1.0])
def test_mgf_direct_equals_deformed(alpha):
    # holds for generic generators, not only detailed-balance ones
    rng = np.random.default_rng(20)
    lind = random_lindblad(rng, 3)
    obs = entropy_observable(random_density(rng, 3))
    rho0 = random_density(rng, 3)
    direct = mgf(lind, rho0, obs, 0.9, alpha, method="direct")
    deformed = mgf(lind, rho0, obs, 0.9, alpha, method="deformed")
    assert direct == pytest.approx(deformed, abs=1e-10)


def test_mgf_at_zero_is_one():
    _, lind, T = _qubit_reset()
    obs = entropy_observable(T)
    for method in ("direct", "deformed"):
        assert mgf(lind, RHO0, obs, 1.3, 0.0, method=method) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        mgf(lind, RHO0, obs, 1.3, 0.0, method="nope")


def test_expected_delta_is_mgf_derivative():
    _, lind, T = _qubit_reset()
    obs = entropy_observable(T)
    h = 1e-5
    slope = (
        mgf(lind, RHO0, obs, 0.8, h) - mgf(lind, RHO0, obs, 0.8, -h)
    ) / (2.0 * h)
    assert expected_delta(lind, RHO0, obs, 0.8) == pytest.approx(slope, abs=1e-8)


def test_integrate_along_trajectory_constant():
    _, lind, _ = _qubit_reset()
    assert integrate_along_trajectory(lind, RHO0, 2.0, lambda r: 3.0) == pytest.approx(6.0)
    assert integrate_along_trajectory(lind, RHO0, 0.0, lambda r: 3.0) == 0.0


def test_integrate_along_trajectory_exponential_relaxation():
    # tr(rho_t sigma_z) relaxes exponentially for the commuting reset model:
    # integral of z_inf + (z_0 - z_inf) e^(-G t) has a closed form
    spec, lind, T = _qubit_reset()
    sz = np.diag([1.0, -1.0]).astype(complex)
    z0 = float(np.trace(RHO0 @ sz).real)
    zinf = float(np.trace(T @ sz).real)
    t = 1.7
    expected = zinf * t + (z0 - zinf) * (1.0 - np.exp(-spec.gamma * t)) / spec.gamma
    value = integrate_along_trajectory(
        lind, RHO0, t, lambda r: float(np.trace(r @ sz).real)
    )
    assert value == pytest.approx(expected, abs=1e-9)


def test_expflu_decomposition_for_db_model():
    _, lind, T = _qubit_reset()
    report = expflu(lind, T, RHO0, 0.9)
    assert report.flux_residual < 1e-6
    assert report.balance_residual < 1e-6
    # expected entropy variation needs no dephasing under detailed balance
    s_plus = entropy_observable(T).operator()
    direct = float(
        np.trace((propagate(lind, RHO0, 0.9) - RHO0) @ s_plus).real
    )
    assert report.expected == pytest.approx(direct, abs=1e-10)


def test_expflu_rejects_non_db_model():
    fx = fagnola_fixture(0.6, 1.0)
    with pytest.raises(HypothesisViolation):
        expflu(fx.model, fx.rho, RHO0, 0.5)


def test_multi_reservoir_statistics():
    H = np.diag([0.0, 1.0]).astype(complex)
    parts = [
        QrmSpec(hamiltonian=H, reset_state=np.diag([0.8, 0.2]), gamma=1.0, lam=0.5, label="cold"),
        QrmSpec(hamiltonian=H, reset_state=np.diag([0.6, 0.4]), gamma=0.5, lam=0.5, label="hot"),
    ]
    decomp = build_multi_reservoir(parts)
    stats = multi_reservoir_2tmp(decomp, RHO0, 0.8)
    assert [s.label for s in stats] == ["cold", "hot"]
    for s in stats:
        assert s.distribution.probabilities.sum() == pytest.approx(1.0)
        assert s.expected == pytest.approx(s.distribution.mean(), abs=1e-12)


def test_multi_reservoir_requires_db():
    fx = fagnola_fixture(0.6, 1.0)
    decomp = ReservoirDecomposition.single(fx.model, steady_state=fx.rho)
    with pytest.raises(HypothesisViolation):
        multi_reservoir_2tmp(decomp, RHO0, 0.5)


def test_ep_estimator_requires_stationary_reference():
    H = np.diag([0.0, 1.0]).astype(complex)
    parts = [
        QrmSpec(hamiltonian=H, reset_state=np.diag([0.8, 0.2]), gamma=1.0, lam=0.5),
        QrmSpec(hamiltonian=H, reset_state=np.diag([0.6, 0.4]), gamma=0.5, lam=0.5),
    ]
    decomp = build_multi_reservoir(parts)
    with pytest.raises(HypothesisViolation):
        ep_estimator(decomp, np.eye(2) / 2.0)


def test_ep_estimator_on_stationary_state():
    H = np.diag([0.0, 1.0]).astype(complex)
    parts = [
        QrmSpec(hamiltonian=H, reset_state=np.diag([0.8, 0.2]), gamma=1.0, lam=0.5),
        QrmSpec(hamiltonian=H, reset_state=np.diag([0.6, 0.4]), gamma=0.5, lam=0.5),
    ]
    decomp = build_multi_reservoir(parts)
    T = np.diag([11.0 / 15.0, 4.0 / 15.0]).astype(complex)
    closed = sum(
        s.gamma * (relative_entropy(T, s.reset_state) + relative_entropy(s.reset_state, T))
        for s in parts
    )
    assert ep_estimator(decomp, T, t_small=2.5e-3) == pytest.approx(closed, rel=1e-5)
