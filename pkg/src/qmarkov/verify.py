"""Self-verification: run every structural identity a scenario supports.

``run_verify`` takes a validated scenario and produces a deterministic list
of named checks.  A check *fails* only when an identity the implementation
promises is violated; model properties that may legitimately be absent
(detailed balance, commuting reset targets, simple spectra) are reported as
informational rows and their dependent identities are skipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .chain import classical_db_check, classical_mgf, extract_chain, invariant_vector, transition_matrix
from .detailed_balance import (
    check_db,
    check_pinch_commutation,
    commutation_identities,
    dissipator_selfadjoint_residual,
)
from .entropy import (
    entropy_balance_residual,
    entropy_production,
    ep_component,
    entropy_observable,
    finiteness_scan,
    relative_entropy,
)
from .lindblad import (
    Lindbladian,
    ReservoirDecomposition,
    apply_generator,
    deformed_matrix,
    dual_matrix,
    generator_matrix,
    is_relaxing,
    propagate,
    steady_states,
    unvectorize,
    vectorize,
)
from .operators import (
    check_gens,
    is_faithful,
    random_density,
    spectral_decompose,
    trace_norm,
)
from .reset import (
    QrmSpec,
    apply_reset,
    qrm_chain_closed,
    qrm_delta_closed,
    qrm_ep_closed,
    qrm_expected_delta_closed,
    qrm_mgf_closed,
    qrm_propagate_closed,
    qrm_spectrum,
)
from .scenario import Scenario
from .two_time import delta_distribution, expected_delta, expflu, first_law, joint_law, mgf

__all__ = ["CheckResult", "run_verify"]


@dataclass(frozen=True)
class CheckResult:
    """One named check: residual against tolerance, with an optional note."""

    name: str
    passed: bool
    residual: float
    tolerance: float
    note: str = ""


def _info(name: str, note: str) -> CheckResult:
    return CheckResult(name=name, passed=True, residual=0.0, tolerance=0.0, note=note)


def _check(name: str, residual: float, tolerance: float, note: str = "") -> CheckResult:
    return CheckResult(
        name=name,
        passed=bool(residual <= tolerance),
        residual=float(residual),
        tolerance=float(tolerance),
        note=note,
    )


def _greedy_match_residual(computed: np.ndarray, expected: list) -> float:
    """Max distance in a greedy nearest-neighbour matching of two spectra."""
    pool = list(computed)
    worst = 0.0
    for value, mult in expected:
        for _ in range(mult):
            if not pool:
                return float("inf")
            k = int(np.argmin(np.abs(np.asarray(pool) - value)))
            worst = max(worst, float(abs(pool.pop(k) - value)))
    return worst if not pool else float("inf")


def _generator_checks(label: str, lind: Lindbladian, rng, t_probe: float) -> list:
    out = []
    d = lind.dim
    M = generator_matrix(lind)
    scale = max(1.0, float(np.linalg.norm(M, 2)))

    # trace preservation on a complete operator basis
    E = np.zeros((d, d), dtype=complex)
    worst = 0.0
    for k in range(d * d):
        E[k % d, k // d] = 1.0
        worst = max(worst, abs(complex(np.trace(apply_generator(lind, E)))))
        E[k % d, k // d] = 0.0
    out.append(_check(f"{label}/trace-preserving", worst, 1e-10 * scale))

    # positivity of the evolved states
    worst = 0.0
    for _ in range(3):
        rho = random_density(rng, d, faithful=False)
        for t in (0.1 * t_probe, t_probe, 5.0 * t_probe):
            w = np.linalg.eigvalsh(propagate(lind, rho, t))
            worst = max(worst, max(0.0, -float(w[0])))
    out.append(_check(f"{label}/positivity", worst, 1e-9))

    # semigroup property exp((t1+t2)L) = exp(t1 L) exp(t2 L)
    t1, t2 = 0.3 * t_probe, 0.7 * t_probe
    defect = float(np.abs(expm((t1 + t2) * M) - expm(t1 * M) @ expm(t2 * M)).max())
    out.append(_check(f"{label}/semigroup", defect, 1e-9 * max(1.0, float(np.abs(expm(t_probe * M)).max()))))

    # the dual annihilates the identity and is the vec-basis adjoint
    Md = dual_matrix(lind)
    unital = trace_norm(unvectorize(Md @ vectorize(np.eye(d))))
    out.append(_check(f"{label}/dual-unital", unital, 1e-11 * scale))
    out.append(
        _check(
            f"{label}/duality",
            float(np.abs(Md - M.conj().T).max()),
            1e-12 * scale,
            note="<A|L(B)> = <L*(A)|B> as matrices in the column-stacking basis",
        )
    )
    return out


def _two_time_checks(label, lind, steady, rho0, times, alphas) -> list:
    out = []
    observable = entropy_observable(steady)
    t_mid = times[len(times) // 2]

    law = joint_law(lind, rho0, observable, t_mid)
    pi = first_law(rho0, observable)
    out.append(
        _check(f"{label}/joint-rows", float(np.abs(law.first_marginal() - pi).max()), 1e-10)
    )
    out.append(_check(f"{label}/joint-mass", abs(float(law.matrix.sum()) - 1.0), 1e-10))
    second = np.array(
        [
            float(np.real(np.vdot(propagate(lind, _pinched(observable, rho0), t_mid), P)))
            for P in observable.projectors
        ]
    )
    out.append(
        _check(
            f"{label}/joint-columns",
            float(np.abs(law.second_marginal() - second).max()),
            1e-10,
            note="second marginal = evolved dephased state",
        )
    )

    # tilted-generator route agrees with the summed joint law
    worst = 0.0
    for alpha in alphas:
        for t in (times[0], t_mid):
            direct = mgf(lind, rho0, observable, t, alpha, method="direct")
            deformed = mgf(lind, rho0, observable, t, alpha, method="deformed")
            worst = max(worst, abs(direct - deformed) / max(1.0, abs(direct)))
    out.append(_check(f"{label}/mgf-deformed", worst, 1e-9))
    out.append(
        _check(
            f"{label}/mgf-at-zero",
            abs(mgf(lind, rho0, observable, t_mid, 0.0, method="direct") - 1.0),
            1e-12,
        )
    )

    h = 1e-4
    slope = (
        mgf(lind, rho0, observable, t_mid, h, method="direct")
        - mgf(lind, rho0, observable, t_mid, -h, method="direct")
    ) / (2.0 * h)
    expected = expected_delta(lind, rho0, observable, t_mid)
    out.append(
        _check(
            f"{label}/mean-vs-mgf-slope",
            abs(slope - expected),
            1e-6 * max(1.0, abs(expected)),
        )
    )
    return out


def _pinched(observable, rho):
    out = np.zeros_like(np.asarray(rho, dtype=complex))
    for P in observable.projectors:
        out += P @ rho @ P
    return out


def _db_checks(label, lind, steady, rho0, times, tol_db, tol_identity) -> list:
    out = []
    gns = check_db(steady, lind, s=1.0, tol=tol_db)
    kms = check_db(steady, lind, s=0.5, tol=tol_db)
    out.append(
        _info(
            f"{label}/db-report",
            f"gns={'holds' if gns.holds else 'fails'}({gns.residual:.3e}) "
            f"kms={'holds' if kms.holds else 'fails'}({kms.residual:.3e})",
        )
    )
    if not gns.holds:
        out.append(
            _info(
                f"{label}/db-implications",
                "skipped: detailed balance does not hold for this reservoir",
            )
        )
        return out

    scale = max(1.0, float(np.linalg.norm(generator_matrix(lind), 2)))
    out.append(
        _check(
            f"{label}/db-pinch-commutation",
            check_pinch_commutation(steady, lind),
            1e-9 * scale,
        )
    )
    c_unit, c_ham = commutation_identities(steady, lind)
    out.append(_check(f"{label}/db-unit-commutes", c_unit, 1e-9))
    out.append(_check(f"{label}/db-hamiltonian-commutes", c_ham, 1e-9))
    out.append(
        _check(
            f"{label}/db-dissipator-selfadjoint",
            dissipator_selfadjoint_residual(steady, lind, s=1.0),
            1e-9,
        )
    )
    if is_faithful(rho0):
        t_mid = times[len(times) // 2]
        try:
            report = expflu(lind, steady, rho0, t_mid, db_tol=tol_db)
            out.append(
                _check(
                    f"{label}/db-flux-decomposition",
                    max(report.flux_residual, report.balance_residual),
                    tol_identity,
                    note="E(dS) = integrated flux = entropy change - integrated production",
                )
            )
        except RuntimeError as exc:
            out.append(
                CheckResult(
                    name=f"{label}/db-flux-decomposition",
                    passed=False,
                    residual=float("inf"),
                    tolerance=tol_identity,
                    note=str(exc),
                )
            )
    else:
        out.append(
            _info(f"{label}/db-flux-decomposition", "skipped: initial state is not faithful")
        )
    return out


def _chain_checks(decomp, rho0, times, alphas, tol_db) -> list:
    out = []
    lind = decomp.total
    if not is_relaxing(lind):
        return [_info("chain/extraction", "skipped: total generator is not relaxing")]
    steady = steady_states(lind)[0]
    if not is_faithful(steady):
        return [_info("chain/extraction", "skipped: stationary state is not faithful")]
    dec = spectral_decompose(steady)
    if len(dec.values) != lind.dim or not check_gens(entropy_observable(steady)):
        return [
            _info("chain/extraction", "skipped: stationary spectrum is degenerate or non-generic")
        ]
    if not check_db(steady, lind, s=1.0, tol=tol_db).holds:
        return [_info("chain/extraction", "skipped: total generator lacks detailed balance")]

    chain = extract_chain(lind, steady, rho0, db_tol=tol_db)
    out.append(
        _check("chain/row-sums", float(np.abs(chain.rates.sum(axis=1)).max()), 1e-10)
    )
    out.append(_check("chain/reversibility", classical_db_check(chain), 1e-9))
    out.append(
        _check(
            "chain/invariant-law",
            float(np.abs(invariant_vector(chain) - np.exp(-chain.states)).max()),
            1e-10,
            note="invariant law equals exp(-s)",
        )
    )

    observable = entropy_observable(steady)
    worst = 0.0
    for t in times:
        law = joint_law(lind, rho0, observable, t)
        classical = chain.pi0[:, None] * transition_matrix(chain, t)
        worst = max(worst, float(np.abs(law.matrix - classical).max()))
    out.append(_check("chain/joint-law", worst, 1e-9))

    worst = 0.0
    t_mid = times[len(times) // 2]
    for alpha in alphas:
        q = mgf(lind, rho0, observable, t_mid, alpha, method="direct")
        c = classical_mgf(chain, t_mid, alpha)
        worst = max(worst, abs(q - c) / max(1.0, abs(q)))
    out.append(_check("chain/mgf", worst, 1e-9))
    return out


def _entropy_checks(decomp, rho0, times, tol_identity) -> list:
    out = []
    out.append(
        _check("entropy/self-relative", abs(relative_entropy(rho0, rho0)), 1e-12)
    )
    have_all = all(r.steady_state is not None for r in decomp.reservoirs)

    for res in decomp.reservoirs:
        if res.steady_state is None:
            out.append(
                _info(
                    f"entropy/{res.label}/monotonicity",
                    "skipped: no stationary state recorded",
                )
            )
            continue
        if not is_faithful(res.steady_state):
            out.append(
                _info(
                    f"entropy/{res.label}/monotonicity",
                    "skipped: stationary state is not faithful",
                )
            )
            continue
        grid = np.linspace(0.0, times[-1], 21)
        values = [
            relative_entropy(propagate(res.lindbladian, rho0, t), res.steady_state)
            for t in grid
        ]
        finite = [v for v in values if np.isfinite(v)]
        increase = 0.0
        for a, b in zip(finite, finite[1:]):
            increase = max(increase, b - a)
        out.append(
            _check(
                f"entropy/{res.label}/monotonicity",
                increase,
                1e-9,
                note="relative entropy to the stationary state is nonincreasing",
            )
        )

        worst = 0.0
        try:
            for t in times:
                ep = ep_component(propagate(decomp.total, rho0, t), res.lindbladian, res.steady_state)
                if np.isfinite(ep):
                    worst = max(worst, max(0.0, -ep))
            out.append(_check(f"entropy/{res.label}/production-nonnegative", worst, 1e-9))
        except RuntimeError as exc:
            out.append(
                CheckResult(
                    name=f"entropy/{res.label}/production-nonnegative",
                    passed=False,
                    residual=float("inf"),
                    tolerance=0.0,
                    note=str(exc),
                )
            )

    if have_all:
        t_mid = times[len(times) // 2]
        res = entropy_balance_residual(decomp, rho0, t_mid)
        if np.isfinite(res):
            out.append(
                _check(
                    "entropy/balance",
                    res,
                    tol_identity,
                    note="dS/dt = production + flux along the flow",
                )
            )
        else:
            out.append(
                _info("entropy/balance", "skipped: entropy production is infinite at probe time")
            )
    else:
        out.append(_info("entropy/balance", "skipped: a reservoir lacks a stationary state"))

    if is_relaxing(decomp.total):
        steady = steady_states(decomp.total)[0]
        if is_faithful(steady):
            if is_faithful(rho0):
                scan = finiteness_scan(decomp.total, rho0, times)
                out.append(
                    _check(
                        "entropy/finiteness",
                        0.0 if scan.all_finite else float("inf"),
                        0.0,
                        note="entropy derivative finite along the flow of a faithful state",
                    )
                )
            else:
                scan = finiteness_scan(decomp.total, rho0, times)
                out.append(
                    _info(
                        "entropy/finiteness",
                        f"non-faithful start: finite from t={scan.first_finite_time}",
                    )
                )
    return out


def _qrm_checks(label, spec: QrmSpec, lind, rho0, times, alphas, rng) -> list:
    out = []
    d = spec.dim
    t_mid = times[len(times) // 2]

    # the Kraus realisation reproduces the direct reset action
    worst = 0.0
    for _ in range(3):
        rho = random_density(rng, d, faithful=False)
        worst = max(worst, trace_norm(apply_generator(lind, rho) - apply_reset(spec, rho)))
    out.append(_check(f"{label}/reset-kraus", worst, 1e-12))

    M = generator_matrix(lind)
    out.append(
        _check(
            f"{label}/reset-spectrum",
            _greedy_match_residual(np.linalg.eigvals(M), qrm_spectrum(spec)),
            1e-8,
            note="spectrum is {0} and {-Gamma - i a} over Bohr frequencies a",
        )
    )
    out.append(
        _check(
            f"{label}/reset-propagator",
            trace_norm(propagate(lind, rho0, t_mid) - qrm_propagate_closed(spec, rho0, t_mid)),
            1e-9,
        )
    )

    commuting = trace_norm(
        spec.effective_hamiltonian() @ spec.reset_state
        - spec.reset_state @ spec.effective_hamiltonian()
    ) <= 1e-10
    T = spec.reset_state
    simple = len(spectral_decompose(T).values) == d
    if not (commuting and simple and is_faithful(T) and is_faithful(rho0)):
        out.append(
            _info(
                f"{label}/reset-closed-forms",
                "skipped: need [H,T]=0, simple faithful T, faithful initial state",
            )
        )
        return out
    levels = entropy_observable(T)
    if not check_gens(levels):
        out.append(
            _info(f"{label}/reset-closed-forms", "skipped: entropy levels have colliding gaps")
        )
        return out

    closure, rates = qrm_chain_closed(spec)
    chain = extract_chain(lind, T, rho0)
    out.append(
        _check(f"{label}/reset-chain", float(np.abs(chain.rates - rates).max()), 1e-10)
    )

    ref = delta_distribution(lind, rho0, levels, t_mid)
    closed = qrm_delta_closed(spec, rho0, t_mid)
    if ref.support.size == closed.support.size:
        residual = max(
            float(np.abs(ref.support - closed.support).max()),
            float(np.abs(ref.probabilities - closed.probabilities).max()),
        )
    else:
        residual = float("inf")
    out.append(_check(f"{label}/reset-delta-law", residual, 1e-9))

    worst = 0.0
    for alpha in alphas:
        worst = max(
            worst,
            abs(
                mgf(lind, rho0, levels, t_mid, alpha, method="direct")
                - qrm_mgf_closed(spec, rho0, t_mid, alpha)
            ),
        )
    out.append(_check(f"{label}/reset-mgf", worst, 1e-9))
    out.append(
        _check(
            f"{label}/reset-mean",
            abs(
                expected_delta(lind, rho0, levels, t_mid)
                - qrm_expected_delta_closed(spec, rho0, t_mid)
            ),
            1e-9,
        )
    )
    out.append(
        _check(
            f"{label}/reset-production",
            abs(ep_component(rho0, lind, T) - qrm_ep_closed(spec, rho0)),
            1e-9,
            note="EP(rho) = Gamma (Ent(T|rho) + Ent(rho|T)) under [H,T]=0",
        )
    )
    return out


def run_verify(scenario: Scenario, seed: int = 0) -> list:
    """Run every supported check of a scenario; deterministic given ``seed``."""
    rng = np.random.default_rng(seed)
    decomp = scenario.decomposition()
    rho0 = scenario.initial_state
    times = scenario.times
    alphas = scenario.alphas
    tols = scenario.tolerances
    t_probe = max(times[len(times) // 2], 1e-3)

    results: list = []
    results.extend(_generator_checks("total", decomp.total, rng, t_probe))
    named = []
    for res in decomp.reservoirs:
        label = res.label or "reservoir"
        named.append((label, res))
        if len(decomp.reservoirs) > 1:
            results.extend(_generator_checks(label, res.lindbladian, rng, t_probe))

    if len(decomp.reservoirs) > 1:
        M_sum = sum(generator_matrix(r.lindbladian) for r in decomp.reservoirs)
        M_tot = generator_matrix(decomp.total)
        results.append(
            _check(
                "total/additivity",
                float(np.abs(M_tot - M_sum).max()),
                1e-12 * max(1.0, float(np.linalg.norm(M_tot, 2))),
                note="the reservoir generators sum to the total generator",
            )
        )

    for label, res in named:
        if res.steady_state is None:
            results.append(
                _info(f"{label}/stationary-state", "none recorded; dependent checks skipped")
            )
            continue
        results.append(
            _check(
                f"{label}/stationarity",
                trace_norm(apply_generator(res.lindbladian, res.steady_state)),
                1e-9,
            )
        )
        if not is_faithful(res.steady_state):
            results.append(
                _info(f"{label}/faithful", "stationary state not faithful; two-time checks skipped")
            )
            continue
        results.extend(_two_time_checks(label, res.lindbladian, res.steady_state, rho0, times, alphas))
        results.extend(
            _db_checks(label, res.lindbladian, res.steady_state, rho0, times, tols.db, tols.identity)
        )

    results.extend(_entropy_checks(decomp, rho0, times, tols.identity))
    results.extend(_chain_checks(decomp, rho0, times, alphas, tols.db))

    for spec_res, (label, res) in zip(scenario.reservoirs, named):
        if spec_res.kind != "qrm":
            continue
        h_j = scenario.hamiltonian if spec_res.hamiltonian is None else spec_res.hamiltonian
        qspec = QrmSpec(
            hamiltonian=h_j,
            reset_state=spec_res.reset_state,
            gamma=spec_res.gamma,
            lam=spec_res.lam,
            label=label,
        )
        results.extend(_qrm_checks(label, qspec, res.lindbladian, rho0, times, alphas, rng))

    return results
