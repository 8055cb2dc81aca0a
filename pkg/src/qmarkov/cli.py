"""Command-line interface: scenario-driven reports as delimited output.

Every subcommand reads one scenario file, computes a report, and writes CSV
to stdout or ``--out``.  With ``--plot`` the report also renders PNG figures
next to the delimited output.  Exit codes: 0 success, 2 unreadable scenario,
3 invalid scenario, 4 a hypothesis needed by the requested report fails,
5 numerical failure (including failed verification checks).

Tolerance precedence (most specific wins): the scenario's ``tolerances``
block, then ``--tol``, then the ``QMARKOV_TOL`` environment variable, then
the built-in defaults.  ``--tol`` and ``QMARKOV_TOL`` set the detailed
balance tolerance.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .chain import classical_db_check, classical_mgf, extract_chain, invariant_vector
from .detailed_balance import check_db
from .entropy import (
    entropy_flux,
    entropy_observable,
    ep_component,
    von_neumann_entropy,
)
from .lindblad import (
    apply_generator,
    generator_matrix,
    is_relaxing,
    propagate,
    steady_states,
)
from .operators import HypothesisViolation, check_gens, is_faithful, spectral_decompose, trace_norm
from .report import write_csv
from .reset import (
    QrmSpec,
    qrm_chain_closed,
    qrm_delta_closed,
    qrm_ep_closed,
    qrm_expected_delta_closed,
    qrm_mgf_closed,
    qrm_propagate_closed,
    qrm_spectrum,
)
from .scenario import (
    ScenarioParseError,
    ScenarioValidationError,
    Tolerances,
    load_scenario,
)
from .two_time import delta_distribution, expected_delta, mgf
from .verify import run_verify

__all__ = ["main", "build_parser"]


def _base_tolerances(args) -> Tolerances:
    tol = args.tol
    if tol is None:
        env = os.environ.get("QMARKOV_TOL")
        if env is not None:
            try:
                tol = float(env)
            except ValueError as exc:
                raise ScenarioValidationError("QMARKOV_TOL", f"not a number: {env!r}") from exc
    if tol is None:
        return Tolerances()
    if tol <= 0:
        raise ScenarioValidationError("--tol", "must be a positive number")
    return Tolerances(db=tol)


def _load(args):
    return load_scenario(args.scenario, base_tolerances=_base_tolerances(args))


def _plot_stem(args, default: str) -> str:
    if args.out:
        stem, _ = os.path.splitext(args.out)
        return stem
    return default


def _maybe_chain(decomp, rho0, tols):
    """The equivalent classical chain of the total generator, if it exists."""
    lind = decomp.total
    if not is_relaxing(lind, tol=tols.relaxing):
        return None, "total generator is not relaxing"
    steady = steady_states(lind, kernel_tol=tols.kernel)[0]
    if not is_faithful(steady, threshold=tols.faithfulness):
        return None, "stationary state is not faithful"
    if len(spectral_decompose(steady).values) != lind.dim:
        return None, "stationary spectrum is degenerate"
    if not check_gens(entropy_observable(steady)):
        return None, "entropy levels have colliding gaps"
    if not check_db(steady, lind, s=1.0, tol=tols.db).holds:
        return None, "total generator lacks detailed balance"
    return extract_chain(lind, steady, rho0, db_tol=tols.db), ""


def cmd_steady(args) -> int:
    scenario = _load(args)
    decomp = scenario.decomposition()
    rows = []
    relaxing = is_relaxing(decomp.total, tol=scenario.tolerances.relaxing)
    for k, state in enumerate(steady_states(decomp.total, kernel_tol=scenario.tolerances.kernel)):
        for i in range(scenario.dimension):
            for j in range(scenario.dimension):
                rows.append(
                    ("total", relaxing, k, i, j, float(state[i, j].real), float(state[i, j].imag))
                )
    for res in decomp.reservoirs:
        if res.steady_state is None:
            continue
        sub_relaxing = is_relaxing(res.lindbladian, tol=scenario.tolerances.relaxing)
        for i in range(scenario.dimension):
            for j in range(scenario.dimension):
                rows.append(
                    (
                        res.label,
                        sub_relaxing,
                        0,
                        i,
                        j,
                        float(res.steady_state[i, j].real),
                        float(res.steady_state[i, j].imag),
                    )
                )
    write_csv(
        ("scope", "relaxing", "state_index", "row", "col", "re", "im"), rows, args.out
    )
    return 0


def cmd_evolve(args) -> int:
    scenario = _load(args)
    decomp = scenario.decomposition()
    rho0 = scenario.initial_state
    d = scenario.dimension
    labels = [r.label for r in decomp.reservoirs]
    fluxes = {
        r.label: entropy_flux(r.lindbladian, r.steady_state, label=r.label)
        for r in decomp.reservoirs
        if r.steady_state is not None and is_faithful(r.steady_state)
    }

    header = ["t", "entropy", "production"]
    header += [f"production_{lb}" for lb in labels]
    header += [f"flux_{lb}" for lb in labels]
    header += [f"rho_{i}_{j}_{part}" for i in range(d) for j in range(d) for part in ("re", "im")]

    rows = []
    entropies, productions = [], []
    flux_series = {lb: [] for lb in labels}
    for t in scenario.times:
        rho_t = propagate(decomp.total, rho0, t)
        entropy = von_neumann_entropy(rho_t)
        per_res = []
        for res in decomp.reservoirs:
            if res.steady_state is None or not is_faithful(res.steady_state):
                per_res.append(None)
            else:
                per_res.append(ep_component(rho_t, res.lindbladian, res.steady_state))
        total_ep = None
        if all(v is not None for v in per_res):
            total_ep = sum(per_res)
        flux_vals = []
        for res in decomp.reservoirs:
            fl = fluxes.get(res.label)
            if fl is None:
                flux_vals.append(None)
            else:
                flux_vals.append(float(np.real(np.trace(rho_t @ fl.i_plus))))
        row = [t, entropy, total_ep] + per_res + flux_vals
        row += [
            v
            for i in range(d)
            for j in range(d)
            for v in (float(rho_t[i, j].real), float(rho_t[i, j].imag))
        ]
        rows.append(row)
        entropies.append(entropy)
        productions.append(total_ep if total_ep is not None else np.nan)
        for lb, v in zip(labels, flux_vals):
            flux_series[lb].append(v if v is not None else np.nan)
    write_csv(header, rows, args.out)

    if args.plot:
        from .plots import plot_evolution

        series = {"entropy": entropies, "production": productions}
        for lb in labels:
            series[f"flux {lb}"] = flux_series[lb]
        plot_evolution(scenario.times, series, _plot_stem(args, "evolve") + ".png")
    return 0


def cmd_db_check(args) -> int:
    scenario = _load(args)
    decomp = scenario.decomposition()
    rows = []
    targets = []
    for res in decomp.reservoirs:
        if res.steady_state is not None and is_faithful(res.steady_state):
            targets.append((res.label, res.lindbladian, res.steady_state))
    if len(decomp.reservoirs) > 1 and is_relaxing(decomp.total, tol=scenario.tolerances.relaxing):
        steady = steady_states(decomp.total, kernel_tol=scenario.tolerances.kernel)[0]
        if is_faithful(steady):
            targets.append(("total", decomp.total, steady))
    if not targets:
        raise HypothesisViolation("no reservoir has a faithful stationary state to test")
    for label, lind, steady in targets:
        stationarity = trace_norm(apply_generator(lind, steady))
        for s in (0.0, 0.5, 1.0):
            report = check_db(steady, lind, s=s, tol=scenario.tolerances.db)
            rows.append(
                (label, s, report.holds, report.residual, report.tolerance, stationarity)
            )
    write_csv(
        ("reservoir", "s", "holds", "residual", "tolerance", "stationarity"), rows, args.out
    )
    return 0


def cmd_ttm(args) -> int:
    scenario = _load(args)
    decomp = scenario.decomposition()
    rho0 = scenario.initial_state
    rows = []
    plotted = {}
    any_target = False
    for res in decomp.reservoirs:
        if res.steady_state is None or not is_faithful(res.steady_state):
            print(
                f"note: reservoir {res.label} has no faithful stationary state; skipped",
                file=sys.stderr,
            )
            continue
        any_target = True
        observable = entropy_observable(res.steady_state)
        for t in scenario.times:
            dist = delta_distribution(res.lindbladian, rho0, observable, t)
            expected = expected_delta(res.lindbladian, rho0, observable, t)
            for sigma, p in zip(dist.support, dist.probabilities):
                rows.append((res.label, t, float(sigma), float(p), expected))
            plotted[res.label] = dist
    if not any_target:
        raise HypothesisViolation("no reservoir has a faithful stationary state")
    write_csv(("reservoir", "t", "sigma", "probability", "expected"), rows, args.out)

    if args.plot:
        from .plots import plot_distribution

        stem = _plot_stem(args, "ttm")
        for label, dist in plotted.items():
            plot_distribution(
                dist.support,
                dist.probabilities,
                f"{stem}_{label}.png",
                title=f"law of the entropy change ({label}, t={scenario.times[-1]:g})",
            )
    return 0


def cmd_mgf(args) -> int:
    scenario = _load(args)
    decomp = scenario.decomposition()
    rho0 = scenario.initial_state
    tols = scenario.tolerances
    if not is_relaxing(decomp.total, tol=tols.relaxing):
        raise HypothesisViolation("total generator is not relaxing; no entropic observable")
    steady = steady_states(decomp.total, kernel_tol=tols.kernel)[0]
    if not is_faithful(steady, threshold=tols.faithfulness):
        raise HypothesisViolation("stationary state is not faithful; no entropic observable")
    observable = entropy_observable(steady)
    chain, _ = _maybe_chain(decomp, rho0, tols)

    rows = []
    curves = {}
    for t in scenario.times:
        values = []
        for alpha in scenario.alphas:
            direct = mgf(decomp.total, rho0, observable, t, alpha, method="direct")
            deformed = mgf(decomp.total, rho0, observable, t, alpha, method="deformed")
            classical = classical_mgf(chain, t, alpha) if chain is not None else None
            rows.append((t, alpha, direct, deformed, classical))
            values.append(direct)
        curves[f"t={t:g}"] = values
    write_csv(("t", "alpha", "direct", "deformed", "classical"), rows, args.out)

    if args.plot:
        from .plots import plot_mgf

        plot_mgf(scenario.alphas, curves, _plot_stem(args, "mgf") + ".png")
    return 0


def cmd_chain(args) -> int:
    scenario = _load(args)
    decomp = scenario.decomposition()
    chain, reason = _maybe_chain(decomp, scenario.initial_state, scenario.tolerances)
    if chain is None:
        raise HypothesisViolation(f"no equivalent classical chain: {reason}")
    rows = []
    for i, s in enumerate(chain.states):
        rows.append(("state", i, None, float(s)))
    for i in range(chain.size):
        for j in range(chain.size):
            rows.append(("rate", i, j, float(chain.rates[i, j])))
    for i, p in enumerate(chain.pi0):
        rows.append(("pi0", i, None, float(p)))
    for i, p in enumerate(invariant_vector(chain)):
        rows.append(("invariant", i, None, float(p)))
    rows.append(("db_residual", None, None, classical_db_check(chain)))
    write_csv(("quantity", "i", "j", "value"), rows, args.out)

    if args.plot:
        from .plots import plot_rate_matrix

        plot_rate_matrix(
            chain.states,
            chain.rates,
            _plot_stem(args, "chain") + ".png",
            title="classical rate matrix",
        )
    return 0


def cmd_qrm_demo(args) -> int:
    scenario = _load(args)
    decomp = scenario.decomposition()
    rho0 = scenario.initial_state
    t_mid = scenario.times[len(scenario.times) // 2]
    rows = []
    found = False
    for spec_res, res in zip(scenario.reservoirs, decomp.reservoirs):
        if spec_res.kind != "qrm":
            continue
        found = True
        h_j = scenario.hamiltonian if spec_res.hamiltonian is None else spec_res.hamiltonian
        spec = QrmSpec(
            hamiltonian=h_j,
            reset_state=spec_res.reset_state,
            gamma=spec_res.gamma,
            lam=spec_res.lam,
            label=res.label,
        )
        lind = res.lindbladian

        eigs = list(np.linalg.eigvals(generator_matrix(lind)))
        worst = 0.0
        for value, mult in qrm_spectrum(spec):
            for _ in range(mult):
                k = int(np.argmin(np.abs(np.asarray(eigs) - value)))
                worst = max(worst, float(abs(eigs.pop(k) - value)))
        rows.append((res.label, "spectrum", "", None, None, worst))

        generic = propagate(lind, rho0, t_mid)
        closed = qrm_propagate_closed(spec, rho0, t_mid)
        rows.append((res.label, "propagator", f"t={t_mid:g}", None, None, trace_norm(generic - closed)))

        commuting = (
            trace_norm(
                spec.effective_hamiltonian() @ spec.reset_state
                - spec.reset_state @ spec.effective_hamiltonian()
            )
            <= 1e-10
        )
        simple = len(spectral_decompose(spec.reset_state).values) == scenario.dimension
        if not (commuting and simple and is_faithful(spec.reset_state) and is_faithful(rho0)):
            rows.append((res.label, "closed_forms", "skipped", None, None, None))
            continue
        levels = entropy_observable(spec.reset_state)
        if not check_gens(levels):
            rows.append((res.label, "closed_forms", "skipped", None, None, None))
            continue

        _, rates = qrm_chain_closed(spec)
        chain = extract_chain(lind, spec.reset_state, rho0)
        for i in range(chain.size):
            for j in range(chain.size):
                rows.append(
                    (
                        res.label,
                        "rate",
                        f"{i},{j}",
                        float(rates[i, j]),
                        float(chain.rates[i, j]),
                        float(abs(rates[i, j] - chain.rates[i, j])),
                    )
                )
        for alpha in scenario.alphas:
            c = qrm_mgf_closed(spec, rho0, t_mid, alpha)
            g = mgf(lind, rho0, levels, t_mid, alpha, method="direct")
            rows.append((res.label, "mgf", f"t={t_mid:g},alpha={alpha:g}", c, g, abs(c - g)))
        c = qrm_expected_delta_closed(spec, rho0, t_mid)
        g = expected_delta(lind, rho0, levels, t_mid)
        rows.append((res.label, "mean", f"t={t_mid:g}", c, g, abs(c - g)))
        c = qrm_ep_closed(spec, rho0)
        g = ep_component(rho0, lind, spec.reset_state)
        rows.append((res.label, "production", "", c, g, abs(c - g)))

        closed_dist = qrm_delta_closed(spec, rho0, t_mid)
        generic_dist = delta_distribution(lind, rho0, levels, t_mid)
        if closed_dist.support.size == generic_dist.support.size:
            diff = max(
                float(np.abs(closed_dist.support - generic_dist.support).max()),
                float(np.abs(closed_dist.probabilities - generic_dist.probabilities).max()),
            )
        else:
            diff = float("inf")
        rows.append((res.label, "delta_law", f"t={t_mid:g}", None, None, diff))
    if not found:
        raise HypothesisViolation("scenario has no reset (qrm) reservoirs")
    write_csv(("reservoir", "check", "parameter", "closed", "generic", "difference"), rows, args.out)
    return 0


def cmd_verify(args) -> int:
    scenario = _load(args)
    results = run_verify(scenario, seed=args.seed)
    rows = [(r.name, r.passed, r.residual, r.tolerance, r.note) for r in results]
    write_csv(("check", "passed", "residual", "tolerance", "note"), rows, args.out)
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"FAILED {r.name}: residual {r.residual:.3e} > {r.tolerance:.3e} {r.note}", file=sys.stderr)
    return 5 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmarkov",
        description="Markovian open quantum systems: entropy statistics reports",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="path to a scenario JSON file")
    common.add_argument("--out", help="write CSV here instead of stdout")
    common.add_argument("--tol", type=float, help="detailed balance tolerance override")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument(
        "--plot", action="store_true", help="also render PNG figures next to the output"
    )

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("steady", parents=[common], help="stationary states").set_defaults(
        func=cmd_steady
    )
    sub.add_parser(
        "evolve", parents=[common], help="entropy, production and flux along the flow"
    ).set_defaults(func=cmd_evolve)
    sub.add_parser(
        "db-check", parents=[common], help="detailed balance tests at s = 0, 1/2, 1"
    ).set_defaults(func=cmd_db_check)
    sub.add_parser(
        "ttm", parents=[common], help="two-time law of the entropy change per reservoir"
    ).set_defaults(func=cmd_ttm)
    sub.add_parser(
        "mgf", parents=[common], help="moment generating function (direct, tilted, classical)"
    ).set_defaults(func=cmd_mgf)
    sub.add_parser(
        "chain", parents=[common], help="equivalent classical Markov chain"
    ).set_defaults(func=cmd_chain)
    sub.add_parser(
        "qrm-demo", parents=[common], help="reset-model closed forms against generic code paths"
    ).set_defaults(func=cmd_qrm_demo)
    sub.add_parser(
        "verify", parents=[common], help="run every structural identity the scenario supports"
    ).set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScenarioValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except HypothesisViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
