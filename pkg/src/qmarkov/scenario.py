"""Scenario files: a JSON description of a model and what to compute.

A scenario fixes the Hilbert-space dimension, the Hamiltonian, one or more
reservoir couplings (either explicit jump operators or a reset coupling),
an initial state, and the time/tilt grids used by the command-line reports.
Complex matrix entries are written as ``[re, im]`` pairs; plain numbers are
accepted for real entries.

Example::

    {
      "dimension": 2,
      "hamiltonian": [[0, 0], [0, 1]],
      "reservoirs": [
        {"qrm": {"T": [[0.75, 0], [0, 0.25]], "gamma": 1.0, "lambda": 1.0},
         "beta": 1.0986122886681098, "label": "bath"}
      ],
      "initial_state": [[0.6, [0.2, 0.1]], [[0.2, -0.1], 0.4]],
      "times": [0.1, 1.0, 10.0],
      "alphas": [-1.0, 0.0, 1.0],
      "tolerances": {"db": 1e-9}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .lindblad import Lindbladian, Reservoir, ReservoirDecomposition, is_relaxing, steady_states
from .operators import is_faithful, require_hermitian, check_density_matrix
from .reset import QrmSpec, build_qrm, qrm_steady_state

__all__ = [
    "ScenarioError",
    "ScenarioParseError",
    "ScenarioValidationError",
    "Tolerances",
    "ReservoirSpec",
    "Scenario",
    "load_scenario",
    "parse_scenario",
]


class ScenarioError(ValueError):
    """Base class for scenario problems."""


class ScenarioParseError(ScenarioError):
    """The scenario file cannot be read or is not valid JSON."""


class ScenarioValidationError(ScenarioError):
    """The scenario is syntactically fine but semantically invalid."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances a scenario may override, with package defaults."""

    db: float = 1e-9
    kernel: float | None = None  # None lets the SVD threshold scale itself
    relaxing: float = 1e-9
    faithfulness: float = 1e-12
    identity: float = 1e-4

    @classmethod
    def from_mapping(cls, data: dict, base: "Tolerances | None" = None) -> "Tolerances":
        base = base or cls()
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ScenarioValidationError(
                "tolerances", f"unknown keys {sorted(unknown)}; known: {sorted(known)}"
            )
        values = {f.name: getattr(base, f.name) for f in fields(cls)}
        for key, val in data.items():
            if val is not None and (not isinstance(val, (int, float)) or val <= 0):
                raise ScenarioValidationError("tolerances", f"{key} must be a positive number")
            values[key] = float(val) if val is not None else None
        return cls(**values)


def _matrix_from_json(obj, dim: int, field_name: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != dim:
        raise ScenarioValidationError(field_name, f"expected a {dim}x{dim} matrix")
    out = np.zeros((dim, dim), dtype=complex)
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != dim:
            raise ScenarioValidationError(field_name, f"row {i} is not a list of length {dim}")
        for j, entry in enumerate(row):
            if isinstance(entry, (int, float)):
                out[i, j] = float(entry)
            elif (
                isinstance(entry, list)
                and len(entry) == 2
                and all(isinstance(x, (int, float)) for x in entry)
            ):
                out[i, j] = complex(entry[0], entry[1])
            else:
                raise ScenarioValidationError(
                    field_name, f"entry ({i},{j}) must be a number or an [re, im] pair"
                )
    return out


@dataclass
class ReservoirSpec:
    """One reservoir as declared in a scenario."""

    kind: str  # "kraus" or "qrm"
    lam: float
    label: str
    beta: float | None = None
    kraus: tuple = ()
    reset_state: np.ndarray | None = None
    gamma: float | None = None
    hamiltonian: np.ndarray | None = None  # optional per-reservoir override


@dataclass
class Scenario:
    """A validated scenario, ready to be turned into generators."""

    dimension: int
    hamiltonian: np.ndarray
    reservoirs: list
    initial_state: np.ndarray
    times: list
    alphas: list
    tolerances: Tolerances = field(default_factory=Tolerances)

    def decomposition(self) -> ReservoirDecomposition:
        """Build the reservoir generators and their stationary states.

        Reset reservoirs get their closed-form stationary state; explicit
        Kraus reservoirs get the unique faithful stationary state of their
        sub-generator when there is one (``None`` otherwise — consumers that
        need it will refuse).
        """
        parts = []
        all_kraus: list = []
        h_total = np.zeros_like(self.hamiltonian)
        for res in self.reservoirs:
            h_j = self.hamiltonian if res.hamiltonian is None else res.hamiltonian
            h_total = h_total + res.lam * h_j
            if res.kind == "qrm":
                spec = QrmSpec(
                    hamiltonian=h_j,
                    reset_state=res.reset_state,
                    gamma=res.gamma,
                    lam=res.lam,
                    label=res.label,
                )
                lind = build_qrm(spec)
                steady = qrm_steady_state(spec)
            else:
                lind = Lindbladian(hamiltonian=res.lam * h_j, kraus=res.kraus, label=res.label)
                steady = None
                if is_relaxing(lind, tol=self.tolerances.relaxing):
                    candidate = steady_states(lind, kernel_tol=self.tolerances.kernel)[0]
                    if is_faithful(candidate, threshold=self.tolerances.faithfulness):
                        steady = candidate
            all_kraus.extend(lind.kraus)
            parts.append(
                Reservoir(lindbladian=lind, steady_state=steady, beta=res.beta, label=res.label)
            )
        total = Lindbladian(hamiltonian=h_total, kraus=tuple(all_kraus), label="total")
        return ReservoirDecomposition(reservoirs=tuple(parts), total=total)


def _parse_reservoir(entry, index: int, dim: int) -> ReservoirSpec:
    name = f"reservoirs[{index}]"
    if not isinstance(entry, dict):
        raise ScenarioValidationError(name, "must be an object")
    has_kraus = "kraus" in entry
    has_qrm = "qrm" in entry
    if has_kraus == has_qrm:
        raise ScenarioValidationError(name, "exactly one of 'kraus' or 'qrm' is required")
    label = entry.get("label", f"reservoir_{index + 1}")
    if not isinstance(label, str):
        raise ScenarioValidationError(name, "label must be a string")
    beta = entry.get("beta")
    if beta is not None and (not isinstance(beta, (int, float)) or beta <= 0):
        raise ScenarioValidationError(name, "beta must be a positive number")

    if has_kraus:
        raw = entry["kraus"]
        if not isinstance(raw, list) or not raw:
            raise ScenarioValidationError(name, "kraus must be a nonempty list of matrices")
        kraus = tuple(
            _matrix_from_json(m, dim, f"{name}.kraus[{k}]") for k, m in enumerate(raw)
        )
        lam = entry.get("lambda")
        return ReservoirSpec(
            kind="kraus",
            lam=lam if lam is not None else float("nan"),
            label=label,
            beta=beta,
            kraus=kraus,
        )

    qrm = entry["qrm"]
    if not isinstance(qrm, dict):
        raise ScenarioValidationError(name, "qrm must be an object")
    unknown = set(qrm) - {"T", "gamma", "lambda", "H"}
    if unknown:
        raise ScenarioValidationError(name, f"unknown qrm keys {sorted(unknown)}")
    if "T" not in qrm or "gamma" not in qrm:
        raise ScenarioValidationError(name, "qrm requires 'T' and 'gamma'")
    T = _matrix_from_json(qrm["T"], dim, f"{name}.qrm.T")
    try:
        T = check_density_matrix(T, name=f"{name}.qrm.T")
    except ValueError as exc:
        raise ScenarioValidationError(f"{name}.qrm.T", str(exc)) from exc
    gamma = qrm["gamma"]
    if not isinstance(gamma, (int, float)) or gamma <= 0:
        raise ScenarioValidationError(name, "qrm.gamma must be a positive number")
    h_override = None
    if "H" in qrm:
        h_override = _matrix_from_json(qrm["H"], dim, f"{name}.qrm.H")
        try:
            h_override = require_hermitian(h_override, name=f"{name}.qrm.H")
        except ValueError as exc:
            raise ScenarioValidationError(f"{name}.qrm.H", str(exc)) from exc
    lam = qrm.get("lambda")
    return ReservoirSpec(
        kind="qrm",
        lam=lam if lam is not None else float("nan"),
        label=label,
        beta=beta,
        reset_state=T,
        gamma=float(gamma),
        hamiltonian=h_override,
    )


def parse_scenario(data: dict, base_tolerances: Tolerances | None = None) -> Scenario:
    """Validate a decoded scenario document."""
    if not isinstance(data, dict):
        raise ScenarioValidationError("scenario", "top level must be an object")
    required = {"dimension", "hamiltonian", "reservoirs", "initial_state", "times"}
    missing = required - set(data)
    if missing:
        raise ScenarioValidationError("scenario", f"missing required fields {sorted(missing)}")
    unknown = set(data) - required - {"alphas", "tolerances"}
    if unknown:
        raise ScenarioValidationError("scenario", f"unknown fields {sorted(unknown)}")

    dim = data["dimension"]
    if not isinstance(dim, int) or dim < 2:
        raise ScenarioValidationError("dimension", "must be an integer >= 2")

    H = _matrix_from_json(data["hamiltonian"], dim, "hamiltonian")
    try:
        H = require_hermitian(H, name="hamiltonian")
    except ValueError as exc:
        raise ScenarioValidationError("hamiltonian", str(exc)) from exc

    rho0 = _matrix_from_json(data["initial_state"], dim, "initial_state")
    try:
        rho0 = check_density_matrix(rho0, name="initial_state")
    except ValueError as exc:
        raise ScenarioValidationError("initial_state", str(exc)) from exc

    raw_reservoirs = data["reservoirs"]
    if not isinstance(raw_reservoirs, list) or not raw_reservoirs:
        raise ScenarioValidationError("reservoirs", "must be a nonempty list")
    reservoirs = [_parse_reservoir(e, i, dim) for i, e in enumerate(raw_reservoirs)]

    # Hamiltonian weights: all declared, or none (then an equal split)
    declared = [not np.isnan(r.lam) for r in reservoirs]
    if any(declared) and not all(declared):
        raise ScenarioValidationError(
            "reservoirs", "either every reservoir declares 'lambda' or none does"
        )
    if not any(declared):
        for r in reservoirs:
            r.lam = 1.0 / len(reservoirs)
    total_lam = sum(r.lam for r in reservoirs)
    if abs(total_lam - 1.0) > 1e-9:
        raise ScenarioValidationError(
            "reservoirs", f"Hamiltonian weights must sum to 1, got {total_lam:.12g}"
        )

    times = data["times"]
    if (
        not isinstance(times, list)
        or not times
        or not all(isinstance(t, (int, float)) for t in times)
    ):
        raise ScenarioValidationError("times", "must be a nonempty list of numbers")
    if any(t < 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
        raise ScenarioValidationError("times", "must be ascending (nonnegative, strictly increasing)")

    alphas = data.get("alphas", [-1.0, -0.5, 0.0, 0.5, 1.0])
    if not isinstance(alphas, list) or not all(isinstance(a, (int, float)) for a in alphas):
        raise ScenarioValidationError("alphas", "must be a list of numbers")

    tolerances = Tolerances.from_mapping(data.get("tolerances", {}), base=base_tolerances)
    return Scenario(
        dimension=dim,
        hamiltonian=H,
        reservoirs=reservoirs,
        initial_state=rho0,
        times=[float(t) for t in times],
        alphas=[float(a) for a in alphas],
        tolerances=tolerances,
    )


def load_scenario(path, base_tolerances: Tolerances | None = None) -> Scenario:
    """Read and validate a scenario file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return parse_scenario(data, base_tolerances=base_tolerances)
