"""Dense operator algebra on a finite-dimensional Hilbert space.

Operators are plain complex ``numpy`` arrays of shape ``(d, d)``.  States
(density matrices) are positive-semidefinite operators of unit trace.  This
module supplies the trace duality bracket, the weighted inner products
attached to a faithful state, spectral decompositions with eigenvalue
clustering, pinching (dephasing) maps and the modular action, together with
the validation helpers used throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "HERMITICITY_TOL",
    "TRACE_TOL",
    "PSD_TOL",
    "FAITHFULNESS_THRESHOLD",
    "DimensionMismatch",
    "HypothesisViolation",
    "SpectralDecomposition",
    "as_operator",
    "dagger",
    "commutator",
    "anticommutator",
    "bracket",
    "trace_norm",
    "operator_norm",
    "hermiticity_defect",
    "is_hermitian",
    "require_hermitian",
    "check_density_matrix",
    "is_faithful",
    "require_faithful",
    "state_power",
    "state_log",
    "state_inverse",
    "spectral_decompose",
    "pinch",
    "rho_s_inner",
    "modular_apply",
    "check_gens",
]

# Default numerical tolerances.  They are module-level policy constants so a
# caller can inspect (and tests can reference) the thresholds in force.
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
#: eigenvalues at or below this are treated as exact zeros in kernels/logs
FAITHFULNESS_THRESHOLD = 1e-12


class DimensionMismatch(ValueError):
    """Operands act on Hilbert spaces of different dimensions."""


class HypothesisViolation(RuntimeError):
    """A structural hypothesis required by the requested computation fails.

    Raised e.g. when a construction needs detailed balance, a simple
    spectrum, or a faithful state and the input does not provide it.
    """


def as_operator(A, name: str = "operator") -> np.ndarray:
    """Coerce ``A`` to a square complex matrix, validating its shape."""
    arr = np.asarray(A, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    return arr


def require_same_dim(*ops: np.ndarray) -> int:
    dims = {op.shape[0] for op in ops}
    if len(dims) != 1:
        raise DimensionMismatch(f"operators act on different dimensions: {sorted(dims)}")
    return dims.pop()


def dagger(A: np.ndarray) -> np.ndarray:
    return np.conj(A.T)


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def anticommutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B + B @ A


def bracket(A, B) -> complex:
    """Duality bracket ``<A|B> = tr(A* B)``, linear in ``B``."""
    A = as_operator(A, "A")
    B = as_operator(B, "B")
    require_same_dim(A, B)
    return complex(np.vdot(A, B))


def trace_norm(A) -> float:
    """Trace norm (sum of singular values)."""
    return float(np.linalg.svd(as_operator(A), compute_uv=False).sum())


def operator_norm(A) -> float:
    """Operator (spectral) norm: the largest singular value."""
    sv = np.linalg.svd(as_operator(A), compute_uv=False)
    return float(sv[0]) if sv.size else 0.0


def hermiticity_defect(A: np.ndarray) -> float:
    return float(np.abs(A - dagger(A)).max()) if A.size else 0.0


def is_hermitian(A, tol: float = HERMITICITY_TOL) -> bool:
    return hermiticity_defect(as_operator(A)) <= tol


def require_hermitian(A, tol: float = HERMITICITY_TOL, name: str = "operator") -> np.ndarray:
    A = as_operator(A, name)
    defect = hermiticity_defect(A)
    if defect > tol:
        raise ValueError(f"{name} is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    return A


def check_density_matrix(
    rho,
    trace_tol: float = TRACE_TOL,
    psd_tol: float = PSD_TOL,
    herm_tol: float = HERMITICITY_TOL,
    name: str = "state",
) -> np.ndarray:
    """Validate that ``rho`` is a density matrix; return it coerced to complex.

    Checks hermiticity, unit trace (within ``trace_tol``) and positive
    semidefiniteness (lowest eigenvalue >= ``-psd_tol``).
    """
    rho = require_hermitian(rho, herm_tol, name)
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"{name} has trace {tr:.12g}, expected 1 within {trace_tol:.1e}")
    lo = float(np.linalg.eigvalsh(rho)[0])
    if lo < -psd_tol:
        raise ValueError(f"{name} is not positive semidefinite (min eigenvalue {lo:.3e})")
    return rho


def is_faithful(rho, threshold: float = FAITHFULNESS_THRESHOLD) -> bool:
    """True iff every eigenvalue of ``rho`` exceeds ``threshold``."""
    w = np.linalg.eigvalsh(require_hermitian(rho, name="state"))
    return bool(w[0] > threshold)


def require_faithful(rho, threshold: float = FAITHFULNESS_THRESHOLD, name: str = "state") -> np.ndarray:
    rho = require_hermitian(rho, name=name)
    lo = float(np.linalg.eigvalsh(rho)[0])
    if lo <= threshold:
        raise ValueError(
            f"{name} must be faithful (strictly positive); min eigenvalue {lo:.3e}"
        )
    return rho


def _eigh_psd(rho: np.ndarray, clip: bool = True):
    w, V = np.linalg.eigh(rho)
    if clip:
        w = np.where(w < 0.0, 0.0, w)
    return w, V


def state_power(rho, s: float, threshold: float = FAITHFULNESS_THRESHOLD) -> np.ndarray:
    """``rho**s`` for a positive-semidefinite ``rho``.

    Eigenvalues at or below ``threshold`` are treated as exact zeros, so for
    ``s > 0`` the kernel stays the kernel; ``s = 0`` returns the identity.
    """
    rho = require_hermitian(rho, name="state")
    if s == 0:
        return np.eye(rho.shape[0], dtype=complex)
    if s == 1:
        return rho.copy()
    w, V = _eigh_psd(rho)
    ws = np.where(w > threshold, np.power(np.maximum(w, threshold), s), 0.0)
    return (V * ws) @ dagger(V)


def state_log(rho, threshold: float = FAITHFULNESS_THRESHOLD) -> np.ndarray:
    """Matrix logarithm of a faithful state (raises on kernel directions)."""
    rho = require_faithful(rho, threshold)
    w, V = np.linalg.eigh(rho)
    return (V * np.log(w)) @ dagger(V)


def state_inverse(rho, threshold: float = FAITHFULNESS_THRESHOLD) -> np.ndarray:
    rho = require_faithful(rho, threshold)
    w, V = np.linalg.eigh(rho)
    return (V / w) @ dagger(V)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Spectral data of a Hermitian operator with clustered eigenvalues.

    ``values`` are strictly increasing; ``projectors[k]`` is the orthogonal
    projector onto the eigenspace of ``values[k]`` and has rank
    ``multiplicities[k]``.  The projectors resolve the identity.
    """

    values: np.ndarray
    projectors: tuple
    multiplicities: tuple

    def __post_init__(self):
        if len(self.projectors) != len(self.values) or len(self.multiplicities) != len(self.values):
            raise ValueError("inconsistent spectral data lengths")

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def spread(self) -> float:
        v = self.values
        return float(v[-1] - v[0]) if len(v) > 1 else 0.0

    def operator(self) -> np.ndarray:
        """Reconstruct ``sum_k values[k] * projectors[k]``."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for v, P in zip(self.values, self.projectors):
            out += v * P
        return out

    def apply(self, fn: Callable[[float], float]) -> np.ndarray:
        """Functional calculus ``sum_k fn(values[k]) * projectors[k]``."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for v, P in zip(self.values, self.projectors):
            out += fn(float(v)) * P
        return out


def spectral_decompose(A, cluster_tol: float | None = None) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian ``A`` with eigenvalue clustering.

    Eigenvalues closer than ``cluster_tol`` (chained through consecutive
    gaps) are merged into a single eigenspace; the reported value is the mean
    of the merged eigenvalues.  The default tolerance scales with the
    spectral radius: ``1e-10 * (max|eig| + 1)``.
    """
    A = require_hermitian(A)
    w, V = np.linalg.eigh(A)
    if cluster_tol is None:
        radius = float(np.abs(w).max()) if w.size else 0.0
        cluster_tol = 1e-10 * (radius + 1.0)
    values, projectors, mults = [], [], []
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > cluster_tol:
            block = V[:, start:k]
            values.append(float(np.mean(w[start:k])))
            projectors.append(block @ dagger(block))
            mults.append(k - start)
            start = k
    return SpectralDecomposition(
        values=np.array(values), projectors=tuple(projectors), multiplicities=tuple(mults)
    )


def pinch(decomp: SpectralDecomposition, T) -> np.ndarray:
    """Pinching (dephasing) map ``sum_k P_k T P_k`` for the given eigenbasis."""
    T = as_operator(T, "T")
    require_same_dim(decomp.projectors[0], T)
    out = np.zeros_like(T)
    for P in decomp.projectors:
        out += P @ T @ P
    return out


def rho_s_inner(rho, A, B, s: float) -> complex:
    """Weighted inner product ``tr(rho**s A* rho**(1-s) B)`` for faithful rho.

    ``s = 1`` gives the GNS-type product ``tr(rho A* B)``; ``s = 1/2`` the
    KMS-type product.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    rho = require_faithful(rho)
    A = as_operator(A, "A")
    B = as_operator(B, "B")
    require_same_dim(rho, A, B)
    rs = state_power(rho, s)
    r1s = state_power(rho, 1.0 - s)
    return complex(np.trace(rs @ dagger(A) @ r1s @ B))


def modular_apply(rho, X) -> np.ndarray:
    """Modular action ``rho X rho^{-1}`` of a faithful state."""
    rho = require_faithful(rho)
    X = as_operator(X, "X")
    require_same_dim(rho, X)
    return rho @ X @ state_inverse(rho)


def check_gens(decomp: SpectralDecomposition, gap_tol: float | None = None) -> bool:
    """True iff all differences of distinct eigenvalues are pairwise distinct.

    The generic-spectrum condition: for ``s != s'`` the gaps ``s' - s`` must
    not collide (within ``gap_tol``).  Needed for measurement statistics whose
    outcomes are labelled by eigenvalue differences.
    """
    v = decomp.values
    if len(v) <= 1:
        return True
    if gap_tol is None:
        gap_tol = 1e-9 * (decomp.spread + 1.0)
    diffs = sorted(
        float(v[i] - v[j]) for i in range(len(v)) for j in range(len(v)) if i != j
    )
    return all(b - a > gap_tol for a, b in zip(diffs, diffs[1:]))


def random_density(rng: np.random.Generator, dim: int, faithful: bool = True) -> np.ndarray:
    """Random full-rank density matrix (Wishart-type), for tests and checks."""
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = G @ dagger(G)
    if faithful:
        rho += 1e-3 * np.eye(dim)
    return rho / np.trace(rho).real


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (G + dagger(G)) / 2.0
