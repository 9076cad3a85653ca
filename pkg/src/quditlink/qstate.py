"""Dense quantum linear algebra for composite photon/spin-register states.

Everything here is a pure function over immutable value objects, so the
trajectory workers can share them freely.  States live on a
:class:`HilbertLayout`, an ordered list of subsystem dimensions; the canonical
ordering used throughout the package is ``[photon, A_{m-1}..A_0,
B_{m-1}..B_0]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Tolerances for algebraic identities and positivity checks (double precision
# leaves comfortable headroom at these scales).
ATOL_ALGEBRA = 1e-10
ATOL_POSITIVITY = 1e-9

BELL_PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0], dtype=np.complex128) / math.sqrt(2.0)


class ZeroProbabilityProjection(ValueError):
    """Raised when a projection has zero probability (impossible outcome)."""


@dataclass(frozen=True)
class HilbertLayout:
    """Ordered subsystem dimensions with a role label per factor."""

    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.dims) != len(self.labels):
            raise ValueError("dims and labels must have equal length")
        if any(d < 1 for d in self.dims):
            raise ValueError("subsystem dimensions must be positive")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_factors(self) -> int:
        return len(self.dims)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def concat(self, other: "HilbertLayout") -> "HilbertLayout":
        return HilbertLayout(self.dims + other.dims, self.labels + other.labels)

    def keep(self, indices: Sequence[int]) -> "HilbertLayout":
        return HilbertLayout(
            tuple(self.dims[i] for i in indices),
            tuple(self.labels[i] for i in indices),
        )


def qubit_layout(labels: Iterable[str]) -> HilbertLayout:
    labels = tuple(labels)
    return HilbertLayout((2,) * len(labels), labels)


def register_layout(m: int, n_bins: int | None = None) -> HilbertLayout:
    """Canonical layout [photon, A_{m-1}..A_0, B_{m-1}..B_0]."""
    if n_bins is None:
        n_bins = 2**m
    labels = ["photon"]
    labels += [f"alice_{i}" for i in range(m - 1, -1, -1)]
    labels += [f"bob_{i}" for i in range(m - 1, -1, -1)]
    return HilbertLayout((n_bins,) + (2,) * (2 * m), tuple(labels))


@dataclass(frozen=True)
class PureState:
    """Complex amplitude vector on a layout.

    ``branch_weight`` carries the probability weight of an (unnormalized)
    branch produced by lossy evolution; for a branch evolved from a
    normalized input it equals the routing probability, while reflection-type
    losses live in the amplitude norm itself.
    """

    amplitudes: np.ndarray
    layout: HilbertLayout
    branch_weight: float = 1.0

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (self.layout.dim,):
            raise ValueError(
                f"amplitude length {amps.shape} does not match layout dim {self.layout.dim}"
            )
        if not 0.0 <= self.branch_weight <= 1.0 + ATOL_ALGEBRA:
            raise ValueError("branch_weight must lie in [0, 1]")

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalized(self) -> "PureState":
        n = math.sqrt(self.norm_sq)
        if n == 0.0:
            raise ZeroProbabilityProjection("cannot normalize a zero state")
        return PureState(self.amplitudes / n, self.layout, self.branch_weight)

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, positive-semidefinite operator with trace in [0, 1]."""

    matrix: np.ndarray
    layout: HilbertLayout

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=np.complex128)
        object.__setattr__(self, "matrix", mat)
        d = self.layout.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match layout dim {d}")
        if not np.allclose(mat, mat.conj().T, atol=ATOL_ALGEBRA):
            raise ValueError("density operator must be Hermitian")
        tr = float(np.trace(mat).real)
        if not -ATOL_ALGEBRA <= tr <= 1.0 + 1e-8:
            raise ValueError(f"trace {tr} outside [0, 1]")

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def as_tensor(self) -> np.ndarray:
        return self.matrix.reshape(self.layout.dims + self.layout.dims)


def to_density(state: PureState) -> DensityOperator:
    """|psi><psi| scaled by the branch weight."""
    mat = state.branch_weight * np.outer(state.amplitudes, state.amplitudes.conj())
    return DensityOperator(mat, state.layout)


def tensor(a, b):
    """Kronecker product of two states of the same kind."""
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(
            np.kron(a.amplitudes, b.amplitudes),
            a.layout.concat(b.layout),
            a.branch_weight * b.branch_weight,
        )
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(np.kron(a.matrix, b.matrix), a.layout.concat(b.layout))
    raise TypeError(f"tensor requires matching kinds, got {type(a)} and {type(b)}")


def partial_trace(rho: DensityOperator, keep: Sequence[int]) -> DensityOperator:
    """Trace out every factor not in ``keep`` (kept in original order)."""
    keep = sorted(set(int(i) for i in keep))
    n = rho.layout.n_factors
    if not keep:
        raise ValueError("keep must be non-empty")
    if any(i < 0 or i >= n for i in keep):
        raise ValueError(f"subsystem index out of range for {n} factors")

    tens = rho.as_tensor()
    # einsum index bookkeeping: identical letters on bra/ket axes being traced.
    row = list(range(n))
    col = list(range(n, 2 * n))
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    reduced = np.einsum(tens, row + col, out)
    d = int(np.prod([rho.layout.dims[i] for i in keep]))
    return DensityOperator(reduced.reshape(d, d), rho.layout.keep(keep))


def apply_kraus(
    rho: DensityOperator, kraus: Sequence[np.ndarray], target: int
) -> DensityOperator:
    """Apply a Kraus channel to one factor of a composite density operator."""
    d = rho.layout.dims[target]
    ops = [np.asarray(k, dtype=np.complex128) for k in kraus]
    comp = sum(k.conj().T @ k for k in ops)
    if not np.allclose(comp, np.eye(d), atol=ATOL_ALGEBRA):
        raise ValueError("Kraus set is not complete (sum K^dag K != I)")

    dims = rho.layout.dims
    pre = int(np.prod(dims[:target])) if target > 0 else 1
    post = int(np.prod(dims[target + 1 :])) if target + 1 < len(dims) else 1
    mat = rho.matrix.reshape(pre, d, post, pre, d, post)
    out = np.zeros_like(mat)
    for k in ops:
        out += np.einsum("ab,pbqrcs,dc->paqrds", k, mat, k.conj())
    return DensityOperator(out.reshape(rho.layout.dim, rho.layout.dim), rho.layout)


def project(
    state: PureState, subsystem: int, basis_vector: np.ndarray
) -> tuple[PureState, float]:
    """Project one factor onto a normalized basis vector.

    Returns the renormalized post-measurement state on the remaining factors
    and the outcome probability (projected squared norm times the branch
    weight).
    """
    vec = np.asarray(basis_vector, dtype=np.complex128)
    d = state.layout.dims[subsystem]
    if vec.shape != (d,):
        raise ValueError("basis vector dimension mismatch")
    if not math.isclose(float(np.vdot(vec, vec).real), 1.0, abs_tol=1e-9):
        raise ValueError("basis vector must be normalized")

    tens = state.as_tensor()
    projected = np.tensordot(vec.conj(), tens, axes=([0], [subsystem]))
    # tensordot moves the contracted axis to the front of the remaining ones;
    # restore the original factor order of the survivors.
    order = [i for i in range(state.layout.n_factors) if i != subsystem]
    p = float(np.vdot(projected, projected).real) * state.branch_weight
    if p <= 0.0:
        raise ZeroProbabilityProjection("projection onto orthogonal component")
    remaining = state.layout.keep(order)
    out = PureState(projected.reshape(remaining.dim), remaining, min(p, 1.0))
    return out.normalized(), p


def fidelity_to_bell(rho_pair: DensityOperator) -> float:
    """<Phi+| rho |Phi+> for a two-qubit state, |Phi+> = (|00>+|11>)/sqrt(2)."""
    if rho_pair.matrix.shape != (4, 4):
        raise ValueError("fidelity_to_bell expects a 4x4 density operator")
    val = float(np.real(BELL_PHI_PLUS.conj() @ rho_pair.matrix @ BELL_PHI_PLUS))
    return min(max(val, 0.0), 1.0)
