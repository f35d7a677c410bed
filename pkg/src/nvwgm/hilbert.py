"""Labeled tensor-product Hilbert spaces and dense complex linear algebra.

Everything here is sized for small composite systems (two three-level
emitters plus a truncated cavity mode, dimension <= ~100), so storage is
dense and double precision throughout. All objects are immutable after
construction and safe to share across workers.

Conventions
-----------
- Factor order is fixed by the caller and never reordered; the composite
  basis index is row-major over the factor list (first factor varies
  slowest).
- Hermiticity, normalization and density-matrix validity are checked
  against fixed tolerances appropriate for double-precision dense algebra:
  1e-12 (relative) for Hermiticity, 1e-9 for state norms, 1e-10 / 1e-8 /
  1e-8 for density-matrix Hermiticity / trace / positivity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np

HERMITICITY_RTOL = 1e-12
NORM_ATOL = 1e-9
DM_HERM_RTOL = 1e-10
DM_TRACE_ATOL = 1e-8
DM_EIG_ATOL = 1e-8


@dataclass(frozen=True)
class Subsystem:
    """One tensor factor: a name plus an ordered tuple of basis labels."""

    name: str
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) == 0:
            raise ValueError(f"subsystem {self.name!r} has no basis labels")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"subsystem {self.name!r} has duplicate labels")

    @property
    def dim(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of labeled subsystems.

    The composite index of a label tuple is row-major over the factor
    list, so ``index_of`` / ``labels_of`` form a bijection between
    label tuples and ``range(dim)``.
    """

    factors: tuple[Subsystem, ...]

    def __post_init__(self):
        if len(self.factors) == 0:
            raise ValueError("a Hilbert space needs at least one factor")

    @property
    def dim(self) -> int:
        d = 1
        for f in self.factors:
            d *= f.dim
        return d

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    def index_of(self, labels: Sequence[str]) -> int:
        """Composite basis index of a per-factor label tuple."""
        labels = self._as_label_tuple(labels)
        idx = 0
        for f, lab in zip(self.factors, labels):
            try:
                k = f.labels.index(lab)
            except ValueError:
                raise ValueError(
                    f"unknown label {lab!r} for subsystem {f.name!r} "
                    f"(expected one of {f.labels})"
                ) from None
            idx = idx * f.dim + k
        return idx

    def labels_of(self, index: int) -> tuple[str, ...]:
        """Label tuple of a composite basis index."""
        if not 0 <= index < self.dim:
            raise ValueError(f"index {index} out of range [0, {self.dim})")
        out = []
        for f in reversed(self.factors):
            index, k = divmod(index, f.dim)
            out.append(f.labels[k])
        return tuple(reversed(out))

    def basis_labels(self) -> list[tuple[str, ...]]:
        """All label tuples in composite-index order."""
        return list(product(*(f.labels for f in self.factors)))

    def _as_label_tuple(self, labels) -> tuple[str, ...]:
        if isinstance(labels, str):
            labels = (labels,)
        labels = tuple(labels)
        if len(labels) != len(self.factors):
            raise ValueError(
                f"expected {len(self.factors)} labels, got {len(labels)}"
            )
        return labels


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Operator:
    """Dense complex square matrix attached to a HilbertSpace."""

    space: HilbertSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        d = self.space.dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dim {d}")
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def dim(self) -> int:
        return self.space.dim

    def dagger(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def is_hermitian(self, rtol: float = HERMITICITY_RTOL) -> bool:
        scale = np.abs(self.matrix).max()
        if scale == 0.0:
            return True
        return np.abs(self.matrix - self.matrix.conj().T).max() < rtol * scale

    def assert_hermitian(self) -> "Operator":
        if not self.is_hermitian():
            raise ValueError("operator is not Hermitian within tolerance")
        return self

    def _check_space(self, other: "Operator"):
        if other.space != self.space:
            raise ValueError("operators live on different spaces")

    def __add__(self, other: "Operator") -> "Operator":
        self._check_space(other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_space(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.space, self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.space, -self.matrix)

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_space(other)
        return Operator(self.space, self.matrix @ other.matrix)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


@dataclass(frozen=True)
class StateVector:
    """Pure state on a HilbertSpace."""

    space: HilbertSpace
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if v.shape != (self.space.dim,):
            raise ValueError(
                f"amplitude length {v.shape[0]} does not match dim {self.space.dim}"
            )
        object.__setattr__(self, "amplitudes", _freeze(v))

    @property
    def dim(self) -> int:
        return self.space.dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / n)

    def assert_normalized(self) -> "StateVector":
        if abs(self.norm() ** 2 - 1.0) > NORM_ATOL:
            raise ValueError("state is not normalized within tolerance")
        return self

    def overlap(self, other: "StateVector") -> complex:
        if other.space != self.space:
            raise ValueError("states live on different spaces")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(
            self.space, np.outer(self.amplitudes, self.amplitudes.conj())
        )


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state on a HilbertSpace."""

    space: HilbertSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        d = self.space.dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dim {d}")
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def dim(self) -> int:
        return self.space.dim

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def validate(self) -> "DensityMatrix":
        """Check Hermiticity, unit trace, and positivity tolerances."""
        scale = max(np.abs(self.matrix).max(), 1.0)
        if np.abs(self.matrix - self.matrix.conj().T).max() > DM_HERM_RTOL * scale:
            raise ValueError("density matrix is not Hermitian within tolerance")
        if abs(self.trace() - 1.0) > DM_TRACE_ATOL:
            raise ValueError(f"density matrix trace {self.trace()} is not 1")
        w = np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)
        if w.min() < -DM_EIG_ATOL:
            raise ValueError(f"density matrix has negative eigenvalue {w.min()}")
        return self

    def partial_trace(self, keep: int | Iterable[int]) -> "DensityMatrix":
        """Trace out all factors except those in ``keep`` (original order)."""
        if isinstance(keep, int):
            keep = (keep,)
        keep = tuple(keep)
        n = len(self.space.factors)
        if any(k < 0 or k >= n for k in keep) or len(set(keep)) != len(keep):
            raise ValueError(f"invalid factor indices {keep} for {n} factors")
        dims = self.space.shape
        t = self.matrix.reshape(dims + dims)
        # contract traced factors pairwise
        traced = [k for k in range(n) if k not in keep]
        for count, k in enumerate(sorted(traced, reverse=True)):
            m = t.ndim // 2
            t = np.trace(t, axis1=k, axis2=k + m)
        sub = HilbertSpace(tuple(self.space.factors[k] for k in keep))
        d = sub.dim
        return DensityMatrix(sub, t.reshape(d, d))


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product; the result lives on the concatenated space."""
    space = HilbertSpace(a.space.factors + b.space.factors)
    return Operator(space, np.kron(a.matrix, b.matrix))


def tensor_states(a: StateVector, b: StateVector) -> StateVector:
    space = HilbertSpace(a.space.factors + b.space.factors)
    return StateVector(space, np.kron(a.amplitudes, b.amplitudes))


def identity(space: HilbertSpace) -> Operator:
    return Operator(space, np.eye(space.dim, dtype=complex))


def embed(op: Operator, factor_index: int, space: HilbertSpace) -> Operator:
    """Lift a single-factor operator to the composite space.

    Acts as ``op`` on factor ``factor_index`` and as the identity on every
    other factor, ordered per the space's factor list.
    """
    n = len(space.factors)
    if not 0 <= factor_index < n:
        raise ValueError(f"factor index {factor_index} out of range [0, {n})")
    target = space.factors[factor_index]
    if op.space.dim != target.dim:
        raise ValueError(
            f"operator dim {op.space.dim} does not match factor "
            f"{target.name!r} dim {target.dim}"
        )
    m = np.array([[1.0 + 0j]])
    for k, f in enumerate(space.factors):
        blk = op.matrix if k == factor_index else np.eye(f.dim, dtype=complex)
        m = np.kron(m, blk)
    return Operator(space, m)


def basis_state(space: HilbertSpace, labels) -> StateVector:
    """Unit vector with amplitude 1 on the given per-factor label tuple."""
    v = np.zeros(space.dim, dtype=complex)
    v[space.index_of(labels)] = 1.0
    return StateVector(space, v)


def transition(space: HilbertSpace, bra_labels, ket_labels) -> Operator:
    """|bra_labels><ket_labels| on the composite space."""
    m = np.zeros((space.dim, space.dim), dtype=complex)
    m[space.index_of(bra_labels), space.index_of(ket_labels)] = 1.0
    return Operator(space, m)


def superpose(states: Sequence[StateVector], coeffs: Sequence[complex]) -> StateVector:
    """Normalized linear combination of states on a common space."""
    if len(states) == 0 or len(states) != len(coeffs):
        raise ValueError("need matching non-empty states and coefficients")
    space = states[0].space
    v = np.zeros(space.dim, dtype=complex)
    for s, c in zip(states, coeffs):
        if s.space != space:
            raise ValueError("states live on different spaces")
        v = v + c * s.amplitudes
    return StateVector(space, v).normalized()


def expect(op: Operator, state: StateVector | DensityMatrix) -> complex:
    """<psi|A|psi> for pure states, Tr(rho A) for density matrices."""
    if op.space != state.space:
        raise ValueError("operator and state live on different spaces")
    if isinstance(state, StateVector):
        return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))
    return complex(np.trace(state.matrix @ op.matrix))
