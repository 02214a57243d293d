"""Domain types: projectors, measurement bases, probability assignments,
density matrices, and the real parametrization tying them together.

A Hermitian ``n x n`` matrix is described by ``n**2`` real parameters: the
diagonal ``a_i`` plus, for each index pair ``j < k``, the real and imaginary
parts ``x_jk + i*y_jk`` of the upper off-diagonal entry.  Everything in the
solver works on that parameter vector, laid out as

    [a_0 ... a_{n-1}, x_{01}, x_{02}, ..., y_{01}, y_{02}, ...]

with the pairs in lexicographic order.

All types are immutable after construction (arrays are marked read-only) and
all operations are pure functions, so values can be shared freely across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    NotAProjector,
    NotComplete,
    NotHermitian,
    NotIdempotent,
    NotRankOne,
    TraceNotOne,
    ValidationError,
)
from .tolerances import TOL_HERM, TOL_IDEM, TOL_ORTH, TOL_PROB, TOL_PSD


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a)
    out.setflags(write=False)
    return out


def as_complex_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite complex square matrix."""
    m = np.asarray(values, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValidationError(f"{name} contains non-finite entries")
    return m


def is_hermitian(m: np.ndarray, tol: float = TOL_HERM) -> bool:
    return bool(np.linalg.norm(m - m.conj().T) <= tol)


def pair_indices(n: int) -> list[tuple[int, int]]:
    """Index pairs ``(j, k)`` with ``j < k`` in lexicographic order."""
    return [(j, k) for j in range(n) for k in range(j + 1, n)]


def projector_rank(p: np.ndarray, tol: float = TOL_IDEM) -> int:
    """Rank of a projector, read off its trace."""
    tr = np.trace(p).real
    r = int(round(tr))
    if abs(tr - r) > tol * max(1.0, p.shape[0]):
        raise NotAProjector(f"trace {tr} is not close to an integer")
    return r


def validate_projector(candidate, index: int | None = None) -> np.ndarray:
    """Check the projector invariants; returns the validated matrix."""
    p = as_complex_matrix(candidate, name=f"projector {index}")
    tag = "" if index is None else f" at index {index}"
    if not is_hermitian(p):
        raise NotHermitian(f"projector{tag} is not Hermitian", index=index)
    if np.linalg.norm(p @ p - p) > TOL_IDEM:
        raise NotIdempotent(f"projector{tag} is not idempotent", index=index)
    return p


def principal_vector(p: np.ndarray) -> np.ndarray:
    """Unit vector v with ``p = v v^dagger`` for a rank-1 projector.

    Uses the largest-diagonal column, which is stable: that column is
    ``v * conj(v_d)`` with ``|v_d|^2 = max_i |v_i|^2 >= 1/n``.
    """
    d = int(np.argmax(np.diag(p).real))
    return p[:, d] / np.sqrt(p[d, d].real)


@dataclass(frozen=True)
class Basis:
    """Ordered orthonormal family of n rank-1 projectors on C^n."""

    dimension: int
    projectors: tuple[np.ndarray, ...]
    label: str = ""

    def vectors(self) -> list[np.ndarray]:
        """Principal unit vectors of the projectors (phases arbitrary)."""
        return [principal_vector(p) for p in self.projectors]


def validate_basis(candidates, label: str = "") -> Basis:
    """Build a Basis from n projectors or n column vectors.

    Vectors (1-D arrays of length n) are converted via outer products, the
    friendlier authoring format.  Raises NotHermitian / NotIdempotent /
    NotRankOne / NotComplete / DimensionMismatch, naming the offending index.
    """
    items = list(candidates)
    if not items:
        raise DimensionMismatch("a basis needs at least one element")
    first = np.asarray(items[0], dtype=complex)
    if first.ndim == 1:
        n = first.shape[0]
        projectors = []
        for i, v in enumerate(items):
            vec = np.asarray(v, dtype=complex)
            if vec.ndim != 1 or vec.shape[0] != n:
                raise DimensionMismatch(f"vector at index {i} has wrong shape", index=i)
            nrm = np.linalg.norm(vec)
            if nrm == 0:
                raise NotRankOne(f"vector at index {i} is zero", index=i)
            vec = vec / nrm
            projectors.append(np.outer(vec, vec.conj()))
    else:
        n = first.shape[0]
        projectors = []
        for i, p in enumerate(items):
            m = np.asarray(p, dtype=complex)
            if m.shape != (n, n):
                raise DimensionMismatch(f"projector at index {i} has shape {m.shape}, expected {(n, n)}", index=i)
            projectors.append(m)

    if len(projectors) != n:
        raise DimensionMismatch(f"expected {n} projectors for dimension {n}, got {len(projectors)}")

    for i, p in enumerate(projectors):
        validate_projector(p, index=i)
        if projector_rank(p) != 1:
            raise NotRankOne(f"projector at index {i} has rank {projector_rank(p)}, expected 1", index=i)

    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(projectors[i] @ projectors[j]) > TOL_ORTH:
                raise NotComplete(f"projectors {i} and {j} are not orthogonal", index=i)
    total = sum(projectors)
    if np.linalg.norm(total - np.eye(n)) > TOL_ORTH:
        raise NotComplete("projectors do not sum to the identity")

    return Basis(dimension=n, projectors=tuple(_frozen(p) for p in projectors), label=label)


@dataclass(frozen=True)
class ProbabilityVector:
    """Outcome distribution over the n results of one measurement."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValidationError("probabilities must form a 1-D sequence")
        if np.any(v < -TOL_PROB):
            bad = int(np.argmin(v))
            raise ValidationError(f"probability at index {bad} is negative ({v[bad]})", index=bad)
        if abs(v.sum() - 1.0) > TOL_PROB:
            raise ValidationError(f"probabilities sum to {v.sum()}, expected 1")
        object.__setattr__(self, "values", _frozen(v))

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Assignment:
    """One measurement basis together with its claimed outcome probabilities."""

    basis: Basis
    probs: ProbabilityVector

    def __post_init__(self):
        if len(self.probs) != self.basis.dimension:
            raise DimensionMismatch(
                f"{len(self.probs)} probabilities for a dimension-{self.basis.dimension} basis"
            )


@dataclass(frozen=True)
class AssignmentSet:
    """Ordered collection of assignments on one n-dimensional system."""

    dimension: int
    assignments: tuple[Assignment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple(self.assignments))
        for i, a in enumerate(self.assignments):
            if a.basis.dimension != self.dimension:
                raise DimensionMismatch(f"assignment {i} has dimension {a.basis.dimension}, expected {self.dimension}", index=i)

    def __len__(self) -> int:
        return len(self.assignments)

    def subset(self, indices) -> "AssignmentSet":
        return AssignmentSet(self.dimension, tuple(self.assignments[i] for i in indices))


def assignment(basis: Basis, probs) -> Assignment:
    return Assignment(basis=basis, probs=ProbabilityVector(np.asarray(probs, dtype=float)))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive-semidefinite, unit-trace matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, name="density matrix")
        if not is_hermitian(m):
            raise NotHermitian("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > TOL_PROB:
            raise TraceNotOne(f"trace is {np.trace(m).real}, expected 1")
        lmin = float(np.linalg.eigvalsh(m)[0])
        if lmin < -TOL_PSD:
            raise ValidationError(f"minimum eigenvalue {lmin} below -{TOL_PSD}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def params(self) -> np.ndarray:
        return params_from_matrix(self.matrix)

    def expectation(self, p: np.ndarray) -> float:
        """tr(rho P) for Hermitian P."""
        return float(np.trace(self.matrix @ p).real)


def density_from_params(a, x, y) -> np.ndarray:
    """Hermitian unit-trace matrix from its real parameters (PSD not checked).

    ``a`` holds the diagonal; ``x`` and ``y`` hold real/imaginary parts of the
    upper off-diagonal entries, ordered by lexicographic pair.
    """
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = a.shape[0]
    ps = pair_indices(n)
    if x.shape[0] != len(ps) or y.shape[0] != len(ps):
        raise DimensionMismatch(f"expected {len(ps)} off-diagonal parameters for dimension {n}")
    if abs(a.sum() - 1.0) > TOL_PROB:
        raise TraceNotOne(f"diagonal sums to {a.sum()}, expected 1")
    m = np.zeros((n, n), dtype=complex)
    m[np.arange(n), np.arange(n)] = a
    for idx, (j, k) in enumerate(ps):
        m[j, k] = x[idx] + 1j * y[idx]
        m[k, j] = x[idx] - 1j * y[idx]
    return m


def matrix_from_params(t: np.ndarray, n: int) -> np.ndarray:
    """Hermitian matrix from a flat parameter vector (trace not checked)."""
    t = np.asarray(t, dtype=float)
    ps = pair_indices(n)
    m = np.zeros((n, n), dtype=complex)
    m[np.arange(n), np.arange(n)] = t[:n]
    off = n
    for idx, (j, k) in enumerate(ps):
        m[j, k] = t[off + idx] + 1j * t[off + len(ps) + idx]
        m[k, j] = t[off + idx] - 1j * t[off + len(ps) + idx]
    return m


def params_from_matrix(m: np.ndarray) -> np.ndarray:
    """Flat real parameter vector of a Hermitian matrix (inverse of matrix_from_params)."""
    n = m.shape[0]
    ps = pair_indices(n)
    t = np.empty(n * n)
    t[:n] = np.diag(m).real
    for idx, (j, k) in enumerate(ps):
        t[n + idx] = m[j, k].real
        t[n + len(ps) + idx] = m[j, k].imag
    return t


def decompose_projection(e) -> list[np.ndarray]:
    """Split a rank-k projector into k mutually orthogonal rank-1 projectors.

    The pieces come from the eigenvectors of the unit eigenvalue, so they are
    orthogonal by construction and sum back to the input.
    """
    m = as_complex_matrix(e, name="projector")
    if not is_hermitian(m):
        raise NotAProjector("input is not Hermitian")
    if np.linalg.norm(m @ m - m) > TOL_IDEM:
        raise NotAProjector("input is not idempotent")
    k = projector_rank(m)
    if k < 1 or k > m.shape[0]:
        raise NotAProjector(f"rank {k} is out of range")
    w, v = np.linalg.eigh(m)
    order = np.argsort(w)[::-1]
    pieces = []
    for i in order[:k]:
        vec = v[:, i]
        pieces.append(np.outer(vec, vec.conj()))
    return pieces
