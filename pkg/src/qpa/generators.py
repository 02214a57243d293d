"""Reference basis families and assignment generators.

Includes the four-basis qubit set whose full assignment is unsatisfiable
while every three-basis restriction is satisfiable, the explicit dimension-3
eight-basis collection, the standard families that isolate single density
matrix parameters, forward probability computation (the oracle used by most
tests), and random interior states.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionFailed, DimensionMismatch, DimensionTooSmall
from .model import (
    Assignment,
    AssignmentSet,
    Basis,
    DensityMatrix,
    assignment,
    matrix_from_params,
    pair_indices,
    validate_basis,
)
from .numerics import least_squares_solve, numerical_rank
from .rng import make_rng
from .solver import build_system, coefficient_matrix, consistency_number
from .tolerances import (
    COUNTEREXAMPLE_PSD_MARGIN,
    COUNTEREXAMPLE_RESIDUAL_MARGIN,
    TOL_PROB,
)

_STREAM_INTERIOR = 1
_STREAM_QBASIS = 2


def dim2_example() -> AssignmentSet:
    """Four qubit bases and probabilities with no joint density matrix.

    Any three of the four assignments admit a witness; all four together pin
    contradictory Bloch components.
    """
    p1 = np.array([[1, 0], [0, 0]], dtype=complex)
    p2 = 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex)
    p3 = 0.5 * np.array([[1, -1j], [1j, 1]], dtype=complex)
    p4 = (1 / 5) * np.array([[4, (6 + 8j) / 5], [(6 - 8j) / 5, 1]], dtype=complex)
    eye = np.eye(2)
    bases = [
        validate_basis([p1, eye - p1], label="z"),
        validate_basis([p2, eye - p2], label="x"),
        validate_basis([p3, eye - p3], label="y"),
        validate_basis([p4, eye - p4], label="tilted"),
    ]
    probs = [
        (1 / 2, 1 / 2),
        (5 / 12, 7 / 12),
        (3 / 8, 5 / 8),
        (9 / 16, 7 / 16),
    ]
    return AssignmentSet(2, tuple(assignment(b, p) for b, p in zip(bases, probs)))


def _phase(theta: float) -> complex:
    return complex(np.exp(1j * theta))


def dim3_bases() -> tuple[list[Basis], Basis]:
    """The eight explicit dimension-3 bases: seven coordinate-plane bases plus
    one basis in general position.

    The fourth plane basis is stored with the 1/2 normalization that makes its
    first two matrices projectors; without it they fail idempotence.
    """
    eye = np.eye(3, dtype=complex)

    def plane(i, j, imaginary):
        w = 1j * eye[:, j] if imaginary else eye[:, j]
        plus = (eye[:, i] + w) / np.sqrt(2)
        minus = (eye[:, i] - w) / np.sqrt(2)
        k = ({0, 1, 2} - {i, j}).pop()
        kind = "im" if imaginary else "re"
        return validate_basis(
            [np.outer(plus, plus.conj()), np.outer(minus, minus.conj()),
             np.outer(eye[:, k], eye[:, k].conj())],
            label=f"{kind}{i}-{j}",
        )

    b1 = validate_basis([eye[:, 0], eye[:, 1], eye[:, 2]], label="comp")
    seven = [
        b1,
        plane(0, 1, False),
        plane(0, 2, False),
        plane(1, 2, False),
        plane(0, 1, True),
        plane(0, 2, True),
        plane(1, 2, True),
    ]

    q1 = np.array(
        [
            [1 / 3, _phase(7 * np.pi / 12) / np.sqrt(6), _phase(np.pi / 3) / (3 * np.sqrt(2))],
            [_phase(-7 * np.pi / 12) / np.sqrt(6), 1 / 2, _phase(-np.pi / 4) / (2 * np.sqrt(3))],
            [_phase(-np.pi / 3) / (3 * np.sqrt(2)), _phase(np.pi / 4) / (2 * np.sqrt(3)), 1 / 6],
        ],
        dtype=complex,
    )
    q2 = (6 / 11) * np.array(
        [
            [1 / 2, _phase(-3 * np.pi / 4) / np.sqrt(6), _phase(-np.pi / 3) / np.sqrt(2)],
            [_phase(3 * np.pi / 4) / np.sqrt(6), 1 / 3, _phase(5 * np.pi / 12) / np.sqrt(3)],
            [_phase(np.pi / 3) / np.sqrt(2), _phase(-5 * np.pi / 12) / np.sqrt(3), 1],
        ],
        dtype=complex,
    )
    general = validate_basis([q1, q2, np.eye(3) - q1 - q2], label="general")
    return seven, general


def standard_family(n: int) -> list[Basis]:
    """Computational basis plus the plane bases isolating each off-diagonal part.

    One basis per pair (i, j) measures the real part of rho_ij, one the
    imaginary part; together with the diagonal this pins every parameter, so
    the family has full rank n**2 and size n**2 - n + 1.
    """
    if n < 2:
        raise DimensionTooSmall(f"dimension {n} is below 2")
    eye = np.eye(n, dtype=complex)
    family = [validate_basis([eye[:, i] for i in range(n)], label="comp")]
    for kind in ("re", "im"):
        for i, j in pair_indices(n):
            w = 1j * eye[:, j] if kind == "im" else eye[:, j]
            vectors = []
            for k in range(n):
                if k == i:
                    vectors.append((eye[:, i] + w) / np.sqrt(2))
                elif k == j:
                    vectors.append((eye[:, i] - w) / np.sqrt(2))
                else:
                    vectors.append(eye[:, k])
            family.append(validate_basis(vectors, label=f"{kind}{i}-{j}"))
    return family


def fourier_basis(n: int, label: str = "dft") -> Basis:
    """Discrete-Fourier basis; every vector overlaps every coordinate axis."""
    if n < 2:
        raise DimensionTooSmall(f"dimension {n} is below 2")
    cols = [
        np.array([np.exp(2j * np.pi * j * k / n) for j in range(n)]) / np.sqrt(n)
        for k in range(n)
    ]
    return validate_basis(cols, label=label)


def random_basis(n: int, rng: np.random.Generator, label: str = "random") -> Basis:
    """Haar-ish random orthonormal basis via QR of a complex Gaussian matrix."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))  # fix the phase convention
    return validate_basis([q[:, k] for k in range(n)], label=label)


def forward_assignments(rho: DensityMatrix, bases) -> AssignmentSet:
    """Probabilities tr(rho P) for each basis; the oracle for consistency tests."""
    bases = list(bases)
    n = rho.dimension
    assignments = []
    for b in bases:
        if b.dimension != n:
            raise DimensionMismatch(f"basis {b.label!r} has dimension {b.dimension}, expected {n}")
        p = np.array([rho.expectation(proj) for proj in b.projectors])
        p = np.clip(p, 0.0, 1.0)
        s = p.sum()
        if abs(s - 1.0) > TOL_PROB:
            raise DimensionMismatch(f"probabilities for basis {b.label!r} sum to {s}")
        assignments.append(assignment(b, p / s))
    return AssignmentSet(n, tuple(assignments))


def state_from_hermitian(a: np.ndarray) -> DensityMatrix:
    """Normalize A**2 into a density matrix; A**2 is PSD for Hermitian A."""
    a = np.asarray(a, dtype=complex)
    sq = a @ a
    tr = np.trace(sq).real
    if tr <= 0:
        raise DimensionMismatch("zero matrix cannot be normalized into a state")
    return DensityMatrix(sq / tr)


def interior_state(n: int, seed: int) -> DensityMatrix:
    """Random full-rank state with minimum eigenvalue at least 0.01/n."""
    rng = make_rng(seed, _STREAM_INTERIOR, n)
    for _ in range(100):
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        rho = state_from_hermitian((g + g.conj().T) / 2)
        if rho.min_eigenvalue() >= 0.01 / n:
            return rho
    raise ConstructionFailed(f"no interior state found in 100 draws (n={n}, seed={seed})")


@dataclass(frozen=True)
class OptimalCounterexample:
    """A family of assignments whose every proper audit-size subset is
    consistent while the whole family is not, with explicit margins."""

    assignments: AssignmentSet
    base_state: DensityMatrix
    perturbed_index: tuple[int, int]
    perturbation: float


def _subset_rank_ok(bases, n, skip_index):
    """Every one-basis omission (other than skip_index) must keep full rank."""
    full = numerical_rank(coefficient_matrix(bases, n)).rank
    if full != n * n:
        return False
    for k in range(len(bases)):
        if k == skip_index:
            continue
        rest = [bases[i] for i in range(len(bases)) if i != k]
        if numerical_rank(coefficient_matrix(rest, n)).rank != n * n:
            return False
    return True


def optimal_counterexample(n: int, seed: int) -> OptimalCounterexample:
    """Attempt the perturbed-family construction of an optimality witness.

    Procedure: take the standard family, replace the last imaginary-part
    basis with a general-position basis Q (the explicit dimension-3 one, or a
    seeded random basis passing a rank acceptance test for n > 3), compute
    forward probabilities from a random interior state, then search a signed
    offset delta on the second outcome of the Q block (compensated on the
    last outcome) such that every (size-1)-omission subset stays consistent
    with eigenvalue margin while the full system becomes linearly infeasible.

    Constraint this search cannot escape: the computational basis carries no
    information beyond what the plane bases' own diagonal rows already pin,
    so the subset omitting it has the same dependency the perturbation must
    break -- any delta that makes the full family infeasible makes that
    subset infeasible too.  The bisection therefore collapses and this
    function raises ConstructionFailed with the measured obstruction; the
    dimension-2 analogue (dim2_example) does not suffer this because there a
    single basis pins a full Bloch component no other basis sees.
    """
    if n < 3:
        raise DimensionTooSmall("dimension below 3; the two-dimensional witness is dim2_example()")

    family = standard_family(n)
    q_index = len(family) - 1
    if n == 3:
        _, q_basis = dim3_bases()
        bases = family[:q_index] + [q_basis]
        if not _subset_rank_ok(bases, n, q_index):
            raise ConstructionFailed("dimension-3 general basis failed the rank acceptance test")
    else:
        rng = make_rng(seed, _STREAM_QBASIS, n)
        for attempt in range(50):
            q_basis = random_basis(n, rng, label="general")
            bases = family[:q_index] + [q_basis]
            if _subset_rank_ok(bases, n, q_index):
                break
        else:
            raise ConstructionFailed(f"no general-position basis passed the rank test in 50 draws (n={n}, seed={seed})")

    rho0 = interior_state(n, seed)
    base_probs = [
        np.clip([rho0.expectation(p) for p in b.projectors], 0.0, 1.0)
        for b in bases
    ]

    def perturbed_set(delta: float, indices=None) -> AssignmentSet:
        chosen = range(len(bases)) if indices is None else indices
        assignments = []
        for i in chosen:
            p = base_probs[i].copy()
            if i == q_index:
                p[1] += delta
                p[-1] -= delta
            assignments.append(assignment(bases[i], p / p.sum()))
        return AssignmentSet(n, tuple(assignments))

    def subset_margin(delta: float) -> tuple[float, tuple[int, float] | None]:
        """Worst eigenvalue margin over one-omission subsets; flags linear breakage."""
        worst = np.inf
        for k in range(len(bases)):
            if k == q_index:
                continue
            keep = [i for i in range(len(bases)) if i != k]
            ls = least_squares_solve(build_system(perturbed_set(delta, keep)))
            if ls.residual_norm > 1e-9:
                return -np.inf, (k, ls.residual_norm)
            lmin = float(np.linalg.eigvalsh(matrix_from_params(ls.solution, n))[0])
            worst = min(worst, lmin)
        return worst, None

    # Residual of the full system is exactly linear in delta.
    full_matrix = coefficient_matrix(bases, n)
    u, s, _ = np.linalg.svd(full_matrix, full_matrices=True)
    rank = int(np.sum(s > 1e-9 * s[0]))
    direction = np.zeros(full_matrix.shape[0])
    row0 = 1 + q_index * n
    direction[row0 + 1] = 1.0
    direction[row0 + n - 1] = -1.0
    residual_slope = float(np.linalg.norm(u[:, rank:].T @ direction))

    hi = min(0.25, 1 - base_probs[q_index][1] - 1e-9, base_probs[q_index][-1] - 1e-9)
    margin_hi, breakage = subset_margin(hi)
    if margin_hi >= COUNTEREXAMPLE_PSD_MARGIN:
        delta = hi
    else:
        lo = 0.0
        for _ in range(60):
            mid = (lo + hi) / 2
            margin_mid, breakage = subset_margin(mid)
            if margin_mid >= COUNTEREXAMPLE_PSD_MARGIN:
                lo = mid
            else:
                hi = mid
        delta = lo / 2

    margin, breakage = subset_margin(delta) if delta > 0 else (-np.inf, breakage)
    residual = residual_slope * delta
    if delta <= 0 or margin < COUNTEREXAMPLE_PSD_MARGIN or residual < COUNTEREXAMPLE_RESIDUAL_MARGIN:
        probe = min(1e-3, max(hi, 1e-6))
        _, probe_breakage = subset_margin(probe)
        detail = ""
        if probe_breakage is not None:
            k, res = probe_breakage
            detail = (
                f" At delta={probe:g} the subset omitting basis {k} ({bases[k].label!r}) is itself "
                f"linearly infeasible (residual {res:.3e}, scaling linearly with delta): that basis "
                f"is redundant given the others, so it inherits any infeasibility of the full family."
            )
        raise ConstructionFailed(
            f"bisection over the perturbation exhausted its budget (n={n}, seed={seed}): "
            f"best delta={delta:g}, subset margin={margin:g} (need >= {COUNTEREXAMPLE_PSD_MARGIN}), "
            f"full residual={residual:g} (need >= {COUNTEREXAMPLE_RESIDUAL_MARGIN})." + detail
        )

    return OptimalCounterexample(
        assignments=perturbed_set(delta),
        base_state=rho0,
        perturbed_index=(q_index, 1),
        perturbation=delta,
    )
