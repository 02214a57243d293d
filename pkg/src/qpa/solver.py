"""Decide whether a set of probability assignments is realizable by one
density matrix, and analyze the rank structure of the constraint system.

The constraint system: for each assignment (basis B_k, probabilities p^k) and
each outcome i, the row ``tr(rho P^k_i) = p^k_i`` written in the real
parameters of rho, plus one global trace row.  All n rows of every block are
emitted; within-block redundancy (the rows of one basis sum to the trace row)
is handled by rank analysis, and probability-normalization errors surface as
residual instead of being silently absorbed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, DimensionTooSmall
from .model import (
    Assignment,
    AssignmentSet,
    Basis,
    DensityMatrix,
    matrix_from_params,
    pair_indices,
    principal_vector,
)
from .numerics import (
    LeastSquaresSolution,
    RankProfile,
    RealLinearSystem,
    least_squares_solve,
    numerical_rank,
)
from .rng import make_rng
from .tolerances import (
    ASCENT_RESTARTS,
    DEFAULT_BUDGET,
    TOL_ORTH,
    TOL_PSD,
    TOL_RESIDUAL,
)

_ASCENT_SEED = 0x51AB5EED


class Verdict(str, Enum):
    CONSISTENT = "consistent"
    LINEARLY_INFEASIBLE = "linearly_infeasible"
    PSD_INFEASIBLE = "psd_infeasible"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class ConsistencyReport:
    verdict: Verdict
    witness: DensityMatrix | None
    rank_profile: RankProfile
    residual: float
    psd_margin: float
    iterations_used: int


class PairKind(str, Enum):
    SAME_PERMUTED = "same_permuted"
    PLANE_PAIR = "plane_pair"
    GENERAL_POSITION = "general_position"


@dataclass(frozen=True)
class PairStructure:
    kind: PairKind
    rank_increment: int
    plane_indices: tuple[tuple[int, int], tuple[int, int]] | None = None
    permutation: dict[int, int] | None = None


@dataclass(frozen=True)
class AuditResult:
    all_consistent: bool
    subsets_checked: int
    failure_indices: tuple[int, ...] | None = None
    failure_report: ConsistencyReport | None = None


def projector_row(p: np.ndarray) -> np.ndarray:
    """Coefficients of ``tr(rho P)`` in the real parameters of rho.

    With ``rho_jk = x_jk + i*y_jk`` (j < k) the trace is
    ``sum_j a_j P_jj + sum_{j<k} 2*(x_jk Re P_jk + y_jk Im P_jk)``.
    """
    n = p.shape[0]
    ps = pair_indices(n)
    row = np.empty(n * n)
    row[:n] = np.diag(p).real
    for idx, (j, k) in enumerate(ps):
        row[n + idx] = 2.0 * p[j, k].real
        row[n + len(ps) + idx] = 2.0 * p[j, k].imag
    return row


def parameter_labels(n: int) -> tuple[str, ...]:
    labels = [f"a{i}" for i in range(n)]
    labels += [f"x{j},{k}" for j, k in pair_indices(n)]
    labels += [f"y{j},{k}" for j, k in pair_indices(n)]
    return tuple(labels)


def coefficient_matrix(bases, n: int) -> np.ndarray:
    """Trace row plus the n rows of every basis, stacked."""
    rows = [np.concatenate([np.ones(n), np.zeros(n * n - n)])]
    for b in bases:
        if b.dimension != n:
            raise DimensionMismatch(f"basis {b.label!r} has dimension {b.dimension}, expected {n}")
        for p in b.projectors:
            rows.append(projector_row(p))
    return np.array(rows)


def build_system(assignment_set: AssignmentSet) -> RealLinearSystem:
    """Assemble the full constraint system for an assignment set."""
    n = assignment_set.dimension
    matrix = coefficient_matrix([a.basis for a in assignment_set.assignments], n)
    rhs = np.concatenate([[1.0]] + [a.probs.values for a in assignment_set.assignments])
    return RealLinearSystem(matrix=matrix, rhs=rhs, column_labels=parameter_labels(n), dimension=n)


def consistency_number(n: int) -> int:
    """Smallest r such that r-wise subset consistency implies global consistency."""
    if n < 2:
        raise DimensionTooSmall(f"dimension {n} is below 2")
    if n == 2:
        return 4
    return n * n - n + 1


def _hermitian_directions(nullspace: np.ndarray, n: int) -> np.ndarray:
    """Nullspace parameter vectors as (d, n, n) Hermitian matrices."""
    d = nullspace.shape[1]
    out = np.empty((d, n, n), dtype=complex)
    for i in range(d):
        out[i] = matrix_from_params(nullspace[:, i], n)
    return out


def _maximize_min_eigenvalue(
    base: np.ndarray,
    directions: np.ndarray,
    budget: int,
    stop_at: float,
):
    """Projected subgradient ascent on the concave map t -> lambda_min(base + t.N).

    Returns (best_matrix, best_lambda_min, iterations_used, certified_upper_bound).
    The certificate uses concavity: any minimal eigenvector v gives the
    supergradient g_a = v* N_a v, so f(t) <= f(t0) + g.(t - t0) everywhere;
    combined with a Frobenius bound on the region where f can exceed
    -c_region, this yields a rigorous upper bound on max_t lambda_min.
    """
    d = directions.shape[0]
    n = base.shape[0]
    best_t = np.zeros(d)
    best_l = -np.inf
    step0 = 0.5
    used = 0

    def eval_point(t):
        m = base + np.tensordot(t, directions, axes=1)
        w, v = np.linalg.eigh(m)
        return m, float(w[0]), v[:, 0]

    starts = [np.zeros(d)]
    rng = make_rng(_ASCENT_SEED)
    for _ in range(ASCENT_RESTARTS - 1):
        starts.append(0.5 * rng.standard_normal(d))

    per_start = max(1, budget // len(starts))
    for t_start in starts:
        t = t_start.copy()
        for it in range(1, per_start + 1):
            if used >= budget:
                break
            used += 1
            _, lmin, v = eval_point(t)
            if lmin > best_l:
                best_l, best_t = lmin, t.copy()
            if lmin >= stop_at:
                m, lmin, _ = eval_point(t)
                return m, lmin, used, None
            g = np.einsum("i,aij,j->a", v.conj(), directions, v).real
            gn = np.linalg.norm(g)
            if gn < 1e-14:
                break  # stationary: optimal for this start
            t = t + (step0 / np.sqrt(it)) * g / gn
        if best_l >= stop_at:
            break

    m_best, lmin_best, v_best = (lambda r: (r[0], r[1], r[2]))(eval_point(best_t))
    g = np.einsum("i,aij,j->a", v_best.conj(), directions, v_best).real
    c_region = 1e-6
    lam_max_base = float(np.linalg.eigvalsh(base)[-1])
    radius = np.sqrt(n * (n - 1)) * (lam_max_base + c_region)
    certified_ub = lmin_best + float(np.linalg.norm(g)) * (radius + float(np.linalg.norm(best_t)))
    certified_ub = max(certified_ub, -c_region)
    return m_best, lmin_best, used, certified_ub


def check_consistency(
    assignment_set: AssignmentSet,
    budget: int = DEFAULT_BUDGET,
    psd_target: float | None = None,
) -> ConsistencyReport:
    """Decide whether one density matrix reproduces every assigned probability.

    Linear feasibility first (least squares; residual above TOL_RESIDUAL means
    no Hermitian solution at all).  A full-rank system leaves one Hermitian
    candidate whose spectrum decides.  Otherwise the minimum eigenvalue is
    maximized over the affine solution set; crossing ``psd_target`` (default
    -TOL_PSD) proves feasibility, a certified negative upper bound proves
    infeasibility, and an exhausted budget yields UNDECIDED rather than a
    fabricated certificate.
    """
    n = assignment_set.dimension
    system = build_system(assignment_set)
    ls = least_squares_solve(system)
    stop_at = -TOL_PSD if psd_target is None else psd_target

    if ls.residual_norm > TOL_RESIDUAL:
        return ConsistencyReport(
            verdict=Verdict.LINEARLY_INFEASIBLE,
            witness=None,
            rank_profile=ls.rank_profile,
            residual=ls.residual_norm,
            psd_margin=float("nan"),
            iterations_used=0,
        )

    candidate = matrix_from_params(ls.solution, n)
    if ls.nullspace_dim == 0:
        lmin = float(np.linalg.eigvalsh(candidate)[0])
        if lmin >= -TOL_PSD:
            return ConsistencyReport(
                verdict=Verdict.CONSISTENT,
                witness=DensityMatrix(candidate),
                rank_profile=ls.rank_profile,
                residual=ls.residual_norm,
                psd_margin=lmin,
                iterations_used=0,
            )
        return ConsistencyReport(
            verdict=Verdict.PSD_INFEASIBLE,
            witness=None,
            rank_profile=ls.rank_profile,
            residual=ls.residual_norm,
            psd_margin=lmin,
            iterations_used=0,
        )

    directions = _hermitian_directions(ls.nullspace_basis, n)
    m_best, lmin, used, certified_ub = _maximize_min_eigenvalue(candidate, directions, budget, stop_at)
    if lmin >= -TOL_PSD:
        return ConsistencyReport(
            verdict=Verdict.CONSISTENT,
            witness=DensityMatrix(m_best),
            rank_profile=ls.rank_profile,
            residual=ls.residual_norm,
            psd_margin=lmin,
            iterations_used=used,
        )
    if certified_ub is not None and certified_ub < -10 * TOL_PSD:
        return ConsistencyReport(
            verdict=Verdict.PSD_INFEASIBLE,
            witness=None,
            rank_profile=ls.rank_profile,
            residual=ls.residual_norm,
            psd_margin=lmin,
            iterations_used=used,
        )
    return ConsistencyReport(
        verdict=Verdict.UNDECIDED,
        witness=None,
        rank_profile=ls.rank_profile,
        residual=ls.residual_norm,
        psd_margin=lmin,
        iterations_used=used,
    )


def rank_chain(assignment_set: AssignmentSet, order=None) -> list[int]:
    """Cumulative numerical ranks as the blocks are added in the given order."""
    m = len(assignment_set)
    if order is None:
        order = list(range(m))
    order = list(order)
    if sorted(order) != list(range(m)):
        raise DimensionMismatch("order must be a permutation of the assignment indices")
    bases = [assignment_set.assignments[i].basis for i in order]
    n = assignment_set.dimension
    ranks = []
    for t in range(1, m + 1):
        ranks.append(numerical_rank(coefficient_matrix(bases[:t], n)).rank)
    return ranks


def _projector_match(b: Basis, b2: Basis, tol: float = 1e-8) -> dict[int, int] | None:
    """Map each projector of b2 onto an equal projector of b, if possible."""
    used: set[int] = set()
    perm: dict[int, int] = {}
    for j, q in enumerate(b2.projectors):
        found = None
        for i, p in enumerate(b.projectors):
            if i in used:
                continue
            if np.linalg.norm(q - p) <= tol:
                found = i
                break
        if found is None:
            return None
        used.add(found)
        perm[j] = found
    return perm


def analyze_pair(b: Basis, b_prime: Basis) -> PairStructure:
    """Classify how a second basis sits relative to a first.

    Rank increment 0 means the same measurement up to outcome reordering.
    Increment 1 forces (and this verifies) the rigid picture: exactly two
    vectors of the second basis span a plane through two vectors of the
    first, all four overlaps nonzero, and the remaining vectors match up
    one to one.  Anything else is general position.
    """
    if b.dimension != b_prime.dimension:
        raise DimensionMismatch("bases act on different dimensions")
    n = b.dimension
    combined = numerical_rank(coefficient_matrix([b, b_prime], n)).rank
    increment = combined - n

    if increment == 0:
        perm = _projector_match(b, b_prime)
        if perm is not None:
            return PairStructure(kind=PairKind.SAME_PERMUTED, rank_increment=0, permutation=perm)
        return PairStructure(kind=PairKind.GENERAL_POSITION, rank_increment=0)

    if increment != 1:
        return PairStructure(kind=PairKind.GENERAL_POSITION, rank_increment=increment)

    eps = [principal_vector(p) for p in b.projectors]
    beta = [principal_vector(p) for p in b_prime.projectors]
    overlap = np.array([[np.vdot(e, v) for v in beta] for e in eps])
    supports = [frozenset(np.flatnonzero(np.abs(overlap[:, j]) > TOL_ORTH).tolist()) for j in range(n)]

    candidates = [
        (r, s)
        for r, s in itertools.combinations(range(n), 2)
        if len(supports[r]) == 2 and supports[r] == supports[s]
    ]
    for r, s in candidates:  # lexicographically smallest valid pair wins
        jr, js = sorted(supports[r])
        rest_b2 = [j for j in range(n) if j not in (r, s)]
        rest_b = [i for i in range(n) if i not in (jr, js)]
        perm: dict[int, int] = {}
        ok = True
        used: set[int] = set()
        for j in rest_b2:
            if len(supports[j]) != 1:
                ok = False
                break
            (i,) = supports[j]
            if i in used or i not in rest_b:
                ok = False
                break
            used.add(i)
            perm[j] = i
        if ok:
            return PairStructure(
                kind=PairKind.PLANE_PAIR,
                rank_increment=1,
                plane_indices=((r, s), (jr, js)),
                permutation=perm,
            )
    return PairStructure(kind=PairKind.GENERAL_POSITION, rank_increment=increment)


def audit_subsets(
    assignment_set: AssignmentSet,
    size: int,
    budget: int = DEFAULT_BUDGET,
    psd_target: float | None = None,
) -> AuditResult:
    """Check every subset of exactly ``size`` assignments, in lexicographic order.

    Smaller subsets are implied: any subset of a consistent set is consistent.
    Stops at the first failing subset.
    """
    m = len(assignment_set)
    if size < 1 or size > m:
        raise DimensionMismatch(f"subset size {size} out of range 1..{m}")
    checked = 0
    for indices in itertools.combinations(range(m), size):
        checked += 1
        report = check_consistency(assignment_set.subset(indices), budget=budget, psd_target=psd_target)
        if report.verdict is not Verdict.CONSISTENT:
            return AuditResult(
                all_consistent=False,
                subsets_checked=checked,
                failure_indices=indices,
                failure_report=report,
            )
    return AuditResult(all_consistent=True, subsets_checked=checked)
