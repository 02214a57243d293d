"""Finite-shot measurement simulation and its applications: off-diagonal
parameter estimation, linear-inversion tomography over the standard family,
purification, and a probabilistic threshold secret-sharing demonstration.

Every stochastic routine takes an explicit seed; trials derive independent
counter-based streams from (seed, trial index), so results never depend on
execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    LatticeLeavesPsdCone,
    MissingRecord,
    ValidationError,
)
from .model import (
    AssignmentSet,
    Basis,
    DensityMatrix,
    assignment,
    pair_indices,
)
from .numerics import least_squares_solve
from .generators import interior_state, standard_family
from .rng import make_rng
from .solver import build_system
from .model import matrix_from_params

_STREAM_SAMPLE = 10
_STREAM_DEALER = 11
_STREAM_PLAYER = 12
_STREAM_GUESS = 13
_STREAM_BASE = 14


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcome counts of repeated projective measurement in one basis."""

    basis_label: str
    shots: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValidationError("counts must be nonnegative")
        if sum(self.counts) != self.shots:
            raise ValidationError(f"counts sum to {sum(self.counts)}, expected {self.shots}")

    def frequencies(self) -> np.ndarray:
        if self.shots == 0:
            return np.full(len(self.counts), 1.0 / len(self.counts))
        return np.asarray(self.counts, dtype=float) / self.shots


def sample_measurement(rho: DensityMatrix, basis: Basis, shots: int, seed: int) -> MeasurementRecord:
    """Multinomial counts from the outcome distribution tr(rho P_i)."""
    if basis.dimension != rho.dimension:
        raise DimensionMismatch("state and basis dimensions differ")
    if shots < 1:
        raise ValidationError("shots must be at least 1")
    p = np.array([rho.expectation(proj) for proj in basis.projectors])
    p = np.clip(p, 0.0, 1.0)
    p = p / p.sum()
    rng = make_rng(seed, _STREAM_SAMPLE)
    counts = rng.multinomial(shots, p)
    return MeasurementRecord(basis_label=basis.label, shots=shots, counts=tuple(int(c) for c in counts))


def _find_record(records, label: str) -> MeasurementRecord:
    for r in records:
        if r.basis_label == label:
            return r
    raise MissingRecord(f"no record for basis {label!r}")


@dataclass(frozen=True)
class OffDiagonalEstimate:
    x: float
    y: float
    x_stderr: float
    y_stderr: float


def offdiagonal_from_probabilities(diag_probs, re_prob_i: float, im_prob_i: float, i: int, j: int):
    """Exact linear inversion: the plane bases shift outcome i by +Re rho_ij
    (real pair) and -Im rho_ij (imaginary pair) relative to (a_i + a_j)/2."""
    mid = (diag_probs[i] + diag_probs[j]) / 2.0
    return re_prob_i - mid, mid - im_prob_i


def estimate_offdiagonal(records, i: int, j: int) -> OffDiagonalEstimate:
    """Estimate Re/Im of rho_ij from records for the computational basis and
    the two plane bases of the pair (i, j).

    Standard errors propagate the multinomial variances of the three records;
    counts get add-one smoothing so the degenerate single-shot case still
    reports an honest (wide) uncertainty.
    """
    if j <= i:
        raise DimensionMismatch("need i < j")
    diag = _find_record(records, "comp")
    re_rec = _find_record(records, f"re{i}-{j}")
    im_rec = _find_record(records, f"im{i}-{j}")
    a = diag.frequencies()
    x, y = offdiagonal_from_probabilities(a, re_rec.frequencies()[i], im_rec.frequencies()[i], i, j)

    def smoothed(rec: MeasurementRecord) -> np.ndarray:
        n = len(rec.counts)
        return (np.asarray(rec.counts, dtype=float) + 1.0) / (rec.shots + n)

    def plane_var(rec: MeasurementRecord) -> float:
        p = smoothed(rec)[i]
        return p * (1 - p) / max(rec.shots, 1)

    ad = smoothed(diag)
    # var((a_i + a_j)/2) with multinomial covariance cov(a_i, a_j) = -a_i a_j / m
    diag_var = (ad[i] * (1 - ad[i]) + ad[j] * (1 - ad[j]) - 2 * ad[i] * ad[j]) / (4 * max(diag.shots, 1))
    x_err = math.sqrt(plane_var(re_rec) + diag_var)
    y_err = math.sqrt(plane_var(im_rec) + diag_var)
    return OffDiagonalEstimate(x=float(x), y=float(y), x_stderr=x_err, y_stderr=y_err)


def nearest_density(hermitian: np.ndarray) -> DensityMatrix:
    """Closest (Frobenius) unit-trace PSD matrix: project the spectrum onto
    the probability simplex (shift by the water level, clip at zero)."""
    w, v = np.linalg.eigh(hermitian)
    # simplex projection of the eigenvalue vector
    u = np.sort(w)[::-1]
    cumulative = np.cumsum(u)
    ks = np.arange(1, len(u) + 1)
    valid = u - (cumulative - 1.0) / ks > 0
    k = int(np.max(np.nonzero(valid)[0])) + 1
    tau = (cumulative[k - 1] - 1.0) / k
    clipped = np.clip(w - tau, 0.0, None)
    return DensityMatrix((v * clipped) @ v.conj().T)


def reconstruct_from_frequencies(bases, frequency_vectors, dimension: int) -> DensityMatrix:
    """Linear inversion over the given bases, then PSD projection."""
    assignments = tuple(assignment(b, f) for b, f in zip(bases, frequency_vectors))
    ls = least_squares_solve(build_system(AssignmentSet(dimension, assignments)))
    return nearest_density(matrix_from_params(ls.solution, dimension))


def tomography(records) -> DensityMatrix:
    """Reconstruct a state from one record per standard-family basis.

    The empirical frequencies enter the same constraint system the
    consistency checker uses; the full family has rank n**2, so the inversion
    is unique, and eigenvalue projection restores positivity.
    """
    records = list(records)
    if not records:
        raise MissingRecord("no records supplied")
    n = len(records[0].counts)
    family = standard_family(n)
    freq = []
    for b in family:
        rec = _find_record(records, b.label)
        if len(rec.counts) != n:
            raise DimensionMismatch(f"record for {b.label!r} has {len(rec.counts)} outcomes, expected {n}")
        freq.append(rec.frequencies())
    return reconstruct_from_frequencies(family, freq, n)


def purify(rho: DensityMatrix, rank_tol: float = 1e-12) -> np.ndarray:
    """Unit vector on ancilla x system whose partial trace over the ancilla
    returns the state; the ancilla dimension equals the state's rank."""
    w, v = np.linalg.eigh(rho.matrix)
    keep = [i for i in range(len(w)) if w[i] > rank_tol]
    n = rho.dimension
    rank = len(keep)
    psi = np.zeros(rank * n, dtype=complex)
    for slot, i in enumerate(keep):
        psi[slot * n : (slot + 1) * n] = np.sqrt(w[i]) * v[:, i]
    return psi / np.linalg.norm(psi)


def partial_trace_ancilla(psi: np.ndarray, system_dim: int) -> np.ndarray:
    """Trace out the ancilla factor of a vector on C^r (x) C^n."""
    if psi.shape[0] % system_dim != 0:
        raise DimensionMismatch("vector length is not a multiple of the system dimension")
    r = psi.shape[0] // system_dim
    blocks = psi.reshape(r, system_dim)
    return blocks.T @ blocks.conj()


@dataclass(frozen=True)
class SecretSharingConfig:
    """Parameters of the one-parameter-lattice secret sharing demonstration."""

    n: int
    k1: int
    spacing: float
    shots: int
    seed: int

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("dimension must be at least 2")
        if self.k1 < 2:
            raise ValidationError("need at least two lattice points")
        if self.spacing <= 0:
            raise ValidationError("lattice spacing must be positive")
        if self.shots < 0:
            raise ValidationError("shots must be nonnegative")


@dataclass(frozen=True)
class SecretSharingReport:
    config: SecretSharingConfig
    trials: int
    full_recovery_rate: float
    missing_player_recovery_rate: float
    per_parameter_error_histogram: dict = field(default_factory=dict)


_PSD_LATTICE_MARGIN = 1e-6


def _build_lattice(config: SecretSharingConfig) -> tuple[list[DensityMatrix], np.ndarray]:
    """Secret states: one off-diagonal parameter (Im rho_01) swept over k1
    values of the given spacing, centered on a base state blended toward the
    maximally mixed state so the whole sweep stays strictly inside the PSD
    cone.  Raises LatticeLeavesPsdCone when no blend gives enough room."""
    n = config.n
    spread = config.spacing * (config.k1 - 1)
    raw = interior_state(n, make_rng(config.seed, _STREAM_BASE).integers(2**31))
    need = _PSD_LATTICE_MARGIN + spread / 2
    lmin_raw = raw.min_eigenvalue()
    if 1.0 / n <= need:
        raise LatticeLeavesPsdCone(
            f"spacing {config.spacing} x {config.k1} points spans {spread:.3f}, "
            f"more than the PSD cone allows in dimension {n}"
        )
    mu = 0.9 * min(1.0, (1.0 / n - need) / max(1.0 / n - lmin_raw, 1e-12))
    base = DensityMatrix((1 - mu) * np.eye(n) / n + mu * raw.matrix)
    params = base.params()
    ps = pair_indices(n)
    y01_index = n + len(ps) + ps.index((0, 1))
    center = params[y01_index]
    offsets = center + config.spacing * (np.arange(config.k1) - (config.k1 - 1) / 2)
    lattice = []
    for value in offsets:
        t = params.copy()
        t[y01_index] = value
        m = matrix_from_params(t, n)
        lmin = float(np.linalg.eigvalsh(m)[0])
        if lmin < _PSD_LATTICE_MARGIN:
            raise LatticeLeavesPsdCone(
                f"lattice point at Im rho_01 = {value:.4f} has minimum eigenvalue {lmin:.2e}"
            )
        lattice.append(DensityMatrix(m))
    return lattice, offsets


def secret_share_demo(config: SecretSharingConfig, trials: int = 500) -> SecretSharingReport:
    """Monte-Carlo run of the (k, k) probabilistic secret sharing scheme.

    The dealer samples one of k1 states differing only in Im rho_01; each of
    the n**2 - n players measures its assigned plane basis with the configured
    number of shots (diagonal entries are conveyed, not measured).  The full
    coalition decodes by nearest lattice point on the secret parameter; with
    the player holding that parameter missing, the rest can only guess
    uniformly.  Zero shots degrade everyone to guessing.
    """
    lattice, offsets = _build_lattice(config)
    n = config.n
    ps = pair_indices(n)
    family = standard_family(n)
    plane_bases = {b.label: b for b in family if b.label != "comp"}
    secret_label = "im0-1"
    diag_probs = np.diag(lattice[0].matrix).real

    errors: dict[str, list[float]] = {f"x{i},{j}": [] for i, j in ps}
    errors.update({f"y{i},{j}": [] for i, j in ps})
    full_hits = 0
    missing_hits = 0

    for trial in range(trials):
        dealer = make_rng(config.seed, _STREAM_DEALER, trial)
        secret = int(dealer.integers(config.k1))
        rho = lattice[secret]
        true_params = rho.params()

        estimates: dict[str, float] = {}
        for label, basis in plane_bases.items():
            kind, rest = label[:2], label[2:]
            i, j = (int(t) for t in rest.split("-"))
            if config.shots == 0:
                freq_i = None
            else:
                kind_flag = 1 if kind == "im" else 0
                rng = make_rng(config.seed, _STREAM_PLAYER, trial, kind_flag, i, j)
                p = np.array([rho.expectation(proj) for proj in basis.projectors])
                p = np.clip(p, 0.0, 1.0)
                counts = rng.multinomial(config.shots, p / p.sum())
                freq_i = counts[i] / config.shots
            mid = (diag_probs[i] + diag_probs[j]) / 2.0
            if freq_i is None:
                value = None
            elif kind == "re":
                value = freq_i - mid
            else:
                value = mid - freq_i
            key = f"x{i},{j}" if kind == "re" else f"y{i},{j}"
            if value is not None:
                estimates[label] = value
                pidx = (n + ps.index((i, j))) if kind == "re" else (n + len(ps) + ps.index((i, j)))
                errors[key].append(abs(value - true_params[pidx]))

        guess_rng = make_rng(config.seed, _STREAM_GUESS, trial)
        if config.shots == 0 or secret_label not in estimates:
            full_guess = int(guess_rng.integers(config.k1))
        else:
            full_guess = int(np.argmin(np.abs(offsets - estimates[secret_label])))
        missing_guess = int(guess_rng.integers(config.k1))

        full_hits += int(full_guess == secret)
        missing_hits += int(missing_guess == secret)

    bin_edges = np.linspace(0.0, 2 * config.spacing, 17)
    histogram = {}
    for key, errs in errors.items():
        arr = np.asarray(errs)
        counts, _ = np.histogram(arr, bins=bin_edges)
        histogram[key] = {
            "bin_edges": bin_edges.tolist(),
            "counts": counts.tolist(),
            "overflow": int(np.sum(arr > bin_edges[-1])),
        }

    return SecretSharingReport(
        config=config,
        trials=trials,
        full_recovery_rate=full_hits / trials,
        missing_player_recovery_rate=missing_hits / trials,
        per_parameter_error_histogram=histogram,
    )
