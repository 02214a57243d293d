"""Numerical tolerances used throughout the package.

All matrix entries handled here have magnitude O(1), so absolute Frobenius
tolerances at 1e-10 sit comfortably above double-precision noise while
rejecting genuinely malformed inputs.
"""

# Structural validation of projectors and bases (absolute, Frobenius norm).
TOL_HERM = 1e-10
TOL_IDEM = 1e-10
TOL_ORTH = 1e-10

# Probability vectors: entrywise floor and sum-to-one slack.
TOL_PROB = 1e-9

# Density matrices: smallest admissible eigenvalue is -TOL_PSD.
TOL_PSD = 1e-9

# Numerical rank: singular values below RANK_RTOL * sigma_max count as zero.
# Relative so that user rescaling of inputs does not change ranks.
RANK_RTOL = 1e-9

# Residual separating a linearly infeasible system from roundoff.  Genuine
# infeasibility in the bundled counterexamples shows up at the 1e-2 scale,
# numerical noise at 1e-12, so 1e-8 splits the two regimes cleanly.
TOL_RESIDUAL = 1e-8

# Feasibility search over an underdetermined solution set.
DEFAULT_BUDGET = 5000
ASCENT_RESTARTS = 8

# Margins enforced by the counterexample generator.
COUNTEREXAMPLE_PSD_MARGIN = 1e-4
COUNTEREXAMPLE_RESIDUAL_MARGIN = 1e-6
