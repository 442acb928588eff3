"""Global numeric tolerances, shared by every module.

Validity checks (hermiticity, normalization, positivity) use ATOL; derived
equalities between computed quantities use DTOL. These are configuration
constants, not per-call parameters.
"""

# Validity tolerance for type invariants.
ATOL = 1e-9

# Tolerance for derived equalities (equal densities, roundtrips).
DTOL = 1e-8

# Purity threshold: a state with Tr(rho^2) >= PURITY_MIN counts as pure.
PURITY_MIN = 1.0 - 1e-9

# Total dimension cap for tensor products.
MAX_TENSOR_DIM = 2 ** 12

# Eigenvalues below this are treated as zero when computing ranks.
RANK_CUT = 1e-10

# Negative Born probabilities above -BORN_CLAMP are clamped to zero.
BORN_CLAMP = 1e-12
