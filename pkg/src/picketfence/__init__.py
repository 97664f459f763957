"""Lyapunov exponents of products of Ginibre and truncated Haar unitary matrices.

Exact limit formulas (:mod:`.spectrum`), the moment formulas they come from
(:mod:`.moments`), and the Monte Carlo machinery that checks both
(:mod:`.sampler`, :mod:`.chain`).
"""
__version__ = "0.1.0"

from .ensemble import (  # noqa: E402
    GINIBRE,
    INF,
    EnsembleSequence,
    FrequencyMeasure,
    alpha,
    empirical_tail,
    measure_from_sequence,
    parse_pattern,
    shift_s,
    tail_weight,
)
from .spectrum import (  # noqa: E402
    c_of_n,
    epsilon_bound,
    laplace_identity_value,
    lyapunov_exponents,
    normalized_gaps,
    compute_spectrum,
)
from .special import digamma, trigamma  # noqa: E402

__all__ = [
    "GINIBRE", "INF", "EnsembleSequence", "FrequencyMeasure", "alpha", "empirical_tail",
    "measure_from_sequence", "parse_pattern", "shift_s", "tail_weight", "c_of_n",
    "epsilon_bound", "laplace_identity_value", "lyapunov_exponents", "normalized_gaps",
    "compute_spectrum", "digamma", "trigamma",
]
