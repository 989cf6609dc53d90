"""Phoneme rank-frequency statistics under a symmetric Dirichlet model, with author clustering."""

from .corpus import (
    FrequencyVector,
    Lexicon,
    Mode,
    PhonemeInventory,
    PhonemeProfile,
    build_profile,
    exclusive_profile,
    load_lexicon,
    rank_spectrum,
    read_lexicon,
    to_frequency_vector,
    tokenize,
)
from .model import (
    DirichletModel,
    RankedSpectrum,
    approx_spectrum,
    chi_r_density,
    expected_spectrum,
    monte_carlo_moments,
    order_stat_moments,
    relative_fluctuation_asymptotic,
    relative_fluctuation_exact,
    sample_spectra,
)
from .numerics import (
    Tolerance,
    integrate_semi_infinite,
    inverse_regularized_incomplete_gamma,
    minimize_scalar,
    regularized_incomplete_gamma,
)
from .stylometry import (
    FitResult,
    attribute,
    cluster_margins_beta,
    cluster_margins_distance,
    distance_matrix,
    exclusive_distance_matrix,
    fit_beta,
    leave_one_out,
    mode_comparison_report,
    rho0,
    rho1,
)

__version__ = "0.1.0"
