"""Expected number of internal equilibria in random evolutionary games."""
from .density2 import a_coefficients, bounds_e2d, density_f, e2d, p_max_bound, stable_e2d_interval
from .estimate import ConvergenceError, DomainError, EstimateReport, UnsupportedDimensionError
from .game_model import GameSpec, enumerate_indices, multinomial, sample_system
from .kostlan import e_nd, l_matrix
from .oracle import McReport, count_positive_roots, mc_e2d, mc_en2
from .quad import QuadConfig

__all__ = [
    "ConvergenceError", "DomainError", "EstimateReport", "GameSpec", "McReport", "QuadConfig",
    "UnsupportedDimensionError", "a_coefficients", "bounds_e2d", "count_positive_roots", "density_f",
    "e2d", "e_nd", "enumerate_indices", "l_matrix", "mc_e2d", "mc_en2", "multinomial", "p_max_bound",
    "sample_system", "stable_e2d_interval",
]
__version__ = "0.1.0"
