from .tensor import (
    HomogeneousHamiltonian,
    RealityViolation,
    ResonantClassError,
    D_value,
    Ds_value,
    R_tilde_value,
    R_value,
    class_D,
    class_R,
    class_weighted_divisor,
    evaluate,
    free_weights,
    gradient_bar,
    gradient_unbar,
    homological_solve,
    make_nls_nonlinearity,
    mass_tensor,
    max_abs_difference,
    quadratic_tensor,
    random_tensor,
    split_resonant,
)
from .bracket import bracket_l1_bound, bracket_with_quadratic, poisson_bracket
from .hsum import HamiltonianSum, OverflowRecord, Piece, Tag, make_quadratic, split_into_sum
from .norms import NormBounds, norm_bounds, norm_lower_bound, norm_upper_bound
from .hh import HHTerms, hh_terms
