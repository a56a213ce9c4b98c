"""Parameter-free online linear optimization via coin betting with side information."""

from betolo.core_betting import (
    RegretBoundInputs,
    kt_bet_fraction,
    kt_conjugate_bound,
    kt_regret_bound,
    lambert_w,
    log_kt_potential,
    log_kt_potential_ratio,
    product_dual_bound,
)

__version__ = "0.1.0"
