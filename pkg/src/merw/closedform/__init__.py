"""Exact and asymptotic quantities: a_n, v_n, 3F2, moments, limits, exact laws."""
from .exact import (
    BudgetExceeded,
    ExactLaw,
    enumerate_exact,
    exact_an,
    exact_conditional_eps,
    full_engine_law,
    innovation_mean,
    iter_exact_laws,
    martingale_increment_mean,
    state_count,
)
from .gamma import GammaRatioSeries, an_series, gamma_ratio_an, sum_an, vn, vn_limit_constant
from .hyper import DivergenceError, Hyper3F2, hyper3f2_unit, tail_bracket
from .limits import LimitConstants, limit_constants, limit_L_moments
from .moments import (
    MomentTable,
    closed_form_second_moment,
    conditional_eps_moments,
    exact_second_moment,
    expected_sigma,
    finite_L_second_moment,
    second_moment_diag,
)

__all__ = [
    "BudgetExceeded", "DivergenceError", "ExactLaw", "GammaRatioSeries", "Hyper3F2",
    "LimitConstants", "MomentTable", "an_series", "closed_form_second_moment",
    "conditional_eps_moments", "enumerate_exact", "exact_an", "exact_conditional_eps",
    "exact_second_moment", "expected_sigma", "finite_L_second_moment", "full_engine_law",
    "gamma_ratio_an", "hyper3f2_unit", "innovation_mean", "iter_exact_laws",
    "limit_L_moments", "limit_constants", "martingale_increment_mean",
    "second_moment_diag", "state_count", "sum_an", "tail_bracket", "vn", "vn_limit_constant",
]
