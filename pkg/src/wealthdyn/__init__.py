"""Compartmental wealth-distribution dynamics for token economies.

Forward simulation of category-level wealth under interaction and rotation
rates, inverse fitting of those rates toward a desired attractor, pricing
via per-timestep price hyperplanes, and kinetic exchange models at the
level of individual agents.
"""

__version__ = "0.1.0"

from ._accel import BACKEND
from .dynamics import RateMatrices, WealthState, build_rate_matrices, derivative, euler_step
from .errors import (
    ConfigError,
    ConfigValidationError,
    InfeasibleDesiredError,
    NegativeWealthError,
    NoConvergenceError,
    RateConflictError,
    ZeroDemandError,
    ZeroWealthProductError,
)
from .forward import (
    ConvergenceReport,
    Trajectory,
    WealthMetrics,
    circulation,
    detect_convergence,
    simulate,
    wealth_metrics,
)
from .inverse import (
    InverseProblem,
    SolveOptions,
    SolveResult,
    attractor_residual,
    final_state_residual,
    solve_inverse,
    verify_solution,
)
from .pricing import (
    PriceHyperplane,
    TransactionLedger,
    beta_from_ledger,
    check_price_feasibility,
    hyperplane_for_pair,
    min_norm_prices,
    solve_free_price,
    stability_taxes,
)
from .stochastic import KineticPopulation, ProbabilisticLedger, expected_beta, kinetic_step, run_kinetic
from .taxonomy import (
    CategoryDef,
    EconomyConfig,
    InteractionDef,
    RateParams,
    interaction_pairs,
    load_economy_config,
    parse_economy_config,
    serialize_economy_config,
    validate_economy,
)
