"""Certified decay envelopes for nonlinear Gronwall-type differential inequalities.

The public surface re-exports the problem types, the certifiers, the
power-law majorant search and the numerical oracle.
"""
from .certifier import (
    TOL_REFUTE,
    Certificate,
    FeasibilityVerdict,
    GridSpec,
    InvalidMajorantError,
    Mode,
    Verdict,
    asymptotic_sign,
    certify_closed_form,
    certify_discrete,
    certify_grid,
    check_powerlaw_closed_form,
    discrete_gap,
    discrete_gaps,
    master_gap,
)
from .oracle import (
    BoundReport,
    ConvergenceError,
    DivergenceError,
    FiniteEscape,
    IntegrationError,
    LinearEvolutionSpec,
    NonlinearEvolutionSpec,
    ProbeReport,
    Trajectory,
    dissipativity_probe,
    integrate_scalar_comparison,
    integrate_scalar_comparison_many,
    run_discrete_recursion,
    simulate_linear_evolution,
    simulate_nonlinear_evolution,
    verify_bound,
)
from .problem import (
    Constant,
    ConstantMajorant,
    ContinuousProblem,
    DiscreteProblem,
    DomainError,
    ExponentialDecay,
    ExponentialMajorant,
    PowerLaw,
    PowerLawInstance,
    PowerLawMajorant,
    RationalDecay,
    Separable,
    Tabulated,
    ValidationReport,
    Zero,
    eval_nonlinearity,
    eval_time_fn,
    mu_eval,
    validate_problem,
)
from .search import SearchResult, lambda_star, q_interval, search_powerlaw, sweep_feasibility

__version__ = "0.1.0"
