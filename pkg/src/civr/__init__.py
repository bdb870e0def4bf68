"""Composite incremental variance reduction.

Proximal stochastic solvers for nested objectives f(E[g_xi(x)]) + r(x):
exact and plug-in composite gradients, incremental variance-reduced
estimation of the inner map and its Jacobian, theory-backed epoch
schedules and restart drivers, applications (risk-averse portfolio
selection, MDP policy evaluation), and an experiment harness.
"""

from .estimator import EstimatorState, advance, advance_cost, anchor, anchor_cost, composite_estimate
from .model import (
    FULL,
    ComponentOracle,
    CompositeProblem,
    CountingOracle,
    DerivedConstants,
    FiniteSumFunctionOracle,
    FunctionOuter,
    IdentityOuter,
    OuterFunction,
    QuadraticNormOuter,
    SmoothnessConstants,
    composite_gradient,
    composite_value,
    derive_constants,
    monte_carlo_value,
    pilot_derived_constants,
    pilot_sigma0_sq,
    plugin_gradient_estimate,
)
from .problems import (
    VARIANCE_PENALTY,
    VARIANCE_REWARD,
    AffineComponentsOracle,
    AffineExpectationOracle,
    BellmanResidualOuter,
    MdpPolicyEvalProblem,
    MeanVarianceOuter,
    PortfolioProblem,
    QuadraticInfo,
    mdp_problem,
    portfolio_problem,
    random_mdp,
    synth_quadratic_composite,
    synth_quadratic_expectation,
    synthetic_returns,
)
from .prox import (
    L1BallReg,
    L1Reg,
    Regularizer,
    ZeroReg,
    approx_gradient_mapping,
    gradient_mapping,
    gradient_mapping_from,
    project_l1_ball,
    prox,
)
from .schedules import EpochPlan, Schedule
from .solver import (
    RunTrace,
    SolverError,
    SolverResult,
    TraceOptions,
    baseline_prox_fullgrad,
    baseline_prox_plugin_sgd,
    run_civr,
    run_restarted,
)
from . import datasets, harness, schedules, verify

__all__ = [
    "FULL",
    "ComponentOracle",
    "CompositeProblem",
    "CountingOracle",
    "DerivedConstants",
    "EstimatorState",
    "FiniteSumFunctionOracle",
    "FunctionOuter",
    "IdentityOuter",
    "OuterFunction",
    "QuadraticNormOuter",
    "SmoothnessConstants",
    "advance",
    "advance_cost",
    "anchor",
    "anchor_cost",
    "composite_estimate",
    "composite_gradient",
    "composite_value",
    "derive_constants",
    "monte_carlo_value",
    "pilot_derived_constants",
    "pilot_sigma0_sq",
    "plugin_gradient_estimate",
    "VARIANCE_PENALTY",
    "VARIANCE_REWARD",
    "AffineComponentsOracle",
    "AffineExpectationOracle",
    "BellmanResidualOuter",
    "MdpPolicyEvalProblem",
    "MeanVarianceOuter",
    "PortfolioProblem",
    "QuadraticInfo",
    "mdp_problem",
    "portfolio_problem",
    "random_mdp",
    "synth_quadratic_composite",
    "synth_quadratic_expectation",
    "synthetic_returns",
    "L1BallReg",
    "L1Reg",
    "Regularizer",
    "ZeroReg",
    "approx_gradient_mapping",
    "gradient_mapping",
    "gradient_mapping_from",
    "project_l1_ball",
    "prox",
    "EpochPlan",
    "Schedule",
    "RunTrace",
    "SolverError",
    "SolverResult",
    "TraceOptions",
    "baseline_prox_fullgrad",
    "baseline_prox_plugin_sgd",
    "run_civr",
    "run_restarted",
    "datasets",
    "harness",
    "schedules",
    "verify",
]

__version__ = "0.1.0"
