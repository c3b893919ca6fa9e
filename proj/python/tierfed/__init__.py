"""Tier-based personalized federated learning simulator with a token economy.

The heavy lifting lives in the C++ core; this package re-exports the bound
operations: model training primitives, the contribution (Shapley) estimator
and its exact oracle, the simulation round loop, and the mean-estimation
theory tools.
"""

from tierfed._core import (
    Dataset,
    ModelSpec,
    TheoryScenario,
    accuracy,
    closed_form_errors,
    estimate_shapley,
    exact_shapley,
    fedavg,
    gain_threshold,
    generate_population_json,
    gradient,
    loss,
    monte_carlo_errors,
    run_baseline,
    run_shapley_check,
    run_simulation,
    run_theory_check,
    train_local,
)

__all__ = [
    "Dataset",
    "ModelSpec",
    "TheoryScenario",
    "accuracy",
    "closed_form_errors",
    "estimate_shapley",
    "exact_shapley",
    "fedavg",
    "gain_threshold",
    "generate_population_json",
    "gradient",
    "loss",
    "monte_carlo_errors",
    "run_baseline",
    "run_shapley_check",
    "run_simulation",
    "run_theory_check",
    "train_local",
]
