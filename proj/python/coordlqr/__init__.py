"""Distributed LQ synthesis for ensembles coupled through a weighted average."""

from ._coordlqr import (
    CoordError,
    Ensemble,
    GainSchedule,
    SteadySolution,
    StabilityReport,
    Trajectory,
    OracleSolution,
    accumulated_cost,
    average_feedback_gains,
    centralized_oracle,
    constraint_check,
    costates_closed_form,
    gains,
    mp_residuals,
    naive_policy_value,
    observability,
    optimal_cost,
    pbar_step,
    riccati_step,
    simulate,
    solve_are,
    solve_pbar,
    solve_steady,
    spectral_radius,
    sqrt_factor,
    stability_report,
    synthesize_finite,
    weighted_average,
)

__all__ = [name for name in dir() if not name.startswith("_")]
