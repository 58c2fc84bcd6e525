"""Ready-made simulation scenarios for demos and verification runs."""

from __future__ import annotations

from dataclasses import replace

from pex.core_model import OutcomeSpec
from pex.simulator import CovariateLaw, OnlineShift, OutcomeSurface, ScenarioSpec


def sign_heterogeneous_benchmark(
    seed: int = 0,
    noise_sd: float = 0.25,
    tau1_slope: float = 0.8,
    tau1_base: float = 0.2,
    tau2_base: float = -0.12,
    tau2_slope: float = -0.15,
    shifted: bool = False,
) -> ScenarioSpec:
    """Two arms, two competing outcomes, sign-heterogeneous effects.

    Treatment helps outcome 0 for units with x0 above -tau1_base/tau1_slope
    and hurts it below, while imposing a small heterogeneous cost on
    outcome 1; the arms' ATEs differ on both outcomes. ``shifted=True``
    applies an affine online bias (delta 0.3, gamma 1.2) to outcome 0.
    """
    surfaces = (
        (
            OutcomeSurface(intercept=1.0, linear=(0.25, 0.15)),
            OutcomeSurface(intercept=0.8, linear=(0.1, 0.2)),
        ),
        (
            OutcomeSurface(intercept=1.0 + tau1_base, linear=(0.25 + tau1_slope, 0.15)),
            OutcomeSurface(intercept=0.8 + tau2_base, linear=(0.1, 0.2 + tau2_slope)),
        ),
    )
    shift = (
        (OnlineShift(delta=0.3, gamma=1.2), OnlineShift())
        if shifted
        else (OnlineShift(), OnlineShift())
    )
    return ScenarioSpec(
        n=2,
        m=2,
        d=2,
        covariates=(CovariateLaw.uniform(-1.0, 1.0), CovariateLaw.uniform(-1.0, 1.0)),
        surfaces=surfaces,
        noise_sd=(noise_sd, noise_sd),
        online_shift=shift,
        outcome_specs=(
            OutcomeSpec(name="engagement"),
            OutcomeSpec(name="quality"),
        ),
        seed=seed,
    )


def null_effect_scenario(seed: int = 0, noise_sd: float = 0.25) -> ScenarioSpec:
    """Two identical arms: every treatment effect is exactly zero."""
    surface_row = (
        OutcomeSurface(intercept=1.0, linear=(0.3, -0.2)),
        OutcomeSurface(intercept=0.5, linear=(0.1, 0.1)),
    )
    return ScenarioSpec(
        n=2,
        m=2,
        d=2,
        covariates=(CovariateLaw.normal(0.0, 1.0), CovariateLaw.uniform(-1.0, 1.0)),
        surfaces=(surface_row, surface_row),
        noise_sd=(noise_sd, noise_sd),
        online_shift=(OnlineShift(), OnlineShift()),
        seed=seed,
    )


def with_online_shift(
    scenario: ScenarioSpec, deltas: tuple[float, ...], gammas: tuple[float, ...]
) -> ScenarioSpec:
    """Copy of a scenario with a different affine online shift."""
    shift = tuple(OnlineShift(delta=d, gamma=g) for d, g in zip(deltas, gammas))
    return replace(scenario, online_shift=shift)
