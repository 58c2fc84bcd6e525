"""Online candidate testing and sequential tuning in the simulated environment.

Round 1 measures the initial candidate batch under uniform random
assignment; each subsequent round fits surrogates on the online
measurements and proposes one new candidate by scalarized expected
improvement, inside the initial candidates' bounding box inflated 20%.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pex.hte import CateModel
from pex.mopt._search import propose_candidate
from pex.mopt.offline import decode_params, encode_params, orient
from pex.mopt.pareto import FrontSet, ParetoPoint, default_reference_point, pareto_front
from pex.policy import PolicyParams, decide_batch
from pex.simulator import AssignmentFn, ScenarioSpec, run_online


@dataclass(frozen=True)
class OnlineMeasurement:
    """One candidate's measured online outcomes in one round."""

    round_index: int
    candidate_index: int
    params: PolicyParams
    means: np.ndarray  # (m,) measured online mean outcomes
    stderrs: np.ndarray  # (m,)
    count: int
    proposed: bool  # False for the initial batch


@dataclass(frozen=True)
class OnlineTuneResult:
    """Online-measured Pareto front plus the full measurement history."""

    front: FrontSet
    history: tuple[OnlineMeasurement, ...]

    def measurements_for(self, candidate_index: int) -> list[OnlineMeasurement]:
        return [h for h in self.history if h.candidate_index == candidate_index]


def policy_assignment_fn(model: CateModel, params: PolicyParams) -> AssignmentFn:
    """Covariates -> arm function for one policy under one CATE model."""

    def fn(X: np.ndarray) -> np.ndarray:
        return decide_batch(params, model.predict_cate_batch(X))

    return fn


def _inflated_box(thetas: np.ndarray, inflation: float = 0.2):
    lo = thetas.min(axis=0)
    hi = thetas.max(axis=0)
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo) * (1.0 + inflation)
    return center - half, center + half


def optimize_online(
    scenario: ScenarioSpec,
    candidates: Sequence[PolicyParams],
    model: CateModel,
    rounds: int,
    units_per_round: int,
    seed: int,
    rho: float = 0.05,
) -> OnlineTuneResult:
    """Measure candidates online, then propose one new candidate per round.

    With ``rounds=1`` this is a pure evaluation of the initial batch. All
    measured candidates (initial and proposed) compete for the returned
    online Pareto front.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    n, m = scenario.n, scenario.m
    signs = np.array([o.sign for o in scenario.outcome_specs])
    first_sign = float(signs[0])

    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(83,))
    round_seeds = ss.spawn(rounds)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(84,)))

    history: list[OnlineMeasurement] = []
    all_params: list[PolicyParams] = list(candidates)
    thetas: list[np.ndarray] = [encode_params(p) for p in candidates]

    fns = [policy_assignment_fn(model, p) for p in candidates]
    first = run_online(
        scenario,
        fns,
        N=units_per_round,
        seed=int(round_seeds[0].generate_state(1)[0]),
        unit_prefix="tune0-",
    )
    for c, params in enumerate(candidates):
        history.append(
            OnlineMeasurement(
                round_index=0,
                candidate_index=c,
                params=params,
                means=first.means[c],
                stderrs=first.stderrs[c],
                count=int(first.counts[c]),
                proposed=False,
            )
        )

    lows, highs = _inflated_box(np.stack(thetas))
    for r in range(1, rounds):
        measured = [h for h in history if h.count > 0]
        theta_mat = np.stack([thetas[h.candidate_index] for h in measured])
        objs = np.stack([orient(h.means, signs) for h in measured])
        errs = np.stack([h.stderrs for h in measured])
        theta = propose_candidate(theta_mat, objs, errs, lows, highs, rng, rho=rho)
        params = decode_params(theta, n, m, first_sign)
        all_params.append(params)
        thetas.append(theta)
        idx = len(all_params) - 1
        run = run_online(
            scenario,
            [policy_assignment_fn(model, params)],
            N=units_per_round,
            seed=int(round_seeds[r].generate_state(1)[0]),
            unit_prefix=f"tune{r}-",
        )
        history.append(
            OnlineMeasurement(
                round_index=r,
                candidate_index=idx,
                params=params,
                means=run.means[0],
                stderrs=run.stderrs[0],
                count=int(run.counts[0]),
                proposed=True,
            )
        )

    points = [
        ParetoPoint(
            params=h.params,
            objectives=orient(h.means, signs),
            estimate=None,
            iteration=h.candidate_index,
        )
        for h in history
        if h.count > 0 and np.isfinite(h.means).all()
    ]
    objs = np.stack([p.objectives for p in points])
    ref = default_reference_point(objs)
    front = pareto_front(points)
    return OnlineTuneResult(
        front=FrontSet(points=tuple(front), reference_point=ref),
        history=tuple(history),
    )
