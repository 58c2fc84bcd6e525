"""Offline policy search over the canonical parameter space.

A serial scalarized surrogate loop: quasi-random initial design, then one
expected-improvement proposal per iteration, each candidate priced by the
configured off-policy estimator on the training log. Pure single-arm
policies (dominating biases) are always evaluated so the returned front
contains or dominates every plain A/B arm.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from pex.core_model import AteMatrix, LogDataset
from pex.hte import CateModel
from pex.mopt._search import propose_candidate, sobol_batch
from pex.mopt.pareto import FrontSet, ParetoPoint, default_reference_point, pareto_front
from pex.ope import (
    DEFAULT_ESTIMATOR,
    ESTIMATORS,
    PolicyValueEstimate,
    dr_value,
    ipsw_value,
    subsample_value,
)
from pex.policy import PolicyParams, decide_batch, single_arm_params

logger = logging.getLogger(__name__)

DEFAULT_WEIGHT_BOUND = 5.0
DEFAULT_BIAS_FACTOR = 3.0


@dataclass(frozen=True)
class SearchBounds:
    """Closed intervals over the canonical parameters (m-1 weights, n-1 biases)."""

    lows: np.ndarray
    highs: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.lows, dtype=np.float64)
        hi = np.asarray(self.highs, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("bounds must be equal-length vectors")
        if np.any(lo > hi):
            raise ValueError("each lower bound must be <= its upper bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lows", lo)
        object.__setattr__(self, "highs", hi)

    @property
    def dim(self) -> int:
        return len(self.lows)

    @classmethod
    def default(
        cls,
        ate: AteMatrix,
        weight_bound: float = DEFAULT_WEIGHT_BOUND,
        bias_factor: float = DEFAULT_BIAS_FACTOR,
        bias_enabled: bool = True,
    ) -> "SearchBounds":
        """Symmetric boxes: weights within +-weight_bound, biases within
        +-bias_factor * max|ATE| (so biases can overwhelm typical utilities
        and reach pure-arm behavior). ``bias_enabled=False`` pins biases
        at zero for weights-only search."""
        n, m = ate.n, ate.m
        max_ate = float(np.abs(ate.values).max())
        bias_bound = bias_factor * max_ate if (bias_enabled and max_ate > 0) else 0.0
        if bias_enabled and max_ate == 0.0:
            bias_bound = 1.0
        lows = np.concatenate([-weight_bound * np.ones(m - 1), -bias_bound * np.ones(n - 1)])
        highs = np.concatenate([weight_bound * np.ones(m - 1), bias_bound * np.ones(n - 1)])
        return cls(lows=lows, highs=highs)


@dataclass(frozen=True)
class OfflineSearchResult:
    """Pareto front plus the full evaluation archive behind it."""

    front: FrontSet
    evaluated: tuple[ParetoPoint, ...]
    failed: tuple[PolicyParams, ...]


def decode_params(theta: np.ndarray, n: int, m: int, first_sign: float) -> PolicyParams:
    """Canonical policy from a search vector (m-1 weights then n-1 biases)."""
    w = np.empty(m)
    w[0] = first_sign
    w[1:] = theta[: m - 1]
    b = np.zeros(n)
    b[1:] = theta[m - 1 :]
    return PolicyParams(weights=w, biases=b)


def encode_params(params: PolicyParams) -> np.ndarray:
    """Inverse of :func:`decode_params` for canonical parameters."""
    return np.concatenate([params.weights[1:], params.biases[1:]])


def orient(values: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Flip minimized outcomes so every objective is larger-is-better."""
    return np.asarray(values) * signs


class _OpeEvaluator:
    """Prices candidate policies on a fixed log with precomputed model views."""

    def __init__(self, log: LogDataset, model: CateModel, estimator: str):
        if estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        self.log = log
        self.model = model
        self.estimator = estimator
        self.tau = model.predict_cate_batch(log.X)
        self.signs = np.array([o.sign for o in log.outcome_specs])

    def assignments(self, params: PolicyParams) -> np.ndarray:
        return decide_batch(params, self.tau)

    def estimate(self, params: PolicyParams) -> PolicyValueEstimate:
        assignments = self.assignments(params)
        if self.estimator == "dr":
            return dr_value(self.log, assignments, self.model)
        if self.estimator == "ipsw":
            return ipsw_value(self.log, assignments)
        return subsample_value(self.log, assignments)

    def bias_magnitude(self) -> float:
        """A bias certain to dominate any weighted-CATE utility on this log."""
        tau_max = float(np.abs(self.tau).max()) if self.tau.size else 0.0
        return 1e6 * (1.0 + tau_max)


def optimize_offline(
    log: LogDataset,
    model: CateModel,
    bounds: SearchBounds,
    budget: int,
    seed: int,
    estimator: str = DEFAULT_ESTIMATOR,
    rho: float = 0.05,
) -> OfflineSearchResult:
    """Scalarized surrogate search; deterministic given (inputs, seed).

    ``budget`` counts searched evaluations (initial design of 2*dim+2 plus
    sequential proposals); the n forced single-arm policies are evaluated
    in addition. Candidates failing the estimator are recorded and
    excluded from surrogate training.
    """
    n, m = model.n, model.m
    dim = n + m - 2
    if bounds.dim != dim:
        raise ValueError(f"bounds must cover {dim} parameters, got {bounds.dim}")
    min_budget = 2 * dim + 2
    if budget < min_budget:
        raise ValueError(f"budget must be at least 2*(n+m-2)+2 = {min_budget}")
    ev = _OpeEvaluator(log, model, estimator)
    first_sign = float(ev.signs[0])

    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(71,))
    init_seed, loop_seed = ss.spawn(2)
    rng = np.random.default_rng(loop_seed)

    evaluated: list[ParetoPoint] = []
    failed: list[PolicyParams] = []
    searched: list[tuple[np.ndarray, ParetoPoint]] = []  # surrogate training pairs

    def evaluate(params: PolicyParams, theta: np.ndarray | None, iteration: int) -> None:
        try:
            est = ev.estimate(params)
        except ValueError as exc:
            logger.warning("candidate failed %s evaluation: %s", estimator, exc)
            failed.append(params)
            return
        point = ParetoPoint(
            params=params,
            objectives=orient(est.values, ev.signs),
            estimate=est,
            iteration=iteration,
        )
        evaluated.append(point)
        if theta is not None:
            searched.append((theta, point))

    iteration = 0
    # Forced pure single-arm policies: the front must contain or dominate
    # every plain one-arm assignment. Kept out of surrogate training
    # (their dominating biases sit far outside the search box).
    bias_mag = ev.bias_magnitude()
    for arm in range(1, n + 1):
        evaluate(
            single_arm_params(arm, n, m, ev.signs, bias_mag), None, iteration
        )
        iteration += 1

    n_init = min(min_budget, budget)
    init = sobol_batch(
        bounds.lows, bounds.highs, n_init, seed=int(init_seed.generate_state(1)[0])
    )
    for theta in init:
        evaluate(decode_params(theta, n, m, first_sign), theta, iteration)
        iteration += 1

    for _ in range(budget - n_init):
        if len(searched) >= 2:
            theta_mat = np.stack([t for t, _ in searched])
            objs = np.stack([p.objectives for _, p in searched])
            errs = np.stack([p.estimate.stderrs for _, p in searched])
            theta = propose_candidate(
                theta_mat, objs, errs, bounds.lows, bounds.highs, rng, rho=rho
            )
        else:
            theta = sobol_batch(
                bounds.lows, bounds.highs, 1, seed=int(rng.integers(2**31))
            )[0]
        evaluate(decode_params(theta, n, m, first_sign), theta, iteration)
        iteration += 1

    if not evaluated:
        raise RuntimeError("every candidate failed evaluation; no front available")
    objs = np.stack([p.objectives for p in evaluated])
    ref = default_reference_point(objs)
    front = pareto_front(evaluated)
    return OfflineSearchResult(
        front=FrontSet(points=tuple(front), reference_point=ref),
        evaluated=tuple(evaluated),
        failed=tuple(failed),
    )
