"""Off-policy value estimation from uniformly randomized logs.

Three estimators of the mean outcome vector a candidate policy would
realize: inverse-propensity scoring, doubly-robust, and the matched-subset
(rejection) estimator, plus a percentile bootstrap for confidence
intervals. Estimates are absolute mean outcomes; control-relative effects
are computed downstream by subtracting a control-policy estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pex.core_model import LogDataset
from pex.hte import CateModel
from pex.policy import PolicyParams, decide_batch

ESTIMATORS = ("ipsw", "dr", "subsample")
DEFAULT_ESTIMATOR = "dr"


@dataclass(frozen=True)
class PolicyValueEstimate:
    """Per-outcome estimated mean outcome under a policy, with uncertainty."""

    values: np.ndarray  # (m,)
    stderrs: np.ndarray  # (m,) plug-in or bootstrap standard errors
    ci_lows: np.ndarray  # (m,) NaN until a bootstrap runs
    ci_highs: np.ndarray  # (m,)
    ci_level: float | None
    estimator: str
    n_records: int

    def to_json_records(self, outcome_names: Sequence[str]) -> list[dict]:
        return [
            {
                "outcome": outcome_names[j],
                "value": float(self.values[j]),
                "stderr": float(self.stderrs[j]),
                "ci_low": float(self.ci_lows[j]),
                "ci_high": float(self.ci_highs[j]),
                "estimator": self.estimator,
                "n_records": self.n_records,
            }
            for j in range(len(self.values))
        ]


def _point_estimate(values, stderrs, estimator, n) -> PolicyValueEstimate:
    m = len(values)
    nan = np.full(m, np.nan)
    return PolicyValueEstimate(
        values=np.asarray(values, dtype=np.float64),
        stderrs=np.asarray(stderrs, dtype=np.float64),
        ci_lows=nan,
        ci_highs=nan.copy(),
        ci_level=None,
        estimator=estimator,
        n_records=n,
    )


def policy_assignments(
    log: LogDataset, model: CateModel, params: PolicyParams
) -> np.ndarray:
    """Arm each record's unit would receive from the policy; shape (N,).

    Treatments are treated as fixed over the evaluation period (one
    assignment per record, from its recorded covariates).
    """
    if model.d != log.d:
        raise ValueError("model and log covariate dimensions differ")
    if params.n != model.n or params.m != model.m:
        raise ValueError("policy dimensions do not match model")
    tau = model.predict_cate_batch(log.X)
    return decide_batch(params, tau)


def _check_assignments(log: LogDataset, assignments: np.ndarray) -> np.ndarray:
    assignments = np.asarray(assignments)
    if assignments.shape != (len(log),):
        raise ValueError("assignments must have one arm per record")
    return assignments


def _ipsw_terms(log: LogDataset, assignments: np.ndarray) -> np.ndarray:
    match = (log.arms == assignments).astype(np.float64)
    return (match / log.propensities)[:, None] * log.Y


def _dr_terms(log: LogDataset, assignments: np.ndarray, model: CateModel) -> np.ndarray:
    mu = model.predict_mu(log.X)  # (N, n, m)
    rows = np.arange(len(log))
    mu_policy = mu[rows, assignments - 1, :]
    mu_logged = mu[rows, log.arms - 1, :]
    match = (log.arms == assignments).astype(np.float64)
    correction = (match / log.propensities)[:, None] * (log.Y - mu_logged)
    return mu_policy + correction


def _mean_and_stderr(terms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = terms.shape[0]
    values = terms.mean(axis=0)
    if n > 1:
        stderrs = terms.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        stderrs = np.zeros(terms.shape[1])
    return values, stderrs


def ipsw_value(log: LogDataset, assignments: np.ndarray) -> PolicyValueEstimate:
    """Inverse-propensity-scored value: mean of 1{match} * Y / propensity."""
    if len(log) == 0:
        raise ValueError("empty log")
    assignments = _check_assignments(log, assignments)
    values, stderrs = _mean_and_stderr(_ipsw_terms(log, assignments))
    return _point_estimate(values, stderrs, "ipsw", len(log))


def dr_value(
    log: LogDataset, assignments: np.ndarray, model: CateModel
) -> PolicyValueEstimate:
    """Doubly-robust value: outcome model plus propensity-weighted residual."""
    if len(log) == 0:
        raise ValueError("empty log")
    assignments = _check_assignments(log, assignments)
    values, stderrs = _mean_and_stderr(_dr_terms(log, assignments, model))
    return _point_estimate(values, stderrs, "dr", len(log))


def subsample_value(log: LogDataset, assignments: np.ndarray) -> PolicyValueEstimate:
    """Mean outcome over records whose logged arm matches the policy."""
    if len(log) == 0:
        raise ValueError("empty log")
    assignments = _check_assignments(log, assignments)
    mask = log.arms == assignments
    count = int(mask.sum())
    if count == 0:
        raise ValueError("no matching records for the candidate policy")
    matched = log.Y[mask]
    values = matched.mean(axis=0)
    if count > 1:
        stderrs = matched.std(axis=0, ddof=1) / np.sqrt(count)
    else:
        stderrs = np.zeros(log.m)
    return _point_estimate(values, stderrs, "subsample", count)


def bootstrap_ci(
    estimator: str,
    log: LogDataset,
    assignments: np.ndarray,
    model: CateModel | None = None,
    B: int = 500,
    level: float = 0.95,
    seed: int = 0,
) -> PolicyValueEstimate:
    """Percentile bootstrap over resampled records, deterministic given seed.

    Resamples failing the estimator (possible only for ``subsample``) are
    skipped; more than 10% failures is an error.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}")
    if B < 100:
        raise ValueError("B must be >= 100")
    if not (0.0 < level < 1.0):
        raise ValueError("level must be in (0, 1)")
    assignments = _check_assignments(log, assignments)
    N = len(log)
    if N == 0:
        raise ValueError("empty log")

    if estimator == "subsample":
        point = subsample_value(log, assignments)
        mask = (log.arms == assignments).astype(np.float64)
        Y = log.Y
    else:
        if estimator == "dr":
            if model is None:
                raise ValueError("dr bootstrap requires a model")
            terms = _dr_terms(log, assignments, model)
            point = dr_value(log, assignments, model)
        else:
            terms = _ipsw_terms(log, assignments)
            point = ipsw_value(log, assignments)

    rng = np.random.default_rng(seed)
    replicates = []
    failures = 0
    for _ in range(B):
        idx = rng.integers(0, N, size=N)
        if estimator == "subsample":
            m_b = mask[idx]
            total = m_b.sum()
            if total == 0:
                failures += 1
                continue
            replicates.append((m_b[:, None] * Y[idx]).sum(axis=0) / total)
        else:
            replicates.append(terms[idx].mean(axis=0))
    if failures > 0.10 * B:
        raise RuntimeError(
            f"bootstrap failed on {failures}/{B} resamples (>10%); estimate unreliable"
        )
    rep = np.asarray(replicates)
    lo_q = (1.0 - level) / 2.0
    ci_lows = np.quantile(rep, lo_q, axis=0)
    ci_highs = np.quantile(rep, 1.0 - lo_q, axis=0)
    stderrs = rep.std(axis=0, ddof=1)
    return PolicyValueEstimate(
        values=point.values,
        stderrs=stderrs,
        ci_lows=ci_lows,
        ci_highs=ci_highs,
        ci_level=level,
        estimator=estimator,
        n_records=N,
    )
