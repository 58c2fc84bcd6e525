"""Synthetic randomized experiments from a known ground truth.

A :class:`ScenarioSpec` fixes per-arm outcome surfaces, covariate laws,
outcome noise, and an affine offline-to-online shift per outcome. The
module generates training logs, exposes a ground-truth oracle for policy
values, and simulates the online environment used for candidate testing.

All randomness flows from explicit seeds through named sub-streams of a
splittable seed sequence, so repeated calls are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from pex.core_model import LogDataset, OutcomeSpec

# Sub-stream tags so distinct operations never share a bit stream.
_STREAM_LOG = 1
_STREAM_ORACLE = 2
_STREAM_ONLINE = 3
_STREAM_LAUNCH = 4

AssignmentFn = Callable[[np.ndarray], np.ndarray]
"""Maps covariates (N, d) to arm ids (N,)."""


def substream(seed: int, stream: int, *extra: int) -> np.random.Generator:
    """Generator for the (seed, stream, *extra) sub-stream."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), *map(int, extra)))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class CovariateLaw:
    """One independent covariate component: uniform(lo, hi) or normal(mu, sigma)."""

    kind: str
    a: float
    b: float

    def __post_init__(self) -> None:
        if self.kind not in ("uniform", "normal"):
            raise ValueError(f"unknown covariate law {self.kind!r}")
        if self.kind == "uniform" and not self.b > self.a:
            raise ValueError("uniform law requires hi > lo")
        if self.kind == "normal" and self.b < 0:
            raise ValueError("normal law requires sigma >= 0")

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "CovariateLaw":
        return cls("uniform", lo, hi)

    @classmethod
    def normal(cls, mu: float, sigma: float) -> "CovariateLaw":
        return cls("normal", mu, sigma)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(self.a, self.b, size)
        return rng.normal(self.a, self.b, size)

    def mean(self) -> float:
        return 0.5 * (self.a + self.b) if self.kind == "uniform" else self.a

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"law": "uniform", "lo": self.a, "hi": self.b}
        return {"law": "normal", "mu": self.a, "sigma": self.b}

    @classmethod
    def from_dict(cls, doc: dict) -> "CovariateLaw":
        if doc["law"] == "uniform":
            return cls.uniform(doc["lo"], doc["hi"])
        if doc["law"] == "normal":
            return cls.normal(doc["mu"], doc["sigma"])
        raise ValueError(f"unknown covariate law {doc['law']!r}")


@dataclass(frozen=True)
class OutcomeSurface:
    """Mean outcome as intercept + linear + optional pairwise interactions."""

    intercept: float
    linear: tuple[float, ...]
    interactions: tuple[tuple[int, int, float], ...] = ()

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        out = self.intercept + X @ np.asarray(self.linear, dtype=np.float64)
        for k, l, coef in self.interactions:
            out = out + coef * X[:, k] * X[:, l]
        return out

    def to_dict(self) -> dict:
        doc = {"intercept": self.intercept, "linear": list(self.linear)}
        if self.interactions:
            doc["interactions"] = [[k, l, c] for k, l, c in self.interactions]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "OutcomeSurface":
        inter = tuple((int(k), int(l), float(c)) for k, l, c in doc.get("interactions", []))
        return cls(
            intercept=float(doc["intercept"]),
            linear=tuple(float(v) for v in doc["linear"]),
            interactions=inter,
        )


@dataclass(frozen=True)
class OnlineShift:
    """Affine offline-to-online outcome bias: online = gamma * offline + delta."""

    delta: float = 0.0
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")

    @property
    def is_identity(self) -> bool:
        return self.delta == 0.0 and self.gamma == 1.0


def _default_outcomes(m: int) -> tuple[OutcomeSpec, ...]:
    return tuple(OutcomeSpec(name=f"y_{j}") for j in range(m))


@dataclass(frozen=True)
class ScenarioSpec:
    """Ground-truth generative model enabling oracle policy evaluation."""

    n: int
    m: int
    d: int
    covariates: tuple[CovariateLaw, ...]
    surfaces: tuple[tuple[OutcomeSurface, ...], ...]  # [arm][outcome]
    noise_sd: tuple[float, ...]
    online_shift: tuple[OnlineShift, ...]
    outcome_specs: tuple[OutcomeSpec, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1 or self.d < 0:
            raise ValueError("counts must be positive")
        if len(self.covariates) != self.d:
            raise ValueError("covariate laws must match d")
        if len(self.surfaces) != self.n or any(len(row) != self.m for row in self.surfaces):
            raise ValueError("surfaces must be an n x m grid")
        for row in self.surfaces:
            for s in row:
                if len(s.linear) != self.d:
                    raise ValueError("surface coefficients must match d")
                for k, l, _ in s.interactions:
                    if not (0 <= k < self.d and 0 <= l < self.d):
                        raise ValueError("interaction index out of range")
        if len(self.noise_sd) != self.m or any(sd < 0 for sd in self.noise_sd):
            raise ValueError("noise_sd must be m nonnegative reals")
        if len(self.online_shift) != self.m:
            raise ValueError("online_shift must have one entry per outcome")
        if not self.outcome_specs:
            object.__setattr__(self, "outcome_specs", _default_outcomes(self.m))
        if len(self.outcome_specs) != self.m:
            raise ValueError("outcome_specs must have one entry per outcome")

    # -- sampling ----------------------------------------------------------

    def sample_covariates(self, rng: np.random.Generator, size: int) -> np.ndarray:
        X = np.empty((size, self.d), dtype=np.float64)
        for k, law in enumerate(self.covariates):
            X[:, k] = law.sample(rng, size)
        return X

    def mean_outcomes(self, X: np.ndarray, arms: np.ndarray) -> np.ndarray:
        """Noiseless mu*(x, arm) for each row; shape (N, m)."""
        N = X.shape[0]
        out = np.empty((N, self.m), dtype=np.float64)
        arms = np.asarray(arms)
        for arm in range(1, self.n + 1):
            mask = arms == arm
            if not mask.any():
                continue
            Xa = X[mask]
            for j in range(self.m):
                out[mask, j] = self.surfaces[arm - 1][j].evaluate(Xa)
        return out

    def apply_shift(self, Y: np.ndarray) -> np.ndarray:
        gamma = np.array([s.gamma for s in self.online_shift])
        delta = np.array([s.delta for s in self.online_shift])
        return Y * gamma + delta

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "d": self.d,
            "covariates": [law.to_dict() for law in self.covariates],
            "surfaces": [[s.to_dict() for s in row] for row in self.surfaces],
            "noise_sd": list(self.noise_sd),
            "online_shift": [{"delta": s.delta, "gamma": s.gamma} for s in self.online_shift],
            "outcomes": [
                {"name": o.name, "direction": o.direction} for o in self.outcome_specs
            ],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioSpec":
        return cls(
            n=int(doc["n"]),
            m=int(doc["m"]),
            d=int(doc["d"]),
            covariates=tuple(CovariateLaw.from_dict(c) for c in doc["covariates"]),
            surfaces=tuple(
                tuple(OutcomeSurface.from_dict(s) for s in row) for row in doc["surfaces"]
            ),
            noise_sd=tuple(float(v) for v in doc["noise_sd"]),
            online_shift=tuple(
                OnlineShift(delta=float(s["delta"]), gamma=float(s["gamma"]))
                for s in doc["online_shift"]
            ),
            outcome_specs=tuple(
                OutcomeSpec(name=o["name"], direction=o["direction"])
                for o in doc.get("outcomes", [])
            ),
            seed=int(doc.get("seed", 0)),
        )


@dataclass(frozen=True)
class OnlineRunResult:
    """Measured online outcomes of a randomized candidate test."""

    means: np.ndarray  # (k, m) per-candidate measured mean outcomes
    stderrs: np.ndarray  # (k, m)
    counts: np.ndarray  # (k,) assignment counts, sum to N
    log: LogDataset  # full online log with measured outcomes


def generate_log(
    scenario: ScenarioSpec, N: int, seed: int, unit_prefix: str = "u"
) -> LogDataset:
    """Uniformly randomized experiment log of N units.

    Arms are uniform over [1, n] (propensity 1/n) and outcomes are
    mu*(x, arm) plus independent Gaussian noise.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    rng = substream(seed, _STREAM_LOG, scenario.seed)
    X = scenario.sample_covariates(rng, N)
    arms = rng.integers(1, scenario.n + 1, size=N)
    noise = rng.standard_normal((N, scenario.m)) * np.asarray(scenario.noise_sd)
    Y = scenario.mean_outcomes(X, arms) + noise
    propensity = np.full(N, 1.0 / scenario.n)
    ids = [f"{unit_prefix}{seed}-{i:06d}" for i in range(N)]
    return LogDataset.from_arrays(
        ids, arms, propensity, X, Y, scenario.outcome_specs, n=scenario.n
    )


def oracle_policy_value(
    scenario: ScenarioSpec,
    assignment_fn: AssignmentFn,
    N_mc: int,
    seed: int,
    return_stderr: bool = False,
):
    """True expected outcome per outcome under a policy, by Monte Carlo.

    Averages the noiseless surfaces over fresh covariate draws; repeated
    calls with the same seed are identical.
    """
    if N_mc < 1:
        raise ValueError("N_mc must be >= 1")
    rng = substream(seed, _STREAM_ORACLE, scenario.seed)
    X = scenario.sample_covariates(rng, N_mc)
    arms = np.asarray(assignment_fn(X))
    mu = scenario.mean_outcomes(X, arms)
    value = mu.mean(axis=0)
    if not return_stderr:
        return value
    stderr = mu.std(axis=0, ddof=1) / np.sqrt(N_mc) if N_mc > 1 else np.zeros(scenario.m)
    return value, stderr


def run_online(
    scenario: ScenarioSpec,
    candidates: Sequence[AssignmentFn],
    N: int,
    seed: int,
    unit_prefix: str = "on",
) -> OnlineRunResult:
    """Randomized online test of candidate policies.

    Each unit is assigned a candidate uniformly at random, the candidate
    picks the arm from the unit's covariates, and the measured outcome is
    the scenario's affine online shift applied to the offline outcome law.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    if N < 1:
        raise ValueError("N must be >= 1")
    k = len(candidates)
    rng = substream(seed, _STREAM_ONLINE, scenario.seed)
    X = scenario.sample_covariates(rng, N)
    cand_idx = rng.integers(0, k, size=N)
    # Candidates are deterministic, so evaluate each on the full batch and
    # select; this also yields the realized-arm assignment probabilities.
    arm_table = np.stack([np.asarray(fn(X)) for fn in candidates])  # (k, N)
    arms = arm_table[cand_idx, np.arange(N)]
    noise = rng.standard_normal((N, scenario.m)) * np.asarray(scenario.noise_sd)
    Y_offline = scenario.mean_outcomes(X, arms) + noise
    Y_online = scenario.apply_shift(Y_offline)

    means = np.full((k, scenario.m), np.nan)
    stderrs = np.zeros((k, scenario.m))
    counts = np.zeros(k, dtype=np.int64)
    for c in range(k):
        mask = cand_idx == c
        counts[c] = mask.sum()
        if counts[c] >= 1:
            means[c] = Y_online[mask].mean(axis=0)
        if counts[c] >= 2:
            stderrs[c] = Y_online[mask].std(axis=0, ddof=1) / np.sqrt(counts[c])

    propensity = (arm_table == arms).mean(axis=0)
    ids = [f"{unit_prefix}{seed}-{i:06d}" for i in range(N)]
    log = LogDataset.from_arrays(
        ids, arms, propensity, X, Y_online, scenario.outcome_specs, n=scenario.n
    )
    return OnlineRunResult(means=means, stderrs=stderrs, counts=counts, log=log)


def constant_policy(arm: int) -> AssignmentFn:
    """Assignment function sending every unit to one arm."""

    def fn(X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], arm, dtype=np.int64)

    return fn
