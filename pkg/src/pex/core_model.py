"""Domain types and primitives for randomized-experiment logs.

Arm ids are 1-based and arm 1 is always the control. All types are
immutable after construction and all operations are pure.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

CONTROL_ARM = 1

_DIRECTIONS = ("maximize", "minimize")


@dataclass(frozen=True)
class OutcomeSpec:
    """An outcome of interest and the direction it should move."""

    name: str
    direction: str = "maximize"

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("outcome name must be nonempty")
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"direction must be one of {_DIRECTIONS}, got {self.direction!r}")

    @property
    def sign(self) -> float:
        """+1 for maximize, -1 for minimize (larger-is-better orientation)."""
        return 1.0 if self.direction == "maximize" else -1.0


@dataclass(frozen=True)
class TreatmentArm:
    """A treatment arm; id 1 is the control and ids are contiguous from 1."""

    id: int
    label: str = ""

    def __post_init__(self) -> None:
        if self.id < 1:
            raise ValueError("arm ids are 1-based")
        if not self.label:
            object.__setattr__(self, "label", f"arm{self.id}")


@dataclass(frozen=True)
class UnitRecord:
    """One experimental unit: covariates, logged arm, propensity, outcomes."""

    unit_id: str
    covariates: tuple[float, ...]
    arm: int
    propensity: float
    outcomes: tuple[float, ...]


@dataclass(frozen=True)
class Violation:
    index: int
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        lines = [f"record {v.index}: {v.message}" for v in self.violations]
        return "\n".join(lines)


@dataclass(frozen=True)
class LogDataset:
    """A randomized-experiment log plus its dimensions.

    ``n`` arms, ``m`` outcomes, ``d`` covariates. Numeric views used by the
    estimators are built lazily and cached; they require a validated log
    (consistent record dimensions).
    """

    records: tuple[UnitRecord, ...]
    n: int
    m: int
    d: int
    outcome_specs: tuple[OutcomeSpec, ...]

    @classmethod
    def from_records(
        cls,
        records: Iterable[UnitRecord],
        outcome_specs: Sequence[OutcomeSpec],
        n: int | None = None,
    ) -> "LogDataset":
        records = tuple(records)
        specs = tuple(outcome_specs)
        if n is None:
            n = max((r.arm for r in records), default=1)
        d = len(records[0].covariates) if records else 0
        return cls(records=records, n=n, m=len(specs), d=d, outcome_specs=specs)

    @classmethod
    def from_arrays(
        cls,
        unit_ids: Sequence[str],
        arms: np.ndarray,
        propensities: np.ndarray,
        X: np.ndarray,
        Y: np.ndarray,
        outcome_specs: Sequence[OutcomeSpec],
        n: int,
    ) -> "LogDataset":
        records = tuple(
            UnitRecord(
                unit_id=str(unit_ids[i]),
                covariates=tuple(float(v) for v in X[i]),
                arm=int(arms[i]),
                propensity=float(propensities[i]),
                outcomes=tuple(float(v) for v in Y[i]),
            )
            for i in range(len(unit_ids))
        )
        return cls(
            records=records,
            n=n,
            m=int(Y.shape[1]),
            d=int(X.shape[1]),
            outcome_specs=tuple(outcome_specs),
        )

    def __len__(self) -> int:
        return len(self.records)

    @cached_property
    def unit_ids(self) -> tuple[str, ...]:
        return tuple(r.unit_id for r in self.records)

    @cached_property
    def arms(self) -> np.ndarray:
        a = np.array([r.arm for r in self.records], dtype=np.int64)
        a.setflags(write=False)
        return a

    @cached_property
    def propensities(self) -> np.ndarray:
        p = np.array([r.propensity for r in self.records], dtype=np.float64)
        p.setflags(write=False)
        return p

    @cached_property
    def X(self) -> np.ndarray:
        if any(len(r.covariates) != self.d for r in self.records):
            raise ValueError("records have inconsistent covariate lengths; validate_log first")
        x = np.array([r.covariates for r in self.records], dtype=np.float64).reshape(
            len(self.records), self.d
        )
        x.setflags(write=False)
        return x

    @cached_property
    def Y(self) -> np.ndarray:
        if any(len(r.outcomes) != self.m for r in self.records):
            raise ValueError("records have inconsistent outcome lengths; validate_log first")
        y = np.array([r.outcomes for r in self.records], dtype=np.float64).reshape(
            len(self.records), self.m
        )
        y.setflags(write=False)
        return y

    def subset(self, indices: np.ndarray) -> "LogDataset":
        recs = tuple(self.records[int(i)] for i in indices)
        return LogDataset(
            records=recs, n=self.n, m=self.m, d=self.d, outcome_specs=self.outcome_specs
        )


@dataclass(frozen=True)
class AteMatrix:
    """Sample average treatment effects vs control, shape (n, m); row 1 is zero."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if v.ndim != 2:
            raise ValueError("AteMatrix must be 2-dimensional")
        if not np.isfinite(v).all():
            raise ValueError("AteMatrix entries must be finite")
        if v.shape[0] >= 1 and np.any(v[0] != 0.0):
            raise ValueError("control row of AteMatrix must be zero")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


def validate_records(
    records: Sequence[UnitRecord], n: int, m: int, d: int
) -> ValidationReport:
    """Check raw records against the stated dimensions.

    Violations are data, not failures: every problem is reported with its
    record index and the report is returned, never raised.
    """
    violations: list[Violation] = []
    for i, r in enumerate(records):
        if len(r.covariates) != d:
            violations.append(
                Violation(i, f"covariate length {len(r.covariates)} != d={d}")
            )
        if len(r.outcomes) != m:
            violations.append(Violation(i, f"outcome length {len(r.outcomes)} != m={m}"))
        if not (0.0 < r.propensity <= 1.0):
            violations.append(Violation(i, f"propensity {r.propensity} outside (0, 1]"))
        if not (1 <= r.arm <= n):
            violations.append(Violation(i, f"arm out of range: {r.arm} not in [1, {n}]"))
        if not all(np.isfinite(v) for v in r.covariates):
            violations.append(Violation(i, "non-finite covariate"))
        if not all(np.isfinite(v) for v in r.outcomes):
            violations.append(Violation(i, "non-finite outcome"))
    return ValidationReport(ok=not violations, violations=tuple(violations))


def validate_log(log: LogDataset) -> ValidationReport:
    """Check every record of a log against the log's own dimensions."""
    return validate_records(log.records, n=log.n, m=log.m, d=log.d)


def compute_ate(log: LogDataset) -> AteMatrix:
    """Sample ATE of each arm vs control on each outcome.

    Entry (i, j) is mean(Y_j | arm=i) - mean(Y_j | arm=1). Every arm must
    appear at least once; a missing arm raises rather than imputing.
    """
    arms = log.arms
    Y = log.Y
    means = np.empty((log.n, log.m), dtype=np.float64)
    for arm in range(1, log.n + 1):
        mask = arms == arm
        if not mask.any():
            raise ValueError(f"arm {arm} has no records; cannot compute its ATE")
        means[arm - 1] = Y[mask].mean(axis=0)
    values = means - means[0]
    values[0] = 0.0
    return AteMatrix(values=values)


def split_log(
    log: LogDataset, holdout_fraction: float, seed: int
) -> tuple[LogDataset, LogDataset]:
    """Disjoint (main, holdout) partition by unit, deterministic given seed.

    Holdout size is round(fraction * N). Original record order is kept
    within each part.
    """
    if not (0.0 <= holdout_fraction <= 1.0):
        raise ValueError(f"holdout_fraction must be in [0, 1], got {holdout_fraction}")
    n_records = len(log)
    k = int(round(holdout_fraction * n_records))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_records)
    holdout_idx = np.sort(perm[:k])
    main_idx = np.sort(perm[k:])
    return log.subset(main_idx), log.subset(holdout_idx)


# ---------------------------------------------------------------------------
# Log file format: UTF-8 CSV, header
#   unit_id,arm,propensity,x_0,...,x_{d-1},y_0,...,y_{m-1}
# with reals serialized at full round-trip precision.
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def write_log(log: LogDataset, path: str) -> None:
    header = (
        ["unit_id", "arm", "propensity"]
        + [f"x_{k}" for k in range(log.d)]
        + [f"y_{j}" for j in range(log.m)]
    )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in log.records:
            fields = (
                [r.unit_id, str(r.arm), _fmt(r.propensity)]
                + [_fmt(v) for v in r.covariates]
                + [_fmt(v) for v in r.outcomes]
            )
            fh.write(",".join(fields) + "\n")


def load_log(
    path: str,
    outcome_specs: Sequence[OutcomeSpec] | None = None,
    n: int | None = None,
) -> LogDataset:
    """Read a log file; dimensions come from the header.

    ``outcome_specs`` defaults to maximize-all with the header's outcome
    names; ``n`` defaults to the largest arm id seen.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = sum(1 for h in header if h.startswith("x_"))
        m = sum(1 for h in header if h.startswith("y_"))
        expected = ["unit_id", "arm", "propensity"] + [f"x_{k}" for k in range(d)] + [
            f"y_{j}" for j in range(m)
        ]
        if header != expected:
            raise ValueError(f"malformed log header: {header}")
        records = []
        for row in reader:
            records.append(
                UnitRecord(
                    unit_id=row[0],
                    covariates=tuple(float(v) for v in row[3 : 3 + d]),
                    arm=int(row[1]),
                    propensity=float(row[2]),
                    outcomes=tuple(float(v) for v in row[3 + d :]),
                )
            )
    if outcome_specs is None:
        outcome_specs = tuple(OutcomeSpec(name=f"y_{j}") for j in range(m))
    if len(outcome_specs) != m:
        raise ValueError(f"{len(outcome_specs)} outcome specs for {m} outcome columns")
    return LogDataset.from_records(records, outcome_specs, n=n)
