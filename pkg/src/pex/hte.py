"""Base learners and the T-learner producing the per-(arm, outcome) CATE models.

Fitting one outcome regression per (arm, outcome) pair and differencing
against the control arm yields m*(n-1) distinct CATE contrasts. The
gradient-boosted trees use the kernel backend (compiled when available)
for split search and prediction; ridge is the closed-form deterministic
baseline.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from pex import _kernels
from pex.core_model import AteMatrix, LogDataset, compute_ate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BaseLearnerSpec:
    """Hyperparameters for one base regression learner."""

    kind: str  # "ridge" | "gbt"
    penalty: float = 1.0  # ridge L2 penalty; intercept unpenalized
    tree_count: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_samples_leaf: int = 20

    def __post_init__(self) -> None:
        if self.kind not in ("ridge", "gbt"):
            raise ValueError(f"unknown learner kind {self.kind!r}")
        if self.penalty < 0:
            raise ValueError("penalty must be >= 0")
        if self.tree_count < 1 or self.max_depth < 1:
            raise ValueError("tree_count and max_depth must be >= 1")
        if not (0.0 < self.learning_rate <= 1.0):
            raise ValueError("learning_rate must be in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")

    @classmethod
    def ridge(cls, penalty: float = 1.0) -> "BaseLearnerSpec":
        return cls(kind="ridge", penalty=penalty)

    @classmethod
    def gbt(
        cls,
        tree_count: int = 100,
        max_depth: int = 3,
        learning_rate: float = 0.1,
        min_samples_leaf: int = 20,
    ) -> "BaseLearnerSpec":
        return cls(
            kind="gbt",
            tree_count=tree_count,
            max_depth=max_depth,
            learning_rate=learning_rate,
            min_samples_leaf=min_samples_leaf,
        )

    def to_dict(self) -> dict:
        if self.kind == "ridge":
            return {"kind": "ridge", "penalty": self.penalty}
        return {
            "kind": "gbt",
            "tree_count": self.tree_count,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "min_samples_leaf": self.min_samples_leaf,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BaseLearnerSpec":
        if doc["kind"] == "ridge":
            return cls.ridge(penalty=float(doc["penalty"]))
        return cls.gbt(
            tree_count=int(doc["tree_count"]),
            max_depth=int(doc["max_depth"]),
            learning_rate=float(doc["learning_rate"]),
            min_samples_leaf=int(doc["min_samples_leaf"]),
        )


# ---------------------------------------------------------------------------
# Predictors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantPredictor:
    value: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.value)

    def to_dict(self) -> dict:
        return {"type": "constant", "value": self.value}


@dataclass(frozen=True)
class RidgePredictor:
    coef: np.ndarray
    intercept: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.coef + self.intercept

    def to_dict(self) -> dict:
        return {
            "type": "ridge",
            "coef": [float(v) for v in self.coef],
            "intercept": self.intercept,
        }


@dataclass(frozen=True)
class GbtPredictor:
    """Boosted depth-limited regression trees over stacked node arrays."""

    base: float
    learning_rate: float
    features: np.ndarray  # int32, -1 marks a leaf
    thresholds: np.ndarray  # float64
    lefts: np.ndarray  # int32, absolute node index
    rights: np.ndarray  # int32
    values: np.ndarray  # float64, leaf values
    offsets: np.ndarray  # int32, (T+1,) per-tree root offsets

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _kernels.predict_forest(
            self.features,
            self.thresholds,
            self.lefts,
            self.rights,
            self.values,
            self.offsets,
            X,
            self.learning_rate,
            self.base,
        )

    @property
    def tree_count(self) -> int:
        return len(self.offsets) - 1

    def to_dict(self) -> dict:
        return {
            "type": "gbt",
            "base": self.base,
            "learning_rate": self.learning_rate,
            "features": [int(v) for v in self.features],
            "thresholds": [float(v) for v in self.thresholds],
            "lefts": [int(v) for v in self.lefts],
            "rights": [int(v) for v in self.rights],
            "values": [float(v) for v in self.values],
            "offsets": [int(v) for v in self.offsets],
        }


def _predictor_from_dict(doc: dict):
    t = doc["type"]
    if t == "constant":
        return ConstantPredictor(value=float(doc["value"]))
    if t == "ridge":
        return RidgePredictor(
            coef=np.asarray(doc["coef"], dtype=np.float64), intercept=float(doc["intercept"])
        )
    if t == "gbt":
        return GbtPredictor(
            base=float(doc["base"]),
            learning_rate=float(doc["learning_rate"]),
            features=np.asarray(doc["features"], dtype=np.int32),
            thresholds=np.asarray(doc["thresholds"], dtype=np.float64),
            lefts=np.asarray(doc["lefts"], dtype=np.int32),
            rights=np.asarray(doc["rights"], dtype=np.int32),
            values=np.asarray(doc["values"], dtype=np.float64),
            offsets=np.asarray(doc["offsets"], dtype=np.int32),
        )
    raise ValueError(f"unknown predictor type {t!r}")


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def _fit_ridge(X: np.ndarray, y: np.ndarray, penalty: float) -> RidgePredictor:
    # Center so the intercept is unpenalized.
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    d = X.shape[1]
    if penalty == 0.0 and np.linalg.matrix_rank(Xc) < d:
        raise np.linalg.LinAlgError(
            "rank-deficient design with zero penalty; increase penalty or add data"
        )
    gram = Xc.T @ Xc + penalty * np.eye(d)
    coef = np.linalg.solve(gram, Xc.T @ yc)
    return RidgePredictor(coef=coef, intercept=float(y_mean - x_mean @ coef))


def _grow_tree(
    X: np.ndarray,
    residual: np.ndarray,
    max_depth: int,
    min_samples_leaf: int,
    node_offset: int,
):
    """Grow one regression tree; returns node arrays and per-row leaf values.

    Node ids are preorder and absolute (shifted by ``node_offset``) so trees
    can be stacked into one flat forest.
    """
    features: list[int] = []
    thresholds: list[float] = []
    lefts: list[int] = []
    rights: list[int] = []
    values: list[float] = []
    row_pred = np.empty(len(residual), dtype=np.float64)

    def grow(idx: np.ndarray, depth: int) -> int:
        node = len(features)
        features.append(-1)
        thresholds.append(0.0)
        lefts.append(-1)
        rights.append(-1)
        values.append(0.0)
        if depth < max_depth:
            f, thr, gain = _kernels.best_split(
                np.ascontiguousarray(X[idx]), np.ascontiguousarray(residual[idx]),
                min_samples_leaf,
            )
            if f >= 0 and gain > 0.0:
                mask = X[idx, f] <= thr
                left_id = grow(idx[mask], depth + 1)
                right_id = grow(idx[~mask], depth + 1)
                features[node] = f
                thresholds[node] = thr
                lefts[node] = left_id + node_offset
                rights[node] = right_id + node_offset
                return node
        leaf_value = float(residual[idx].mean())
        values[node] = leaf_value
        row_pred[idx] = leaf_value
        return node

    grow(np.arange(len(residual)), 0)
    return (
        np.asarray(features, dtype=np.int32),
        np.asarray(thresholds, dtype=np.float64),
        np.asarray(lefts, dtype=np.int32),
        np.asarray(rights, dtype=np.int32),
        np.asarray(values, dtype=np.float64),
        row_pred,
    )


def _fit_gbt(X: np.ndarray, y: np.ndarray, spec: BaseLearnerSpec) -> GbtPredictor:
    X = np.ascontiguousarray(X, dtype=np.float64)
    base = float(y.mean())
    residual = y - base
    feats, thrs, lfts, rgts, vals = [], [], [], [], []
    offsets = [0]
    for _ in range(spec.tree_count):
        f, t, l, r, v, row_pred = _grow_tree(
            X, residual, spec.max_depth, spec.min_samples_leaf, node_offset=offsets[-1]
        )
        feats.append(f)
        thrs.append(t)
        lfts.append(l)
        rgts.append(r)
        vals.append(v)
        offsets.append(offsets[-1] + len(f))
        residual = residual - spec.learning_rate * row_pred
    return GbtPredictor(
        base=base,
        learning_rate=spec.learning_rate,
        features=np.concatenate(feats),
        thresholds=np.concatenate(thrs),
        lefts=np.concatenate(lfts),
        rights=np.concatenate(rgts),
        values=np.concatenate(vals),
        offsets=np.asarray(offsets, dtype=np.int32),
    )


def fit_base(X: np.ndarray, y: np.ndarray, spec: BaseLearnerSpec, seed: int = 0):
    """Fit one base regression.

    Ridge is closed-form penalized least squares with an unpenalized
    intercept; gbt is least-squares gradient boosting with shrinkage.
    Arm subsets smaller than ``min_samples_leaf`` fall back to a constant
    predictor. ``seed`` is reserved for stochastic learner variants; both
    current kinds are fully deterministic.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (N, d) and y (N,) with matching N")
    if X.shape[0] < 1:
        raise ValueError("need at least one training row")
    if spec.kind == "ridge":
        return _fit_ridge(X, y, spec.penalty)
    if X.shape[0] < spec.min_samples_leaf:
        logger.warning(
            "gbt subset of %d rows is below min_samples_leaf=%d; using constant predictor",
            X.shape[0],
            spec.min_samples_leaf,
        )
        return ConstantPredictor(value=float(y.mean()))
    return _fit_gbt(X, y, spec)


# ---------------------------------------------------------------------------
# T-learner
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CateModel:
    """Per-(arm, outcome) outcome regressions plus the training-sample ATEs.

    CATE contrasts are tau_{i,j}(x) = mu_{i,j}(x) - mu_{1,j}(x); the control
    contrast is identically zero, leaving m*(n-1) informative models.
    """

    predictors: tuple[tuple[object, ...], ...]  # [n][m]
    ate: AteMatrix
    n: int
    m: int
    d: int
    learner: BaseLearnerSpec

    @property
    def contrast_count(self) -> int:
        return self.m * (self.n - 1)

    def predict_mu(self, X: np.ndarray) -> np.ndarray:
        """Outcome-model predictions mu_{i,j}(x); shape (N, n, m)."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise ValueError(f"X must be (N, {self.d})")
        N = X.shape[0]
        out = np.empty((N, self.n, self.m), dtype=np.float64)
        for i in range(self.n):
            for j in range(self.m):
                out[:, i, j] = self.predictors[i][j].predict(X)
        return out

    def predict_cate_batch(self, X: np.ndarray) -> np.ndarray:
        """CATE matrices tau_{i,j}(x) for a batch; shape (N, n, m), row 1 zero."""
        mu = self.predict_mu(X)
        tau = mu - mu[:, :1, :]
        tau[:, 0, :] = 0.0
        return tau

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "d": self.d,
            "learner": self.learner.to_dict(),
            "ate": [[float(v) for v in row] for row in self.ate.values],
            "predictors": [
                [self.predictors[i][j].to_dict() for j in range(self.m)]
                for i in range(self.n)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CateModel":
        preds = tuple(
            tuple(_predictor_from_dict(p) for p in row) for row in doc["predictors"]
        )
        return cls(
            predictors=preds,
            ate=AteMatrix(values=np.asarray(doc["ate"], dtype=np.float64)),
            n=int(doc["n"]),
            m=int(doc["m"]),
            d=int(doc["d"]),
            learner=BaseLearnerSpec.from_dict(doc["learner"]),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "CateModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def fit_t_learner(train: LogDataset, spec: BaseLearnerSpec, seed: int = 0) -> CateModel:
    """Fit the T-learner: one regression per (arm, outcome) pair.

    Every arm must be present in the training log.
    """
    arms = train.arms
    X = train.X
    Y = train.Y
    predictors: list[tuple[object, ...]] = []
    for arm in range(1, train.n + 1):
        mask = arms == arm
        if not mask.any():
            raise ValueError(f"arm {arm} absent from training log")
        Xa = X[mask]
        row = tuple(
            fit_base(Xa, Y[mask, j], spec, seed=seed + arm * train.m + j)
            for j in range(train.m)
        )
        predictors.append(row)
    return CateModel(
        predictors=tuple(predictors),
        ate=compute_ate(train),
        n=train.n,
        m=train.m,
        d=train.d,
        learner=spec,
    )


def predict_cate(model: CateModel, x: Sequence[float]) -> np.ndarray:
    """CATE matrix tau_{i,j}(x) for one unit; shape (n, m) with zero row 1."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.d:
        raise ValueError(f"covariates must have length {model.d}")
    return model.predict_cate_batch(x[None, :])[0]


# ---------------------------------------------------------------------------
# Calibration diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationRow:
    arm: int
    outcome: int
    mean_prediction: float
    sample_ate: float
    abs_gap: float
    rel_gap: float


@dataclass(frozen=True)
class CalibrationReport:
    """Mean CATE prediction vs sample ATE, per (arm, outcome).

    The calibration identity is an assumption about the estimator, not a
    guarantee; this report is a diagnostic for the phase-1 gate.
    """

    rows: tuple[CalibrationRow, ...] = field(default=())

    def max_rel_gap(self) -> float:
        gaps = [r.rel_gap for r in self.rows if r.arm != 1]
        return max(gaps, default=0.0)

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "arm": r.arm,
                    "outcome": r.outcome,
                    "mean_prediction": r.mean_prediction,
                    "sample_ate": r.sample_ate,
                    "abs_gap": r.abs_gap,
                    "rel_gap": r.rel_gap,
                }
                for r in self.rows
            ],
            "max_rel_gap": self.max_rel_gap(),
        }


def calibration_report(model: CateModel, log: LogDataset) -> CalibrationReport:
    """Compare mean tau_{i,j} over the log's covariates to the sample ATE."""
    if log.d != model.d or log.m != model.m or log.n != model.n:
        raise ValueError("log dimensions do not match model")
    tau_mean = model.predict_cate_batch(log.X).mean(axis=0)  # (n, m)
    ate = compute_ate(log).values
    rows = []
    for i in range(model.n):
        for j in range(model.m):
            gap = abs(tau_mean[i, j] - ate[i, j])
            denom = abs(ate[i, j])
            if denom > 1e-12:
                rel = gap / denom
            else:
                rel = 0.0 if gap <= 1e-12 else float("inf")
            rows.append(
                CalibrationRow(
                    arm=i + 1,
                    outcome=j,
                    mean_prediction=float(tau_mean[i, j]),
                    sample_ate=float(ate[i, j]),
                    abs_gap=float(gap),
                    rel_gap=float(rel),
                )
            )
    return CalibrationReport(rows=tuple(rows))
