"""Linear-utility decision policies over CATE matrices.

A policy scores each arm as u_i = b_i + sum_j w_j * tau_{i,j}(x) and
assigns the argmax arm, ties to the lowest id. The weights/biases form is
interchangeable with a regularized form that shrinks each outcome's CATE
toward the sample ATE by a factor alpha_j; the bias vectors reachable that
way are exactly the conical combinations of the sign-adjusted ATE columns,
which `representable_as_regularized` tests by nonnegative least squares.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import nnls

from pex.core_model import AteMatrix, OutcomeSpec


def _direction_signs(directions: Sequence) -> np.ndarray:
    signs = []
    for d in directions:
        if isinstance(d, OutcomeSpec):
            signs.append(d.sign)
        elif d in ("maximize", "minimize"):
            signs.append(1.0 if d == "maximize" else -1.0)
        elif d in (1, -1, 1.0, -1.0):
            signs.append(float(d))
        else:
            raise ValueError(f"unrecognized outcome direction {d!r}")
    return np.asarray(signs)


@dataclass(frozen=True)
class PolicyParams:
    """Per-outcome weights w (length m) and per-arm biases b (length n)."""

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.biases, dtype=np.float64)
        if w.ndim != 1 or b.ndim != 1:
            raise ValueError("weights and biases must be vectors")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ValueError("policy parameters must be finite")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def n(self) -> int:
        return len(self.biases)

    def is_canonical(self, atol: float = 0.0) -> bool:
        return abs(abs(self.weights[0]) - 1.0) <= atol and abs(self.biases[0]) <= atol

    def to_json(self) -> str:
        return json.dumps(
            {"weights": [float(v) for v in self.weights], "biases": [float(v) for v in self.biases]}
        )

    @classmethod
    def from_json(cls, text: str) -> "PolicyParams":
        doc = json.loads(text)
        return cls(
            weights=np.asarray(doc["weights"], dtype=np.float64),
            biases=np.asarray(doc["biases"], dtype=np.float64),
        )


@dataclass(frozen=True)
class RegularizedParams:
    """Weights w plus per-outcome shrinkage alpha in [0, 1] toward the ATE."""

    weights: np.ndarray
    alphas: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        a = np.asarray(self.alphas, dtype=np.float64)
        if w.shape != a.shape or w.ndim != 1:
            raise ValueError("weights and alphas must be equal-length vectors")
        if np.any(a < 0.0) or np.any(a > 1.0):
            raise ValueError("alphas must lie in [0, 1]")
        w.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "alphas", a)


@dataclass(frozen=True)
class RepresentabilityResult:
    representable: bool
    coefficients: np.ndarray  # conical coefficients x >= 0, length m
    recovered: RegularizedParams | None
    residual: float


def utility(params: PolicyParams, tau: np.ndarray) -> np.ndarray:
    """Per-arm utilities u_i = b_i + sum_j w_j * tau[i, j]."""
    tau = np.asarray(tau, dtype=np.float64)
    if tau.ndim != 2 or tau.shape != (params.n, params.m):
        raise ValueError(
            f"tau must have shape ({params.n}, {params.m}), got {tau.shape}"
        )
    return params.biases + tau @ params.weights


def decide(params: PolicyParams, tau: np.ndarray) -> int:
    """Argmax-utility arm id; ties go to the lowest arm id."""
    u = utility(params, tau)
    return int(np.argmax(u)) + 1


def decide_batch(params: PolicyParams, tau_batch: np.ndarray) -> np.ndarray:
    """Vectorized decide over (N, n, m) CATE matrices; returns arm ids (N,)."""
    tau_batch = np.asarray(tau_batch, dtype=np.float64)
    if tau_batch.ndim != 3 or tau_batch.shape[1:] != (params.n, params.m):
        raise ValueError(
            f"tau_batch must have shape (N, {params.n}, {params.m}), got {tau_batch.shape}"
        )
    u = tau_batch @ params.weights + params.biases
    return np.argmax(u, axis=1) + 1


def canonicalize(params: PolicyParams, directions: Sequence) -> PolicyParams:
    """Rescale and shift to the canonical n+m-2 parameter form.

    Divides all parameters by |w_1| and shifts biases so b_1 = 0; decisions
    are unchanged. Requires w_1 != 0 with sign matching outcome 1's
    direction (positive for maximize, negative for minimize).
    """
    signs = _direction_signs(directions)
    if len(signs) != params.m:
        raise ValueError("one direction per outcome required")
    w1 = params.weights[0]
    if w1 == 0.0:
        raise ValueError("not canonicalizable: w_1 = 0")
    if np.sign(w1) != signs[0]:
        raise ValueError(
            "not canonicalizable: sign of w_1 conflicts with outcome 1's direction"
        )
    scale = abs(w1)
    w = params.weights / scale
    b = params.biases / scale
    b = b - b[0]
    return PolicyParams(weights=w, biases=b)


def from_regularized(reg: RegularizedParams, ate: AteMatrix) -> PolicyParams:
    """Convert the shrinkage form to weights/biases.

    w'_j = w_j (1 - alpha_j) and b'_i = sum_j w_j alpha_j ATE_{i,j}; the
    resulting policy decides identically to the shrinkage-form utility on
    any tau whose control row is zero.
    """
    if len(reg.weights) != ate.m:
        raise ValueError("weights must match ATE outcome count")
    w_prime = reg.weights * (1.0 - reg.alphas)
    b_prime = ate.values @ (reg.weights * reg.alphas)
    return PolicyParams(weights=w_prime, biases=b_prime)


def regularized_utility(
    reg: RegularizedParams, ate: AteMatrix, tau: np.ndarray
) -> np.ndarray:
    """Utilities of the shrinkage form: u_i = sum_j w_j [a_j ATE + (1-a_j) tau]."""
    shrunk = reg.alphas * ate.values + (1.0 - reg.alphas) * np.asarray(tau)
    return shrunk @ reg.weights


def representable_as_regularized(
    params: PolicyParams, ate: AteMatrix, tolerance: float = 1e-8
) -> RepresentabilityResult:
    """Test whether canonical (w', b') has an equivalent shrinkage form.

    Solves min_{x>=0} ||b' - sum_j x_j sgn(w'_j) ATE_col_j|| over arms
    2..n. Columns with w'_j = 0 are excluded (their sign is undefined); the
    policy is representable iff the residual is within tolerance (relative
    to ||b'||, absolute when b' = 0). When representable, alpha_j =
    x_j / (|w'_j| + x_j) and w_j = w'_j / (1 - alpha_j) are recovered.
    """
    if abs(params.biases[0]) > 1e-12:
        raise ValueError("params must be canonical (b_1 = 0)")
    if params.m != ate.m or params.n != ate.n:
        raise ValueError("params dimensions do not match ATE matrix")
    w_prime = params.weights
    b_tail = params.biases[1:]
    cols = np.flatnonzero(w_prime != 0.0)
    x = np.zeros(params.m)
    if cols.size:
        A = np.sign(w_prime[cols]) * ate.values[1:, cols]
        x_c, residual = nnls(A, b_tail)
        x[cols] = x_c
    else:
        residual = float(np.linalg.norm(b_tail))

    b_norm = float(np.linalg.norm(b_tail))
    threshold = tolerance * b_norm if b_norm > 0 else tolerance
    representable = residual <= threshold
    recovered = None
    if representable:
        alphas = np.zeros(params.m)
        nz = x > 0.0
        alphas[nz] = x[nz] / (np.abs(w_prime[nz]) + x[nz])
        weights = np.where(alphas < 1.0, w_prime / (1.0 - alphas), 0.0)
        recovered = RegularizedParams(weights=weights, alphas=alphas)
    return RepresentabilityResult(
        representable=bool(representable),
        coefficients=x,
        recovered=recovered,
        residual=float(residual),
    )


def single_arm_params(
    arm: int, n: int, m: int, directions: Sequence, bias_magnitude: float
) -> PolicyParams:
    """Canonical params that always choose ``arm`` via dominating biases.

    ``bias_magnitude`` must exceed any utility contribution of the weighted
    CATEs on the data at hand.
    """
    signs = _direction_signs(directions)
    w = np.zeros(m)
    w[0] = signs[0]
    b = np.zeros(n)
    if arm == 1:
        b[1:] = -bias_magnitude
    else:
        b[arm - 1] = bias_magnitude
    return PolicyParams(weights=w, biases=b)
