"""Dominance, Pareto fronts, hypervolume, and hypervolume subset selection.

All objective vectors are oriented so larger is better; outcomes to be
minimized must be negated before entering this module.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from pex.ope import PolicyValueEstimate
from pex.policy import PolicyParams

EXACT_SUBSET_LIMIT = 100_000  # max combinations enumerated exactly


@dataclass(frozen=True)
class ParetoPoint:
    """One candidate policy with its oriented objective estimates."""

    params: PolicyParams
    objectives: np.ndarray  # (m,), larger is better
    estimate: PolicyValueEstimate | None = None
    iteration: int = -1

    def __post_init__(self) -> None:
        obj = np.asarray(self.objectives, dtype=np.float64)
        if not np.isfinite(obj).all():
            raise ValueError("objectives must be finite")
        obj.setflags(write=False)
        object.__setattr__(self, "objectives", obj)


@dataclass(frozen=True)
class FrontSet:
    """A nondominated point set plus the reference point for hypervolume."""

    points: tuple[ParetoPoint, ...]
    reference_point: np.ndarray

    def __post_init__(self) -> None:
        ref = np.asarray(self.reference_point, dtype=np.float64)
        ref.setflags(write=False)
        object.__setattr__(self, "reference_point", ref)
        for p in self.points:
            if not np.all(p.objectives >= ref):
                raise ValueError("every front point must dominate the reference point")

    def objective_matrix(self) -> np.ndarray:
        if not self.points:
            return np.empty((0, len(self.reference_point)))
        return np.stack([p.objectives for p in self.points])

    def hypervolume(self) -> float:
        return hypervolume(self.objective_matrix(), self.reference_point)


def default_reference_point(objectives: np.ndarray) -> np.ndarray:
    """Componentwise minimum minus 10% of the range (small floor if flat).

    Keeps every evaluated point counted; stable within a run, never
    comparable across runs.
    """
    objectives = np.atleast_2d(np.asarray(objectives, dtype=np.float64))
    lo = objectives.min(axis=0)
    span = objectives.max(axis=0) - lo
    pad = np.where(span > 0, 0.1 * span, 1e-6)
    return lo - pad


def dominates(a: np.ndarray, b: np.ndarray) -> bool:
    """True iff a >= b componentwise with strict improvement somewhere."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("objective vectors must have equal length")
    return bool(np.all(a >= b) and np.any(a > b))


def pareto_front(points: list[ParetoPoint]) -> list[ParetoPoint]:
    """Maximal nondominated subset; objective-space duplicates keep the first."""
    selected: list[ParetoPoint] = []
    for p in points:
        dominated = False
        for q in points:
            if q is not p and dominates(q.objectives, p.objectives):
                dominated = True
                break
        if dominated:
            continue
        if any(np.array_equal(s.objectives, p.objectives) for s in selected):
            continue
        selected.append(p)
    return selected


def _filter_to_ref(points: np.ndarray, ref: np.ndarray) -> np.ndarray:
    keep = np.all(points > ref, axis=1)
    if not keep.all():
        warnings.warn(
            f"{int((~keep).sum())} point(s) do not dominate the reference point; clipped out",
            stacklevel=3,
        )
    return points[keep]


def _hv2d(points: np.ndarray, ref: np.ndarray) -> float:
    # Sweep from the largest first objective; each point that raises the
    # covered height closes the strip accumulated since the previous edge.
    order = np.argsort(-points[:, 0], kind="stable")
    pts = points[order]
    hv = 0.0
    best_y = ref[1]
    x_edge = None
    for x, y in pts:
        if y <= best_y:
            continue
        if x_edge is not None:
            hv += (x_edge - x) * (best_y - ref[1])
        x_edge = x
        best_y = y
    if x_edge is not None:
        hv += (x_edge - ref[0]) * (best_y - ref[1])
    return hv


def _hv3d(points: np.ndarray, ref: np.ndarray) -> float:
    # Slice along the third objective: between consecutive levels the
    # covered area is the 2D hypervolume of the points at or above the slab.
    zs = np.unique(points[:, 2])[::-1]
    hv = 0.0
    for i, z in enumerate(zs):
        lower = zs[i + 1] if i + 1 < len(zs) else ref[2]
        active = points[points[:, 2] >= z][:, :2]
        hv += _hv2d(active, ref[:2]) * (z - lower)
    return hv


def _hv_mc(
    points: np.ndarray, ref: np.ndarray, samples: int, seed: int
) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    upper = points.max(axis=0)
    box = np.prod(upper - ref)
    if box <= 0:
        return 0.0, 0.0
    hits = 0
    chunk = 131072
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        U = rng.uniform(ref, upper, size=(size, len(ref)))
        covered = np.zeros(size, dtype=bool)
        for p in points:
            covered |= np.all(U <= p, axis=1)
            if covered.all():
                break
        hits += int(covered.sum())
        done += size
    frac = hits / samples
    stderr = float(box * math.sqrt(max(frac * (1 - frac), 0.0) / samples))
    return float(box * frac), stderr


def hypervolume(
    points: np.ndarray,
    ref: np.ndarray,
    mc_samples: int = 1_000_000,
    seed: int = 0,
    return_stderr: bool = False,
):
    """Lebesgue measure of the union of boxes [ref, point].

    Exact sweep for m=2, exact slicing for m=3, Monte Carlo with a
    reported standard error for m>3 (stderr is 0 for exact dimensions).
    Points that do not dominate the reference are clipped out with a
    warning.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    ref = np.asarray(ref, dtype=np.float64)
    if points.shape[0] and points.shape[1] != len(ref):
        raise ValueError("points and reference point dimensions differ")
    if points.shape[0]:
        points = _filter_to_ref(points, ref)
    if points.shape[0] == 0:
        return (0.0, 0.0) if return_stderr else 0.0
    m = len(ref)
    stderr = 0.0
    if m == 1:
        hv = float(points[:, 0].max() - ref[0])
    elif m == 2:
        hv = float(_hv2d(points, ref))
    elif m == 3:
        hv = float(_hv3d(points, ref))
    else:
        hv, stderr = _hv_mc(points, ref, mc_samples, seed)
    return (hv, stderr) if return_stderr else hv


@dataclass(frozen=True)
class SubsetSelection:
    points: tuple[ParetoPoint, ...]
    hypervolume: float
    method: str  # "exact" | "greedy"


def _greedy_subset(objs: np.ndarray, ref: np.ndarray, k: int) -> list[int]:
    chosen: list[int] = []
    remaining = list(range(len(objs)))
    current_hv = 0.0
    for _ in range(min(k, len(objs))):
        best_idx = None
        best_hv = current_hv
        for i in remaining:
            hv = hypervolume(objs[chosen + [i]], ref)
            if best_idx is None or hv > best_hv:
                best_idx = i
                best_hv = hv
        chosen.append(best_idx)
        remaining.remove(best_idx)
        current_hv = best_hv
    return chosen


def subset_select(front: FrontSet, k: int, method: str = "auto") -> SubsetSelection:
    """Pick <= k front points maximizing hypervolume w.r.t. the front's reference.

    Exact enumeration when the number of combinations is at most
    ``EXACT_SUBSET_LIMIT`` (or ``method="exact"``); greedy hypervolume-gain
    insertion otherwise. Greedy achieves at least (1 - 1/e) of the exact
    hypervolume by submodularity.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not front.points:
        raise ValueError("empty front")
    pts = front.points
    ref = front.reference_point
    if k >= len(pts):
        return SubsetSelection(
            points=pts, hypervolume=front.hypervolume(), method="exact"
        )
    objs = front.objective_matrix()
    if method == "auto":
        method = "exact" if math.comb(len(pts), k) <= EXACT_SUBSET_LIMIT else "greedy"
    if method == "exact":
        best_combo = None
        best_hv = -1.0
        for combo in itertools.combinations(range(len(pts)), k):
            hv = hypervolume(objs[list(combo)], ref)
            if hv > best_hv:
                best_hv = hv
                best_combo = combo
        idx = list(best_combo)
    elif method == "greedy":
        idx = _greedy_subset(objs, ref, k)
    else:
        raise ValueError(f"unknown method {method!r}")
    hv = hypervolume(objs[idx], ref)
    return SubsetSelection(
        points=tuple(pts[i] for i in idx), hypervolume=float(hv), method=method
    )


def hypervolume_contributions(front: FrontSet) -> np.ndarray:
    """Per-point hypervolume loss if that point were removed."""
    objs = front.objective_matrix()
    ref = front.reference_point
    total = hypervolume(objs, ref)
    out = np.empty(len(front.points))
    for i in range(len(front.points)):
        rest = np.delete(objs, i, axis=0)
        out[i] = total - (hypervolume(rest, ref) if len(rest) else 0.0)
    return out
