"""Shared scalarized expected-improvement proposal step.

One iteration of the serial loop: draw random simplex weights, fit one
surrogate per outcome on the evaluated points, and pick the candidate in
bounds maximizing Monte Carlo expected improvement of the scalarized
surrogate, via a quasi-random batch plus multi-start local refinement.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from pex.mopt.scalarize import scalarize
from pex.mopt.surrogate import fit_surrogate

MC_DRAWS = 64
SOBOL_BATCH = 256
REFINE_STARTS = 3


def sobol_batch(lows: np.ndarray, highs: np.ndarray, count: int, seed: int) -> np.ndarray:
    dim = len(lows)
    with warnings.catch_warnings():
        # Sobol balance warnings for non power-of-two batch sizes are noise here.
        warnings.simplefilter("ignore", UserWarning)
        sampler = qmc.Sobol(d=dim, scramble=True, seed=seed)
        unit = sampler.random(count)
    return lows + unit * (highs - lows)


def _objective_normalization(objectives: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = objectives.min(axis=0)
    hi = objectives.max(axis=0)
    flat = hi <= lo
    hi = np.where(flat, lo + 1.0, hi)
    return lo, hi


def propose_candidate(
    thetas: np.ndarray,
    objectives: np.ndarray,
    stderrs: np.ndarray | None,
    lows: np.ndarray,
    highs: np.ndarray,
    rng: np.random.Generator,
    rho: float = 0.05,
) -> np.ndarray:
    """Next parameter vector to evaluate, deterministic given the rng state."""
    thetas = np.asarray(thetas, dtype=np.float64)
    objectives = np.asarray(objectives, dtype=np.float64)
    n_eval, dim = thetas.shape
    m = objectives.shape[1]
    free = highs > lows
    span = np.where(free, highs - lows, 1.0)

    if n_eval < 3:
        return sobol_batch(lows, highs, 1, seed=int(rng.integers(2**31)))[0]

    unit = np.where(free, (thetas - lows) / span, 0.5)
    weights = rng.dirichlet(np.ones(m))
    norm = _objective_normalization(objectives)
    models = []
    for j in range(m):
        noise = None if stderrs is None else stderrs[:, j] ** 2
        models.append(fit_surrogate(unit, objectives[:, j], noise_var=noise))
    best_s = float(scalarize(objectives, weights, rho, norm).min())
    Z = rng.standard_normal((MC_DRAWS, m))

    def acquisition(batch_unit: np.ndarray) -> np.ndarray:
        batch_unit = np.atleast_2d(batch_unit)
        mean = np.empty((batch_unit.shape[0], m))
        sd = np.empty_like(mean)
        for j, model in enumerate(models):
            mean[:, j], sd[:, j] = model.predict(batch_unit)
        # (C, S, m) posterior samples with common random numbers.
        samples = mean[:, None, :] + sd[:, None, :] * Z[None, :, :]
        s = scalarize(samples, weights, rho, norm)
        return np.maximum(best_s - s, 0.0).mean(axis=1)

    cand = sobol_batch(lows, highs, SOBOL_BATCH, seed=int(rng.integers(2**31)))
    cand_unit = np.where(free, (cand - lows) / span, 0.5)
    ei = acquisition(cand_unit)
    order = np.argsort(-ei, kind="stable")

    best_theta_unit = cand_unit[order[0]]
    best_ei = ei[order[0]]
    free_idx = np.flatnonzero(free)
    if free_idx.size:
        for start in order[:REFINE_STARTS]:
            x0 = cand_unit[start][free_idx]

            def neg_acq(x_free: np.ndarray) -> float:
                full = cand_unit[start].copy()
                full[free_idx] = np.clip(x_free, 0.0, 1.0)
                return -float(acquisition(full[None, :])[0])

            res = minimize(
                neg_acq,
                x0,
                method="Powell",
                bounds=[(0.0, 1.0)] * free_idx.size,
                options={"maxfev": 60 * free_idx.size, "xtol": 1e-3},
            )
            if -res.fun > best_ei:
                best_ei = -res.fun
                full = cand_unit[start].copy()
                full[free_idx] = np.clip(res.x, 0.0, 1.0)
                best_theta_unit = full

    theta = np.where(free, lows + best_theta_unit * span, lows)
    return np.clip(theta, lows, highs)
