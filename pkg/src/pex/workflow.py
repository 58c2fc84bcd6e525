"""Three-phase workflow orchestration behind the ``pex`` CLI.

Every command works against a run directory named by the hash of the
resolved configuration, holding plain JSON/CSV artifacts. Commands are
idempotent given identical inputs and seeds, and byte-identical on
re-runs. A lock file guards against concurrent commands in one run
directory.
"""

from __future__ import annotations

import contextlib
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from pex.core_model import LogDataset, OutcomeSpec, load_log, split_log, validate_log, write_log
from pex.hte import BaseLearnerSpec, CateModel, calibration_report, fit_t_learner
from pex.mopt import (
    FrontSet,
    ParetoPoint,
    SearchBounds,
    hypervolume_contributions,
    optimize_offline,
    optimize_online,
    subset_select,
)
from pex.mopt.online import policy_assignment_fn
from pex.ope import ESTIMATORS
from pex.policy import PolicyParams
from pex.simulator import _STREAM_LAUNCH, ScenarioSpec, generate_log, substream

# Per-phase seed stream tags.
_SEED_TRAIN = 11
_SEED_SPLIT = 12
_SEED_OFFLINE = 13
_SEED_ONLINE = 14
_SEED_LAUNCH = 15

CONFIG_VERSION = 1


class WorkflowError(Exception):
    """Command failure with a CLI exit code."""

    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs: environment, learner, budgets, and seeds."""

    scenario: ScenarioSpec | None = None
    log_path: str | None = None
    learner: BaseLearnerSpec = field(default_factory=BaseLearnerSpec.ridge)
    estimator: str = "dr"
    train_n: int = 10000
    holdout_fraction: float = 0.05
    offline_budget: int = 40
    k: int = 8
    rounds: int = 2
    units_per_round: int = 4000
    launch_n: int = 10000
    calibration_gate: float = 0.25
    compare_bias_free: bool = False
    weight_bound: float = 5.0
    bias_factor: float = 3.0
    rho: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.scenario is None and self.log_path is None:
            raise WorkflowError("config needs a scenario or a log_path")
        if self.estimator not in ESTIMATORS:
            raise WorkflowError(f"estimator must be one of {ESTIMATORS}")
        if not (0.0 <= self.holdout_fraction <= 1.0):
            raise WorkflowError("holdout_fraction must be in [0, 1]")
        for name in ("train_n", "offline_budget", "k", "rounds", "units_per_round", "launch_n"):
            if getattr(self, name) < 1:
                raise WorkflowError(f"{name} must be >= 1")

    def outcome_specs(self) -> tuple[OutcomeSpec, ...]:
        if self.scenario is not None:
            return self.scenario.outcome_specs
        return ()

    def to_dict(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "scenario": self.scenario.to_dict() if self.scenario else None,
            "log_path": self.log_path,
            "learner": self.learner.to_dict(),
            "estimator": self.estimator,
            "train_n": self.train_n,
            "holdout_fraction": self.holdout_fraction,
            "offline_budget": self.offline_budget,
            "k": self.k,
            "rounds": self.rounds,
            "units_per_round": self.units_per_round,
            "launch_n": self.launch_n,
            "calibration_gate": self.calibration_gate,
            "compare_bias_free": self.compare_bias_free,
            "weight_bound": self.weight_bound,
            "bias_factor": self.bias_factor,
            "rho": self.rho,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        version = doc.get("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise WorkflowError(f"unsupported config version {version}")
        kwargs = {k: v for k, v in doc.items() if k != "version"}
        if kwargs.get("scenario") is not None:
            kwargs["scenario"] = ScenarioSpec.from_dict(kwargs["scenario"])
        if "learner" in kwargs:
            kwargs["learner"] = BaseLearnerSpec.from_dict(kwargs["learner"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise WorkflowError(f"invalid config: {exc}") from exc

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise WorkflowError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise WorkflowError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]

    def phase_seed(self, tag: int) -> int:
        # Stable per-phase seed derived from the config seed.
        return int(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(tag,)).generate_state(1)[0]
        )


# ---------------------------------------------------------------------------
# Run directory, artifacts, locking
# ---------------------------------------------------------------------------


def run_dir(config: ExperimentConfig, out: str) -> Path:
    return Path(out) / f"run-{config.config_hash()}"


@contextlib.contextmanager
def advisory_lock(directory: Path):
    lock = directory / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise WorkflowError(
            f"run directory {directory} is locked by another command (remove {lock} if stale)"
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(lock)


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    return obj


def dump_json(obj, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonify(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_json(path: Path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise WorkflowError(f"missing artifact: {path}; run the earlier phase first") from None


def dump_jsonl(records, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(_jsonify(rec), sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def load_jsonl(path: Path) -> list[dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]
    except FileNotFoundError:
        raise WorkflowError(f"missing artifact: {path}; run the earlier phase first") from None


def _params_doc(params: PolicyParams) -> dict:
    return {
        "weights": [float(v) for v in params.weights],
        "biases": [float(v) for v in params.biases],
    }


def _params_from_doc(doc: dict) -> PolicyParams:
    return PolicyParams(
        weights=np.asarray(doc["weights"], dtype=np.float64),
        biases=np.asarray(doc["biases"], dtype=np.float64),
    )


def _point_record(point: ParetoPoint, estimator: str) -> dict:
    rec = {
        "params": _params_doc(point.params),
        "objectives": [float(v) for v in point.objectives],
        "estimator": estimator,
        "iteration": point.iteration,
    }
    if point.estimate is not None:
        rec["stderr"] = [float(v) for v in point.estimate.stderrs]
        rec["values"] = [float(v) for v in point.estimate.values]
    return rec


def _front_records(front: FrontSet, estimator: str) -> list[dict]:
    return [_point_record(p, estimator) for p in front.points]


# ---------------------------------------------------------------------------
# AssignmentCache
# ---------------------------------------------------------------------------


class AssignmentCache:
    """unit_id -> arm map; an existing entry is never overwritten."""

    def __init__(self, entries: dict[str, int] | None = None):
        self._entries: dict[str, int] = dict(entries or {})

    def get_or_assign(self, unit_id: str, arm: int) -> int:
        if unit_id not in self._entries:
            self._entries[unit_id] = int(arm)
        return self._entries[unit_id]

    def get(self, unit_id: str) -> int | None:
        return self._entries.get(unit_id)

    def __len__(self) -> int:
        return len(self._entries)

    def to_dict(self) -> dict[str, int]:
        return dict(sorted(self._entries.items()))

    @classmethod
    def load(cls, path: Path) -> "AssignmentCache":
        if not Path(path).exists():
            return cls()
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh))

    def save(self, path: Path) -> None:
        dump_json(self.to_dict(), path)


# ---------------------------------------------------------------------------
# Phase commands
# ---------------------------------------------------------------------------


def _prepare_run_dir(config: ExperimentConfig, out: str) -> Path:
    rd = run_dir(config, out)
    rd.mkdir(parents=True, exist_ok=True)
    dump_json(config.to_dict(), rd / "config.json")
    return rd


def _training_log(config: ExperimentConfig, rd: Path, retrain: bool) -> LogDataset:
    if config.scenario is not None:
        log = generate_log(config.scenario, config.train_n, config.phase_seed(_SEED_TRAIN))
    else:
        log = load_log(config.log_path)
        report = validate_log(log)
        if not report.ok:
            raise WorkflowError(f"log at {config.log_path} is invalid:\n{report}")
    if retrain:
        extra = _holdout_training_records(config, rd)
        if extra is not None:
            log = LogDataset.from_records(
                log.records + extra.records, log.outcome_specs, n=log.n
            )
    return log


def _holdout_training_records(config: ExperimentConfig, rd: Path) -> LogDataset | None:
    """Randomized holdout slice of a launched run, reusable as training data."""
    launch_log_path = rd / "launch_log.csv"
    holdout_path = rd / "holdout_units.json"
    if not launch_log_path.exists() or not holdout_path.exists():
        return None
    launch_log = load_log(str(launch_log_path), outcome_specs=config.outcome_specs())
    with open(holdout_path, "r", encoding="utf-8") as fh:
        holdout_ids = set(json.load(fh))
    idx = np.array(
        [i for i, uid in enumerate(launch_log.unit_ids) if uid in holdout_ids], dtype=int
    )
    return launch_log.subset(idx)


def cmd_phase1(
    config: ExperimentConfig, out: str, accept: bool = False, retrain: bool = False
) -> int:
    """Train the CATE model, search policies offline, select k candidates.

    Exit code 2 when the calibration gate trips (pass ``accept=True`` to
    proceed anyway).
    """
    rd = _prepare_run_dir(config, out)
    with advisory_lock(rd):
        log = _training_log(config, rd, retrain)
        main, holdout = split_log(
            log, config.holdout_fraction, config.phase_seed(_SEED_SPLIT)
        )
        write_log(log, str(rd / "log.csv"))
        write_log(holdout, str(rd / "holdout.csv"))

        model = fit_t_learner(main, config.learner, seed=config.seed)
        model.save(str(rd / "model.json"))
        calib = calibration_report(model, main)
        dump_json(calib.to_dict(), rd / "calibration.json")
        if calib.max_rel_gap() > config.calibration_gate and not accept:
            print(
                f"calibration gate tripped: max relative gap "
                f"{calib.max_rel_gap():.3f} > {config.calibration_gate}; "
                "rerun with --accept to proceed"
            )
            return 2

        seed_off = config.phase_seed(_SEED_OFFLINE)
        variants = [("", True)]
        if config.compare_bias_free:
            variants.append(("_nobias", False))
        front = None
        for suffix, bias_enabled in variants:
            bounds = SearchBounds.default(
                model.ate,
                weight_bound=config.weight_bound,
                bias_factor=config.bias_factor,
                bias_enabled=bias_enabled,
            )
            result = optimize_offline(
                main,
                model,
                bounds,
                budget=config.offline_budget,
                seed=seed_off,
                estimator=config.estimator,
                rho=config.rho,
            )
            dump_jsonl(
                [_point_record(p, config.estimator) for p in result.evaluated],
                rd / f"offline_archive{suffix}.jsonl",
            )
            dump_jsonl(
                _front_records(result.front, config.estimator),
                rd / f"offline_front{suffix}.jsonl",
            )
            if not suffix:
                front = result.front

        selection = subset_select(front, config.k)
        dump_json(
            {
                "k": config.k,
                "method": selection.method,
                "hypervolume": selection.hypervolume,
                "candidates": [
                    _point_record(p, config.estimator) for p in selection.points
                ],
            },
            rd / "candidates.json",
        )
    return 0


def cmd_phase2(config: ExperimentConfig, out: str, candidate_index: int | None = None) -> int:
    """Measure candidates online, tune, and record a recommendation."""
    if config.scenario is None:
        raise WorkflowError("phase2 requires a scenario (simulated environment)")
    rd = _prepare_run_dir(config, out)
    with advisory_lock(rd):
        model_path = rd / "model.json"
        if not model_path.exists():
            raise WorkflowError(f"missing artifact: {model_path}; run phase1 first")
        model = CateModel.load(str(model_path))
        cand_doc = load_json(rd / "candidates.json")
        candidates = [_params_from_doc(c["params"]) for c in cand_doc["candidates"]]

        result = optimize_online(
            config.scenario,
            candidates,
            model,
            rounds=config.rounds,
            units_per_round=config.units_per_round,
            seed=config.phase_seed(_SEED_ONLINE),
            rho=config.rho,
        )
        dump_jsonl(
            [
                {
                    "round": h.round_index,
                    "candidate": h.candidate_index,
                    "params": _params_doc(h.params),
                    "means": [float(v) for v in h.means],
                    "stderrs": [float(v) for v in h.stderrs],
                    "count": h.count,
                    "proposed": h.proposed,
                }
                for h in result.history
            ],
            rd / "online_history.jsonl",
        )
        dump_jsonl(_front_records(result.front, "online"), rd / "online_front.jsonl")

        comparison = _offline_vs_online(config, cand_doc, result)
        dump_json(comparison, rd / "offline_vs_online.json")

        contributions = hypervolume_contributions(result.front)
        best = int(np.argmax(contributions))
        if candidate_index is not None:
            measured = {h.candidate_index for h in result.history if h.count > 0}
            if candidate_index not in measured:
                raise WorkflowError(
                    f"candidate index {candidate_index} was not measured online"
                )
            chosen_params = next(
                h.params for h in result.history if h.candidate_index == candidate_index
            )
            recommendation = {
                "candidate_index": candidate_index,
                "source": "experimenter",
                "params": _params_doc(chosen_params),
            }
        else:
            point = result.front.points[best]
            recommendation = {
                "candidate_index": point.iteration,
                "source": "hypervolume_contribution",
                "params": _params_doc(point.params),
            }
        dump_json(recommendation, rd / "recommendation.json")
    return 0


def _offline_vs_online(config: ExperimentConfig, cand_doc: dict, result) -> dict:
    """Per-candidate offline estimates against round-1 online measurements."""
    names = [o.name for o in config.scenario.outcome_specs]
    rows = []
    initial = [h for h in result.history if not h.proposed]
    for h in initial:
        offline = cand_doc["candidates"][h.candidate_index]
        for j, name in enumerate(names):
            rows.append(
                {
                    "candidate": h.candidate_index,
                    "outcome": name,
                    "offline_value": offline["values"][j],
                    "offline_stderr": offline["stderr"][j],
                    "online_value": float(h.means[j]),
                    "online_stderr": float(h.stderrs[j]),
                }
            )
    correlations = {}
    gaps = {}
    for j, name in enumerate(names):
        off = np.array([cand_doc["candidates"][h.candidate_index]["values"][j] for h in initial])
        on = np.array([h.means[j] for h in initial])
        ok = np.isfinite(on)
        if ok.sum() >= 2:
            rho = spearmanr(off[ok], on[ok]).statistic
            correlations[name] = float(rho) if np.isfinite(rho) else 0.0
            gaps[name] = {
                "mean_abs_gap": float(np.abs(off[ok] - on[ok]).mean()),
                "mean_online_stderr": float(
                    np.mean([h.stderrs[j] for h, keep in zip(initial, ok) if keep])
                ),
            }
    return {"rows": rows, "rank_correlation": correlations, "offline_online_gap": gaps}


def cmd_launch(
    config: ExperimentConfig,
    out: str,
    accept: bool = False,
    candidate_index: int | None = None,
) -> int:
    """Route simulated traffic through the chosen policy, holdout stays randomized."""
    if config.scenario is None:
        raise WorkflowError("launch requires a scenario (simulated environment)")
    if not accept and candidate_index is None:
        raise WorkflowError(
            "launch is a decision point: pass --accept to launch the recommended "
            "policy or --candidate-index to choose one"
        )
    rd = _prepare_run_dir(config, out)
    with advisory_lock(rd):
        model_path = rd / "model.json"
        if not model_path.exists():
            raise WorkflowError(f"missing artifact: {model_path}; run phase1 first")
        model = CateModel.load(str(model_path))
        if candidate_index is not None:
            history = load_jsonl(rd / "online_history.jsonl")
            match = [h for h in history if h["candidate"] == candidate_index]
            if not match:
                raise WorkflowError(f"candidate index {candidate_index} not found in phase2")
            params = _params_from_doc(match[0]["params"])
            source = "experimenter"
        else:
            rec = load_json(rd / "recommendation.json")
            params = _params_from_doc(rec["params"])
            candidate_index = rec["candidate_index"]
            source = rec["source"]

        scenario = config.scenario
        rng = substream(config.phase_seed(_SEED_LAUNCH), _STREAM_LAUNCH, scenario.seed)
        N = config.launch_n
        X = scenario.sample_covariates(rng, N)
        holdout_mask = rng.random(N) < config.holdout_fraction
        holdout_arms = rng.integers(1, scenario.n + 1, size=N)
        noise = rng.standard_normal((N, scenario.m)) * np.asarray(scenario.noise_sd)

        policy_fn = policy_assignment_fn(model, params)
        policy_arms = policy_fn(X)
        unit_ids = [f"L{config.seed}-{i:06d}" for i in range(N)]

        cache = AssignmentCache.load(rd / "assignment_cache.json")
        arms = np.empty(N, dtype=np.int64)
        for i in range(N):
            if holdout_mask[i]:
                arms[i] = holdout_arms[i]
            else:
                arms[i] = cache.get_or_assign(unit_ids[i], int(policy_arms[i]))

        Y_online = scenario.apply_shift(scenario.mean_outcomes(X, arms) + noise)
        propensity = np.where(holdout_mask, 1.0 / scenario.n, 1.0)
        launch_log = LogDataset.from_arrays(
            unit_ids, arms, propensity, X, Y_online, scenario.outcome_specs, n=scenario.n
        )
        write_log(launch_log, str(rd / "launch_log.csv"))
        cache.save(rd / "assignment_cache.json")
        holdout_ids = [uid for uid, h in zip(unit_ids, holdout_mask) if h]
        dump_json(holdout_ids, rd / "holdout_units.json")
        dump_json(
            {
                "launched": True,
                "candidate_index": candidate_index,
                "source": source,
                "params": _params_doc(params),
                "holdout_fraction": config.holdout_fraction,
                "n_units": N,
                "n_holdout": int(holdout_mask.sum()),
                "n_policy": int(N - holdout_mask.sum()),
            },
            rd / "launch_manifest.json",
        )
    return 0


def cmd_backtest(config: ExperimentConfig, out: str) -> int:
    """Launched-policy population vs randomized holdout, per outcome, with CIs."""
    rd = _prepare_run_dir(config, out)
    with advisory_lock(rd):
        manifest_path = rd / "launch_manifest.json"
        if not manifest_path.exists():
            raise WorkflowError("no launch found; run launch first")
        manifest = load_json(manifest_path)
        launch_log = load_log(str(rd / "launch_log.csv"), outcome_specs=config.outcome_specs())
        with open(rd / "holdout_units.json", "r", encoding="utf-8") as fh:
            holdout_ids = set(json.load(fh))
        is_holdout = np.array([uid in holdout_ids for uid in launch_log.unit_ids])

        Y = launch_log.Y
        z = 1.959963984540054  # two-sided 95%
        outcomes = []
        names = [o.name for o in launch_log.outcome_specs]
        for j, name in enumerate(names):
            pol = Y[~is_holdout, j]
            hold = Y[is_holdout, j]
            pol_mean = float(pol.mean()) if pol.size else float("nan")
            hold_mean = float(hold.mean()) if hold.size else float("nan")
            pol_se = float(pol.std(ddof=1) / np.sqrt(pol.size)) if pol.size > 1 else 0.0
            hold_se = float(hold.std(ddof=1) / np.sqrt(hold.size)) if hold.size > 1 else 0.0
            diff = pol_mean - hold_mean
            se = float(np.hypot(pol_se, hold_se))
            outcomes.append(
                {
                    "outcome": name,
                    "policy_mean": pol_mean,
                    "policy_stderr": pol_se,
                    "holdout_mean": hold_mean,
                    "holdout_stderr": hold_se,
                    "difference": diff,
                    "ci_low": diff - z * se,
                    "ci_high": diff + z * se,
                    "ci_level": 0.95,
                    "n_policy": int((~is_holdout).sum()),
                    "n_holdout": int(is_holdout.sum()),
                }
            )
        report = {
            "outcomes": outcomes,
            "n_total": len(launch_log),
            "candidate_index": manifest["candidate_index"],
        }
        dump_json(report, rd / "backtest_report.json")
    return 0


# ---------------------------------------------------------------------------
# Simulate + report
# ---------------------------------------------------------------------------


def cmd_simulate(config: ExperimentConfig, out: str) -> int:
    """Generate the training log alone (no model fitting)."""
    if config.scenario is None:
        raise WorkflowError("simulate requires a scenario")
    rd = _prepare_run_dir(config, out)
    with advisory_lock(rd):
        log = generate_log(config.scenario, config.train_n, config.phase_seed(_SEED_TRAIN))
        write_log(log, str(rd / "log.csv"))
    return 0


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(v) for v in row) + "\n")


def cmd_report(config: ExperimentConfig, out: str) -> int:
    """Emit plot-ready CSVs from existing artifacts (no rendering)."""
    rd = _prepare_run_dir(config, out)
    with advisory_lock(rd):
        report_dir = rd / "report"
        report_dir.mkdir(exist_ok=True)

        # Pareto scatter: every evaluated point, front membership flagged,
        # bias-free variant included when it was run.
        rows = []
        m = n = None
        for variant, suffix in (("bias", ""), ("nobias", "_nobias")):
            archive_path = rd / f"offline_archive{suffix}.jsonl"
            if not archive_path.exists():
                if variant == "bias":
                    raise WorkflowError(f"missing artifact: {archive_path}; run phase1 first")
                continue
            archive = load_jsonl(archive_path)
            front = load_jsonl(rd / f"offline_front{suffix}.jsonl")
            front_keys = {json.dumps(p["objectives"]) for p in front}
            for rec in archive:
                m = len(rec["params"]["weights"])
                n = len(rec["params"]["biases"])
                rows.append(
                    [variant, rec["iteration"], json.dumps(rec["objectives"]) in front_keys]
                    + rec["params"]["weights"]
                    + rec["params"]["biases"]
                    + rec["values"]
                    + rec["stderr"]
                )
        header = (
            ["variant", "iteration", "on_front"]
            + [f"w_{j}" for j in range(m)]
            + [f"b_{i}" for i in range(n)]
            + [f"value_{j}" for j in range(m)]
            + [f"stderr_{j}" for j in range(m)]
        )
        _write_csv(report_dir / "pareto_front.csv", header, rows)

        # Offline vs online association per candidate and outcome.
        ovo_path = rd / "offline_vs_online.json"
        if ovo_path.exists():
            doc = load_json(ovo_path)
            _write_csv(
                report_dir / "offline_vs_online.csv",
                [
                    "candidate",
                    "outcome",
                    "offline_value",
                    "offline_stderr",
                    "online_value",
                    "online_stderr",
                ],
                [
                    [
                        r["candidate"],
                        r["outcome"],
                        r["offline_value"],
                        r["offline_stderr"],
                        r["online_value"],
                        r["online_stderr"],
                    ]
                    for r in doc["rows"]
                ],
            )

        # Calibration table.
        calib_path = rd / "calibration.json"
        if calib_path.exists():
            calib = load_json(calib_path)
            _write_csv(
                report_dir / "calibration.csv",
                ["arm", "outcome", "mean_prediction", "sample_ate", "abs_gap", "rel_gap"],
                [
                    [
                        r["arm"],
                        r["outcome"],
                        r["mean_prediction"],
                        r["sample_ate"],
                        r["abs_gap"],
                        r["rel_gap"],
                    ]
                    for r in calib["rows"]
                ],
            )
    return 0
