"""Experiment orchestration: probe loop, multi-trial aggregation, parameter sweeps."""

from __future__ import annotations

import configparser
import copy
import csv
import dataclasses
import io
import itertools
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .features import N_FEATURES, feature_matrix
from .generators import GeneratorConfig, build_oracle
from .graph import OracleGraph, probe
from .learners import (LearnerModel, append_sample, htr_fit, init_theta, k_from_policy,
                       nol_update)
from .policies import KnnHistory, NoCandidatesError, PolicyConfig, policy_epsilon, select_next
from .samplers import SampleConfig, sample

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("trial", "t", "node", "reward", "cum_reward", "prediction", "pred_error",
                  "epsilon", "explored", "n_observed_nodes", "n_observed_edges")
WEIGHT_COLUMNS = ("trial", "t") + tuple(f"theta_{i}" for i in range(N_FEATURES))
FEATURE_COLUMNS = ("trial", "t", "node") + tuple(f"phi_{i}" for i in range(N_FEATURES))
SUMMARY_COLUMNS = ("t", "mean_cum_reward", "std_cum_reward", "mean_cum_abs_err", "std_cum_abs_err")

DEFAULT_K_GRID = tuple(range(1, 17)) + (32, 64, 128, "log10", "ln", "log2")
DEFAULT_EPS_GRID = tuple((e, d) for d in (True, False) for e in (0.0, 0.1, 0.2, 0.3, 0.4))


@dataclass
class LearnerConfig:
    alpha: float = 0.01
    k: str = "ln"
    lam: float = 0.0
    buffer_cap: int = 2000
    init: str = "random"

    @property
    def k_policy(self):
        return int(self.k) if str(self.k).isdigit() else str(self.k)


@dataclass
class RunConfig:
    budget: int = 500
    trials: int = 10
    base_seed: int = 0


@dataclass
class ExperimentConfig:
    oracle: GeneratorConfig = field(default_factory=GeneratorConfig)
    sample: SampleConfig = field(default_factory=SampleConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    run: RunConfig = field(default_factory=RunConfig)

    SECTIONS = ("oracle", "sample", "policy", "learner", "run")

    def validate(self, oracle: OracleGraph | None = None) -> None:
        self.oracle.validate()
        self.sample.validate()
        self.policy.validate()
        if self.run.budget < 1:
            raise ValueError("budget must be >= 1")
        if oracle is not None and self.run.budget > oracle.node_count:
            raise ValueError(f"budget {self.run.budget} exceeds oracle size {oracle.node_count}")

    def set(self, dotted: str, value) -> None:
        """Override ``section.key`` with a raw or typed value."""
        section, _, key = dotted.partition(".")
        if section not in self.SECTIONS or not key:
            raise KeyError(f"bad config key {dotted!r}; use section.key")
        obj = getattr(self, section)
        fields = {f.name.lower(): f.name for f in dataclasses.fields(obj)}
        key = fields.get(key.lower(), key)
        if key not in fields.values() or key == "meta":
            if section == "oracle":
                self.oracle.meta[key] = value
                return
            raise KeyError(f"unknown key {dotted!r}")
        setattr(obj, key, _coerce(value, getattr(obj, key)))

    def to_ini(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        for section in self.SECTIONS:
            obj = getattr(self, section)
            items = {}
            for f in dataclasses.fields(obj):
                val = getattr(obj, f.name)
                if f.name == "meta":
                    items.update({k: str(v) for k, v in val.items()})
                elif val is not None:
                    items[f.name] = str(val)
            parser[section] = items
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser.read_string(text)
        cfg = cls()
        for section in parser.sections():
            if section not in cls.SECTIONS:
                raise KeyError(f"unknown config section [{section}]")
            for key, value in parser[section].items():
                cfg.set(f"{section}.{key}", value)
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_ini(Path(path).read_text())


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(value, current):
    if not isinstance(value, str):
        return value
    kind = type(current) if current is not None else str
    if kind is bool:
        v = value.strip().lower()
        if v in _TRUE:
            return True
        if v in _FALSE:
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if kind is int:
        return int(value)
    if kind is float:
        return float(value)
    return value.strip()


# --- traces -------------------------------------------------------------------

@dataclass
class TraceRow:
    """State after ``t`` probes.

    ``epsilon`` is the jump rate in force for the next probe, so it equals
    the rate at step ``t``; ``explored`` describes probe ``t`` itself.
    """

    t: int
    node: Optional[int]
    reward: int
    cum_reward: int
    prediction: Optional[float]
    pred_error: Optional[float]
    epsilon: float
    explored: bool
    n_observed_nodes: int
    n_observed_edges: int
    theta: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None


@dataclass
class ExperimentTrace:
    trial: int
    seed: int
    rows: list = field(default_factory=list)
    status: str = "complete"

    @property
    def budget_used(self) -> int:
        return len(self.rows) - 1

    @property
    def cum_reward(self) -> np.ndarray:
        return np.array([r.cum_reward for r in self.rows], dtype=float)

    @property
    def errors(self) -> np.ndarray:
        return np.array([np.nan if r.pred_error is None else r.pred_error for r in self.rows])

    @property
    def final_cum_reward(self) -> int:
        return self.rows[-1].cum_reward


def prediction_error(prediction: float, reward: float) -> float:
    """Signed error of a reward prediction."""
    return prediction - reward


def _seed_streams(seed: int):
    samp, explore, learn = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(samp), np.random.default_rng(explore),
            np.random.default_rng(learn))


def run_trial(cfg: ExperimentConfig, seed: int, oracle: OracleGraph | None = None,
              trial: int = 0, check: bool = False) -> ExperimentTrace:
    """Run one budgeted probing experiment.

    ``check`` asserts the per-step invariants (feature ranges, no repeat
    probes, reward accounting) while running.
    """
    oracle = oracle if oracle is not None else build_oracle(cfg.oracle)
    cfg.validate(oracle)
    pol, lcfg, b = cfg.policy, cfg.learner, cfg.run.budget
    rng_sample, rng_explore, rng_learn = _seed_streams(seed)

    state = sample(oracle, cfg.sample, rng_sample)
    if pol.learned:
        model = LearnerModel(init_theta(rng_learn, lcfg.init), alpha=lcfg.alpha,
                             k_policy=lcfg.k_policy, lam=lcfg.lam, buffer_cap=lcfg.buffer_cap)
    elif pol.kind == "KNN_UCB":
        model = KnnHistory()
    else:
        model = None

    trace = ExperimentTrace(trial=trial, seed=seed)
    trace.rows.append(TraceRow(0, None, 0, 0, None, None, policy_epsilon(pol, 0, b), False,
                               state.n_observed, state.n_edges,
                               model.theta.copy() if pol.learned else None))
    cum = 0
    for t in range(b):
        try:
            choice = select_next(pol, state, model, t, b, rng_explore, rng_learn)
        except NoCandidatesError:
            trace.status = f"exhausted at step {t + 1}"
            log.warning("trial %d: candidate pool exhausted at step %d", trial, t + 1)
            break
        if check:
            _check_step(state, choice)
        prediction = None if choice.phi is None else float(model.theta @ choice.phi)
        before = state.n_observed
        reward = probe(oracle, state, choice.node)
        if check:
            assert state.n_observed - before == reward

        if pol.kind == "NOL":
            nol_update(model, choice.phi, reward)
        elif pol.kind == "NOL_HTR":
            append_sample(model, choice.phi, reward)
            X, Y = model.arrays()
            model.theta = htr_fit(X, Y, k_from_policy(model.k_policy, len(Y)), model.lam, rng_learn)
        elif pol.kind == "KNN_UCB":
            model.add(choice.x, reward)
        if pol.learned and not np.all(np.isfinite(model.theta)):
            raise FloatingPointError(f"non-finite parameters at step {t + 1}")

        cum += reward
        trace.rows.append(TraceRow(
            t + 1, choice.node, reward, cum, prediction,
            None if prediction is None else prediction_error(prediction, reward),
            policy_epsilon(pol, t + 1, b), choice.explored, state.n_observed, state.n_edges,
            model.theta.copy() if pol.learned else None, choice.phi))
    return trace


def _check_step(state, choice):
    assert state.observed[choice.node] and not state.probed[choice.node], "bad selection"
    phi = feature_matrix(state, state.candidates())
    assert np.all(np.isfinite(phi))
    assert np.all((phi >= 0.0) & (phi <= 1.0)), "feature out of range"
    assert np.all(phi[:, 2] > 0.0)


def run_experiment(cfg: ExperimentConfig, oracle: OracleGraph | None = None,
                   check: bool = False) -> list[ExperimentTrace]:
    """One oracle realisation, ``trials`` independent initial samples."""
    oracle = oracle if oracle is not None else build_oracle(cfg.oracle)
    return [run_trial(cfg, cfg.run.base_seed + i, oracle, trial=i, check=check)
            for i in range(cfg.run.trials)]


# --- aggregation --------------------------------------------------------------

@dataclass
class Summary:
    t: np.ndarray
    mean_cum_reward: np.ndarray
    std_cum_reward: np.ndarray
    mean_cum_abs_err: Optional[np.ndarray]
    std_cum_abs_err: Optional[np.ndarray]
    n_traces: int

    @property
    def final_mean(self) -> float:
        return float(self.mean_cum_reward[-1])

    @property
    def final_std(self) -> float:
        return float(self.std_cum_reward[-1])


def cumulative_abs_error(trace: ExperimentTrace, start: int = 1) -> np.ndarray:
    """Running sum of |E(t)| over rows ``t >= start``; zero before ``start``."""
    err = np.abs(trace.errors)
    err[: max(start, 1)] = 0.0
    return np.cumsum(np.nan_to_num(err))


def _mean_std(mat: np.ndarray):
    mean = mat.mean(axis=0)
    std = mat.std(axis=0, ddof=1) if len(mat) > 1 else np.zeros(mat.shape[1])
    return mean, std


def aggregate(traces: Sequence[ExperimentTrace], err_start: int = 1) -> Summary:
    """Per-step mean and sample standard deviation across equal-length traces."""
    if not traces:
        raise ValueError("no traces")
    lengths = {len(tr.rows) for tr in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces have unequal lengths {sorted(lengths)}")
    cum = np.stack([tr.cum_reward for tr in traces])
    mean, std = _mean_std(cum)
    has_err = any(r.pred_error is not None for r in traces[0].rows)
    if has_err:
        emean, estd = _mean_std(np.stack([cumulative_abs_error(tr, err_start) for tr in traces]))
    else:
        emean = estd = None
    return Summary(np.arange(cum.shape[1]), mean, std, emean, estd, len(traces))


# --- sweeps and gains ---------------------------------------------------------

@dataclass
class SweepCell:
    k: object
    epsilon0: float
    decay: bool
    status: str
    summary: Optional[Summary] = None

    @property
    def final_mean(self) -> float:
        return self.summary.final_mean if self.summary is not None else float("nan")


def sweep(base_cfg: ExperimentConfig, k_grid=DEFAULT_K_GRID, epsilon_grid=DEFAULT_EPS_GRID,
          oracle: OracleGraph | None = None) -> list[SweepCell]:
    """NOL-HTR over the (k, epsilon) grid; failing cells are kept and marked."""
    if not k_grid or not epsilon_grid:
        raise ValueError("empty grid")
    oracle = oracle if oracle is not None else build_oracle(base_cfg.oracle)
    cells = []
    for k, (eps, decay) in itertools.product(k_grid, epsilon_grid):
        cfg = copy.deepcopy(base_cfg)
        cfg.policy.kind = "NOL_HTR"
        cfg.learner.k = str(k)
        cfg.policy.epsilon0 = float(eps)
        cfg.policy.decay = bool(decay)
        try:
            summary = aggregate(run_experiment(cfg, oracle))
            cells.append(SweepCell(k, eps, decay, "ok", summary))
        except Exception as exc:  # recorded per cell
            log.warning("sweep cell k=%s eps=%s decay=%s failed: %s", k, eps, decay, exc)
            cells.append(SweepCell(k, eps, decay, f"failed: {exc}"))
    return cells


def best_cell(cells: Sequence[SweepCell]) -> SweepCell:
    ok = [c for c in cells if c.summary is not None]
    if not ok:
        raise ValueError("every sweep cell failed")
    return max(ok, key=lambda c: c.final_mean)


def performance_gain(c_htr: float, c_base: float) -> float:
    """Percent change of ``c_htr`` relative to ``c_base``."""
    if not c_base > 0:
        raise ValueError(f"baseline reward must be positive, got {c_base}")
    return (c_htr - c_base) / c_base * 100.0


# --- CSV output -----------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return ""
        return repr(float(v))
    return str(int(v)) if isinstance(v, (np.integer,)) else str(v)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_results(traces: Sequence[ExperimentTrace], path) -> None:
    _write_csv(path, RESULT_COLUMNS, (
        (tr.trial, r.t, r.node, r.reward, r.cum_reward, r.prediction, r.pred_error,
         r.epsilon, r.explored, r.n_observed_nodes, r.n_observed_edges)
        for tr in traces for r in tr.rows))


def write_weights(traces: Sequence[ExperimentTrace], path) -> None:
    _write_csv(path, WEIGHT_COLUMNS, (
        (tr.trial, r.t, *r.theta.tolist()) for tr in traces for r in tr.rows if r.theta is not None))


def write_features(traces: Sequence[ExperimentTrace], path) -> None:
    _write_csv(path, FEATURE_COLUMNS, (
        (tr.trial, r.t, r.node, *r.phi.tolist()) for tr in traces for r in tr.rows if r.phi is not None))


def write_summary(summary: Summary, path) -> None:
    def rows():
        for i, t in enumerate(summary.t):
            e = (None, None) if summary.mean_cum_abs_err is None else \
                (summary.mean_cum_abs_err[i], summary.std_cum_abs_err[i])
            yield (t, summary.mean_cum_reward[i], summary.std_cum_reward[i], *e)
    _write_csv(path, SUMMARY_COLUMNS, rows())


def write_sweep(cells: Sequence[SweepCell], path) -> None:
    best = best_cell(cells) if any(c.summary is not None for c in cells) else None
    _write_csv(path, ("k", "epsilon0", "decay", "status", "mean_final_cum_reward",
                      "std_final_cum_reward", "best"), (
        (c.k, c.epsilon0, c.decay, c.status,
         None if c.summary is None else c.summary.final_mean,
         None if c.summary is None else c.summary.final_std, c is best) for c in cells))


def read_final_rewards(path) -> dict[int, float]:
    """Final cumulative reward per trial from a results CSV."""
    finals: dict[int, tuple[int, float]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            trial, t = int(row["trial"]), int(row["t"])
            if trial not in finals or t > finals[trial][0]:
                finals[trial] = (t, float(row["cum_reward"]))
    if not finals:
        raise ValueError(f"{path}: no result rows")
    return {k: v[1] for k, v in finals.items()}


def gain_report(htr_path, base_path) -> dict:
    c_htr = float(np.mean(list(read_final_rewards(htr_path).values())))
    c_base = float(np.mean(list(read_final_rewards(base_path).values())))
    return {"htr_file": str(htr_path), "base_file": str(base_path), "c_htr": c_htr,
            "c_base": c_base, "gain_percent": performance_gain(c_htr, c_base)}
