"""Trial loops over random unitaries, aggregation over trials, and figure protocols."""
from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .estimator import VARIANTS, EstimateReport, estimate
from .haar import sample_haar_batch, seeded_rng
from .measurement import MeasurementScenario, build_scenario, probabilities_batch, sample_counts
from .moments import MomentAccumulator
from .oracle import shift_operator_value
from .states import StateEnsembleSpec, mean_state, state_from_dict, state_to_dict, trace_powers

log = logging.getLogger(__name__)

# rng stream tags; each trial t uses (seed, tag, t)
_STATE_STREAM, _UNITARY_STREAM, _SHOT_STREAM = 1, 2, 3


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: MeasurementScenario
    state: StateEnsembleSpec
    n_rand: int = 30
    trials: int = 1
    pool_k: bool = True
    pool_mode: str = "moments"  # or "estimates": invert per outcome, then average
    variants: tuple = ("tilde-exact",)
    seed: int = 0
    outcome: int = 0
    fresh_state: bool = False

    def __post_init__(self):
        if self.n_rand < 2:
            raise ConfigError("n_rand must be at least 2")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.pool_mode not in ("moments", "estimates"):
            raise ConfigError(f"unknown pool_mode {self.pool_mode!r}")
        if not self.variants:
            raise ConfigError("at least one estimator variant is required")
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}; choose from {VARIANTS}")
        if not 0 <= self.outcome < self.scenario.M:
            raise ConfigError(f"outcome index {self.outcome} outside 0..{self.scenario.M - 1}")
        if 0 < self.scenario.shots < 4:
            raise ConfigError("finite-shot mode needs at least 4 shots")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @property
    def outcomes(self) -> list[int]:
        return list(range(self.scenario.M)) if self.pool_k else [self.outcome]

    def to_dict(self) -> dict:
        sc, st = self.scenario, self.state
        return {
            "scenario": {"kind": sc.kind, "M": sc.M, "N": sc.N, "shots": sc.shots},
            "state": {"kind": st.kind, "exponent": st.exponent,
                      "components": [state_to_dict(c) for c in st.components]},
            "n_rand": self.n_rand, "trials": self.trials, "pool_k": self.pool_k,
            "pool_mode": self.pool_mode, "variants": list(self.variants), "seed": self.seed,
            "outcome": self.outcome, "fresh_state": self.fresh_state,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        try:
            sc = d.pop("scenario")
            st = d.pop("state")
        except KeyError as exc:
            raise ConfigError(f"config is missing {exc}") from None
        if "M" in sc:
            scenario = MeasurementScenario(sc["kind"], int(sc["M"]), int(sc["N"]), int(sc.get("shots", 0)))
        else:
            scenario = build_scenario(sc["kind"], qubits=sc.get("qubits"), dim=sc.get("dim"),
                                      ancillas=sc.get("ancillas"), embed=sc.get("embed"),
                                      shots=int(sc.get("shots", 0)))
        comps = tuple(state_from_dict(c) for c in st.get("components", ()))
        state = StateEnsembleSpec(st["kind"], st.get("exponent"), comps)
        if "variants" in d:
            d["variants"] = tuple(d["variants"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        return cls(scenario=scenario, state=state, **d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class TrialResult:
    trial: int
    reports: dict  # variant -> EstimateReport
    true_p: tuple
    accumulator: MomentAccumulator | None = None


@dataclass
class VariantSummary:
    variant: str
    mean: np.ndarray
    std: np.ndarray
    pooled: EstimateReport | None  # estimate from all trials' data merged (fixed state only)
    deviation_mean: np.ndarray  # mean of p_hat - p_true over trials
    deviation_se: np.ndarray
    rms_error: np.ndarray


@dataclass
class RunSummary:
    config: ExperimentConfig
    trials: list
    variants: dict  # variant -> VariantSummary
    true_p: tuple | None  # when the state is the same in every trial
    extra: dict = field(default_factory=dict)

    def estimates(self, variant: str) -> np.ndarray:
        return np.array([t.reports[variant].p_hat for t in self.trials])

    def truths(self) -> np.ndarray:
        return np.array([t.true_p for t in self.trials])


def _trial_states(config: ExperimentConfig, trial: int):
    idx = trial if config.fresh_state else 0
    rng = seeded_rng(config.seed, _STATE_STREAM, idx)
    return config.state.draw(config.scenario.M, rng)


def _shot_split(shots, n_comp):
    base, extra = divmod(shots, n_comp)
    return [base + (c < extra) for c in range(n_comp)]


def run_trial(config: ExperimentConfig, trial: int) -> tuple[list, MomentAccumulator]:
    """Simulate one trial: ``n_rand`` unitaries, accumulated moments of the selected outcomes.

    With several source states (alternating source) each unitary sees copies
    cycling through the components, so exact probabilities are the
    component average and finite shots are split round-robin.
    """
    sc = config.scenario
    states = _trial_states(config, trial)
    us = sample_haar_batch(sc.N, config.n_rand, seeded_rng(config.seed, _UNITARY_STREAM, trial))
    probs = [probabilities_batch(s.data, us) for s in states]
    sel = config.outcomes
    acc = MomentAccumulator(len(sel))
    if sc.shots == 0:
        acc.absorb_exact(np.mean(probs, axis=0)[:, sel])
    else:
        rng = seeded_rng(config.seed, _SHOT_STREAM, trial)
        counts = sum(sample_counts(p, s, rng) for p, s in zip(probs, _shot_split(sc.shots, len(probs))) if s)
        acc.absorb_counts(counts[:, sel], sc.shots)
    return states, acc


def _estimate_trial(config, acc, metadata=None):
    table = acc.table()
    N, M = config.scenario.N, config.scenario.M
    out = {}
    for v in config.variants:
        if config.pool_mode == "moments" or table.M == 1:
            out[v] = estimate(table, v, N=N, M=M, metadata=metadata)
        else:
            per = [estimate(table.column(k), v, N=N, M=M, n_rand=table.count) for k in range(table.M)]
            p = np.array([r.p_hat for r in per])
            rep = per[0]
            rep.p_hat = p.mean(axis=0)
            rep.empirical_err = p.std(axis=0, ddof=1) / np.sqrt(len(per))
            rep.N_used = float(np.mean([r.N_used for r in per]))
            rep.metadata = dict(metadata or {})
            out[v] = rep
    return out


def _trial_worker(args):
    config, trial = args
    states, acc = run_trial(config, trial)
    truth = tuple(trace_powers(mean_state(states)))
    return TrialResult(trial, _estimate_trial(config, acc, {"seed": config.seed, "trial": trial}), truth, acc)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> RunSummary:
    """Run all trials and aggregate.

    Results do not depend on ``workers``: each trial's random streams are keyed
    by its index.
    """
    jobs = [(config, t) for t in range(config.trials)]
    if workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_worker, jobs, chunksize=max(1, config.trials // (4 * workers))))
    else:
        results = [_trial_worker(j) for j in jobs]
    log.info("ran %d trials of %d unitaries", config.trials, config.n_rand)

    fixed = not (config.fresh_state and config.state.random)
    truths = np.array([r.true_p for r in results])
    pooled_acc = None
    if fixed:
        pooled_acc = results[0].accumulator
        for r in results[1:]:
            pooled_acc = pooled_acc.merge(r.accumulator)
    variants = {}
    for v in config.variants:
        est = np.array([r.reports[v].p_hat for r in results])
        dev = est - truths
        n = len(results)
        std = est.std(axis=0, ddof=1) if n > 1 else np.full(3, np.nan)
        dse = dev.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.full(3, np.nan)
        pooled = None
        if pooled_acc is not None and pooled_acc.count >= 2:
            pooled = _estimate_trial(config, pooled_acc, {"seed": config.seed, "pooled": True})[v]
        variants[v] = VariantSummary(v, est.mean(axis=0), std, pooled, dev.mean(axis=0), dse,
                                     np.sqrt(np.mean(dev ** 2, axis=0)))
    return RunSummary(config, results, variants, tuple(truths[0]) if fixed else None)


@dataclass
class NonIdenticalReport:
    summary: RunSummary
    target: tuple  # Tr(mean_state^n), n = 2..4
    shift_values: tuple  # cyclic-shift value on consecutive copies, n = 2..4

    def lines(self):
        for v, vs in self.summary.variants.items():
            est = vs.pooled.p_hat if vs.pooled is not None else vs.mean
            err = vs.pooled.empirical_err if vs.pooled is not None else vs.std
            yield (f"{v}: p2={est[0]:.6f}±{err[0]:.2g} p3={est[1]:.6f}±{err[1]:.2g} "
                   f"p4={est[2]:.6f}±{err[2]:.2g}")
        yield "random-method target Tr(mean rho^n): " + " ".join(f"{x:.6f}" for x in self.target)
        yield "joint shift-operator value:          " + " ".join(f"{x:.6f}" for x in self.shift_values)


def consecutive_shift_values(components: Sequence) -> tuple:
    """Average of ``Tr(rho_j rho_{j+1} .. rho_{j+n-1})`` over start positions ``j`` of the cycle."""
    J = len(components)
    out = []
    for n in (2, 3, 4):
        vals = [shift_operator_value([components[(j + i) % J] for i in range(n)]) for j in range(J)]
        out.append(float(np.mean(vals)))
    return tuple(out)


def run_nonidentical_source(config: ExperimentConfig, workers: int = 1) -> NonIdenticalReport:
    if config.state.kind not in ("alternating-source", "explicit"):
        raise ConfigError("non-identical source runs need an alternating-source state")
    comps = list(config.state.components)
    summary = run_experiment(config, workers=workers)
    target = tuple(trace_powers(mean_state(comps)))
    return NonIdenticalReport(summary, target, consecutive_shift_values(comps))


# -- figure protocols -------------------------------------------------------

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5")


def figure_config(which: str, seed: int = 0, trials: int | None = None, qubits: int | None = None,
                  variants: tuple | None = None) -> ExperimentConfig:
    """Configuration for one figure protocol (fig5 takes the qubit count per point)."""
    if which in ("fig1", "fig2"):
        return ExperimentConfig(build_scenario("bare-qubits", qubits=2), StateEnsembleSpec("pure-random"),
                                n_rand=100, trials=trials or 100, pool_k=False,
                                variants=variants or ("bar-exact", "tilde-exact"), seed=seed)
    if which in ("fig3", "fig4"):
        q, e = (2, 2.0) if which == "fig3" else (5, 8.0)
        return ExperimentConfig(build_scenario("bare-qubits", qubits=q),
                                StateEnsembleSpec("footnote-diagonal", e), n_rand=30,
                                trials=trials or 200, pool_k=True,
                                variants=variants or ("tilde-exact", "bar-exact"), seed=seed,
                                fresh_state=True)
    if which == "fig5":
        return ExperimentConfig(build_scenario("bare-qubits", qubits=qubits or 2),
                                StateEnsembleSpec("pure-random"), n_rand=30, trials=trials or 200,
                                pool_k=True, variants=variants or ("tilde-exact",), seed=seed,
                                fresh_state=True)
    raise ConfigError(f"unknown figure {which!r}; choose from {FIGURES}")


@dataclass
class QubitScan:
    qubits: list
    summaries: list  # RunSummary per qubit count
    variant: str

    def std_table(self) -> np.ndarray:
        return np.array([s.variants[self.variant].std for s in self.summaries])


def run_qubit_scan(qubit_range: Sequence[int], seed: int = 0, trials: int = 200,
                   variant: str = "tilde-exact", workers: int = 1) -> QubitScan:
    """Spread of pure-state estimates against the number of qubits."""
    sums = []
    for q in qubit_range:
        cfg = figure_config("fig5", seed=seed, trials=trials, qubits=q, variants=(variant,))
        sums.append(run_experiment(cfg, workers=workers))
    return QubitScan(list(qubit_range), sums, variant)
