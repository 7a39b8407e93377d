"""Observation protocols: per-run perception, end-only perception, scattering waits.

Every trial draws from its own generator seeded by
``numpy.random.SeedSequence(seed, spawn_key=(trial,))``.  The child stream
depends only on (seed, trial), so any split of trials across workers gives
the same numbers as a sequential loop.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .branching import binomial_log_weights
from .core import ExperimentSpec
from .errors import InvalidArgument, KernelNotMonotone, ShapeMismatch, StepTooCoarse
from .kernels import PerceptionKernel, kernel_select, validate

MAX_STEP_PROPENSITY = 0.01
SEED_MASK = (1 << 64) - 1


def child_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed & SEED_MASK, spawn_key=(trial,)))


def _map_trials(fn: Callable[[int], np.ndarray], trials: int, threads: int) -> list:
    """Run ``fn`` over trial indices; output is in trial order whatever ``threads`` is."""
    if threads <= 1 or trials < 2:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials), chunksize=max(1, trials // (4 * threads))))


def _mean_and_se(values: np.ndarray) -> tuple[float, float]:
    mean = math.fsum(values) / len(values)
    if len(values) < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(len(values)))


@dataclass(frozen=True, eq=False)
class ProtocolResult:
    protocol: str
    spec: ExperimentSpec
    kernel_id: str
    runs: int
    trials: int
    per_trial_fractions: np.ndarray
    mean_fraction: float
    std_error: float
    seed: int
    selected_counts: tuple[int, ...] | None = None
    histogram: dict[int, int] | None = None
    mode: str | None = None

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProtocolResult):
            return NotImplemented
        return (
            self.protocol == other.protocol
            and self.spec == other.spec
            and self.kernel_id == other.kernel_id
            and (self.runs, self.trials, self.seed, self.mode) == (other.runs, other.trials, other.seed, other.mode)
            and np.array_equal(self.per_trial_fractions, other.per_trial_fractions)
            and self.mean_fraction == other.mean_fraction
            and self.std_error == other.std_error
            and self.selected_counts == other.selected_counts
            and self.histogram == other.histogram
        )

    def z_score(self, target: float) -> float:
        diff = self.mean_fraction - target
        if self.std_error == 0.0:
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / self.std_error


def run_per_run(
    spec: ExperimentSpec,
    kernel: PerceptionKernel,
    runs: int,
    trials: int,
    seed: int,
    threads: int = 1,
) -> ProtocolResult:
    """Perceive every run: each run selects outcome i with probability s-renormalized.

    The reported fraction is the frequency of the first outcome over the
    ``runs`` runs of one trial.
    """
    if runs < 1 or trials < 1:
        raise InvalidArgument(f"need runs >= 1 and trials >= 1, got {runs}, {trials}")
    probs = kernel_select(kernel, spec.outcome_norms)
    # outcome 0 is chosen when u < probs[0]
    threshold = float(probs[0])

    def one_trial(t: int) -> int:
        u = child_rng(seed, t).random(runs)
        return int(np.count_nonzero(u < threshold))

    hits = np.array(_map_trials(one_trial, trials, threads), dtype=np.int64)
    fractions = hits / runs
    fractions.setflags(write=False)
    mean, se = _mean_and_se(fractions)
    return ProtocolResult("per-run", spec, kernel.id, runs, trials, fractions, mean, se, seed)


def kernel_weights(kernel: PerceptionKernel, p: float, runs: int) -> np.ndarray:
    """Perception propensity of each aggregate branch m = 0..N."""
    return np.asarray(kernel(np.exp(binomial_log_weights(p, runs))), dtype=float)


def end_only_argmax(kernel: PerceptionKernel, p: float, runs: int) -> int:
    """m maximizing kernel(|A(m, N)|^2); smallest m on ties."""
    return int(np.argmax(kernel_weights(kernel, p, runs)))


def run_end_only(
    spec: ExperimentSpec,
    kernel: PerceptionKernel,
    runs: int,
    mode: str = "argmax",
    trials: int = 1,
    seed: int = 0,
    threads: int = 1,
) -> ProtocolResult:
    """Perceive only the N-run aggregate branch.

    ``argmax`` picks the branch with the largest kernel propensity.
    ``sample`` draws a branch per trial with probability proportional to its
    propensity.  Branch weights themselves are never altered.
    """
    if spec.k != 2:
        raise ShapeMismatch(f"end-only protocol needs K=2, got K={spec.k}")
    if runs < 10:
        raise InvalidArgument(f"runs must be >= 10, got {runs}")
    if trials < 1:
        raise InvalidArgument(f"trials must be >= 1, got {trials}")
    p = spec.outcome_norms[0]

    if mode == "argmax":
        report = validate(kernel)
        if not report.monotone:
            raise KernelNotMonotone("; ".join(report.failures()))
        m_star = end_only_argmax(kernel, p, runs)
        fractions = np.full(trials, m_star / runs)
        fractions.setflags(write=False)
        return ProtocolResult(
            "end-only", spec, kernel.id, runs, trials, fractions, m_star / runs, 0.0, seed,
            selected_counts=(m_star, runs - m_star), mode=mode,
        )
    if mode != "sample":
        raise InvalidArgument(f"mode must be 'argmax' or 'sample', got {mode!r}")

    w = kernel_weights(kernel, p, runs)
    if np.any(w < 0):
        raise KernelNotMonotone("kernel produced negative propensities")
    cdf = np.cumsum(w)
    cdf /= cdf[-1]

    def one_trial(t: int) -> int:
        m = int(np.searchsorted(cdf, child_rng(seed, t).random(), side="right"))
        return min(m, runs)

    picks = np.array(_map_trials(one_trial, trials, threads), dtype=np.int64)
    values, freq = np.unique(picks, return_counts=True)
    fractions = picks / runs
    fractions.setflags(write=False)
    mean, se = _mean_and_se(fractions)
    return ProtocolResult(
        "end-only", spec, kernel.id, runs, trials, fractions, mean, se, seed,
        histogram={int(v): int(c) for v, c in zip(values, freq)}, mode=mode,
    )


@dataclass(frozen=True)
class ProtocolComparison:
    per_run: ProtocolResult
    end_only_fraction: float
    born_prediction: float
    kernel_prediction: float

    @property
    def per_run_mean(self) -> float:
        return self.per_run.mean_fraction

    @property
    def z_born(self) -> float:
        return self.per_run.z_score(self.born_prediction)

    @property
    def z_kernel(self) -> float:
        return self.per_run.z_score(self.kernel_prediction)


def compare_protocols(
    spec: ExperimentSpec,
    kernel: PerceptionKernel,
    runs: int,
    trials: int,
    seed: int,
    threads: int = 1,
) -> ProtocolComparison:
    per_run = run_per_run(spec, kernel, runs, trials, seed, threads)
    end_only = run_end_only(spec, kernel, runs, "argmax", 1, seed)
    return ProtocolComparison(
        per_run=per_run,
        end_only_fraction=end_only.mean_fraction,
        born_prediction=spec.outcome_norms[0],
        kernel_prediction=float(kernel_select(kernel, spec.outcome_norms)[0]),
    )


@dataclass(frozen=True)
class ScatteringConfig:
    rate: float
    observed_norms: tuple[float, ...]
    dt: float
    trials: int
    seed: int

    def __post_init__(self) -> None:
        norms = tuple(float(p) for p in self.observed_norms)
        object.__setattr__(self, "observed_norms", norms)
        if not norms:
            raise InvalidArgument("need at least one observed angle")
        if any(not 0.0 < p < 1.0 for p in norms) or math.fsum(norms) >= 1.0:
            raise InvalidArgument("observed norms must lie in (0, 1) and sum below 1")
        if not self.dt > 0.0 or not self.rate > 0.0:
            raise InvalidArgument("rate and dt must be positive")
        if self.trials < 1:
            raise InvalidArgument("trials must be >= 1")
        step = self.rate * self.dt * max(norms)
        if step >= MAX_STEP_PROPENSITY:
            raise StepTooCoarse(f"R*dt*max(p) = {step!r} must stay below {MAX_STEP_PROPENSITY}")

    def step_norms(self) -> np.ndarray:
        return self.rate * self.dt * np.asarray(self.observed_norms)


@dataclass(frozen=True, eq=False)
class WaitingTimes:
    config: ScatteringConfig
    kernel_id: str
    waits: np.ndarray  # (trials, angles), seconds
    mean_wait: np.ndarray
    std_error: np.ndarray

    def ratio(self, i: int, j: int) -> float:
        """mean wait of angle j over mean wait of angle i."""
        return float(self.mean_wait[j] / self.mean_wait[i])


def simulate_waiting_times(cfg: ScatteringConfig, kernel: PerceptionKernel, threads: int = 1) -> WaitingTimes:
    """Time until the first perceived detection in each observed solid angle.

    Per step of length ``dt`` angle i is perceived independently with
    probability ``kernel(R dt p_i)``.  The step count to the first success of
    that Bernoulli sequence is drawn directly as a geometric variate.
    """
    q = np.array([kernel.eval(x) for x in cfg.step_norms()])
    if np.any(q <= 0.0):
        raise InvalidArgument("kernel gives zero per-step propensity")

    def one_trial(t: int) -> np.ndarray:
        return child_rng(cfg.seed, t).geometric(q)

    steps = np.array(_map_trials(one_trial, cfg.trials, threads), dtype=np.int64).reshape(cfg.trials, len(q))
    waits = steps * cfg.dt
    waits.setflags(write=False)
    mean = waits.mean(axis=0)
    if cfg.trials > 1:
        se = waits.std(axis=0, ddof=1) / math.sqrt(cfg.trials)
    else:
        se = np.zeros(len(q))
    return WaitingTimes(cfg, kernel.id, waits, mean, se)
