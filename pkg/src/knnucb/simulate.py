"""Trial loop, regret accounting and multi-trial aggregation.

Seeds: trial ``i`` of an experiment with master seed ``s`` uses
``SeedSequence(s, spawn_key=(i,))``. Its context, noise and policy streams are
the children with spawn keys ``(i, 0)``, ``(i, 1)`` and ``(i, 2)``. A trial's
draws therefore depend only on ``(s, i)``, never on execution order.
"""

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np


class TrialError(RuntimeError):
    def __init__(self, trial, cause):
        super().__init__(f"trial {trial} failed: {cause!r}")
        self.trial = trial
        self.__cause__ = cause


class FitError(ValueError):
    pass


@dataclass
class RegretTrace:
    inst: np.ndarray
    cum: np.ndarray
    actions: np.ndarray


@dataclass
class AggregateResult:
    mean: np.ndarray
    std: np.ndarray
    n_trials: int
    digest: str
    traces: list | None = None
    meta: dict = field(default_factory=dict)

    @property
    def stderr(self):
        return self.std / np.sqrt(self.n_trials)

    @property
    def final_mean(self):
        return float(self.mean[-1])

    @property
    def final_stderr(self):
        return float(self.stderr[-1])


def trial_seed(master_seed, trial):
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(trial),))


def stream(seed, which):
    """Child generator ``which`` (0 contexts, 1 noise, 2 policy) of a trial seed."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    child = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + (which,))
    return np.random.default_rng(child)


def run_trial(env, policy, T, seed, monitor=None):
    """Run one T-step interaction and return its regret trace.

    Instantaneous regret uses the true mean rewards, so it is noise-free.
    ``monitor(t, x, eta_t, policy)``, if given, runs after each act and
    before the matching observe.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    X, eta = env.draw(stream(seed, 0), T)
    noise = stream(seed, 1).standard_normal(T)
    sigma = env.sigma
    best = eta.max(axis=1)
    actions = np.empty(T, dtype=np.int64)
    inst = np.empty(T)
    for t in range(T):
        x = X[t]
        a = policy.act(x)
        if monitor is not None:
            monitor(t, x, eta[t], policy)
        y = eta[t, a] + sigma * noise[t] if sigma else eta[t, a]
        policy.observe(x, a, y)
        actions[t] = a
        inst[t] = best[t] - eta[t, a]
    return RegretTrace(inst, np.cumsum(inst), actions)


def aggregate(traces, digest=""):
    cum = np.stack([tr.cum for tr in traces])
    m = cum.shape[0]
    mean = cum.mean(axis=0)
    std = cum.std(axis=0, ddof=1) if m > 1 else np.zeros(cum.shape[1])
    return AggregateResult(mean, std, m, digest)


def run_trials(env, make_policy, T, trials, master_seed, threads=1, keep_traces=False, digest=""):
    """Run ``trials`` independent trials; ``make_policy(rng)`` builds a fresh policy.

    With ``threads > 1`` trials run on a thread pool. Results are collected by
    trial index, so the aggregate does not depend on the thread count.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def one(i):
        seed = trial_seed(master_seed, i)
        try:
            return run_trial(env, make_policy(stream(seed, 2)), T, seed)
        except Exception as exc:
            raise TrialError(i, exc) from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            traces = list(pool.map(one, range(trials)))
    else:
        traces = [one(i) for i in range(trials)]
    result = aggregate(traces, digest)
    if keep_traces:
        result.traces = traces
    return result


def config_digest(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def fit_regret_exponent(curves):
    """Least-squares slope of log(final cumulative regret) against log(T)."""
    if len(curves) < 3:
        raise FitError("need at least three horizons")
    T = np.array(sorted(curves), dtype=np.float64)
    R = np.array([curves[t] for t in sorted(curves)], dtype=np.float64)
    if np.any(R <= 0):
        raise FitError("regret must be positive at every horizon")
    return float(np.polyfit(np.log(T), np.log(R), 1)[0])


def run_experiment(config, threads=1, keep_traces=False, env=None):
    """Run the trials described by an ExperimentConfig.

    ``env`` overrides the configured environment (used for loaded image sets).
    When ``policy.bins`` (UCBogram) or ``policy.depth`` (ABSE) lists several
    values, each is run and the one with the lowest final mean regret is
    returned; ``meta`` records the choice.
    """
    from . import config as cfgmod

    if env is None:
        env = cfgmod.build_environment(config)
    config = cfgmod.resolve(config, env)
    best = None
    for key, value in cfgmod.policy_variants(config):
        variant = cfgmod.replace(config, **{key: value}) if key else config
        result = run_trials(
            env,
            cfgmod.policy_factory(variant, env),
            config.run.T,
            config.run.trials,
            config.run.seed,
            threads=threads,
            keep_traces=keep_traces,
            digest=config_digest(cfgmod.format_config(config)),
        )
        if key:
            result.meta[f"selected {key}"] = ",".join(str(v) for v in value)
        if best is None or result.final_mean < best.final_mean:
            best = result
    best.meta["resolved"] = config
    return best
