"""Command-line entry point: ``knnucb {run,sweep,probe,hard-instance,mnist}``.

Every output file starts with ``# key = value`` lines holding the fully
resolved config (enough to rerun it) and ``## key = value`` metadata lines.
Floats are written with ``repr`` so reruns are byte-identical. Files are
written to temporaries and renamed only when the whole command succeeds.
"""

import argparse
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .dataset import IdxParseError, load_labeled_images
from .hard_instance import InfeasibleInstanceError
from .probes import DegenerateProbeError, margin_probe, tail_exponent_probe, tail_u_grid
from .simulate import FitError, TrialError, config_digest, fit_regret_exponent, run_experiment

AGGREGATE_HEADER = "t,mean_cum_regret,std_cum_regret,n_trials"
PER_TRIAL_HEADER = "trial,t,action,inst_regret,cum_regret"


class CliError(RuntimeError):
    pass


class Outputs:
    """Collects output files and publishes them together on success."""

    def __init__(self):
        self._pending = []

    def write(self, path, text):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        self._pending.append((tmp, path))
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)

    def commit(self):
        for tmp, path in self._pending:
            os.replace(tmp, path)
        self._pending = []

    def discard(self):
        for tmp, _ in self._pending:
            try:
                os.unlink(tmp)
            except FileNotFoundError:
                pass
        self._pending = []


def fmt(x):
    return repr(float(x))


def header(cfg, meta):
    lines = [f"# {line}" for line in cfgmod.format_config(cfg).splitlines()]
    lines += [f"## {k} = {v}" for k, v in meta.items()]
    return "\n".join(lines) + "\n"


def aggregate_csv(result, cfg, meta):
    rows = [AGGREGATE_HEADER]
    n = result.n_trials
    rows += [f"{t},{fmt(m)},{fmt(s)},{n}" for t, (m, s) in enumerate(zip(result.mean, result.std), 1)]
    return header(cfg, meta) + "\n".join(rows) + "\n"


def per_trial_csv(result, cfg, meta):
    rows = [PER_TRIAL_HEADER]
    for i, tr in enumerate(result.traces):
        rows += [
            f"{i},{t},{a},{fmt(r)},{fmt(c)}"
            for t, (a, r, c) in enumerate(zip(tr.actions, tr.inst, tr.cum), 1)
        ]
    return header(cfg, meta) + "\n".join(rows) + "\n"


def sibling(path, suffix):
    path = Path(path)
    return path.with_name(path.stem + suffix)


def _key_of(line):
    return line.split("=", 1)[0].strip() if "=" in line else None


def load_config(args, command):
    text = Path(args.config).read_text(encoding="utf-8")
    # --images/--labels replace the file's mnist.images/mnist.labels
    overrides = {
        key: value
        for key, value in (("mnist.images", getattr(args, "images", None)), ("mnist.labels", getattr(args, "labels", None)))
        if value
    }
    if overrides:
        lines = [ln for ln in text.splitlines() if _key_of(ln) not in overrides]
        lines += [f"{k} = {v}" for k, v in overrides.items()]
        text = "\n".join(lines) + "\n"
    cfg = cfgmod.parse_config(text, command)
    out = args.out or cfg.output.path
    if not out:
        raise CliError("no output path: pass --out or set output.path")
    return cfg, out


def experiment_meta(command, cfg, result, env):
    meta = {"command": command, "digest": config_digest(cfgmod.format_config(cfg)), "environment": env.name}
    meta.update({k: v for k, v in result.meta.items() if k != "resolved"})
    meta["final_mean_cum_regret"] = fmt(result.final_mean)
    meta["final_stderr"] = fmt(result.final_stderr)
    return meta


def _run(cfg, out, outputs, threads, per_trial, command, env=None):
    if env is None:
        env = cfgmod.build_environment(cfg)
    per_trial = per_trial or cfg.output.per_trial
    result = run_experiment(cfg, threads=threads, keep_traces=per_trial, env=env)
    resolved = result.meta["resolved"]
    meta = experiment_meta(command, resolved, result, env)
    outputs.write(out, aggregate_csv(result, resolved, meta))
    if per_trial:
        outputs.write(sibling(out, ".trials.csv"), per_trial_csv(result, resolved, meta))
    return result


def cmd_run(args, outputs):
    cfg, out = load_config(args, "run")
    result = _run(cfg, out, outputs, args.threads, args.per_trial, "run")
    return f"{out}: final mean cumulative regret {result.final_mean:.4f} (se {result.final_stderr:.4f})"


def cmd_mnist(args, outputs):
    cfg, out = load_config(args, "mnist")
    if not cfg.mnist.images or not cfg.mnist.labels:
        raise CliError("mnist needs image and label paths (--images/--labels or mnist.images/mnist.labels)")
    cfg = cfgmod.replace(cfg, **{"env.kind": "mnist"})
    images = load_labeled_images(cfg.mnist.images, cfg.mnist.labels, cfg.mnist.limit)
    env = cfgmod.build_environment(cfg, image_set=images)
    result = _run(cfg, out, outputs, args.threads, args.per_trial, "mnist", env=env)
    return f"{out}: {len(images)} images, final mean cumulative regret {result.final_mean:.4f}"


def cmd_sweep(args, outputs):
    cfg, out = load_config(args, "sweep")
    env = cfgmod.build_environment(cfg) if cfg.env.kind != "hard" else None
    finals = {}
    rows = ["T,mean_final_cum_regret,std_final_cum_regret,n_trials"]
    for T in cfg.sweep.horizons:
        sub = cfgmod.replace(cfg, **{"run.T": T})
        result = _run(sub, sibling(out, f"_T{T}.csv"), outputs, args.threads, args.per_trial, "sweep", env=env)
        finals[T] = result.final_mean
        rows.append(f"{T},{fmt(result.final_mean)},{fmt(result.std[-1])},{result.n_trials}")
    meta = {"command": "sweep", "digest": config_digest(cfgmod.format_config(cfg))}
    try:
        slope = fit_regret_exponent(finals)
        meta["slope"] = fmt(slope)
    except FitError as exc:
        slope = None
        meta["slope"] = f"unavailable ({exc})"
    outputs.write(out, header(cfg, meta) + "\n".join(rows) + "\n")
    return f"{out}: regret exponent {meta['slope']}"


def cmd_probe(args, outputs):
    cfg, out = load_config(args, "probe")
    p = cfg.probe
    env = cfgmod.build_environment(cfg)
    pilot_seed, probe_seed = np.random.SeedSequence(p.seed).spawn(2)
    if p.kind == "tail":
        probs = np.geomspace(p.p_lo, p.p_hi, p.points)
        u = tail_u_grid(env.distribution, np.random.default_rng(pilot_seed), probs)
        res = tail_exponent_probe(env.distribution, u, p.samples, np.random.default_rng(probe_seed))
    else:
        if p.action >= env.num_actions:
            raise CliError(f"probe.action {p.action} out of range for {env.num_actions} actions")
        u = np.geomspace(p.u_min, p.u_max, p.points)
        res = margin_probe(env.family, env.distribution, p.action, u, p.samples, np.random.default_rng(probe_seed))
    slope = "none" if res.slope is None else fmt(res.slope)
    meta = {"command": "probe", "kind": p.kind, "distribution": repr(env.distribution), "slope": slope}
    rows = ["u,estimate,stderr"] + [f"{fmt(a)},{fmt(b)},{fmt(c)}" for a, b, c in zip(res.u, res.estimate, res.stderr)]
    outputs.write(out, header(cfg, meta) + "\n".join(rows) + "\n")
    return f"{out}: {p.kind} probe slope {slope}"


def cmd_hard_instance(args, outputs):
    cfg, out = load_config(args, "hard-instance")
    spec = cfgmod.build_hard_spec(cfg)
    outputs.write(out, spec.to_json() + "\n")
    rows = ["constraint,lhs,rhs,satisfied"]
    rows += [f"{name},{fmt(lhs)},{fmt(rhs)},{str(ok).lower()}" for name, (lhs, rhs, ok) in spec.constraints.items()]
    meta = {
        "command": "hard-instance",
        "K": spec.num_margin_balls_K,
        "B": spec.num_balls_B,
        "h": fmt(spec.radius_h),
        "m": fmt(spec.tail_mass_m),
    }
    outputs.write(sibling(out, ".constraints.csv"), header(cfg, meta) + "\n".join(rows) + "\n")
    return f"{out}: {spec.variant} instance, K={spec.num_margin_balls_K}, B={spec.num_balls_B}, all constraints satisfied"


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "probe": cmd_probe,
    "hard-instance": cmd_hard_instance,
    "mnist": cmd_mnist,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="knnucb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat section.key = value config file")
        p.add_argument("--out", help="output path (overrides output.path)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for trials")
        p.add_argument("--per-trial", action="store_true", help="also write the per-trial CSV")
        if name == "mnist":
            p.add_argument("--images", help="IDX image file")
            p.add_argument("--labels", help="IDX label file")
    return parser


EXPECTED_ERRORS = (
    CliError,
    cfgmod.ConfigError,
    IdxParseError,
    InfeasibleInstanceError,
    DegenerateProbeError,
    TrialError,
    OSError,
    ValueError,
)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("knnucb: --threads must be >= 1", file=sys.stderr)
        return 2
    outputs = Outputs()
    try:
        message = COMMANDS[args.command](args, outputs)
        outputs.commit()
    except EXPECTED_ERRORS as exc:
        outputs.discard()
        print(f"knnucb {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except BaseException:
        outputs.discard()
        raise
    print(message)
    return 0


if __name__ == "__main__":
    sys.exit(main())
