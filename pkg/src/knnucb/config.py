"""Flat ``section.key = value`` experiment configuration.

Example::

    run.T = 1000
    run.trials = 100
    run.seed = 7
    env.dist = cauchy
    env.reward = trig
    policy.kind = adaptive_knn

Unknown keys, malformed values and missing required keys are all reported
together. ``resolve`` fills every data-dependent default (k, L, sigma) so the
resolved text is enough to rerun an experiment exactly.
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import baselines, environments, hard_instance, policies

POLICY_KINDS = ("fixed_knn", "adaptive_knn", "ucbogram", "abse", "oracle", "random")
DISTRIBUTIONS = ("uniform", "gaussian", "t", "cauchy")
REWARDS = ("linear", "trig")


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


def _f(kind, default=None, choices=None, check=None, required=False):
    return field(default=default, metadata={"kind": kind, "choices": choices, "check": check, "required": required})


_pos = (lambda v: v > 0, "must be positive")
_nonneg = (lambda v: v >= 0, "must be nonnegative")
_pos_all = (lambda v: all(i > 0 for i in v), "entries must be positive")
_nonneg_all = (lambda v: all(i >= 0 for i in v), "entries must be nonnegative")
_prob = (lambda v: 0 < v < 1, "must lie in (0, 1)")
_u64 = (lambda v: 0 <= v < 2**64, "must be a 64-bit unsigned integer")


@dataclass
class RunSection:
    T: int = _f("int", check=_pos, required=True)
    trials: int = _f("int", 1, check=_pos)
    seed: int = _f("int", 0, check=_u64)


@dataclass
class EnvSection:
    kind: str = _f("str", "synthetic", choices=("synthetic", "hard", "mnist"))
    dim: int = _f("int", 1, check=_pos)
    dist: str = _f("str", "uniform", choices=DISTRIBUTIONS)
    dof: float = _f("float", 4.0, check=_pos)
    half_width: float = _f("float", 1.0, check=_pos)
    reward: str = _f("str", "linear", choices=REWARDS)
    sigma: float = _f("float", 0.5, check=_nonneg)


@dataclass
class PolicySection:
    kind: str = _f("str", choices=POLICY_KINDS, required=True)
    k: int = _f("int", check=_pos)
    k_rule: str = _f("str", "dim", choices=("dim", "alpha"))
    alpha: float = _f("float", check=_pos)
    L: float = _f("float", check=_pos)
    sigma: float = _f("float", check=_nonneg)
    conf_scale: float = _f("float", 1.0, check=_pos)
    bins: tuple = _f("intlist", (4, 8, 16, 32), check=_pos_all)
    clip: float = _f("float", 3.0, check=_pos)
    width_scale: float = _f("float", 1.0, check=_pos)
    depth: tuple = _f("intlist", (1, 2, 3, 4), check=_nonneg_all)
    abse_conf: float = _f("float", 1.0, check=_pos)


@dataclass
class OutputSection:
    path: str = _f("str")
    per_trial: bool = _f("bool", False)


@dataclass
class SweepSection:
    horizons: tuple = _f("intlist", check=_pos_all)


@dataclass
class ProbeSection:
    kind: str = _f("str", "tail", choices=("tail", "margin"))
    samples: int = _f("int", 1_000_000, check=(lambda v: v >= 10_000, "must be >= 10000"))
    p_lo: float = _f("float", 1e-4, check=_prob)
    p_hi: float = _f("float", 1e-2, check=_prob)
    points: int = _f("int", 12, check=(lambda v: v >= 2, "must be >= 2"))
    action: int = _f("int", 1, check=_nonneg)
    u_min: float = _f("float", 0.01, check=_pos)
    u_max: float = _f("float", 2.0, check=_pos)
    seed: int = _f("int", 0, check=_u64)


@dataclass
class HardSection:
    T: int = _f("int", check=(lambda v: v >= 2, "must be >= 2"))
    variant: str = _f("str", "bounded", choices=("bounded", "tailed"))
    alpha: float = _f("float", 1.0, check=_pos)
    C_alpha: float = _f("float", 1.0, check=_pos)
    beta: float = _f("float", 0.5, check=_pos)
    C_beta: float = _f("float", 1.0, check=_pos)
    seed: int = _f("int", 0, check=_u64)


@dataclass
class MnistSection:
    images: str = _f("str")
    labels: str = _f("str")
    limit: int = _f("int", 5000, check=_pos)


@dataclass
class ExperimentConfig:
    run: RunSection = field(default_factory=lambda: RunSection(T=None))
    env: EnvSection = field(default_factory=EnvSection)
    policy: PolicySection = field(default_factory=lambda: PolicySection(kind=None))
    output: OutputSection = field(default_factory=OutputSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    probe: ProbeSection = field(default_factory=ProbeSection)
    hard: HardSection = field(default_factory=HardSection)
    mnist: MnistSection = field(default_factory=MnistSection)


_SECTION_TYPES = {
    "run": RunSection,
    "env": EnvSection,
    "policy": PolicySection,
    "output": OutputSection,
    "sweep": SweepSection,
    "probe": ProbeSection,
    "hard": HardSection,
    "mnist": MnistSection,
}

REQUIRED_BY_COMMAND = {
    "run": ("run.T", "policy.kind"),
    "sweep": ("run.T", "policy.kind", "sweep.horizons"),
    "mnist": ("run.T", "policy.kind"),
    "probe": (),
    "hard-instance": (),
}


def _convert(kind, raw):
    if kind == "int":
        return int(raw, 10)
    if kind == "float":
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError("not finite")
        return value
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError("expected true/false")
    if kind == "intlist":
        items = tuple(int(p.strip(), 10) for p in raw.split(","))
        if not items:
            raise ValueError("empty list")
        return items
    return raw


def _format_value(kind, value):
    if kind == "bool":
        return "true" if value else "false"
    if kind == "intlist":
        return ",".join(str(v) for v in value)
    if kind == "float":
        return repr(float(value))
    return str(value)


def parse_config(text, command="run"):
    """Parse and validate config text; raise ConfigError listing every problem."""
    errors = []
    values = {name: {} for name in _SECTION_TYPES}
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'section.key = value'")
            continue
        key, raw = (s.strip() for s in stripped.split("=", 1))
        section, _, name = key.partition(".")
        stype = _SECTION_TYPES.get(section)
        fmap = {f.name: f for f in dataclasses.fields(stype)} if stype else {}
        if name not in fmap:
            errors.append(f"line {lineno}: unknown key {key}")
            continue
        if key in seen:
            errors.append(f"line {lineno}: duplicate key {key}")
            continue
        seen.add(key)
        meta = fmap[name].metadata
        try:
            value = _convert(meta["kind"], raw)
        except ValueError:
            errors.append(f"line {lineno}: {key}: cannot read {raw!r} as {meta['kind']}")
            continue
        if meta["choices"] and value not in meta["choices"]:
            errors.append(f"line {lineno}: {key} must be one of {', '.join(meta['choices'])}")
            continue
        if meta["check"] and not meta["check"][0](value):
            errors.append(f"line {lineno}: {key} {meta['check'][1]}")
            continue
        values[section][name] = value

    for req in REQUIRED_BY_COMMAND.get(command, ()):
        if req not in seen:
            errors.append(f"missing required key {req}")
    if errors:
        raise ConfigError(errors)

    sections = {}
    for sname, stype in _SECTION_TYPES.items():
        kwargs = {f.name: f.default for f in dataclasses.fields(stype)}
        kwargs.update(values[sname])
        sections[sname] = stype(**kwargs)
    cfg = ExperimentConfig(**sections)
    _cross_check(cfg, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def _cross_check(cfg, errors):
    if cfg.probe.p_lo >= cfg.probe.p_hi:
        errors.append("probe.p_lo must be below probe.p_hi")
    if cfg.probe.u_min >= cfg.probe.u_max:
        errors.append("probe.u_min must be below probe.u_max")
    if cfg.policy.k_rule == "alpha" and cfg.policy.alpha is None:
        errors.append("policy.k_rule = alpha needs policy.alpha")
    if cfg.env.kind == "hard" and cfg.hard.alpha > cfg.env.dim:
        errors.append("hard.alpha must not exceed env.dim")


def format_config(cfg):
    lines = []
    for sname, stype in _SECTION_TYPES.items():
        section = getattr(cfg, sname)
        for f in dataclasses.fields(stype):
            value = getattr(section, f.name)
            if value is None:
                continue
            lines.append(f"{sname}.{f.name} = {_format_value(f.metadata['kind'], value)}")
    return "\n".join(lines) + "\n"


def config_from_header(text):
    """Recover config text from the ``# key = value`` header of an output file."""
    out = []
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        if line.startswith("# ") and "=" in line:
            out.append(line[2:])
    return "\n".join(out) + "\n"


def replace(cfg, **changes):
    """Copy of cfg with dotted-key overrides, e.g. ``replace(cfg, **{"run.T": 500})``."""
    new = dataclasses.replace(cfg, **{s: dataclasses.replace(getattr(cfg, s)) for s in _SECTION_TYPES})
    for key, value in changes.items():
        section, name = key.split(".")
        setattr(getattr(new, section), name, value)
    return new


# -- building environments and policies ---------------------------------------


def build_distribution(env):
    if env.dist == "uniform":
        return environments.UniformBox(env.dim, env.half_width)
    if env.dist == "gaussian":
        return environments.StandardGaussian(env.dim)
    if env.dist == "t":
        return environments.StudentT(env.dim, env.dof)
    return environments.Cauchy(env.dim)


def build_hard_spec(cfg):
    h = cfg.hard
    T = h.T if h.T is not None else cfg.run.T
    if T is None:
        raise ConfigError(["hard instances need hard.T or run.T"])
    rng = np.random.default_rng(h.seed)
    return hard_instance.build_hard_instance(T, h.alpha, h.C_alpha, h.beta, h.C_beta, cfg.env.dim, h.variant, rng)


def build_environment(cfg, image_set=None):
    e = cfg.env
    if e.kind == "synthetic":
        family_cls = environments.LinearPair if e.reward == "linear" else environments.TrigPair
        return environments.Environment(build_distribution(e), family_cls(e.dim, e.sigma))
    if e.kind == "hard":
        spec = build_hard_spec(cfg)
        return environments.Environment(
            hard_instance.HardInstance(spec), hard_instance.HardInstanceReward(spec, e.sigma), name="hard"
        )
    if image_set is None:
        from .dataset import load_labeled_images

        if not cfg.mnist.images or not cfg.mnist.labels:
            raise ConfigError(["env.kind = mnist needs mnist.images and mnist.labels"])
        image_set = load_labeled_images(cfg.mnist.images, cfg.mnist.labels, cfg.mnist.limit)
    from .dataset import classification_env

    return classification_env(image_set)


def resolve(cfg, env):
    """Fill data-dependent defaults (policy.L, policy.sigma, policy.k) from env."""
    cfg = replace(cfg)
    p = cfg.policy
    if p.L is None:
        p.L = float(env.lipschitz) if env.lipschitz else 1.0
    if p.sigma is None:
        p.sigma = float(env.sigma)
    if p.kind == "fixed_knn" and p.k is None:
        alpha = p.alpha if p.k_rule == "alpha" else None
        p.k = policies.default_k(cfg.run.T, env.dim, alpha)
    return cfg


def policy_variants(cfg):
    """Settings swept for best-of selection: UCBogram bins, ABSE depth."""
    if cfg.policy.kind == "ucbogram":
        return [("policy.bins", (b,)) for b in cfg.policy.bins]
    if cfg.policy.kind == "abse":
        return [("policy.depth", (d,)) for d in cfg.policy.depth]
    return [(None, None)]


def policy_factory(cfg, env):
    """``make(rng) -> Policy`` for a resolved config (single-valued bins/depth)."""
    p, T = cfg.policy, cfg.run.T
    if p.kind in ("fixed_knn", "adaptive_knn"):
        pc = policies.PolicyConfig(
            horizon_T=T,
            num_actions=env.num_actions,
            dim=env.dim,
            sigma=p.sigma,
            lipschitz_L=p.L,
            conf_scale=p.conf_scale,
            k_fixed=p.k if p.kind == "fixed_knn" else None,
        )
        cls = policies.FixedKnnUcb if p.kind == "fixed_knn" else policies.AdaptiveKnnUcb
        return lambda rng: cls(pc)
    if p.kind == "ucbogram":
        return lambda rng: baselines.Ucbogram(env.num_actions, env.dim, p.bins[0], p.clip, p.width_scale)
    if p.kind == "abse":
        return lambda rng: baselines.Abse(env.num_actions, env.dim, T, p.depth[0], p.clip, p.abse_conf)
    if p.kind == "oracle":
        return lambda rng: baselines.OraclePolicy(env.family)
    return lambda rng: baselines.UniformRandomPolicy(env.num_actions, rng)
