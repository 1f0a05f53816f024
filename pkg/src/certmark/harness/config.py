"""Experiment configuration: plain-text ``key = value`` files.

Lines starting with ``#`` are comments, lists are comma-separated, and
relative paths resolve against the config file's directory. Example::

    m = 16
    sigma = 0.1
    N = 2000
    R_grid = 0, 0.05, 0.1, 0.2
    watermarked_dir = data/wm
    nonwatermarked_dir = data/clean
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

from ..attacks import AttackBudget
from ..core import DEFAULT_M, DEFAULT_TAU, DetectorConfig, DetectorMode, Watermark
from ..errors import ConfigError
from ..smoothing import DEFAULT_N, DEFAULT_SIGMA, EMPIRICAL_N, SmoothingConfig, SmoothingMethod
from ..basewm.reference import DEFAULT_STRENGTH, SpreadSpectrumConfig

METHODS = tuple(m.value for m in SmoothingMethod)


@dataclass
class ExperimentConfig:
    m: int = DEFAULT_M
    sigma: float = DEFAULT_SIGMA
    N: int = DEFAULT_N
    N_empirical: int = EMPIRICAL_N
    tau: float = DEFAULT_TAU
    alpha: float = 0.001
    k: int | None = None
    k_prime: int | None = None
    master_seed: int = 0
    methods: tuple[str, ...] = ("regression",)
    detector_mode: str = DetectorMode.DOUBLE_TAILED.value
    R_grid: tuple[float, ...] = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3)
    watermarked_dir: str | None = None
    nonwatermarked_dir: str | None = None
    decoder: str = "reference"
    decoder_command: str | None = None
    decoder_timeout: float = 30.0
    strength: float = DEFAULT_STRENGTH
    pattern_seed: int = 0
    watermark: str | None = None
    watermark_seed: int = 0
    attack: str = "none"
    attack_goal: str = "removal"
    attack_target: str = "smoothed"
    attack_n_iter: int = 500
    attack_learning_rate: float = 1.0
    attack_query_budget: int = 1000
    attack_epsilon_stop: float = 0.05
    attack_N_prime: int = 100
    attack_margin: float = 0.05
    attack_quality: tuple[int, ...] = (90, 70, 50, 30, 10)
    threads: int = 1
    timing: bool = False
    source: str | None = field(default=None, repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if list(self.R_grid) != sorted(self.R_grid) or any(r < 0 for r in self.R_grid):
            raise ConfigError("R_grid must be sorted ascending and nonnegative")
        for mth in self.methods:
            if mth not in METHODS:
                raise ConfigError(f"unknown smoothing method {mth!r}; choose from {METHODS}")
        if self.decoder not in ("reference", "external"):
            raise ConfigError("decoder must be 'reference' or 'external'")
        if self.decoder == "external" and not self.decoder_command:
            raise ConfigError("decoder.command is required for an external decoder")
        if self.attack_goal not in ("removal", "forgery"):
            raise ConfigError("attack.goal must be 'removal' or 'forgery'")
        if self.attack_target not in ("base", "smoothed"):
            raise ConfigError("attack.target must be 'base' or 'smoothed'")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        for p in (self.watermarked_dir, self.nonwatermarked_dir):
            if p is not None and not os.path.exists(p):
                raise ConfigError(f"path does not exist: {p}")
        DetectorConfig(self.tau, self.detector_mode)

    # -- derived objects ---------------------------------------------------

    @property
    def detector(self) -> DetectorConfig:
        return DetectorConfig(self.tau, self.detector_mode)

    def ground_truth(self) -> Watermark:
        if self.watermark:
            wt = Watermark(self.watermark)
            if wt.m != self.m:
                raise ConfigError(f"watermark has {wt.m} bits but m = {self.m}")
            return wt
        return Watermark.random(self.m, self.watermark_seed)

    def smoothing(self, method: str | None = None, N: int | None = None) -> SmoothingConfig:
        return SmoothingConfig(sigma=self.sigma, N=N or self.N, master_seed=self.master_seed,
                               method=method or self.methods[0], k=self.k, k_prime=self.k_prime)

    def embedding(self) -> SpreadSpectrumConfig:
        return SpreadSpectrumConfig(self.strength, self.pattern_seed)

    def budget(self, R: float) -> AttackBudget:
        return AttackBudget(R=R, n_iter=self.attack_n_iter, learning_rate=self.attack_learning_rate,
                            query_budget=self.attack_query_budget, epsilon_stop=self.attack_epsilon_stop,
                            N_prime=self.attack_N_prime, margin=self.attack_margin)


# config key -> (field name, parser)
def _ints(v):
    return tuple(int(t) for t in _split(v))


def _floats(v):
    return tuple(float(t) for t in _split(v))


def _split(v):
    return [t.strip() for t in v.split(",") if t.strip()]


def _bool(v):
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _opt_int(v):
    return None if v.strip().lower() in ("", "auto", "none") else int(v)


def _methods(v):
    items = _split(v)
    return METHODS if items == ["all"] else tuple(items)


_KEYS = {
    "m": ("m", int),
    "sigma": ("sigma", float),
    "n": ("N", int),
    "n_empirical": ("N_empirical", int),
    "tau": ("tau", float),
    "alpha": ("alpha", float),
    "k": ("k", _opt_int),
    "k_prime": ("k_prime", _opt_int),
    "seed": ("master_seed", int),
    "master_seed": ("master_seed", int),
    "method": ("methods", _methods),
    "methods": ("methods", _methods),
    "detector": ("detector_mode", str),
    "detector_mode": ("detector_mode", str),
    "r_grid": ("R_grid", _floats),
    "watermarked_dir": ("watermarked_dir", str),
    "nonwatermarked_dir": ("nonwatermarked_dir", str),
    "decoder": ("decoder", str),
    "decoder.command": ("decoder_command", str),
    "decoder.timeout": ("decoder_timeout", float),
    "strength": ("strength", float),
    "pattern_seed": ("pattern_seed", int),
    "watermark": ("watermark", str),
    "watermark_seed": ("watermark_seed", int),
    "attack": ("attack", str),
    "attack.goal": ("attack_goal", str),
    "attack.target": ("attack_target", str),
    "attack.n_iter": ("attack_n_iter", int),
    "attack.learning_rate": ("attack_learning_rate", float),
    "attack.query_budget": ("attack_query_budget", int),
    "attack.epsilon_stop": ("attack_epsilon_stop", float),
    "attack.n_prime": ("attack_N_prime", int),
    "attack.margin": ("attack_margin", float),
    "attack.quality": ("attack_quality", _ints),
    "threads": ("threads", int),
    "timing": ("timing", _bool),
}
_PATH_FIELDS = ("watermarked_dir", "nonwatermarked_dir")


def parse_config_text(text: str, base_dir: str = ".") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        name, conv = _KEYS[key]
        try:
            values[name] = conv(value.strip())
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    for name in _PATH_FIELDS:
        if name in values and not os.path.isabs(values[name]):
            values[name] = os.path.normpath(os.path.join(base_dir, values[name]))
    return values


def load_config(path: str | None = None, **overrides) -> ExperimentConfig:
    values = {}
    if path is not None:
        with open(path) as fh:
            values = parse_config_text(fh.read(), os.path.dirname(os.path.abspath(path)))
        values["source"] = path
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def config_to_text(cfg: ExperimentConfig) -> str:
    """Serialise back to the key = value format (round-trips through load)."""
    reverse = {}
    for key, (name, _) in _KEYS.items():
        reverse.setdefault(name, key)
    lines = []
    for f in dataclasses.fields(cfg):
        if f.name == "source":
            continue
        val = getattr(cfg, f.name)
        if val is None:
            continue
        if isinstance(val, tuple):
            val = ", ".join(str(v) for v in val)
        lines.append(f"{reverse[f.name]} = {val}")
    return "\n".join(lines) + "\n"
