"""Experiment configuration: JSON file + CLI overrides, validated up front."""

import json
from dataclasses import asdict, dataclass, field, fields, replace

from ..errors import ConfigError
from ..signal import REFERENCE_CHANNEL

ALGORITHMS = ("closed_form", "lms", "cma", "diagnostics")


@dataclass
class ExperimentConfig:
    channel: list = field(default_factory=lambda: list(REFERENCE_CHANNEL))
    M: list = field(default_factory=lambda: [11, 21, 41])
    snr_db: list = field(default_factory=lambda: [15.0, 20.0])
    n_symbols: int = 250000
    seed: int = 0
    algorithm: str = "closed_form"
    mu: float = 0.001
    lam: float = 0.99
    theta: float = 0.0
    nu: object = "auto"
    out: str = "results"
    kp: float = 0.01
    ki: float = 1e-4
    bins: int = 50
    jobs: int = 1

    def validate(self):
        """Raise ``ConfigError`` naming every invalid field; return ``self`` otherwise."""
        problems = []

        def bad(name, msg):
            problems.append((name, msg))

        try:
            taps = [complex(t) for t in self.channel]
            if not taps or all(t == 0 for t in taps):
                bad("channel", "needs at least one nonzero tap")
        except (TypeError, ValueError):
            bad("channel", "taps must be numbers")
        if not isinstance(self.M, list) or not self.M or not all(
            isinstance(m, int) and not isinstance(m, bool) and m >= 1 for m in self.M
        ):
            bad("M", "must be a non-empty list of positive integers")
        if not isinstance(self.snr_db, list) or not self.snr_db or not all(
            isinstance(s, (int, float)) and not isinstance(s, bool) and abs(s) < 1e6 for s in self.snr_db
        ):
            bad("snr_db", "must be a non-empty list of finite numbers")
        if not isinstance(self.n_symbols, int) or self.n_symbols < 1:
            bad("n_symbols", "must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            bad("seed", "must be an unsigned 64-bit integer")
        if self.algorithm not in ALGORITHMS:
            bad("algorithm", f"must be one of {', '.join(ALGORITHMS)}")
        if not isinstance(self.mu, (int, float)) or not 0 <= self.mu < 1:
            bad("mu", "must be in [0, 1)")
        if not isinstance(self.lam, (int, float)) or not 0 <= self.lam < 1:
            bad("lam", "must be in [0, 1)")
        if not isinstance(self.theta, (int, float)):
            bad("theta", "must be a number (radians)")
        if not (self.nu == "auto" or (isinstance(self.nu, int) and not isinstance(self.nu, bool)
                                      and self.nu >= 0)):
            bad("nu", "must be 'auto' or a non-negative integer")
        if not isinstance(self.out, str) or not self.out:
            bad("out", "must be a non-empty path")
        for name in ("kp", "ki"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or v < 0:
                bad(name, "must be a non-negative number")
        if not isinstance(self.bins, int) or self.bins < 10:
            bad("bins", "must be an integer >= 10")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            bad("jobs", "must be a positive integer")
        if problems:
            raise ConfigError(problems)
        return self

    @property
    def taps(self):
        return [complex(t) for t in self.channel]

    def to_dict(self):
        d = asdict(self)
        d["channel"] = [_encode_tap(t) for t in self.channel]
        return d

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError([(k, "unknown field") for k in unknown])
        data = dict(data)
        if "channel" in data and isinstance(data["channel"], list):
            data["channel"] = [_decode_tap(t) for t in data["channel"]]
        for name in ("M", "snr_db"):
            if name in data and not isinstance(data[name], list):
                data[name] = [data[name]]
        return cls(**data)

    def merged(self, overrides):
        """Copy with non-``None`` entries of ``overrides`` applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def _encode_tap(t):
    t = complex(t) if not isinstance(t, (int, float)) else t
    if isinstance(t, complex):
        return [t.real, t.imag] if t.imag else t.real
    return t


def _decode_tap(t):
    if isinstance(t, list):
        if len(t) != 2:
            raise ConfigError([("channel", "complex taps are written as [re, im]")])
        return complex(t[0], t[1])
    return t


def comparison_defaults():
    """Adaptive comparison setup: M = 41, 50000 symbols, mu = 0.001."""
    return ExperimentConfig(M=[41], snr_db=[20.0, 15.0], n_symbols=50000, algorithm="cma")


def load_config(path, base=None):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([("config", f"not valid JSON: {exc}")]) from None
    if not isinstance(data, dict):
        raise ConfigError([("config", "top level must be a JSON object")])
    base = base or ExperimentConfig()
    parsed = ExperimentConfig.from_dict(data)
    return base.merged({k: getattr(parsed, k) for k in data})


def dump_config(cfg):
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))
