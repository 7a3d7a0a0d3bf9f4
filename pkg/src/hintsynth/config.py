"""Run configuration: `key = value` lines plus curation directives."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .cegis import Budget
from .neural import ProviderConfig
from .runtime.fuzz import Curation, CurationError, default_curation

ENGINES = ("symbolic", "neural")
DEFAULT_ORACLE_BOUND = 1 << 20


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    corpus: str = ""
    budget: Budget = field(default_factory=Budget)
    engines: tuple[str, ...] = ("symbolic",)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    curation: Curation = field(default_factory=default_curation)
    seed: int = 0
    oracle_bound: int = DEFAULT_ORACLE_BOUND
    report_dir: str | None = None
    strip_hints: bool = False
    workers: int = 0  # 0 means host parallelism
    repetitions: int = 1
    timings: bool = True

    def effective_budget(self) -> Budget:
        return replace(self.budget, rng_seed=self.seed)

    def effective_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def to_json(self) -> dict:
        d = asdict(self)
        d["engines"] = list(self.engines)
        d["curation"] = {"allow": {k: list(v) for k, v in sorted(self.curation.allow.items())},
                         "deny": sorted(self.curation.deny)}
        return d


_BUDGET_KEYS = {
    "max_inputs": ("max_inputs_per_verify", int),
    "max_inputs_per_verify": ("max_inputs_per_verify", int),
    "verify_timeout": ("verify_time", float),
    "synth_timeout": ("synth_time", float),
    "max_candidates": ("max_candidates", int),
    "max_steps": ("max_steps", int),
    "max_iterations": ("max_iterations", int),
    "stall_limit": ("stall_limit", int),
    "fuel": ("fuel", int),
}
_PROVIDER_KEYS = {
    "provider.endpoint": ("endpoint", str),
    "provider.model": ("model", str),
    "provider.temperature": ("temperature", float),
    "provider.token_env": ("token_env", str),
    "provider.mode": ("mode", str),
    "provider.stub_file": ("stub_file", str),
    "provider.timeout": ("timeout", float),
    "provider.retries": ("retries", int),
}


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_config(text: str, base: RunConfig | None = None, origin: str = "<config>") -> RunConfig:
    cfg = base or RunConfig()
    budget = {}
    prov = {}
    extra = Curation()
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(None, 1)[0]
        if head in ("instantiate", "deny"):
            try:
                extra.add_line(line)
            except CurationError as ex:
                raise ConfigError(f"{origin}:{n}: {ex}") from ex
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{origin}:{n}: expected 'key = value'")
        try:
            if key in _BUDGET_KEYS:
                name, conv = _BUDGET_KEYS[key]
                budget[name] = conv(value)
            elif key in _PROVIDER_KEYS:
                name, conv = _PROVIDER_KEYS[key]
                prov[name] = conv(value)
            elif key == "seed":
                cfg.seed = int(value)
            elif key == "engine":
                cfg.engines = engines_from(value)
            elif key == "oracle_bound":
                cfg.oracle_bound = int(value)
            elif key == "report_dir":
                cfg.report_dir = value
            elif key == "strip_hints":
                cfg.strip_hints = _bool(value)
            elif key == "workers":
                cfg.workers = int(value)
            elif key == "repetitions":
                cfg.repetitions = int(value)
            elif key == "timings":
                cfg.timings = _bool(value)
            elif key == "corpus":
                cfg.corpus = value
            else:
                raise ConfigError(f"{origin}:{n}: unknown key {key!r}")
        except ValueError as ex:
            if isinstance(ex, ConfigError):
                raise
            raise ConfigError(f"{origin}:{n}: bad value for {key}: {ex}") from ex
    if budget:
        try:
            cfg.budget = replace(cfg.budget, **budget)
        except ValueError as ex:
            raise ConfigError(f"{origin}: {ex}") from ex
    if prov:
        cfg.provider = replace(cfg.provider, **prov)
    if extra.allow or extra.deny:
        cfg.curation = cfg.curation.merged(extra)
    return cfg


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    p = Path(path)
    return parse_config(p.read_text(encoding="utf-8"), base, str(p))


def engines_from(value: str) -> tuple[str, ...]:
    v = value.strip().lower()
    if v == "both":
        return ENGINES
    if v not in ENGINES:
        raise ConfigError(f"unknown engine {value!r}")
    return (v,)
