"""Pipeline configuration: defaults, file loading, overrides, and digests.

A single YAML document configures every stage. All thresholds and
coefficients the pipeline depends on live here with declared defaults, and
the content digest of the effective configuration is stamped into every
artifact a run produces.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .errors import ValidationError
from .pairmatch import MatchPolicy
from .polarity import PolarityTrainConfig


@dataclass(frozen=True)
class PathsConfig:
    corpus: str | None = None
    stopwords: str | None = None
    spelling_lexicon: str | None = None
    aspect_lexicon: str | None = None
    opinion_lexicon: str | None = None
    embedding_store: str | None = None
    model_bundle: str | None = None


@dataclass(frozen=True)
class IngestConfig:
    max_emoji_ratio: float = 0.5
    min_word_count: int = 1
    blocked_patterns: tuple[str, ...] = ()
    dedupe: bool = True

    def __post_init__(self):
        if isinstance(self.blocked_patterns, list):
            object.__setattr__(self, "blocked_patterns", tuple(self.blocked_patterns))


@dataclass(frozen=True)
class SpanexConfig:
    max_span_len: int = 4
    score_threshold: float = 0.5
    top_k: int = 10

    def __post_init__(self):
        if self.max_span_len < 1 or self.top_k < 1:
            raise ValidationError("max_span_len and top_k must be >= 1")
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValidationError("score_threshold must be in [0, 1]")


@dataclass(frozen=True)
class PairmatchConfig:
    edge_threshold: float = 0.4
    cardinality: str = "one_to_one"
    alpha: float = 0.7
    beta: float = 0.3
    proximity_scale: float = 5.0


@dataclass(frozen=True)
class PolarityConfig:
    backend: str = "hashed"  # hashed | precomputed
    dim: int = 64
    kind: str = "gbt"  # gbt | linear
    trees: int = 200
    depth: int = 6
    learning_rate: float = 0.1
    class_weighting: bool = True

    def __post_init__(self):
        if self.backend not in ("hashed", "precomputed"):
            raise ValidationError(f"unknown embedding backend {self.backend!r}")


@dataclass(frozen=True)
class EvalConfig:
    k: int = 5
    seed: int = 42
    span_match: str = "exact"  # exact | overlap

    def __post_init__(self):
        if self.span_match not in ("exact", "overlap"):
            raise ValidationError(f"unknown span match criterion {self.span_match!r}")


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 42
    paths: PathsConfig = field(default_factory=PathsConfig)
    ingest: IngestConfig = field(default_factory=IngestConfig)
    spanex: SpanexConfig = field(default_factory=SpanexConfig)
    pairmatch: PairmatchConfig = field(default_factory=PairmatchConfig)
    polarity: PolarityConfig = field(default_factory=PolarityConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def __post_init__(self):
        # Fail fast: surface invalid stage settings at load time.
        self.match_policy()
        self.polarity_train_config()
        self.filter_policy()

    def match_policy(self) -> MatchPolicy:
        return MatchPolicy(
            edge_threshold=self.pairmatch.edge_threshold,
            cardinality=self.pairmatch.cardinality,
            alpha=self.pairmatch.alpha,
            beta=self.pairmatch.beta,
            proximity_scale=self.pairmatch.proximity_scale,
        )

    def filter_policy(self):
        from .ingest import FilterPolicy

        return FilterPolicy(
            max_emoji_ratio=self.ingest.max_emoji_ratio,
            min_word_count=self.ingest.min_word_count,
            blocked_patterns=tuple(self.ingest.blocked_patterns),
            dedupe=self.ingest.dedupe,
        )

    def polarity_train_config(self) -> PolarityTrainConfig:
        return PolarityTrainConfig(
            kind=self.polarity.kind,
            trees=self.polarity.trees,
            depth=self.polarity.depth,
            learning_rate=self.polarity.learning_rate,
            seed=self.seed,
            class_weighting=self.polarity.class_weighting,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


_SECTIONS = {
    "paths": PathsConfig,
    "ingest": IngestConfig,
    "spanex": SpanexConfig,
    "pairmatch": PairmatchConfig,
    "polarity": PolarityConfig,
    "eval": EvalConfig,
}


def _build_section(cls, obj: dict, prefix: str):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise ValidationError(f"unknown config key(s): {', '.join(prefix + k for k in unknown)}")
    try:
        return cls(**obj)
    except TypeError as exc:
        raise ValidationError(f"bad config section {prefix[:-1]!r}: {exc}") from None


def config_from_dict(obj: dict) -> PipelineConfig:
    """Build a validated config; unknown keys anywhere are rejected."""
    if not isinstance(obj, dict):
        raise ValidationError("config document must be a mapping")
    known = set(_SECTIONS) | {"seed"}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise ValidationError(f"unknown config key(s): {', '.join(unknown)}")
    kwargs: dict = {}
    if "seed" in obj:
        if not isinstance(obj["seed"], int) or isinstance(obj["seed"], bool):
            raise ValidationError("seed must be an integer")
        kwargs["seed"] = obj["seed"]
    for name, cls in _SECTIONS.items():
        section = obj.get(name, {})
        if not isinstance(section, dict):
            raise ValidationError(f"config section {name!r} must be a mapping")
        kwargs[name] = _build_section(cls, section, f"{name}.")
    return PipelineConfig(**kwargs)


def load_config(path: str | Path | None = None) -> PipelineConfig:
    """Defaults when no path is given; otherwise parse and validate the YAML file."""
    if path is None:
        return PipelineConfig()
    try:
        obj = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ValidationError(f"{path}: invalid YAML: {exc}") from None
    return config_from_dict(obj or {})


def apply_overrides(config: PipelineConfig, overrides: list[str]) -> PipelineConfig:
    """Apply repeatable ``section.key=value`` command-line overrides."""
    obj = config.to_dict()
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"override {item!r} is not of the form key=value")
        key, raw_value = item.split("=", 1)
        value = yaml.safe_load(raw_value)
        parts = key.strip().split(".")
        target = obj
        for part in parts[:-1]:
            if not isinstance(target.get(part), dict):
                raise ValidationError(f"unknown config key {key!r}")
            target = target[part]
        if parts[-1] not in target:
            raise ValidationError(f"unknown config key {key!r}")
        target[parts[-1]] = value
    return config_from_dict(obj)


def render_config(config: PipelineConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=True, allow_unicode=True)
