"""Pipeline configuration: YAML file -> typed config with validated defaults.

The defaults carry the engine's shipped operating point (fusion weights
0.6/0.4, 3-7 adaptive pages at threshold 0.3, 20-config ensemble stopping
at 10 responses / 0.8 confidence) so a config file only needs to name
what differs. Endpoint auth can come from the environment instead of the
file, which keeps tokens out of checked-in configs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from .augment import GateThresholds
from .ensemble import DEFAULT_SCHEDULE_COUNT, StopRule
from .errors import ConfigError
from .gateway import EndpointConfig
from .retriever import (
    DEFAULT_CANDIDATE_K,
    DEFAULT_POLICY,
    DEFAULT_WEIGHTS,
    FusionWeights,
    SelectionPolicy,
)

AUTH_TOKEN_ENV = "DOCQA_AUTH_TOKEN"

_TOP_SECTIONS = ("paths", "retrieval", "ensemble", "gates", "endpoint", "embedding")


@dataclass(frozen=True)
class PathsConfig:
    corpus: str = "corpus.jsonl"
    lexical_index: str = "lexical.idx"
    semantic_index: str = "semantic.idx"


@dataclass(frozen=True)
class PipelineConfig:
    paths: PathsConfig = PathsConfig()
    weights: FusionWeights = DEFAULT_WEIGHTS
    policy: SelectionPolicy = DEFAULT_POLICY
    candidate_k: int = DEFAULT_CANDIDATE_K
    schedule_count: int = DEFAULT_SCHEDULE_COUNT
    seed: int = 0
    stop: StopRule = StopRule()
    thresholds: GateThresholds = GateThresholds()
    endpoint: EndpointConfig | None = None
    embedding: EndpointConfig | None = None
    embed_dim: int = 1024


def _section(raw: dict, name: str) -> dict:
    value = raw.get(name)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    return dict(value)


def _reject_unknown(section_name: str, leftovers: dict) -> None:
    if leftovers:
        keys = ", ".join(sorted(map(str, leftovers)))
        raise ConfigError(f"unknown key(s) in config section {section_name!r}: {keys}")


def _endpoint_from(section: dict, section_name: str, auth_env: str | None) -> EndpointConfig | None:
    if not section:
        return None
    base_url = section.pop("base_url", None)
    model_name = section.pop("model_name", None)
    if not base_url or not model_name:
        raise ConfigError(
            f"config section {section_name!r} needs both base_url and model_name"
        )
    kwargs = {}
    for key in ("timeout", "max_retries", "max_in_flight", "auth_token", "backoff_base"):
        if key in section:
            kwargs[key] = section.pop(key)
    _reject_unknown(section_name, section)
    if kwargs.get("auth_token") is None and auth_env:
        kwargs["auth_token"] = auth_env
    try:
        return EndpointConfig(base_url=str(base_url), model_name=str(model_name), **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section_name} config: {exc}") from exc


def load_config(path: str | Path | None = None) -> PipelineConfig:
    """Load a YAML config file, or return pure defaults when path is None."""
    if path is None:
        raw: dict = {}
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a top-level mapping")
        raw = loaded
    unknown = {k: v for k, v in raw.items() if k not in _TOP_SECTIONS}
    _reject_unknown("<top level>", unknown)

    paths_raw = _section(raw, "paths")
    paths = PathsConfig(
        corpus=str(paths_raw.pop("corpus", PathsConfig.corpus)),
        lexical_index=str(paths_raw.pop("lexical_index", PathsConfig.lexical_index)),
        semantic_index=str(paths_raw.pop("semantic_index", PathsConfig.semantic_index)),
    )
    _reject_unknown("paths", paths_raw)

    retrieval = _section(raw, "retrieval")
    try:
        weights = FusionWeights(
            alpha=float(retrieval.pop("alpha", DEFAULT_WEIGHTS.alpha)),
            beta=float(retrieval.pop("beta", DEFAULT_WEIGHTS.beta)),
        )
        policy = SelectionPolicy(
            top_m=int(retrieval.pop("min_pages", DEFAULT_POLICY.top_m)),
            top_n=int(retrieval.pop("max_pages", DEFAULT_POLICY.top_n)),
            threshold=float(retrieval.pop("threshold", DEFAULT_POLICY.threshold)),
        )
        candidate_k = int(retrieval.pop("candidate_k", DEFAULT_CANDIDATE_K))
        if candidate_k < 1:
            raise ValueError("candidate_k must be at least 1")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid retrieval config: {exc}") from exc
    _reject_unknown("retrieval", retrieval)

    ensemble = _section(raw, "ensemble")
    try:
        schedule_count = int(ensemble.pop("schedule_count", DEFAULT_SCHEDULE_COUNT))
        if schedule_count < 2:
            raise ValueError("schedule_count must be at least 2")
        seed = int(ensemble.pop("seed", 0))
        stop = StopRule(
            min_responses=int(ensemble.pop("min_responses", StopRule.min_responses)),
            confidence_threshold=float(
                ensemble.pop("confidence_threshold", StopRule.confidence_threshold)
            ),
        )
        if stop.min_responses < 1:
            raise ValueError("min_responses must be at least 1")
        if not 0.0 <= stop.confidence_threshold <= 1.0:
            raise ValueError("confidence_threshold must lie in [0, 1]")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid ensemble config: {exc}") from exc
    _reject_unknown("ensemble", ensemble)

    gates = _section(raw, "gates")
    defaults = GateThresholds()
    try:
        thresholds = GateThresholds(
            question_min_chars=int(gates.pop("question_min_chars", defaults.question_min_chars)),
            question_max_chars=int(gates.pop("question_max_chars", defaults.question_max_chars)),
            min_clauses=int(gates.pop("min_clauses", defaults.min_clauses)),
            support_jaccard=float(gates.pop("support_jaccard", defaults.support_jaccard)),
            option_length_ratio=float(gates.pop("option_length_ratio", defaults.option_length_ratio)),
            dedup_jaccard=float(gates.pop("dedup_jaccard", defaults.dedup_jaccard)),
            min_reasoning_chars=int(gates.pop("min_reasoning_chars", defaults.min_reasoning_chars)),
            evidence_overlap=float(gates.pop("evidence_overlap", defaults.evidence_overlap)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid gates config: {exc}") from exc
    _reject_unknown("gates", gates)

    auth_env = os.environ.get(AUTH_TOKEN_ENV)
    endpoint_raw = _section(raw, "endpoint")
    embedding_raw = _section(raw, "embedding")
    try:
        embed_dim = int(embedding_raw.pop("dim", 1024))
        if embed_dim < 1:
            raise ValueError("embedding dim must be at least 1")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid embedding config: {exc}") from exc
    endpoint = _endpoint_from(endpoint_raw, "endpoint", auth_env)
    embedding = _endpoint_from(embedding_raw, "embedding", auth_env)

    return PipelineConfig(
        paths=paths,
        weights=weights,
        policy=policy,
        candidate_k=candidate_k,
        schedule_count=schedule_count,
        seed=seed,
        stop=stop,
        thresholds=thresholds,
        endpoint=endpoint,
        embedding=embedding,
        embed_dim=embed_dim,
    )
