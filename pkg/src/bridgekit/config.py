"""Pipeline configuration file handling and run manifests.

One YAML file holds every knob (window sizes, backend parameters,
heuristic toggles, template/few-shot/keyword paths, parallelism, cache
directory). The API credential is the only environment-variable override
(see gateway.API_KEY_ENV_VAR); it never appears in config or manifests.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import yaml

from .gateway import BackendConfig
from .heuristics import CandidateKeywordList
from .pipeline import PipelineConfig
from .prompts import FewShotSet, TemplateSet
from .windows import WindowConfig


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


@dataclass
class AppConfig:
    pipeline: PipelineConfig
    backend: BackendConfig
    cache_dir: str = ".bridgekit-cache"
    templates_dir: str | None = None
    few_shot_dir: str | None = None
    few_shot_dataset: str = "none"
    raw: dict = field(default_factory=dict)

    def template_set(self) -> TemplateSet:
        if self.templates_dir:
            return TemplateSet.from_dir(self.templates_dir)
        return TemplateSet.default()

    def few_shot(self) -> FewShotSet:
        if self.few_shot_dir:
            return FewShotSet.from_dir(self.few_shot_dir, self.few_shot_dataset)
        return FewShotSet.empty(self.few_shot_dataset)

    def config_digest(self) -> str:
        payload = json.dumps(self.raw, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _section(obj, name):
    value = obj.get(name, {})
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    return value


def load_config(path=None) -> AppConfig:
    """Load a YAML config; a missing path yields all defaults."""
    obj = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
        loaded = yaml.safe_load(text)
        if loaded is not None:
            if not isinstance(loaded, dict):
                raise ConfigError("config root must be a mapping")
            obj = loaded
    try:
        windows = WindowConfig(**_section(obj, "windows"))
        backend = BackendConfig(**_section(obj, "backend"))
        heuristics = _section(obj, "heuristics")
        keywords_path = obj.get("keywords_path")
        keywords = (
            CandidateKeywordList.from_file(keywords_path)
            if keywords_path
            else CandidateKeywordList()
        )
        pipeline = PipelineConfig(
            windows=windows,
            align_spans=heuristics.get("align_spans", True),
            suggest_candidates=heuristics.get("suggest_candidates", True),
            coref_filter=heuristics.get("coref_filter", True),
            classify_subtypes=obj.get("classify_subtypes", True),
            keywords=keywords,
            parallelism=obj.get("parallelism", 1),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}")
    few_shot = _section(obj, "few_shot")
    return AppConfig(
        pipeline=pipeline,
        backend=backend,
        cache_dir=obj.get("cache_dir", ".bridgekit-cache"),
        templates_dir=obj.get("templates_dir"),
        few_shot_dir=few_shot.get("dir"),
        few_shot_dataset=few_shot.get("dataset", "none"),
        raw=obj,
    )


def _package_version():
    try:
        return metadata.version("bridgekit")
    except metadata.PackageNotFoundError:
        return "unknown"


def build_manifest(
    app: AppConfig,
    corpus_path,
    setting,
    backend_name,
    started,
    query_stats=None,
) -> dict:
    """Reproducibility manifest written next to every prediction dump."""
    corpus_bytes = Path(corpus_path).read_bytes()
    return {
        "setting": setting,
        "corpus": {
            "path": str(corpus_path),
            "sha256": hashlib.sha256(corpus_bytes).hexdigest(),
        },
        "config": app.raw,
        "config_sha256": app.config_digest(),
        "backend": {"name": backend_name, "model": app.backend.model},
        "artifact_version": _package_version(),
        "started": started,
        "finished": time.time(),
        "queries": query_stats or {},
    }
