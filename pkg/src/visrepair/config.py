"""Run configuration: models, stage parameters, project build recipe.

Defaults encode the tuned operating point of the pipeline; a YAML file can
override any subset.  Relative paths in the file (transcript, harness
arguments starting with ``./``) resolve against the YAML's own directory so
configs can travel with their fixtures.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

VARIANTS = ("base", "i2c", "c2i", "full")


@dataclass(frozen=True)
class ModelConfig:
    chat: str = "vision-chat-1"
    embed: str = "embed-mini-1"
    prices: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ProviderConfig:
    mode: str = "replay"
    transcript: str | None = None
    chat_endpoint: str = "https://models.invalid/v1/chat/completions"
    embed_endpoint: str = "https://models.invalid/v1/embeddings"


@dataclass(frozen=True)
class PipelineConfig:
    enable_image2code: bool = True
    enable_code2image: bool = True
    default_temperature: float = 0.0


@dataclass(frozen=True)
class KnowledgeConfig:
    chat_temperature: float = 0.0
    chat_samples: int = 1
    top_docs: int = 6
    chunk_size: int = 512
    chunk_overlap: int = 0
    embed_top_docs: int = 6


@dataclass(frozen=True)
class LocalizationConfig:
    file_temperature: float = 1.0
    file_samples: int = 2
    embed_top_files: int = 4
    max_key_files: int = 4
    hunk_temperature: float = 1.0
    hunk_samples: int = 2
    context_window: int = 500


@dataclass(frozen=True)
class PatchConfig:
    greedy_samples: int = 1
    sampled_temperature: float = 1.0
    sampled_count: int = 39
    max_hunk_lines: int = 500


@dataclass(frozen=True)
class ValidationConfig:
    pixel_threshold: int = 0
    channel_tolerance: int = 0
    viewport_width: int = 1280
    viewport_height: int = 720
    settle_ms: int = 500


@dataclass(frozen=True)
class ProjectConfig:
    build_cmd: str = "npm run build"
    bundle_path: str = "dist/bundle.js"


@dataclass(frozen=True)
class RenderConfig:
    harness_cmd: tuple[str, ...] = ()
    timeout_s: float = 60.0


@dataclass(frozen=True)
class Config:
    models: ModelConfig = field(default_factory=ModelConfig)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    knowledge: KnowledgeConfig = field(default_factory=KnowledgeConfig)
    localization: LocalizationConfig = field(default_factory=LocalizationConfig)
    patch: PatchConfig = field(default_factory=PatchConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    project: ProjectConfig = field(default_factory=ProjectConfig)
    render: RenderConfig = field(default_factory=RenderConfig)

    def apply_variant(self, variant: str) -> "Config":
        """Return a copy with the ablation toggles set for ``variant``."""
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
        i2c = variant in ("i2c", "full")
        c2i = variant in ("c2i", "full")
        return replace(
            self,
            pipeline=replace(self.pipeline, enable_image2code=i2c, enable_code2image=c2i),
        )

    def parameter_tuple(self) -> tuple:
        """The tuned operating point, in a fixed order for fidelity checks."""
        return (
            self.knowledge.top_docs,
            self.knowledge.embed_top_docs,
            self.knowledge.chunk_size,
            self.knowledge.chunk_overlap,
            int(self.localization.file_temperature),
            self.localization.file_samples,
            self.localization.embed_top_files,
            self.localization.max_key_files,
            int(self.localization.hunk_temperature),
            self.localization.hunk_samples,
            self.localization.context_window,
            self.patch.greedy_samples,
            self.patch.sampled_count,
            int(self.pipeline.default_temperature),
        )


def _build_section(cls, raw: dict, base=None):
    base = base if base is not None else cls()
    if not raw:
        return base
    known = {f.name for f in dataclasses.fields(cls)}
    updates = {}
    for key, value in raw.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r} for {cls.__name__}")
        updates[key] = value
    return replace(base, **updates)


def load_config(path: Path | str) -> Config:
    """Load a YAML config, resolving relative paths against its directory."""
    path = Path(path)
    raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    base_dir = path.parent.resolve()

    validation_raw = dict(raw.get("validation", {}))
    viewport = validation_raw.pop("viewport", None)
    if viewport:
        validation_raw["viewport_width"] = int(viewport["width"])
        validation_raw["viewport_height"] = int(viewport["height"])

    render_raw = dict(raw.get("render", {}))
    harness_cmd = render_raw.get("harness_cmd")
    if harness_cmd:
        resolved = []
        for token in harness_cmd:
            token = str(token)
            if token.startswith("./") or token.startswith("../"):
                token = str((base_dir / token).resolve())
            resolved.append(token)
        render_raw["harness_cmd"] = tuple(resolved)

    provider_raw = dict(raw.get("provider", {}))
    transcript = provider_raw.get("transcript")
    if transcript and not Path(transcript).is_absolute():
        provider_raw["transcript"] = str((base_dir / transcript).resolve())

    return Config(
        models=_build_section(ModelConfig, raw.get("models", {})),
        provider=_build_section(ProviderConfig, provider_raw),
        pipeline=_build_section(PipelineConfig, raw.get("pipeline", {})),
        knowledge=_build_section(KnowledgeConfig, raw.get("knowledge", {})),
        localization=_build_section(LocalizationConfig, raw.get("localization", {})),
        patch=_build_section(PatchConfig, raw.get("patch", {})),
        validation=_build_section(ValidationConfig, validation_raw),
        project=_build_section(ProjectConfig, raw.get("project", {})),
        render=_build_section(RenderConfig, render_raw),
    )
