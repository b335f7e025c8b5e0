"""Reproduction scripts: turn the report back into runnable page code.

If the reporter already supplied reproduction code it is used verbatim and
no model call happens.  Otherwise a vision request (issue text, mined docs,
screenshots, plus a one-shot exemplar) asks for exactly one fenced script.
The resulting artifact pairs the script with a host page whose bundle
reference stays a placeholder until a concrete build is rendered.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .config import Config
from .errors import GenerationRefused, NoCodeBlock
from .prompting import PromptContext, fill, first_fenced_block, load_template, user_message
from .provider import ModelProvider, TextPart

BUNDLE_PLACEHOLDER = "{{BUNDLE}}"
SCRIPT_FILENAME = "repro.js"

ORIGIN_ISSUE = "issue"
ORIGIN_GENERATED = "generated"
ORIGIN_NONE = "none"

_REFUSAL_RE = re.compile(
    r"\b(cannot|can't|unable to|not possible to)\b.{0,60}\b(reproduce|write|produce|provide)",
    re.IGNORECASE | re.DOTALL,
)


@dataclass(frozen=True)
class ReproArtifact:
    script_code: str | None
    host_page: str | None
    origin: str
    notes: str | None = None

    @property
    def available(self) -> bool:
        return self.script_code is not None


NO_REPRO = ReproArtifact(script_code=None, host_page=None, origin=ORIGIN_NONE)


def build_host_page(config: Config) -> str:
    """Host page with the viewport baked in and the bundle still symbolic."""
    return fill(
        load_template("host_page.html"),
        WIDTH=str(config.validation.viewport_width),
        HEIGHT=str(config.validation.viewport_height),
        SCRIPT=SCRIPT_FILENAME,
        BUNDLE=BUNDLE_PLACEHOLDER,
    )


def generate_repro(
    provider: ModelProvider,
    context: PromptContext,
    config: Config,
) -> ReproArtifact:
    """Produce the reproduction artifact for this issue.

    Preference order: reporter-supplied code, then model-generated code.  The
    completion must carry a fenced code block; one retry with a sharper
    instruction is allowed before giving up.
    """
    issue = context.issue
    if issue.repro_code:
        return ReproArtifact(
            script_code=issue.repro_code,
            host_page=build_host_page(config),
            origin=ORIGIN_ISSUE,
        )
    prompt = fill(
        load_template("repro_generate.txt"),
        EXEMPLAR_ISSUE=load_template("repro_exemplar_issue.txt"),
        EXEMPLAR_SCRIPT=load_template("repro_exemplar_script.js"),
    )
    parts = [TextPart(prompt)] + context.parts(include_repro=False)
    request = provider.new_request(
        [user_message(parts)],
        temperature=config.pipeline.default_temperature,
        n_samples=1,
    )
    response = provider.chat_complete(request, stage="repro.generate")
    script = first_fenced_block(response.first)
    if script is None:
        retry_parts = parts + [
            TextPart("Reply again with exactly one fenced code block holding the script.")
        ]
        retry = provider.new_request(
            [user_message(retry_parts)],
            temperature=config.pipeline.default_temperature,
            n_samples=1,
        )
        response = provider.chat_complete(retry, stage="repro.generate")
        script = first_fenced_block(response.first)
    if script is None:
        if _REFUSAL_RE.search(response.first):
            raise GenerationRefused(f"model declined: {response.first[:160]}")
        raise NoCodeBlock("reproduction completion carried no fenced code block")
    return ReproArtifact(
        script_code=script,
        host_page=build_host_page(config),
        origin=ORIGIN_GENERATED,
    )
