"""Rendering of the three subtask prompt templates.

Templates are plain text files with named slots {dataset_specific_examples},
{context_text} and {text}. Substitution is literal string replacement of
the named slots only, so braces occurring in document text (or the {{ }}
anaphor markers) pass through verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .windows import Window

SUBTASKS = ("recognition", "resolution", "subtype")

_SLOTS = {
    "recognition": ("dataset_specific_examples", "context_text", "text"),
    "resolution": ("dataset_specific_examples", "text"),
    "subtype": ("dataset_specific_examples", "text"),
}


class TemplateError(ValueError):
    """Template missing a required slot, or slot content missing."""


@dataclass(frozen=True)
class RenderedPrompt:
    subtask: str
    text: str
    placeholders_filled: dict = field(default_factory=dict, hash=False)


@dataclass(frozen=True)
class FewShotSet:
    """Opaque pass-through example blocks, one per subtask, for a dataset."""

    dataset: str
    examples: dict = field(default_factory=dict, hash=False)  # subtask -> text

    @classmethod
    def empty(cls, dataset="none"):
        return cls(dataset=dataset, examples={})

    @classmethod
    def from_dir(cls, directory, dataset):
        """Load ``<dataset>.<subtask>.txt`` files; missing files mean empty."""
        directory = Path(directory)
        examples = {}
        for subtask in SUBTASKS:
            path = directory / f"{dataset}.{subtask}.txt"
            if path.exists():
                examples[subtask] = path.read_text(encoding="utf-8").rstrip("\n")
        return cls(dataset=dataset, examples=examples)

    def block(self, subtask):
        return self.examples.get(subtask, "")


class TemplateSet:
    """The three subtask templates, from a directory or the packaged defaults."""

    def __init__(self, templates: dict):
        self.templates = templates
        for subtask in SUBTASKS:
            if subtask not in templates:
                raise TemplateError(f"missing template for subtask {subtask!r}")
            for slot in _SLOTS[subtask]:
                if "{%s}" % slot not in templates[subtask]:
                    raise TemplateError(
                        f"{subtask} template has no {{{slot}}} slot"
                    )

    @classmethod
    def default(cls):
        templates = {}
        for subtask in SUBTASKS:
            ref = resources.files("bridgekit") / "templates" / f"{subtask}.txt"
            templates[subtask] = ref.read_text(encoding="utf-8")
        return cls(templates)

    @classmethod
    def from_dir(cls, directory):
        directory = Path(directory)
        templates = {}
        for subtask in SUBTASKS:
            templates[subtask] = (directory / f"{subtask}.txt").read_text(
                encoding="utf-8"
            )
        return cls(templates)

    def render(self, subtask, **slots) -> RenderedPrompt:
        text = self.templates[subtask]
        for slot in _SLOTS[subtask]:
            if slot not in slots or slots[slot] is None:
                raise TemplateError(f"missing content for slot {{{slot}}}")
            # Literal replacement: only the named slot substitutes, so any
            # brace characters inside slot content are left alone.
            text = text.replace("{%s}" % slot, slots[slot])
        return RenderedPrompt(
            subtask=subtask,
            text=text,
            placeholders_filled={s: slots[s] for s in _SLOTS[subtask]},
        )


def render_recognition(
    templates: TemplateSet, window: Window, fewshot: FewShotSet
) -> RenderedPrompt:
    """Fill the recognition template from a recognition window."""
    return templates.render(
        "recognition",
        dataset_specific_examples=fewshot.block("recognition"),
        context_text=window.context_text,
        text=window.target_text,
    )


def render_candidate_confirmation(
    templates: TemplateSet, window: Window, candidate_text: str, fewshot: FewShotSet
) -> RenderedPrompt:
    """Confirmation query for a heuristically suggested candidate anaphor.

    Reuses the recognition template with the candidate named under the
    target text, asking for a specific judgment on it.
    """
    framed = (
        window.target_text
        + "\nIs the following entity a bridging anaphor in the text above? "
        + f'Candidate: "{candidate_text}"'
    )
    return templates.render(
        "recognition",
        dataset_specific_examples=fewshot.block("recognition"),
        context_text=window.context_text,
        text=framed,
    )


def render_resolution(
    templates: TemplateSet, window: Window, fewshot: FewShotSet
) -> RenderedPrompt:
    """Fill the resolution template; left context and marked sentence share
    the {text} slot."""
    _check_single_anaphor_markers(window.target_text)
    text = window.target_text
    if window.context_text:
        text = window.context_text + " " + text
    return templates.render(
        "resolution",
        dataset_specific_examples=fewshot.block("resolution"),
        text=text,
    )


def render_subtype(
    templates: TemplateSet, window: Window, fewshot: FewShotSet
) -> RenderedPrompt:
    """Fill the subtype template from an end-to-end or basic subtype window."""
    text = window.target_text
    if window.context_text:
        text = window.context_text + " " + text
    _check_single_anaphor_markers(text)
    return templates.render(
        "subtype",
        dataset_specific_examples=fewshot.block("subtype"),
        text=text,
    )


def _check_single_anaphor_markers(text):
    # The window excerpt must carry exactly one marked anaphor; the {{ }}
    # markers are inserted as standalone tokens by the window builders.
    tokens = text.split(" ")
    opens = tokens.count("{{")
    closes = tokens.count("}}")
    if opens != 1 or closes != 1:
        raise TemplateError(
            f"expected exactly one marked anaphor, found {opens} opening and "
            f"{closes} closing markers"
        )
