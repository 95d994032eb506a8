"""Dialogue generation and structural validation.

A prompt payload is rendered from a sample (system prompt asset + slot-filled
user content) and handed to a backend: either a remote chat endpoint or the
deterministic template fallback, which by construction satisfies every
validator rule. Validation returns violations as values, never raises.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

from .catalog import Catalog
from .samples import (
    AlternativeSample,
    BasicSample,
    PersonalizedSample,
    TASK_ALTERNATIVE,
    TASK_BASIC,
    TASK_PERSONALIZED,
)
from .text import content_words

__all__ = [
    "Dialogue",
    "PromptTemplate",
    "PromptPayload",
    "Violation",
    "DialogueError",
    "render_prompt",
    "generate_dialogue",
    "validate_dialogue",
    "template_fallback",
    "FallbackBackend",
    "RemoteBackend",
    "write_dialogues",
    "load_dialogues",
]

logger = logging.getLogger(__name__)

LEAK_NGRAM = 3  # consecutive content words of a protected description

_SUFFIX_RE = re.compile(r"\([^()]+\)\s*$")


class DialogueError(Exception):
    """Backend failure or unparseable generator output.

    Carries the raw backend text (when available) for debugging.
    """

    def __init__(self, message: str, raw: Optional[str] = None):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class Dialogue:
    sample_id: str
    task: str
    turns: tuple[tuple[str, str], ...]  # (user query, assistant response)
    valid: Optional[int] = None  # personalized only

    def as_dict(self) -> dict:
        record = {
            "sample_id": self.sample_id,
            "task": self.task,
            "turns": [{"q": q, "a": a} for q, a in self.turns],
        }
        if self.valid is not None:
            record["valid"] = self.valid
        return record


@dataclass(frozen=True)
class PromptTemplate:
    task: str
    system: str


@dataclass(frozen=True)
class PromptPayload:
    task: str
    system: str
    user_content: str
    sample: object


@dataclass(frozen=True)
class Violation:
    rule: str  # R1..R5
    message: str
    turn: Optional[int] = None

    def as_dict(self) -> dict:
        return {"rule": self.rule, "message": self.message, "turn": self.turn}


def load_template(task: str) -> PromptTemplate:
    if task not in (TASK_BASIC, TASK_PERSONALIZED, TASK_ALTERNATIVE):
        raise ValueError(f"unknown dialogue task {task!r}")
    system = resources.files("outfitkit.prompts").joinpath(f"{task}.txt").read_text(
        encoding="utf-8"
    )
    return PromptTemplate(task=task, system=system)


def _describe(catalog: Catalog, item_id: str) -> str:
    # Raises CatalogError for unresolvable slots.
    return catalog.item(item_id).description


def _bullet(lines: Sequence[str]) -> str:
    return "\n".join(f"- {line}" for line in lines)


def render_prompt(catalog: Catalog, sample) -> PromptPayload:
    """Fill the task template's slots from the sample, deterministically.

    Items are referenced by description text; the generator backend is
    text-only.
    """
    template = load_template(sample.task)
    if isinstance(sample, BasicSample):
        user_content = (
            "Partial Outfit:\n"
            + _bullet([_describe(catalog, i) for i in sample.partial])
            + "\n\nTarget Items:\n"
            + _bullet([_describe(catalog, i) for i in sample.targets])
        )
    elif isinstance(sample, PersonalizedSample):
        user_content = (
            "Partial Outfit:\n"
            + _bullet([_describe(catalog, i) for i in sample.partial])
            + "\n\nTarget Item:\n"
            + _bullet([_describe(catalog, sample.target)])
            + "\n\nHistorical Interacted Items:\n"
            + _bullet([_describe(catalog, i) for i in sample.filtered_history])
            + f"\n\nPreference Summary: {sample.preference_summary}"
        )
    elif isinstance(sample, AlternativeSample):
        outfit_a = catalog.outfit(sample.outfit_a)
        user_content = (
            "Outfit A:\n"
            + _bullet([_describe(catalog, i) for i in outfit_a.item_ids])
            + "\n\nItem A (to replace):\n"
            + _bullet([_describe(catalog, sample.replace)])
            + "\n\nItem B (replacement):\n"
            + _bullet([_describe(catalog, sample.replacement)])
        )
    else:
        raise ValueError(f"cannot render prompt for {type(sample).__name__}")
    return PromptPayload(
        task=sample.task, system=template.system, user_content=user_content, sample=sample
    )


def _category_phrase(categories: Sequence[str]) -> str:
    if not categories:
        return "outfit"
    if len(categories) == 1:
        return categories[0]
    return ", ".join(categories[:-1]) + " and " + categories[-1]


def template_fallback(catalog: Catalog, sample) -> Dialogue:
    """Deterministic slot-filled dialogue honoring every validator rule.

    User queries only ever name item categories; full descriptions appear in
    assistant responses, so the leakage rule cannot fire.
    """
    if isinstance(sample, BasicSample):
        partial_phrase = _category_phrase(
            [catalog.items[i].category for i in sample.partial]
        )
        turns = []
        for index, target in enumerate(sample.targets):
            category = catalog.items[target].category
            description = _describe(catalog, target)
            if index == 0:
                q = (
                    f"Here's a photo of my {partial_phrase}. "
                    f"Could you suggest a {category} to round out the look?"
                )
                a = f"I'd go with {description}. It complements your {partial_phrase} nicely."
            else:
                q = f"Thanks! Could you also recommend a {category}?"
                a = f"Certainly. Consider {description}; it ties in well with the rest of the outfit."
            turns.append((q, a))
        return Dialogue(sample_id=sample.id, task=sample.task, turns=tuple(turns))

    if isinstance(sample, PersonalizedSample):
        partial_phrase = _category_phrase(
            [catalog.items[i].category for i in sample.partial]
        )
        category = catalog.items[sample.target].category
        description = _describe(catalog, sample.target)
        q = (
            f"I've uploaded a photo of my {partial_phrase}. "
            f"What {category} would you pick to finish it? ({sample.preference_summary})"
        )
        if sample.valid == 1:
            a = (
                f"Given what you usually reach for, {description} would suit you well. "
                f"It lines up with the taste behind your recent picks."
            )
        else:
            a = (
                f"Your usual picks lean a little different, but {description} would "
                f"complete this outfit nicely; it could be a fresh direction."
            )
        return Dialogue(
            sample_id=sample.id, task=sample.task, turns=((q, a),), valid=sample.valid
        )

    if isinstance(sample, AlternativeSample):
        outfit_a = catalog.outfit(sample.outfit_a)
        outfit_phrase = _category_phrase(
            [catalog.items[i].category for i in outfit_a.item_ids]
        )
        anchor_phrase = _category_phrase(
            [catalog.items[i].category for i in sample.anchors]
        )
        replace_category = catalog.items[sample.replace].category
        replacement_description = _describe(catalog, sample.replacement)
        q = (
            f"Today I'm wearing my {outfit_phrase}. "
            f"Could you suggest a different {replace_category} to switch things up?"
        )
        a = (
            f"You could swap it for {replacement_description}. "
            f"It keeps the outfit coherent with your {anchor_phrase}."
        )
        return Dialogue(sample_id=sample.id, task=sample.task, turns=((q, a),))

    raise ValueError(f"cannot build fallback dialogue for {type(sample).__name__}")


class FallbackBackend:
    """Offline deterministic generator; always succeeds."""

    name = "fallback"

    def __init__(self, catalog: Catalog):
        self.catalog = catalog

    def generate(self, payload: PromptPayload) -> Dialogue:
        return template_fallback(self.catalog, payload.sample)


class RemoteBackend:
    """Single chat-completion HTTP call returning the dialogue as JSON.

    The endpoint receives {model, temperature, messages:[system, user]} and
    must answer either {"rounds": [{"user", "assistant"}], "valid"?} directly
    or a chat-completion envelope whose first choice content parses to that
    schema.
    """

    name = "remote"

    def __init__(
        self,
        endpoint: str,
        model: str = "default",
        temperature: float = 0.0,
        timeout: float = 60.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.timeout = timeout

    def generate(self, payload: PromptPayload) -> Dialogue:
        import httpx

        request = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": payload.system},
                {"role": "user", "content": payload.user_content},
            ],
        }
        try:
            resp = httpx.post(self.endpoint, json=request, timeout=self.timeout)
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise DialogueError(f"dialogue backend unreachable: {exc}") from exc
        raw = resp.text
        try:
            body = resp.json()
            if "choices" in body:
                body = json.loads(body["choices"][0]["message"]["content"])
            rounds = body["rounds"]
            turns = tuple((r["user"], r["assistant"]) for r in rounds)
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise DialogueError(
                f"unparseable dialogue backend output: {exc}", raw=raw
            ) from exc
        valid = body.get("valid")
        if valid is not None:
            valid = int(valid)
        return Dialogue(
            sample_id=payload.sample.id, task=payload.task, turns=turns, valid=valid
        )


def generate_dialogue(payload: PromptPayload, backend) -> Dialogue:
    """Run the backend and sanity-check its output shape."""
    dialogue = backend.generate(payload)
    if not dialogue.turns:
        raise DialogueError("backend produced a dialogue with no turns")
    return dialogue


def _contains_leak(query: str, description: str) -> bool:
    q_words = content_words(query)
    d_words = content_words(description)
    if len(d_words) < LEAK_NGRAM or len(q_words) < LEAK_NGRAM:
        return False
    grams = {
        tuple(d_words[i : i + LEAK_NGRAM]) for i in range(len(d_words) - LEAK_NGRAM + 1)
    }
    return any(
        tuple(q_words[i : i + LEAK_NGRAM]) in grams
        for i in range(len(q_words) - LEAK_NGRAM + 1)
    )


def _protected_descriptions(catalog: Catalog, sample) -> list[str]:
    if isinstance(sample, BasicSample):
        return [_describe(catalog, i) for i in sample.targets]
    if isinstance(sample, PersonalizedSample):
        return [_describe(catalog, sample.target)]
    if isinstance(sample, AlternativeSample):
        return [_describe(catalog, sample.replacement)]
    return []


def validate_dialogue(catalog: Catalog, task: str, dialogue: Dialogue, sample) -> list[Violation]:
    """Check the structural contract; an empty list means a clean dialogue.

    R1 round count per task; R2 no user query contains a run of
    LEAK_NGRAM consecutive content words from a target/replacement
    description; R3 the personalized query ends with a parenthesized
    preference suffix; R4 the valid flag is present iff personalized;
    R5 no empty turn texts.
    """
    violations: list[Violation] = []
    n_turns = len(dialogue.turns)

    if task == TASK_BASIC:
        limit = len(sample.targets)
        if not (1 <= n_turns <= limit):
            violations.append(
                Violation(
                    "R1",
                    f"basic dialogue must have between 1 and {limit} rounds, got {n_turns}",
                )
            )
    elif task in (TASK_PERSONALIZED, TASK_ALTERNATIVE):
        if n_turns != 1:
            violations.append(
                Violation("R1", f"{task} dialogue must have exactly one round, got {n_turns}")
            )

    protected = _protected_descriptions(catalog, sample)
    for index, (q, _a) in enumerate(dialogue.turns):
        for description in protected:
            if _contains_leak(q, description):
                violations.append(
                    Violation(
                        "R2",
                        f"user query leaks target description {description!r}",
                        turn=index,
                    )
                )
                break

    if task == TASK_PERSONALIZED and dialogue.turns:
        first_q = dialogue.turns[0][0]
        if not _SUFFIX_RE.search(first_q):
            violations.append(
                Violation(
                    "R3",
                    "personalized query must end with a parenthesized preference suffix",
                    turn=0,
                )
            )

    if task == TASK_PERSONALIZED:
        if dialogue.valid not in (0, 1):
            violations.append(
                Violation("R4", f"personalized dialogue needs valid in {{0,1}}, got {dialogue.valid}")
            )
    elif dialogue.valid is not None:
        violations.append(
            Violation("R4", f"valid flag only belongs on personalized dialogues, got {dialogue.valid}")
        )

    for index, (q, a) in enumerate(dialogue.turns):
        if not q.strip() or not a.strip():
            violations.append(Violation("R5", "turn has empty text", turn=index))

    return violations


def write_dialogues(dialogues: Sequence[Dialogue], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for dialogue in dialogues:
            fh.write(json.dumps(dialogue.as_dict()) + "\n")


def load_dialogues(path: str) -> list[Dialogue]:
    out: list[Dialogue] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(
                Dialogue(
                    sample_id=rec["sample_id"],
                    task=rec["task"],
                    turns=tuple((t["q"], t["a"]) for t in rec["turns"]),
                    valid=rec.get("valid"),
                )
            )
    return out
