"""Small text helpers shared by the sample builder, dialogue generator, and
assistant service: content-word extraction, preference summaries, the
attribute-alignment heuristic, and whitespace-token budgeting."""

from __future__ import annotations

import re
from typing import Iterable, Sequence

__all__ = [
    "STOPWORDS",
    "content_words",
    "preference_summary",
    "attribute_alignment",
    "truncate_tokens",
    "MAX_SUMMARY_TERMS",
]

STOPWORDS = frozenset(
    """a an and are as at be but by for from has have i in is it its my of on
    or our so that the their this to was we what which with you your""".split()
)

MAX_SUMMARY_TERMS = 5

_WORD_RE = re.compile(r"[a-z0-9']+")


def content_words(text: str) -> list[str]:
    """Lowercased word tokens with stopwords removed."""
    return [w for w in _WORD_RE.findall(text.lower()) if w not in STOPWORDS]


def preference_summary(items: Sequence) -> str:
    """Deterministic one-liner summarizing what a set of items suggests the
    user prefers: 'prefers: <top attribute terms>'.

    Terms are attribute tags ranked by frequency (ties alphabetical), capped
    at MAX_SUMMARY_TERMS. Items without attribute tags fall back to the first
    content word of their description, so the summary is non-empty whenever
    the item list is.
    """
    if not items:
        return ""
    counts: dict[str, int] = {}
    order: dict[str, int] = {}
    for item in items:
        terms = [t.lower() for t in item.attributes]
        if not terms:
            words = content_words(item.description)
            terms = words[:1]
        for term in terms:
            counts[term] = counts.get(term, 0) + 1
            order.setdefault(term, len(order))
    ranked = sorted(counts, key=lambda t: (-counts[t], t))
    return "prefers: " + ", ".join(ranked[:MAX_SUMMARY_TERMS])


def attribute_alignment(history_items: Iterable, target_item) -> int:
    """1 when at least one history item shares an attribute tag with the
    target, else 0. Items without tags cannot establish alignment."""
    target_tags = {t.lower() for t in target_item.attributes}
    if not target_tags:
        return 0
    for item in history_items:
        if target_tags & {t.lower() for t in item.attributes}:
            return 1
    return 0


def truncate_tokens(text: str, budget: int) -> str:
    """Clip text to at most `budget` whitespace-separated tokens."""
    tokens = text.split()
    if len(tokens) <= budget:
        return text
    return " ".join(tokens[:budget])
