"""Evaluation metrics and training-loss math as pure functions.

The four similarity metrics are cosines over embedder outputs, scaled by
100. The two losses operate on caller-supplied logit tables, so they are
testable without any model or gradient machinery: next-token loss over a
response span, and masked-token loss over a masked position set.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .embedding import cosine

__all__ = [
    "EvalPair",
    "MetricReport",
    "LogitTable",
    "MaskSpec",
    "MetricError",
    "sbert_similarity",
    "cts",
    "cis",
    "personalization",
    "evaluate_run",
    "mmr_loss",
    "t2i_loss",
    "load_eval_pairs",
    "format_report_table",
]

logger = logging.getLogger(__name__)

METRIC_NAMES = ("sbert", "cts", "cis", "per")


class MetricError(Exception):
    """Unusable metric operands."""


@dataclass(frozen=True)
class EvalPair:
    id: str = ""
    generated_text: Optional[str] = None
    gt_text: Optional[str] = None
    generated_image_ref: Optional[str] = None
    gt_image_ref: Optional[str] = None
    history_image_refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class MetricReport:
    sbert: Optional[float]
    cts: Optional[float]
    cis: Optional[float]
    per: Optional[float]
    n: int
    counts: dict = field(default_factory=dict)  # per-metric pair counts

    def as_dict(self) -> dict:
        return {
            "sbert": self.sbert,
            "cts": self.cts,
            "cis": self.cis,
            "per": self.per,
            "n": self.n,
            "counts": dict(self.counts),
        }


def sbert_similarity(generated_text: str, gt_text: str, embedder) -> float:
    """100 * cosine between the two sentence embeddings."""
    if not generated_text or not gt_text:
        raise MetricError("sbert needs non-empty generated and ground-truth text")
    return 100.0 * cosine(embedder.embed_text(generated_text), embedder.embed_text(gt_text))


def cts(generated_text: str, gt_image_ref: str, embedder) -> float:
    """100 * cosine between generated text and ground-truth image embeddings."""
    if not generated_text or not gt_image_ref:
        raise MetricError("cts needs non-empty text and image ref")
    return 100.0 * cosine(
        embedder.embed_text(generated_text), embedder.embed_image(gt_image_ref)
    )


def cis(generated_image_ref: str, gt_image_ref: str, embedder) -> float:
    """100 * cosine between generated and ground-truth image embeddings."""
    if not generated_image_ref or not gt_image_ref:
        raise MetricError("cis needs non-empty image refs")
    return 100.0 * cosine(
        embedder.embed_image(generated_image_ref), embedder.embed_image(gt_image_ref)
    )


def personalization(
    generated_image_ref: str, history_image_refs: Sequence[str], embedder
) -> float:
    """100 * cosine between the generated image and the mean history embedding.

    The preference vector is the unweighted mean of the user's history image
    embeddings; a degenerate all-cancelling history surfaces as the usual
    zero-norm error from the cosine.
    """
    if not generated_image_ref:
        raise MetricError("personalization needs a generated image ref")
    if not history_image_refs:
        raise MetricError("personalization needs at least one history image")
    history = np.stack([embedder.embed_image(ref) for ref in history_image_refs])
    preference = history.mean(axis=0)
    return 100.0 * cosine(preference, embedder.embed_image(generated_image_ref))


def evaluate_run(pairs: Sequence[EvalPair], embedder) -> MetricReport:
    """Mean of each metric over the pairs that carry its operands.

    Means use exact summation, so the report is byte-identical under any
    permutation of the input pairs.
    """
    if not pairs:
        raise MetricError("evaluate_run needs at least one pair")
    values: dict[str, list[float]] = {name: [] for name in METRIC_NAMES}
    for pair in pairs:
        if pair.generated_text and pair.gt_text:
            values["sbert"].append(sbert_similarity(pair.generated_text, pair.gt_text, embedder))
        if pair.generated_text and pair.gt_image_ref:
            values["cts"].append(cts(pair.generated_text, pair.gt_image_ref, embedder))
        if pair.generated_image_ref and pair.gt_image_ref:
            values["cis"].append(cis(pair.generated_image_ref, pair.gt_image_ref, embedder))
        if pair.generated_image_ref and pair.history_image_refs:
            values["per"].append(
                personalization(pair.generated_image_ref, pair.history_image_refs, embedder)
            )

    def mean(name: str) -> Optional[float]:
        if not values[name]:
            return None
        # fsum is exactly rounded, hence order-independent.
        return math.fsum(values[name]) / len(values[name])

    return MetricReport(
        sbert=mean("sbert"),
        cts=mean("cts"),
        cis=mean("cis"),
        per=mean("per"),
        n=len(pairs),
        counts={name: len(values[name]) for name in METRIC_NAMES},
    )


class LogitTable:
    """Ordered per-step unnormalized log-score vectors over a fixed vocabulary."""

    def __init__(self, rows):
        array = np.asarray(rows, dtype=np.float64)
        if array.ndim != 2:
            raise ValueError(f"logit table must be 2-D (steps x vocab), got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("logit table entries must be finite")
        self.rows = array

    @property
    def steps(self) -> int:
        return self.rows.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class MaskSpec:
    """Masked positions (0-based) and the original tokens at those positions."""

    length: int
    masked: frozenset[int]
    originals: dict

    def __post_init__(self) -> None:
        for index in self.masked:
            if not (0 <= index < self.length):
                raise ValueError(f"masked index {index} outside [0, {self.length})")
            if index not in self.originals:
                raise ValueError(f"masked index {index} has no original token")


def _neg_log_softmax_at(row: np.ndarray, token: int) -> float:
    if not (0 <= token < row.shape[0]):
        raise IndexError(f"token id {token} outside vocabulary of size {row.shape[0]}")
    shift = row - row.max()
    return float(np.log(np.sum(np.exp(shift))) - shift[token])


def mmr_loss(
    logits: LogitTable, response_token_ids: Sequence[int], response_start_index: int
) -> float:
    """Next-token loss summed only over the response span.

    Row response_start_index + i of the table is the distribution that
    predicts response token i.
    """
    n = len(response_token_ids)
    if response_start_index < 0 or response_start_index + n > logits.steps:
        raise IndexError(
            f"response span [{response_start_index}, {response_start_index + n}) "
            f"outside table of {logits.steps} steps"
        )
    terms = [
        _neg_log_softmax_at(logits.rows[response_start_index + i], token)
        for i, token in enumerate(response_token_ids)
    ]
    return math.fsum(terms)


def t2i_loss(logits: LogitTable, mask: MaskSpec) -> float:
    """Masked-token loss summed exclusively over the masked positions.

    Unmasked positions contribute nothing; an empty mask set is defined as
    zero (with a warning, since the loss is then vacuous).
    """
    if mask.length > logits.steps:
        raise IndexError(
            f"mask covers {mask.length} positions but table has {logits.steps} steps"
        )
    if not mask.masked:
        logger.warning("t2i_loss over an empty mask set is defined as 0")
        return 0.0
    terms = [
        _neg_log_softmax_at(logits.rows[index], mask.originals[index])
        for index in sorted(mask.masked)
    ]
    return math.fsum(terms)


def load_eval_pairs(path: str) -> list[EvalPair]:
    """Read a predictions JSONL file into EvalPairs."""
    pairs: list[EvalPair] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            pairs.append(
                EvalPair(
                    id=str(rec.get("id", "")),
                    generated_text=rec.get("gen_text"),
                    gt_text=rec.get("gt_text"),
                    generated_image_ref=rec.get("gen_image"),
                    gt_image_ref=rec.get("gt_image"),
                    history_image_refs=tuple(rec.get("history_images", []) or ()),
                )
            )
    return pairs


def format_report_table(report: MetricReport) -> str:
    """Aligned plain-text rendering of a metric report."""
    rows = [("metric", "mean", "pairs")]
    for name in METRIC_NAMES:
        value = getattr(report, name)
        rows.append(
            (name, "-" if value is None else f"{value:.4f}", str(report.counts.get(name, 0)))
        )
    widths = [max(len(row[col]) for row in rows) for col in range(3)]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[col]) for col, cell in enumerate(row)))
    return "\n".join(lines)
