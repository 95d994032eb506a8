"""Construction of the three recommendation sample types plus dataset splits.

Basic samples decompose an outfit into a shown part and withheld targets.
Personalized samples additionally carry a filtered slice of the user's
history. Alternative samples swap same-category items between two outfits
that share at least two anchor pieces. All builders are deterministic per
(input ids, seed) so dataset emission is byte-reproducible.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .catalog import Catalog
from .history_filter import FilterConfig, filter_user_history
from .text import attribute_alignment, preference_summary

__all__ = [
    "BasicSample",
    "PersonalizedSample",
    "AlternativeSample",
    "DatasetSplit",
    "MAX_TARGETS",
    "split_outfit",
    "build_basic",
    "build_personalized",
    "find_alternative_pairs",
    "build_alternative",
    "emit_split",
    "build_dataset",
    "load_samples",
]

logger = logging.getLogger(__name__)

MAX_TARGETS = 3
DEFAULT_RATIOS = (0.9, 0.05, 0.05)

TASK_BASIC = "basic"
TASK_PERSONALIZED = "personalized"
TASK_ALTERNATIVE = "alternative"


@dataclass(frozen=True)
class BasicSample:
    id: str
    outfit_id: str
    partial: tuple[str, ...]
    targets: tuple[str, ...]  # sorted ascending; one dialogue slot per target

    task = TASK_BASIC

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "task": self.task,
            "outfit": self.outfit_id,
            "partial": list(self.partial),
            "targets": list(self.targets),
        }


@dataclass(frozen=True)
class PersonalizedSample:
    id: str
    outfit_id: str
    user_id: str
    partial: tuple[str, ...]
    target: str
    filtered_history: tuple[str, ...]
    preference_summary: str
    valid: int

    task = TASK_PERSONALIZED

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "task": self.task,
            "outfit": self.outfit_id,
            "user": self.user_id,
            "partial": list(self.partial),
            "target": self.target,
            "history": list(self.filtered_history),
            "preference_summary": self.preference_summary,
            "valid": self.valid,
        }


@dataclass(frozen=True)
class AlternativeSample:
    id: str
    outfit_a: str  # the outfit the user is currently wearing
    outfit_b: str  # the outfit supplying the replacement
    anchors: tuple[str, ...]  # shared items, sorted
    replace: str  # item in outfit_a to swap out
    replacement: str  # same-category item from outfit_b

    task = TASK_ALTERNATIVE

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "task": self.task,
            "outfit_a": self.outfit_a,
            "outfit_b": self.outfit_b,
            "anchors": list(self.anchors),
            "replace": self.replace,
            "replacement": self.replacement,
        }


@dataclass(frozen=True)
class DatasetSplit:
    task: str
    seed: int
    ratios: tuple[float, float, float]
    train: tuple[str, ...]
    valid: tuple[str, ...]
    test: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "task": self.task,
            "seed": self.seed,
            "ratios": list(self.ratios),
            "ids": {
                "train": list(self.train),
                "valid": list(self.valid),
                "test": list(self.test),
            },
        }


def split_outfit(outfit, seed: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Split an outfit into (partial, targets), deterministic per (outfit id, seed).

    The target count is drawn uniformly from [1, min(3, n-1)]; targets are
    drawn without replacement. The partial keeps outfit order, targets are
    sorted by id.
    """
    n = len(outfit.item_ids)
    if n < 2:
        raise ValueError(f"outfit {outfit.id!r} too small to split")
    rng = random.Random(f"{seed}:{outfit.id}")
    t_size = rng.randint(1, min(MAX_TARGETS, n - 1))
    targets = set(rng.sample(list(outfit.item_ids), t_size))
    partial = tuple(i for i in outfit.item_ids if i not in targets)
    return partial, tuple(sorted(targets))


def build_basic(catalog: Catalog, outfit_id: str, seed: int) -> BasicSample:
    """Basic recommendation sample: one dialogue slot per target, by target id."""
    outfit = catalog.outfit(outfit_id)
    partial, targets = split_outfit(outfit, seed)
    return BasicSample(
        id=f"basic:{outfit_id}",
        outfit_id=outfit_id,
        partial=partial,
        targets=targets,
    )


def build_personalized(
    catalog: Catalog,
    embedder,
    outfit_id: str,
    user_id: str,
    config: FilterConfig = FilterConfig(),
) -> Optional[PersonalizedSample]:
    """Personalized sample from the history filter; None when filtering yields none.

    The preference summary is rendered from the filtered history items and is
    meant to be appended after the user's question at dialogue time.
    """
    outcome = filter_user_history(catalog, embedder, outfit_id, user_id, config)
    if outcome is None:
        return None
    outfit = catalog.outfit(outfit_id)
    partial = tuple(i for i in outfit.item_ids if i in outcome.partial)
    history_items = [catalog.items[i] for i in outcome.filtered_history]
    summary = preference_summary(history_items)
    valid = attribute_alignment(history_items, catalog.items[outcome.target])
    return PersonalizedSample(
        id=f"pers:{outfit_id}:{user_id}",
        outfit_id=outfit_id,
        user_id=user_id,
        partial=partial,
        target=outcome.target,
        filtered_history=outcome.filtered_history,
        preference_summary=summary,
        valid=valid,
    )


def find_alternative_pairs(catalog: Catalog) -> list[tuple[str, str, frozenset[str]]]:
    """All unordered outfit pairs sharing at least two items, each once (a < b).

    Candidate pairs come from an inverted item->outfits index rather than the
    full quadratic scan, so only outfits that share at least one item are
    compared.
    """
    by_item: dict[str, list[str]] = {}
    for outfit in catalog.outfits.values():
        for item_id in outfit.item_ids:
            by_item.setdefault(item_id, []).append(outfit.id)

    seen: set[tuple[str, str]] = set()
    pairs: list[tuple[str, str, frozenset[str]]] = []
    for outfit_ids in by_item.values():
        if len(outfit_ids) < 2:
            continue
        for i, a in enumerate(outfit_ids):
            for b in outfit_ids[i + 1 :]:
                key = (a, b) if a < b else (b, a)
                if key in seen:
                    continue
                seen.add(key)
                shared = frozenset(catalog.outfits[key[0]].item_ids) & frozenset(
                    catalog.outfits[key[1]].item_ids
                )
                if len(shared) >= 2:
                    pairs.append((key[0], key[1], shared))
    pairs.sort(key=lambda p: (p[0], p[1]))
    return pairs


def build_alternative(
    catalog: Catalog, outfit_a: str, outfit_b: str, anchors: frozenset[str]
) -> list[AlternativeSample]:
    """All same-category swaps between the two non-overlapping sides.

    Both directions are emitted: wearing A and swapping toward B, and the
    mirror. An empty list is valid when no categories line up.
    """
    if len(anchors) < 2:
        raise ValueError("alternative pairs need at least two anchor items")
    only_a = [i for i in catalog.outfit(outfit_a).item_ids if i not in anchors]
    only_b = [i for i in catalog.outfit(outfit_b).item_ids if i not in anchors]
    anchor_tuple = tuple(sorted(anchors))
    samples: list[AlternativeSample] = []
    for i_a in only_a:
        for i_b in only_b:
            if catalog.items[i_a].category != catalog.items[i_b].category:
                continue
            samples.append(
                AlternativeSample(
                    id=f"alt:{outfit_a}:{outfit_b}:{i_a}:{i_b}",
                    outfit_a=outfit_a,
                    outfit_b=outfit_b,
                    anchors=anchor_tuple,
                    replace=i_a,
                    replacement=i_b,
                )
            )
            samples.append(
                AlternativeSample(
                    id=f"alt:{outfit_b}:{outfit_a}:{i_b}:{i_a}",
                    outfit_a=outfit_b,
                    outfit_b=outfit_a,
                    anchors=anchor_tuple,
                    replace=i_b,
                    replacement=i_a,
                )
            )
    return samples


def emit_split(
    sample_ids: Sequence[str],
    ratios: tuple[float, float, float],
    seed: int,
    task: str,
) -> DatasetSplit:
    """Seeded shuffle then contiguous cut into train/valid/test.

    Sizes are floor(ratio * N) with the remainder assigned train-first, so
    re-running with the same seed reproduces the split byte for byte.
    """
    if any(r <= 0 for r in ratios):
        raise ValueError("split ratios must be positive")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {sum(ratios)}")
    ids = sorted(sample_ids)
    rng = random.Random(seed)
    rng.shuffle(ids)
    n = len(ids)
    sizes = [math.floor(r * n) for r in ratios]
    remainder = n - sum(sizes)
    for i in range(remainder):
        sizes[i % 3] += 1
    if any(s == 0 for s in sizes) and n > 0:
        logger.warning(
            "too few samples (%d) for three non-empty %s splits: sizes %s",
            n,
            task,
            sizes,
        )
    train = tuple(ids[: sizes[0]])
    valid = tuple(ids[sizes[0] : sizes[0] + sizes[1]])
    test = tuple(ids[sizes[0] + sizes[1] :])
    return DatasetSplit(
        task=task, seed=seed, ratios=tuple(ratios), train=train, valid=valid, test=test
    )


def _build_basic_samples(catalog: Catalog, seed: int) -> list[BasicSample]:
    return [build_basic(catalog, oid, seed) for oid in sorted(catalog.outfits)]


def _build_personalized_samples(
    catalog: Catalog, embedder, config: FilterConfig
) -> list[PersonalizedSample]:
    samples: list[PersonalizedSample] = []
    for user_id in sorted(catalog.users):
        for outfit_id in sorted(set(catalog.users[user_id].outfit_ids)):
            sample = build_personalized(catalog, embedder, outfit_id, user_id, config)
            if sample is not None:
                samples.append(sample)
    return samples


def _build_alternative_samples(catalog: Catalog) -> list[AlternativeSample]:
    samples: list[AlternativeSample] = []
    for outfit_a, outfit_b, anchors in find_alternative_pairs(catalog):
        samples.extend(build_alternative(catalog, outfit_a, outfit_b, anchors))
    return samples


def build_dataset(
    catalog: Catalog,
    embedder,
    task: str,
    seed: int,
    out_dir: str,
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    filter_config: FilterConfig = FilterConfig(),
) -> dict:
    """Build samples for one task (or 'all'), write JSONL + split manifests.

    Returns a summary dict: per-task sample counts and emitted file paths.
    """
    import os

    tasks = [TASK_BASIC, TASK_PERSONALIZED, TASK_ALTERNATIVE] if task == "all" else [task]
    os.makedirs(out_dir, exist_ok=True)
    summary: dict = {"out_dir": out_dir, "seed": seed, "tasks": {}}
    splits: dict[str, dict] = {}
    for t in tasks:
        if t == TASK_BASIC:
            samples = _build_basic_samples(catalog, seed)
        elif t == TASK_PERSONALIZED:
            samples = _build_personalized_samples(catalog, embedder, filter_config)
        elif t == TASK_ALTERNATIVE:
            samples = _build_alternative_samples(catalog)
        else:
            raise ValueError(f"unknown task {t!r}")
        path = os.path.join(out_dir, f"{t}.jsonl")
        with open(path, "w", encoding="utf-8") as fh:
            for sample in samples:
                fh.write(json.dumps(sample.as_dict()) + "\n")
        split = emit_split([s.id for s in samples], ratios, seed, t)
        splits[t] = split.as_dict()
        summary["tasks"][t] = {"samples": len(samples), "file": path}
        if not samples:
            logger.warning("task %s produced zero samples", t)
            summary["tasks"][t]["warning"] = "zero samples"
    split_path = os.path.join(out_dir, "split.json")
    with open(split_path, "w", encoding="utf-8") as fh:
        json.dump(splits, fh, indent=2)
        fh.write("\n")
    summary["split_file"] = split_path
    return summary


def load_samples(path: str) -> list:
    """Read a samples JSONL file back into typed sample objects."""
    out: list = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            task = rec.get("task")
            if task == TASK_BASIC:
                out.append(
                    BasicSample(
                        id=rec["id"],
                        outfit_id=rec["outfit"],
                        partial=tuple(rec["partial"]),
                        targets=tuple(rec["targets"]),
                    )
                )
            elif task == TASK_PERSONALIZED:
                out.append(
                    PersonalizedSample(
                        id=rec["id"],
                        outfit_id=rec["outfit"],
                        user_id=rec["user"],
                        partial=tuple(rec["partial"]),
                        target=rec["target"],
                        filtered_history=tuple(rec["history"]),
                        preference_summary=rec["preference_summary"],
                        valid=int(rec["valid"]),
                    )
                )
            elif task == TASK_ALTERNATIVE:
                out.append(
                    AlternativeSample(
                        id=rec["id"],
                        outfit_a=rec["outfit_a"],
                        outfit_b=rec["outfit_b"],
                        anchors=tuple(rec["anchors"]),
                        replace=rec["replace"],
                        replacement=rec["replacement"],
                    )
                )
            else:
                raise ValueError(f"unknown sample task {task!r} in {path}")
    return out
