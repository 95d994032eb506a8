"""User-history filtering: pick the best (partial outfit, target) pair and
distill the user's category history down to the few items worth injecting
into a personalized prompt.

For each candidate target item the user's category history U_c and the
corpus-wide compatible set H_c are collected; candidates below the size
thresholds are dropped. The winning pair maximizes alpha*|H_c| + |U_c|.
History items are then scored against a co-occurrence-weighted mean feature
of H_c, boosted by interaction frequency, and the top-k survive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .catalog import Catalog
from .embedding import cosine

__all__ = [
    "FilterConfig",
    "CandidatePair",
    "CompatibilityProfile",
    "ScoredHistoryItem",
    "FilterOutcome",
    "enumerate_candidates",
    "select_optimal",
    "compatibility_profile",
    "score_history_item",
    "filter_user_history",
]


@dataclass(frozen=True)
class FilterConfig:
    m_u: int = 10  # minimum user history size per category
    m_i: int = 3  # minimum compatible-set size
    alpha: float = 3.0  # weight of |H_c| in pair selection
    beta: float = 2.0  # interaction-frequency boost in history scoring
    k: int = 5  # filtered history size

    def __post_init__(self) -> None:
        if self.m_u < 1 or self.m_i < 1:
            raise ValueError("m_u and m_i must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class CandidatePair:
    partial: frozenset[str]
    target: str
    compatible: frozenset[str]  # H_c
    history: frozenset[str]  # U_c


@dataclass
class CompatibilityProfile:
    vector: np.ndarray
    weights: dict[str, float]


@dataclass(frozen=True)
class ScoredHistoryItem:
    item_id: str
    sim: float
    count: int
    score: float


@dataclass(frozen=True)
class FilterOutcome:
    partial: frozenset[str]
    target: str
    filtered_history: tuple[str, ...]  # score-descending, ties by ascending id

    def as_dict(self) -> dict:
        return {
            "partial": sorted(self.partial),
            "target": self.target,
            "filtered_history": list(self.filtered_history),
        }


def enumerate_candidates(
    catalog: Catalog, outfit_id: str, user_id: str, config: FilterConfig
) -> list[CandidatePair]:
    """One candidate per outfit item, in outfit order, filtered by thresholds.

    A candidate survives only when the user's category history has at least
    m_u items and the compatible set at least m_i.
    """
    outfit = catalog.outfit(outfit_id)
    catalog.user(user_id)
    candidates: list[CandidatePair] = []
    for target in outfit.item_ids:
        partial = frozenset(i for i in outfit.item_ids if i != target)
        category = catalog.items[target].category
        history = frozenset(catalog.user_items_in_category(user_id, category))
        compatible = frozenset(catalog.items_cooccurring_in_category(partial, category))
        if len(history) >= config.m_u and len(compatible) >= config.m_i:
            candidates.append(
                CandidatePair(
                    partial=partial,
                    target=target,
                    compatible=compatible,
                    history=history,
                )
            )
    return candidates


def select_optimal(candidates: list[CandidatePair], alpha: float) -> CandidatePair:
    """Candidate maximizing alpha*|H_c| + |U_c|; ties go to the lowest target id."""
    if not candidates:
        raise ValueError("cannot select from an empty candidate set")
    best = None
    best_key = None
    for cand in candidates:
        objective = alpha * len(cand.compatible) + len(cand.history)
        key = (-objective, cand.target)
        if best_key is None or key < best_key:
            best, best_key = cand, key
    return best


def compatibility_profile(
    catalog: Catalog, features, compatible: frozenset[str], partial: frozenset[str]
) -> CompatibilityProfile:
    """Co-occurrence-weighted mean feature of the compatible set.

    Weights are each item's co-occurrence count with the partial outfit,
    normalized to sum to 1. Every member of H_c co-occurs at least once by
    construction; a zero total means the caller broke that contract.
    """
    counts: dict[str, int] = {}
    for item_id in sorted(compatible):
        counts[item_id] = catalog.cooccurrence_count(item_id, partial)
    total = sum(counts.values())
    if total <= 0:
        raise ValueError("compatible set has zero total co-occurrence count")
    weights = {item_id: count / total for item_id, count in counts.items()}
    vector = np.zeros(features.embedder.dim, dtype=np.float64)
    for item_id in sorted(compatible):
        vector += weights[item_id] * features.feature(catalog.items[item_id])
    return CompatibilityProfile(vector=vector, weights=weights)


def score_history_item(
    catalog: Catalog,
    features,
    item_id: str,
    profile: CompatibilityProfile,
    user_id: str,
    beta: float,
    max_count: int,
) -> ScoredHistoryItem:
    """Score one history item: (beta * count/max_count + 1) * sim.

    `sim` is the cosine between the item's feature and the compatibility
    profile; `count` is the user's interaction count with the item. The +1
    keeps similarity as a baseline for rarely-interacted items.
    """
    if max_count < 1:
        raise ValueError("max_count must be >= 1")
    sim = cosine(features.feature(catalog.item(item_id)), profile.vector)
    count = catalog.item_interaction_count(user_id, item_id)
    score = (beta * count / max_count + 1.0) * sim
    return ScoredHistoryItem(item_id=item_id, sim=sim, count=count, score=score)


def filter_user_history(
    catalog: Catalog,
    embedder,
    outfit_id: str,
    user_id: str,
    config: FilterConfig = FilterConfig(),
) -> Optional[FilterOutcome]:
    """Full pipeline: enumerate, select, profile, score, take top-k.

    Returns None when no candidate pair passes the thresholds; that is a
    normal outcome, not an error.
    """
    candidates = enumerate_candidates(catalog, outfit_id, user_id, config)
    if not candidates:
        return None
    chosen = select_optimal(candidates, config.alpha)
    features = catalog.features(embedder)
    profile = compatibility_profile(catalog, features, chosen.compatible, chosen.partial)

    interaction_counts = {
        item_id: catalog.item_interaction_count(user_id, item_id)
        for item_id in chosen.history
    }
    max_count = max(interaction_counts.values())
    assert max_count >= 1, "membership in the category history implies count >= 1"

    scored = [
        score_history_item(
            catalog, features, item_id, profile, user_id, config.beta, max_count
        )
        for item_id in sorted(chosen.history)
    ]
    scored.sort(key=lambda s: (-s.score, s.item_id))
    top = tuple(s.item_id for s in scored[: config.k])
    return FilterOutcome(partial=chosen.partial, target=chosen.target, filtered_history=top)
