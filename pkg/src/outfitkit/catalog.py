"""Catalog store: items, curated outfits, and user interaction histories.

Data is ingested from JSON Lines files and held in memory behind query
helpers for interaction counts, co-occurrence, and nearest-neighbour
retrieval. After ingest the catalog is immutable, so reads are safe from
any number of threads.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .embedding import FeatureCache, cosine

__all__ = [
    "Item",
    "Outfit",
    "UserRecord",
    "CatalogStats",
    "Catalog",
    "CatalogError",
    "IngestError",
    "load_catalog",
]


class CatalogError(Exception):
    """Lookup failures against an ingested catalog (unknown ids, bad args)."""


class IngestError(Exception):
    """Validation failures while ingesting catalog files."""


@dataclass(frozen=True)
class Item:
    id: str
    category: str
    description: str
    image_ref: str
    attributes: tuple[str, ...] = ()

    def validate(self) -> None:
        if not self.id:
            raise IngestError("item id must be non-empty")
        if not self.category:
            raise IngestError(f"item {self.id!r}: category must be non-empty")
        if not self.description:
            raise IngestError(f"item {self.id!r}: description must be non-empty")


@dataclass(frozen=True)
class Outfit:
    id: str
    item_ids: tuple[str, ...]

    def validate(self) -> None:
        if not self.id:
            raise IngestError("outfit id must be non-empty")
        if len(self.item_ids) < 2:
            raise IngestError(f"outfit {self.id!r}: needs at least 2 items")
        if len(set(self.item_ids)) != len(self.item_ids):
            raise IngestError(f"outfit {self.id!r}: duplicate item ids")


@dataclass(frozen=True)
class UserRecord:
    id: str
    outfit_ids: tuple[str, ...]

    def validate(self) -> None:
        if not self.id:
            raise IngestError("user id must be non-empty")


@dataclass(frozen=True)
class CatalogStats:
    n_items: int
    n_outfits: int
    n_users: int
    items_per_outfit: float
    outfits_per_user: float

    def as_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "n_outfits": self.n_outfits,
            "n_users": self.n_users,
            "items_per_outfit": self.items_per_outfit,
            "outfits_per_user": self.outfits_per_user,
        }


def _read_jsonl(path: str) -> Iterable[tuple[int, dict]]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise IngestError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, record


class Catalog:
    """Immutable in-memory store with the query surface the pipeline needs."""

    def __init__(self):
        self.items: dict[str, Item] = {}
        self.outfits: dict[str, Outfit] = {}
        self.users: dict[str, UserRecord] = {}
        # item id -> outfit ids containing it (insertion-ordered)
        self._outfits_by_item: dict[str, list[str]] = {}
        self._items_by_category: dict[str, list[str]] = {}
        self._features: Optional[FeatureCache] = None

    # ------------------------------------------------------------------
    # Ingestion
    # ------------------------------------------------------------------

    def ingest(self, items_path: str, outfits_path: str, users_path: str) -> CatalogStats:
        """Load, validate, and index the three JSON Lines files.

        Referential integrity is enforced: every outfit item id and user
        outfit id must resolve. Unknown keys in records are ignored.
        """
        for lineno, rec in _read_jsonl(items_path):
            try:
                item = Item(
                    id=str(rec["id"]),
                    category=str(rec.get("category", "")),
                    description=str(rec.get("description", "")),
                    image_ref=str(rec.get("image_ref", "")),
                    attributes=tuple(str(a) for a in rec.get("attributes", []) or ()),
                )
            except KeyError as exc:
                raise IngestError(f"{items_path}:{lineno}: missing field {exc}") from exc
            item.validate()
            if item.id in self.items:
                raise IngestError(f"{items_path}:{lineno}: duplicate item id {item.id!r}")
            self.items[item.id] = item
            self._items_by_category.setdefault(item.category, []).append(item.id)

        for lineno, rec in _read_jsonl(outfits_path):
            try:
                outfit = Outfit(
                    id=str(rec["id"]),
                    item_ids=tuple(str(i) for i in rec["items"]),
                )
            except KeyError as exc:
                raise IngestError(f"{outfits_path}:{lineno}: missing field {exc}") from exc
            outfit.validate()
            if outfit.id in self.outfits:
                raise IngestError(f"{outfits_path}:{lineno}: duplicate outfit id {outfit.id!r}")
            for item_id in outfit.item_ids:
                if item_id not in self.items:
                    raise IngestError(
                        f"{outfits_path}:{lineno}: outfit {outfit.id!r} references "
                        f"missing item {item_id!r}"
                    )
            self.outfits[outfit.id] = outfit
            for item_id in outfit.item_ids:
                self._outfits_by_item.setdefault(item_id, []).append(outfit.id)

        for lineno, rec in _read_jsonl(users_path):
            try:
                user = UserRecord(
                    id=str(rec["id"]),
                    outfit_ids=tuple(str(o) for o in rec.get("outfits", [])),
                )
            except KeyError as exc:
                raise IngestError(f"{users_path}:{lineno}: missing field {exc}") from exc
            user.validate()
            if user.id in self.users:
                raise IngestError(f"{users_path}:{lineno}: duplicate user id {user.id!r}")
            for outfit_id in user.outfit_ids:
                if outfit_id not in self.outfits:
                    raise IngestError(
                        f"{users_path}:{lineno}: user {user.id!r} references "
                        f"missing outfit {outfit_id!r}"
                    )
            self.users[user.id] = user

        return self.stats()

    def stats(self) -> CatalogStats:
        n_items = len(self.items)
        n_outfits = len(self.outfits)
        n_users = len(self.users)
        items_per_outfit = (
            math.fsum(len(o.item_ids) for o in self.outfits.values()) / n_outfits
            if n_outfits
            else 0.0
        )
        outfits_per_user = (
            math.fsum(len(u.outfit_ids) for u in self.users.values()) / n_users
            if n_users
            else 0.0
        )
        return CatalogStats(n_items, n_outfits, n_users, items_per_outfit, outfits_per_user)

    # ------------------------------------------------------------------
    # Lookups
    # ------------------------------------------------------------------

    def item(self, item_id: str) -> Item:
        try:
            return self.items[item_id]
        except KeyError:
            raise CatalogError(f"unknown item {item_id!r}") from None

    def outfit(self, outfit_id: str) -> Outfit:
        try:
            return self.outfits[outfit_id]
        except KeyError:
            raise CatalogError(f"unknown outfit {outfit_id!r}") from None

    def user(self, user_id: str) -> UserRecord:
        try:
            return self.users[user_id]
        except KeyError:
            raise CatalogError(f"unknown user {user_id!r}") from None

    # ------------------------------------------------------------------
    # Interaction and co-occurrence queries
    # ------------------------------------------------------------------

    def item_interaction_count(self, user_id: str, item_id: str) -> int:
        """How many of the user's outfits contain the item.

        The user's outfit list is treated as a multiset: repeated
        interactions with the same outfit count each time.
        """
        user = self.user(user_id)
        self.item(item_id)
        count = 0
        for outfit_id in user.outfit_ids:
            if item_id in self.outfits[outfit_id].item_ids:
                count += 1
        return count

    def cooccurrence_count(self, item_id: str, partial: Iterable[str]) -> int:
        """Stored outfits containing the item alongside at least one partial-outfit item.

        The item itself never counts as its own co-occurrence partner, so
        membership of `item_id` in `partial` is ignored.
        """
        self.item(item_id)
        partial_set = set(partial)
        if not partial_set:
            raise CatalogError("partial outfit must be non-empty")
        for pid in partial_set:
            self.item(pid)
        others = partial_set - {item_id}
        count = 0
        for outfit_id in self._outfits_by_item.get(item_id, ()):
            outfit_items = self.outfits[outfit_id].item_ids
            if any(p in outfit_items for p in others):
                count += 1
        return count

    def items_cooccurring_in_category(self, partial: Iterable[str], category: str) -> set[str]:
        """Category items sharing at least one outfit with the partial outfit.

        Members of the partial outfit itself are excluded.
        """
        if not category:
            raise CatalogError("category must be non-empty")
        partial_set = set(partial)
        found: set[str] = set()
        for pid in partial_set:
            for outfit_id in self._outfits_by_item.get(pid, ()):
                for other in self.outfits[outfit_id].item_ids:
                    if other in partial_set or other in found:
                        continue
                    if self.items[other].category == category:
                        found.add(other)
        return found

    def user_items_in_category(self, user_id: str, category: str) -> set[str]:
        """Distinct category items appearing in any of the user's outfits."""
        user = self.user(user_id)
        found: set[str] = set()
        for outfit_id in set(user.outfit_ids):
            for item_id in self.outfits[outfit_id].item_ids:
                if self.items[item_id].category == category:
                    found.add(item_id)
        return found

    # ------------------------------------------------------------------
    # Retrieval
    # ------------------------------------------------------------------

    def features(self, embedder) -> FeatureCache:
        """Per-catalog feature cache bound to one embedder."""
        if self._features is None or self._features.embedder is not embedder:
            self._features = FeatureCache(embedder)
        return self._features

    def nearest_items(
        self,
        query: np.ndarray,
        embedder,
        k: int,
        category: Optional[str] = None,
        exclude: Iterable[str] = (),
    ) -> list[tuple[str, float]]:
        """Top-k items by cosine similarity of the query to item features.

        Full scan; ordering is similarity descending with ties broken by
        ascending item id, so results are total and deterministic.
        """
        if k < 1:
            raise CatalogError(f"k must be >= 1, got {k}")
        query = np.asarray(query, dtype=np.float64)
        if query.shape != (embedder.dim,):
            raise CatalogError(
                f"query dimension mismatch: expected ({embedder.dim},), got {query.shape}"
            )
        features = self.features(embedder)
        excluded = set(exclude)
        scored: list[tuple[str, float]] = []
        for item_id in sorted(self.items):
            if item_id in excluded:
                continue
            item = self.items[item_id]
            if category is not None and item.category != category:
                continue
            scored.append((item_id, cosine(query, features.feature(item))))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        return scored[:k]

    def categories(self) -> list[str]:
        return sorted(self._items_by_category)

    def items_in_category(self, category: str) -> list[str]:
        return list(self._items_by_category.get(category, ()))


def load_catalog(items_path: str, outfits_path: str, users_path: str) -> tuple[Catalog, CatalogStats]:
    catalog = Catalog()
    stats = catalog.ingest(items_path, outfits_path, users_path)
    return catalog, stats
