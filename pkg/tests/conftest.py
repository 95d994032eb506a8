"""Shared fixtures: synthetic corpora, catalogs, and embedders.

Corpus generation is fully seeded so every test run sees identical data.
Descriptions follow a fixed "<color> <material> <category> with <detail>
accents" shape, which keeps the leakage validator's 3-gram rule exercisable
(every description has at least three content words).
"""

from __future__ import annotations

import json
import random

import pytest

from outfitkit.catalog import Catalog
from outfitkit.embedding import MockEmbedder

CATEGORIES = ["top", "jeans", "shoes", "dress", "bag", "hat", "jacket", "skirt"]
COLORS = ["black", "white", "red", "blue", "green", "beige", "gray", "navy", "olive", "pink"]
MATERIALS = ["denim", "leather", "cotton", "wool", "linen", "suede", "silk", "knit"]
DETAILS = ["zipper", "embroidery", "stitching", "buttons", "pockets", "fringe", "trim", "lace"]

EMBED_DIM = 64


def make_corpus(
    seed: int = 42,
    n_items: int = 150,
    n_outfits: int = 220,
    n_users: int = 32,
    image_dir=None,
) -> dict:
    """Deterministic synthetic corpus as raw record dicts.

    When image_dir is given, each item gets a real tiny PNG so image tools
    can open the refs; otherwise refs are opaque locator strings.
    """
    rng = random.Random(seed)
    items = []
    for index in range(n_items):
        item_id = f"it{index:04d}"
        category = rng.choice(CATEGORIES)
        color = rng.choice(COLORS)
        material = rng.choice(MATERIALS)
        detail = rng.choice(DETAILS)
        if image_dir is not None:
            ref = str(_write_png(image_dir, item_id))
        else:
            ref = f"img://{item_id}"
        items.append(
            {
                "id": item_id,
                "category": category,
                "description": f"{color} {material} {category} with {detail} accents",
                "image_ref": ref,
                "attributes": [color, material, detail],
            }
        )

    outfits = []
    for index in range(n_outfits):
        size = rng.randint(2, 5)
        member_ids = [it["id"] for it in rng.sample(items, size)]
        outfits.append({"id": f"of{index:04d}", "items": member_ids})

    users = []
    for index in range(n_users):
        n_interactions = rng.randint(15, 60)
        picks = [rng.choice(outfits)["id"] for _ in range(n_interactions)]
        users.append({"id": f"u{index:03d}", "outfits": picks})

    return {"items": items, "outfits": outfits, "users": users}


def _write_png(image_dir, item_id: str):
    from PIL import Image

    image_dir.mkdir(parents=True, exist_ok=True)
    path = image_dir / f"{item_id}.png"
    if not path.exists():
        shade = sum(item_id.encode()) % 256
        img = Image.new("RGB", (8, 8), (shade, (shade * 7) % 256, (shade * 13) % 256))
        img.save(path, format="PNG")
    return path


def write_corpus(corpus: dict, directory) -> dict:
    """Write a corpus to items/outfits/users JSONL files; returns the paths."""
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name in ("items", "outfits", "users"):
        path = directory / f"{name}.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for record in corpus[name]:
                fh.write(json.dumps(record) + "\n")
        paths[name] = str(path)
    return paths


def build_catalog(corpus: dict, directory) -> Catalog:
    paths = write_corpus(corpus, directory)
    catalog = Catalog()
    catalog.ingest(paths["items"], paths["outfits"], paths["users"])
    return catalog


@pytest.fixture(scope="session")
def embedder():
    return MockEmbedder(dim=EMBED_DIM)


@pytest.fixture(scope="session")
def corpus_200():
    return make_corpus(seed=42, n_items=150, n_outfits=220, n_users=32)


@pytest.fixture(scope="session")
def catalog_200(corpus_200, tmp_path_factory):
    return build_catalog(corpus_200, tmp_path_factory.mktemp("corpus200"))


@pytest.fixture()
def tiny_corpus():
    """Three items, one outfit, one user; counted by hand in tests."""
    return {
        "items": [
            {
                "id": "a1",
                "category": "top",
                "description": "white cotton top with trim accents",
                "image_ref": "img://a1",
                "attributes": ["white", "cotton", "trim"],
            },
            {
                "id": "b2",
                "category": "jeans",
                "description": "blue denim jeans with zipper accents",
                "image_ref": "img://b2",
                "attributes": ["blue", "denim", "zipper"],
            },
            {
                "id": "c3",
                "category": "shoes",
                "description": "black leather shoes with lace accents",
                "image_ref": "img://c3",
                "attributes": ["black", "leather", "lace"],
            },
        ],
        "outfits": [{"id": "o1", "items": ["a1", "b2", "c3"]}],
        "users": [{"id": "u1", "outfits": ["o1"]}],
    }


@pytest.fixture()
def tiny_catalog(tiny_corpus, tmp_path):
    return build_catalog(tiny_corpus, tmp_path / "tiny")
