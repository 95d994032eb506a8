"""Operator command line for the whole suite.

Every subcommand prints a JSON summary to stdout. Exit codes: 0 success,
1 validation failure, 2 I/O or configuration error (click uses 2 for bad
flags already). A JSON config file can mirror any flag; explicit flags win.
"""

from __future__ import annotations

import json
import os
import sys

import click

from .catalog import CatalogError, IngestError, load_catalog
from .dialogue import (
    DialogueError,
    FallbackBackend,
    RemoteBackend,
    generate_dialogue,
    load_dialogues,
    render_prompt,
    validate_dialogue,
    write_dialogues,
)
from .embedding import EmbedderConfig, EmbeddingError, make_embedder
from .history_filter import FilterConfig
from .metrics import MetricError, evaluate_run, format_report_table, load_eval_pairs
from .samples import DEFAULT_RATIOS, build_dataset, load_samples

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2


def _fail(code: int, message: str) -> None:
    click.echo(json.dumps({"error": message}), err=True)
    sys.exit(code)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except FileNotFoundError:
        _fail(EXIT_CONFIG, f"config file not found: {path}")
    except ValueError as exc:
        _fail(EXIT_CONFIG, f"config file is not valid JSON: {exc}")
    if not isinstance(config, dict):
        _fail(EXIT_CONFIG, "config file must hold a JSON object")
    return config


def _pick(flag, config: dict, key: str, default=None):
    if flag is not None:
        return flag
    return config.get(key, default)


def _catalog_paths(config: dict, catalog_dir, items, outfits, users) -> tuple[str, str, str]:
    catalog_dir = _pick(catalog_dir, config, "catalog")
    items = _pick(items, config, "items")
    outfits = _pick(outfits, config, "outfits")
    users = _pick(users, config, "users")
    if catalog_dir:
        items = items or os.path.join(catalog_dir, "items.jsonl")
        outfits = outfits or os.path.join(catalog_dir, "outfits.jsonl")
        users = users or os.path.join(catalog_dir, "users.jsonl")
    if not (items and outfits and users):
        _fail(EXIT_CONFIG, "need --items/--outfits/--users or --catalog (or config entries)")
    return items, outfits, users


def _open_catalog(config, catalog_dir, items, outfits, users):
    paths = _catalog_paths(config, catalog_dir, items, outfits, users)
    try:
        return load_catalog(*paths)
    except FileNotFoundError as exc:
        _fail(EXIT_CONFIG, str(exc))
    except IngestError as exc:
        _fail(EXIT_VALIDATION, str(exc))


def _embedder(config: dict, backend, endpoint, dim, cache):
    try:
        cfg = EmbedderConfig(
            dim=int(_pick(dim, config, "dim", 512)),
            backend=_pick(backend, config, "embed_backend", "mock"),
            endpoint=_pick(endpoint, config, "embed_endpoint"),
            cache_path=_pick(cache, config, "embed_cache"),
        )
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))
    return make_embedder(cfg)


catalog_options = [
    click.option("--catalog", "catalog_dir", type=click.Path(), default=None,
                 help="Directory holding items.jsonl/outfits.jsonl/users.jsonl."),
    click.option("--items", type=click.Path(), default=None),
    click.option("--outfits", type=click.Path(), default=None),
    click.option("--users", type=click.Path(), default=None),
]

embed_options = [
    click.option("--embed-backend", "embed_backend", type=click.Choice(["mock", "remote"]),
                 default=None),
    click.option("--embed-endpoint", "embed_endpoint", default=None),
    click.option("--dim", type=int, default=None),
    click.option("--embed-cache", "embed_cache", type=click.Path(), default=None),
]


def _with(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@click.group()
def main():
    """Outfit recommendation toolkit."""


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@_with(catalog_options)
def ingest(config_path, catalog_dir, items, outfits, users):
    """Validate and index the catalog files; print the stats."""
    config = _load_config(config_path)
    _, stats = _open_catalog(config, catalog_dir, items, outfits, users)
    click.echo(json.dumps(stats.as_dict()))


@main.command("build-dataset")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--task", type=click.Choice(["basic", "personalized", "alternative", "all"]),
              default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--ratios", default=None, help="train,valid,test e.g. 0.9,0.05,0.05")
@_with(catalog_options)
@_with(embed_options)
def build_dataset_cmd(config_path, task, seed, out_dir, ratios, catalog_dir, items, outfits,
                      users, embed_backend, embed_endpoint, dim, embed_cache):
    """Build task samples and split manifests."""
    config = _load_config(config_path)
    catalog, _ = _open_catalog(config, catalog_dir, items, outfits, users)
    embedder = _embedder(config, embed_backend, embed_endpoint, dim, embed_cache)
    task = _pick(task, config, "task", "all")
    seed = int(_pick(seed, config, "seed", 42))
    out_dir = _pick(out_dir, config, "out", "dataset")
    ratios = _pick(ratios, config, "ratios")
    if isinstance(ratios, str):
        ratios = tuple(float(r) for r in ratios.split(","))
    elif isinstance(ratios, list):
        ratios = tuple(float(r) for r in ratios)
    else:
        ratios = DEFAULT_RATIOS
    try:
        summary = build_dataset(catalog, embedder, task, seed, out_dir, ratios, FilterConfig())
    except (ValueError, EmbeddingError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    click.echo(json.dumps(summary))


@main.command("gen-dialogues")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--samples", "samples_path", type=click.Path(), required=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--backend", type=click.Choice(["fallback", "remote"]), default="fallback")
@click.option("--endpoint", default=None)
@_with(catalog_options)
def gen_dialogues(config_path, samples_path, out_path, backend, endpoint, catalog_dir, items,
                  outfits, users):
    """Generate one dialogue per sample in a samples JSONL file."""
    config = _load_config(config_path)
    catalog, _ = _open_catalog(config, catalog_dir, items, outfits, users)
    if backend == "remote":
        endpoint = _pick(endpoint, config, "dialogue_endpoint")
        if not endpoint:
            _fail(EXIT_CONFIG, "remote dialogue backend needs --endpoint")
        engine = RemoteBackend(endpoint)
    else:
        engine = FallbackBackend(catalog)
    try:
        samples = load_samples(samples_path)
    except FileNotFoundError as exc:
        _fail(EXIT_CONFIG, str(exc))
    out_path = out_path or os.path.join(os.path.dirname(samples_path) or ".", "dialogues.jsonl")
    dialogues = []
    try:
        for sample in samples:
            payload = render_prompt(catalog, sample)
            dialogues.append(generate_dialogue(payload, engine))
    except DialogueError as exc:
        _fail(EXIT_VALIDATION, f"dialogue generation failed: {exc}")
    write_dialogues(dialogues, out_path)
    click.echo(json.dumps({"dialogues": len(dialogues), "file": out_path}))


@main.command("validate-dialogues")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--dialogues", "dialogues_path", type=click.Path(), required=True)
@click.option("--samples", "samples_path", type=click.Path(), required=True)
@_with(catalog_options)
def validate_dialogues_cmd(config_path, dialogues_path, samples_path, catalog_dir, items,
                           outfits, users):
    """Check every dialogue against its structural contract."""
    config = _load_config(config_path)
    catalog, _ = _open_catalog(config, catalog_dir, items, outfits, users)
    try:
        samples = {s.id: s for s in load_samples(samples_path)}
        dialogues = load_dialogues(dialogues_path)
    except FileNotFoundError as exc:
        _fail(EXIT_CONFIG, str(exc))
    report = []
    for dialogue in dialogues:
        sample = samples.get(dialogue.sample_id)
        if sample is None:
            report.append({"sample_id": dialogue.sample_id, "rule": "R0",
                           "message": "dialogue has no matching sample", "turn": None})
            continue
        for violation in validate_dialogue(catalog, dialogue.task, dialogue, sample):
            entry = violation.as_dict()
            entry["sample_id"] = dialogue.sample_id
            report.append(entry)
    click.echo(json.dumps({"dialogues": len(dialogues), "violations": report}))
    if report:
        sys.exit(EXIT_VALIDATION)


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--predictions", "predictions_path", type=click.Path(), required=True)
@click.option("--out-json", type=click.Path(), default=None)
@click.option("--out-table", type=click.Path(), default=None)
@_with(embed_options)
def evaluate(config_path, predictions_path, out_json, out_table, embed_backend,
             embed_endpoint, dim, embed_cache):
    """Compute the similarity metrics over a predictions file."""
    config = _load_config(config_path)
    embedder = _embedder(config, embed_backend, embed_endpoint, dim, embed_cache)
    try:
        pairs = load_eval_pairs(predictions_path)
    except FileNotFoundError as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        report = evaluate_run(pairs, embedder)
    except (MetricError, EmbeddingError) as exc:
        _fail(EXIT_VALIDATION, str(exc))
    base = os.path.splitext(predictions_path)[0]
    out_json = out_json or base + ".report.json"
    out_table = out_table or base + ".report.txt"
    with open(out_json, "w", encoding="utf-8") as fh:
        json.dump(report.as_dict(), fh, indent=2)
        fh.write("\n")
    with open(out_table, "w", encoding="utf-8") as fh:
        fh.write(format_report_table(report) + "\n")
    click.echo(json.dumps(report.as_dict()))


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--port", type=int, default=None)
@click.option("--host", default=None)
@click.option("--state-dir", "state_dir", type=click.Path(), default=None)
@click.option("--ui-dir", "ui_dir", type=click.Path(), default=None)
@click.option("--strict-users", is_flag=True, default=False)
@_with(catalog_options)
@_with(embed_options)
def serve(config_path, port, host, state_dir, ui_dir, strict_users, catalog_dir, items,
          outfits, users, embed_backend, embed_endpoint, dim, embed_cache):
    """Run the assistant HTTP service."""
    import uvicorn

    from .orchestrator import Assistant, OrchestratorConfig
    from .server import create_app

    config = _load_config(config_path)
    catalog, _ = _open_catalog(config, catalog_dir, items, outfits, users)
    embedder = _embedder(config, embed_backend, embed_endpoint, dim, embed_cache)
    orchestrator_config = OrchestratorConfig(
        strict_users=bool(_pick(strict_users or None, config, "strict_users", False)),
        state_dir=_pick(state_dir, config, "state_dir", "state"),
    )
    assistant = Assistant(catalog, embedder, orchestrator_config)
    app = create_app(assistant, ui_dir=_pick(ui_dir, config, "ui_dir"))
    host = _pick(host, config, "host", "127.0.0.1")
    port = int(_pick(port, config, "port", 8200))
    click.echo(json.dumps({"serving": f"http://{host}:{port}", "items": len(catalog.items)}))
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("embed-cache")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--cache", "cache_path", type=click.Path(), required=True)
@_with(catalog_options)
@_with(embed_options)
def embed_cache_cmd(config_path, cache_path, catalog_dir, items, outfits, users,
                    embed_backend, embed_endpoint, dim, embed_cache):
    """Precompute text+image embeddings for every catalog item into a cache."""
    config = _load_config(config_path)
    catalog, _ = _open_catalog(config, catalog_dir, items, outfits, users)
    embedder = _embedder(config, embed_backend, embed_endpoint, dim, cache_path)
    try:
        for item_id in sorted(catalog.items):
            item = catalog.items[item_id]
            embedder.embed_text(item.description)
            embedder.embed_image(item.image_ref)
    except EmbeddingError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    click.echo(json.dumps({"entries": len(embedder.cache), "cache": cache_path}))


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--query-text", required=True)
@click.option("--k", type=int, default=5)
@click.option("--category", default=None)
@_with(catalog_options)
@_with(embed_options)
def retrieve(config_path, query_text, k, category, catalog_dir, items, outfits, users,
             embed_backend, embed_endpoint, dim, embed_cache):
    """Nearest catalog items to a text query."""
    config = _load_config(config_path)
    catalog, _ = _open_catalog(config, catalog_dir, items, outfits, users)
    embedder = _embedder(config, embed_backend, embed_endpoint, dim, embed_cache)
    try:
        query = embedder.embed_text(query_text)
        hits = catalog.nearest_items(query, embedder, k=k, category=category)
    except (EmbeddingError, CatalogError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    click.echo(json.dumps({"query": query_text,
                           "results": [{"id": i, "similarity": s} for i, s in hits]}))


if __name__ == "__main__":
    main()
