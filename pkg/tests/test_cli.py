"""Command-line interface tests using the in-process click runner."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from outfitkit.cli import main

from conftest import make_corpus, write_corpus


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def corpus_paths(tmp_path):
    corpus = make_corpus(seed=42, n_items=60, n_outfits=40, n_users=6)
    return write_corpus(corpus, tmp_path / "corpus")


def catalog_args(paths):
    return ["--items", paths["items"], "--outfits", paths["outfits"], "--users", paths["users"]]


class TestIngest:
    def test_success_prints_stats(self, runner, corpus_paths):
        result = runner.invoke(main, ["ingest", *catalog_args(corpus_paths)])
        assert result.exit_code == 0
        stats = json.loads(result.output.strip().splitlines()[-1])
        assert stats["n_items"] == 60
        assert stats["n_outfits"] == 40

    def test_dangling_reference_exits_1(self, runner, corpus_paths, tmp_path):
        bad = tmp_path / "bad-outfits.jsonl"
        bad.write_text(json.dumps({"id": "oX", "items": ["it0000", "missing"]}) + "\n")
        result = runner.invoke(
            main,
            ["ingest", "--items", corpus_paths["items"], "--outfits", str(bad),
             "--users", corpus_paths["users"]],
        )
        assert result.exit_code == 1

    def test_missing_file_exits_2(self, runner, corpus_paths, tmp_path):
        result = runner.invoke(
            main,
            ["ingest", "--items", str(tmp_path / "nope.jsonl"),
             "--outfits", corpus_paths["outfits"], "--users", corpus_paths["users"]],
        )
        assert result.exit_code == 2

    def test_unknown_flag_exits_2(self, runner):
        result = runner.invoke(main, ["ingest", "--frobnicate"])
        assert result.exit_code == 2
        assert "Usage" in result.output or "no such option" in result.output.lower()

    def test_config_file_supplies_paths(self, runner, corpus_paths, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps(corpus_paths))
        result = runner.invoke(main, ["ingest", "--config", str(config)])
        assert result.exit_code == 0

    def test_flag_beats_config(self, runner, corpus_paths, tmp_path):
        config = tmp_path / "config.json"
        wrong = dict(corpus_paths)
        wrong["items"] = str(tmp_path / "missing.jsonl")
        config.write_text(json.dumps(wrong))
        result = runner.invoke(
            main, ["ingest", "--config", str(config), "--items", corpus_paths["items"]]
        )
        assert result.exit_code == 0


class TestBuildDataset:
    def test_all_tasks(self, runner, corpus_paths, tmp_path):
        out = tmp_path / "dataset"
        result = runner.invoke(
            main,
            ["build-dataset", "--task", "all", "--seed", "42", "--out", str(out),
             "--dim", "32", *catalog_args(corpus_paths)],
        )
        assert result.exit_code == 0
        summary = json.loads(result.output.strip().splitlines()[-1])
        assert set(summary["tasks"]) == {"basic", "personalized", "alternative"}
        for task in ("basic", "personalized", "alternative"):
            assert (out / f"{task}.jsonl").exists()
        assert (out / "split.json").exists()

    def test_alternative_without_pairs_warns_but_succeeds(self, runner, tmp_path):
        corpus = {
            "items": [
                {"id": "A", "category": "top", "description": "white cotton top with trim accents",
                 "image_ref": "img://A", "attributes": ["white"]},
                {"id": "B", "category": "jeans", "description": "blue denim jeans with zipper accents",
                 "image_ref": "img://B", "attributes": ["blue"]},
            ],
            "outfits": [{"id": "o1", "items": ["A", "B"]}],
            "users": [],
        }
        paths = write_corpus(corpus, tmp_path / "c")
        result = runner.invoke(
            main,
            ["build-dataset", "--task", "alternative", "--seed", "1",
             "--out", str(tmp_path / "ds"), "--dim", "32", *catalog_args(paths)],
        )
        assert result.exit_code == 0
        summary = json.loads(result.output.strip().splitlines()[-1])
        assert summary["tasks"]["alternative"]["samples"] == 0
        assert summary["tasks"]["alternative"]["warning"] == "zero samples"


class TestDialogueCommands:
    def _build(self, runner, corpus_paths, tmp_path):
        out = tmp_path / "ds"
        result = runner.invoke(
            main,
            ["build-dataset", "--task", "basic", "--seed", "42", "--out", str(out),
             "--dim", "32", *catalog_args(corpus_paths)],
        )
        assert result.exit_code == 0
        return out / "basic.jsonl"

    def test_generate_then_validate_clean(self, runner, corpus_paths, tmp_path):
        samples = self._build(runner, corpus_paths, tmp_path)
        dialogues = tmp_path / "dialogues.jsonl"
        result = runner.invoke(
            main,
            ["gen-dialogues", "--samples", str(samples), "--out", str(dialogues),
             "--backend", "fallback", *catalog_args(corpus_paths)],
        )
        assert result.exit_code == 0
        summary = json.loads(result.output.strip().splitlines()[-1])
        assert summary["dialogues"] == 40

        result = runner.invoke(
            main,
            ["validate-dialogues", "--dialogues", str(dialogues),
             "--samples", str(samples), *catalog_args(corpus_paths)],
        )
        assert result.exit_code == 0
        report = json.loads(result.output.strip().splitlines()[-1])
        assert report["violations"] == []

    def test_validate_flags_injected_violation(self, runner, corpus_paths, tmp_path):
        samples = self._build(runner, corpus_paths, tmp_path)
        dialogues = tmp_path / "dialogues.jsonl"
        runner.invoke(
            main,
            ["gen-dialogues", "--samples", str(samples), "--out", str(dialogues),
             "--backend", "fallback", *catalog_args(corpus_paths)],
        )
        lines = dialogues.read_text().strip().splitlines()
        first = json.loads(lines[0])
        first["turns"].append({"q": "one more thing please", "a": "sure thing"})
        lines[0] = json.dumps(first)
        dialogues.write_text("\n".join(lines) + "\n")

        result = runner.invoke(
            main,
            ["validate-dialogues", "--dialogues", str(dialogues),
             "--samples", str(samples), *catalog_args(corpus_paths)],
        )
        assert result.exit_code == 1
        report = json.loads(result.output.strip().splitlines()[-1])
        assert any(v["rule"] == "R1" for v in report["violations"])


class TestEvaluateAndRetrieve:
    def test_evaluate_writes_reports(self, runner, tmp_path):
        predictions = tmp_path / "predictions.jsonl"
        rows = [
            {"id": "1", "gen_text": "tan boots", "gt_text": "tan ankle boots",
             "gen_image": "img://g", "gt_image": "img://t", "history_images": ["img://h"]},
            {"id": "2", "gen_text": "white top", "gt_text": "white top"},
        ]
        predictions.write_text("".join(json.dumps(r) + "\n" for r in rows))
        result = runner.invoke(
            main, ["evaluate", "--predictions", str(predictions), "--dim", "32"]
        )
        assert result.exit_code == 0
        report = json.loads(result.output.strip().splitlines()[-1])
        assert report["counts"]["sbert"] == 2
        assert (tmp_path / "predictions.report.json").exists()
        assert (tmp_path / "predictions.report.txt").exists()

    def test_retrieve_top_k(self, runner, corpus_paths):
        result = runner.invoke(
            main,
            ["retrieve", "--query-text", "black leather boots", "--k", "4",
             "--dim", "32", *catalog_args(corpus_paths)],
        )
        assert result.exit_code == 0
        body = json.loads(result.output.strip().splitlines()[-1])
        assert len(body["results"]) == 4
        sims = [r["similarity"] for r in body["results"]]
        assert sims == sorted(sims, reverse=True)

    def test_embed_cache_populates(self, runner, corpus_paths, tmp_path):
        cache = tmp_path / "cache.jsonl"
        result = runner.invoke(
            main,
            ["embed-cache", "--cache", str(cache), "--dim", "32",
             *catalog_args(corpus_paths)],
        )
        assert result.exit_code == 0
        summary = json.loads(result.output.strip().splitlines()[-1])
        assert summary["entries"] == 120  # text + image per item
        assert cache.exists()


def _hash_tree(root: Path) -> dict:
    hashes = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            hashes[str(path.relative_to(root))] = hashlib.sha256(
                path.read_bytes()
            ).hexdigest()
    return hashes


class TestPipelineDeterminism:
    def test_two_runs_byte_identical(self, runner, corpus_paths, tmp_path):
        digests = []
        for label in ("one", "two"):
            out = tmp_path / label
            result = runner.invoke(
                main,
                ["build-dataset", "--task", "all", "--seed", "42", "--out", str(out),
                 "--dim", "32", *catalog_args(corpus_paths)],
            )
            assert result.exit_code == 0
            for task in ("basic", "personalized", "alternative"):
                samples = out / f"{task}.jsonl"
                result = runner.invoke(
                    main,
                    ["gen-dialogues", "--samples", str(samples),
                     "--out", str(out / f"{task}-dialogues.jsonl"),
                     "--backend", "fallback", *catalog_args(corpus_paths)],
                )
                assert result.exit_code == 0
            digests.append(_hash_tree(out))
        assert digests[0] == digests[1]
        assert len(digests[0]) == 7  # 3 sample files + 3 dialogue files + split.json
