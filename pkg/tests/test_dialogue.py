"""Dialogue rendering, fallback generation, and validator-rule tests."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from outfitkit.catalog import CatalogError
from outfitkit.dialogue import (
    Dialogue,
    DialogueError,
    FallbackBackend,
    RemoteBackend,
    generate_dialogue,
    load_dialogues,
    render_prompt,
    template_fallback,
    validate_dialogue,
    write_dialogues,
)
from outfitkit.history_filter import FilterConfig
from outfitkit.samples import (
    AlternativeSample,
    BasicSample,
    PersonalizedSample,
    build_alternative,
    build_basic,
    build_personalized,
    find_alternative_pairs,
)

from conftest import build_catalog

GOLDEN_PATH = Path(__file__).parent / "data" / "render_golden.json"


@pytest.fixture()
def small_catalog(tmp_path):
    corpus = {
        "items": [
            {"id": "A", "category": "top", "description": "white cotton top with trim accents",
             "image_ref": "img://A", "attributes": ["white", "cotton", "trim"]},
            {"id": "B", "category": "jeans", "description": "blue denim jeans with zipper accents",
             "image_ref": "img://B", "attributes": ["blue", "denim", "zipper"]},
            {"id": "C", "category": "shoes", "description": "black leather shoes with lace accents",
             "image_ref": "img://C", "attributes": ["black", "leather", "lace"]},
            {"id": "D", "category": "hat", "description": "navy knit hat with fringe accents",
             "image_ref": "img://D", "attributes": ["navy", "knit", "fringe"]},
            {"id": "E", "category": "shoes", "description": "gray suede shoes with buttons accents",
             "image_ref": "img://E", "attributes": ["gray", "suede", "buttons"]},
        ],
        "outfits": [
            {"id": "oa", "items": ["A", "B", "C", "D"]},
            {"id": "ob", "items": ["A", "B", "E"]},
        ],
        "users": [{"id": "u1", "outfits": ["oa", "ob"]}],
    }
    return build_catalog(corpus, tmp_path / "small")


@pytest.fixture()
def basic_sample():
    return BasicSample(id="basic:oa", outfit_id="oa", partial=("A", "B"), targets=("C", "D"))


@pytest.fixture()
def personalized_sample():
    return PersonalizedSample(
        id="pers:oa:u1",
        outfit_id="oa",
        user_id="u1",
        partial=("A", "B", "D"),
        target="C",
        filtered_history=("E",),
        preference_summary="prefers: gray, suede, buttons",
        valid=0,
    )


@pytest.fixture()
def alternative_sample():
    return AlternativeSample(
        id="alt:oa:ob:C:E", outfit_a="oa", outfit_b="ob",
        anchors=("A", "B"), replace="C", replacement="E",
    )


class TestRenderPrompt:
    def test_matches_golden_per_kind(
        self, small_catalog, basic_sample, personalized_sample, alternative_sample
    ):
        golden = json.loads(GOLDEN_PATH.read_text())
        for sample in (basic_sample, personalized_sample, alternative_sample):
            payload = render_prompt(small_catalog, sample)
            assert payload.system == golden[sample.task]["system"]
            assert payload.user_content == golden[sample.task]["user_content"]

    def test_basic_lists_all_target_descriptions(self, small_catalog, basic_sample):
        payload = render_prompt(small_catalog, basic_sample)
        assert "black leather shoes with lace accents" in payload.user_content
        assert "navy knit hat with fringe accents" in payload.user_content

    def test_personalized_includes_history_and_summary(
        self, small_catalog, personalized_sample
    ):
        payload = render_prompt(small_catalog, personalized_sample)
        assert "Historical Interacted Items:" in payload.user_content
        assert "gray suede shoes with buttons accents" in payload.user_content
        assert "prefers: gray, suede, buttons" in payload.user_content

    def test_missing_slot_errors(self, small_catalog):
        broken = BasicSample(id="x", outfit_id="oa", partial=("A",), targets=("nope",))
        with pytest.raises(CatalogError):
            render_prompt(small_catalog, broken)


class TestTemplateFallback:
    def test_turn_count_equals_targets(self, small_catalog, basic_sample):
        dialogue = template_fallback(small_catalog, basic_sample)
        assert len(dialogue.turns) == len(basic_sample.targets)

    def test_deterministic(self, small_catalog, basic_sample):
        first = template_fallback(small_catalog, basic_sample)
        second = template_fallback(small_catalog, basic_sample)
        assert first == second

    def test_valid_flag_echoed(self, small_catalog, personalized_sample):
        dialogue = template_fallback(small_catalog, personalized_sample)
        assert dialogue.valid == personalized_sample.valid

    def test_alternative_query_names_category_not_item(
        self, small_catalog, alternative_sample
    ):
        dialogue = template_fallback(small_catalog, alternative_sample)
        q = dialogue.turns[0][0]
        assert "shoes" in q
        assert "gray suede" not in q  # replacement stays out of the query

    def test_all_kinds_validate_clean(
        self, small_catalog, basic_sample, personalized_sample, alternative_sample
    ):
        for sample in (basic_sample, personalized_sample, alternative_sample):
            dialogue = template_fallback(small_catalog, sample)
            assert validate_dialogue(small_catalog, sample.task, dialogue, sample) == []


class TestValidatorRules:
    def test_r1_basic_round_count(self, small_catalog, basic_sample):
        # 3 rounds against |T| = 2.
        turns = (("q one two", "a"), ("q three", "a"), ("q four", "a"))
        dialogue = Dialogue(sample_id="x", task="basic", turns=turns)
        rules = [v.rule for v in validate_dialogue(small_catalog, "basic", dialogue, basic_sample)]
        assert rules == ["R1"]

    def test_r1_personalized_two_rounds(self, small_catalog, personalized_sample):
        turns = (("q? (prefers: x)", "a"), ("more? (prefers: x)", "a"))
        dialogue = Dialogue(sample_id="x", task="personalized", turns=turns, valid=0)
        rules = [
            v.rule
            for v in validate_dialogue(
                small_catalog, "personalized", dialogue, personalized_sample
            )
        ]
        assert "R1" in rules

    def test_r2_verbatim_target_always_leaks(self, small_catalog, basic_sample):
        dialogue = template_fallback(small_catalog, basic_sample)
        for target in basic_sample.targets:
            description = small_catalog.items[target].description
            mutated = Dialogue(
                sample_id=dialogue.sample_id,
                task=dialogue.task,
                turns=((dialogue.turns[0][0] + " I want " + description, dialogue.turns[0][1]),)
                + dialogue.turns[1:],
            )
            violations = validate_dialogue(small_catalog, "basic", mutated, basic_sample)
            assert [v.rule for v in violations] == ["R2"]
            assert violations[0].turn == 0

    def test_r2_alternative_checks_replacement(self, small_catalog, alternative_sample):
        dialogue = template_fallback(small_catalog, alternative_sample)
        leaked_q = dialogue.turns[0][0] + " maybe gray suede shoes with buttons accents?"
        mutated = Dialogue(
            sample_id=dialogue.sample_id,
            task=dialogue.task,
            turns=((leaked_q, dialogue.turns[0][1]),),
        )
        rules = [
            v.rule
            for v in validate_dialogue(small_catalog, "alternative", mutated, alternative_sample)
        ]
        assert rules == ["R2"]

    def test_r3_missing_suffix(self, small_catalog, personalized_sample):
        dialogue = Dialogue(
            sample_id="x",
            task="personalized",
            turns=(("What shoes go with this?", "Try these ones."),),
            valid=1,
        )
        rules = [
            v.rule
            for v in validate_dialogue(
                small_catalog, "personalized", dialogue, personalized_sample
            )
        ]
        assert rules == ["R3"]

    def test_r4_valid_required_for_personalized(self, small_catalog, personalized_sample):
        dialogue = Dialogue(
            sample_id="x",
            task="personalized",
            turns=(("What shoes? (prefers: gray)", "These."),),
            valid=None,
        )
        rules = [
            v.rule
            for v in validate_dialogue(
                small_catalog, "personalized", dialogue, personalized_sample
            )
        ]
        assert rules == ["R4"]

    def test_r4_valid_forbidden_elsewhere(self, small_catalog, basic_sample):
        dialogue = Dialogue(
            sample_id="x", task="basic", turns=(("q words here", "a"),), valid=1
        )
        rules = [v.rule for v in validate_dialogue(small_catalog, "basic", dialogue, basic_sample)]
        assert rules == ["R4"]

    def test_r5_empty_turn(self, small_catalog, basic_sample):
        dialogue = Dialogue(sample_id="x", task="basic", turns=(("q words here", "  "),))
        rules = [v.rule for v in validate_dialogue(small_catalog, "basic", dialogue, basic_sample)]
        assert rules == ["R5"]

    def test_validation_pure(self, small_catalog, basic_sample):
        dialogue = template_fallback(small_catalog, basic_sample)
        first = validate_dialogue(small_catalog, "basic", dialogue, basic_sample)
        second = validate_dialogue(small_catalog, "basic", dialogue, basic_sample)
        assert first == second == []


class TestFallbackFixedPoint:
    def test_corpus_wide_zero_violations(self, catalog_200, embedder):
        config = FilterConfig(m_u=2, m_i=1, k=5)
        checked = 0
        for outfit_id in sorted(catalog_200.outfits)[:40]:
            sample = build_basic(catalog_200, outfit_id, seed=42)
            dialogue = template_fallback(catalog_200, sample)
            assert validate_dialogue(catalog_200, sample.task, dialogue, sample) == []
            checked += 1
        for user_id in sorted(catalog_200.users)[:6]:
            for outfit_id in sorted(set(catalog_200.users[user_id].outfit_ids))[:5]:
                sample = build_personalized(catalog_200, embedder, outfit_id, user_id, config)
                if sample is None:
                    continue
                dialogue = template_fallback(catalog_200, sample)
                assert validate_dialogue(catalog_200, sample.task, dialogue, sample) == []
                checked += 1
        for outfit_a, outfit_b, anchors in find_alternative_pairs(catalog_200)[:20]:
            for sample in build_alternative(catalog_200, outfit_a, outfit_b, anchors):
                dialogue = template_fallback(catalog_200, sample)
                assert validate_dialogue(catalog_200, sample.task, dialogue, sample) == []
                checked += 1
        assert checked > 60


class TestBackends:
    def test_fallback_via_generate_dialogue(self, small_catalog, basic_sample):
        payload = render_prompt(small_catalog, basic_sample)
        backend = FallbackBackend(small_catalog)
        dialogue = generate_dialogue(payload, backend)
        assert dialogue == template_fallback(small_catalog, basic_sample)

    def _fake_httpx(self, monkeypatch, status=200, body=None, text=None):
        import httpx

        def fake_post(url, json=None, timeout=None):
            request = httpx.Request("POST", url)
            if text is not None:
                return httpx.Response(status, text=text, request=request)
            return httpx.Response(status, json=body, request=request)

        monkeypatch.setattr(httpx, "post", fake_post)

    def test_remote_parses_direct_schema(self, monkeypatch, small_catalog, basic_sample):
        self._fake_httpx(
            monkeypatch,
            body={"rounds": [{"user": "q here", "assistant": "a here"}]},
        )
        backend = RemoteBackend("http://gen.test/chat")
        payload = render_prompt(small_catalog, basic_sample)
        dialogue = generate_dialogue(payload, backend)
        assert dialogue.turns == (("q here", "a here"),)

    def test_remote_parses_chat_completion_envelope(
        self, monkeypatch, small_catalog, basic_sample
    ):
        content = json.dumps({"rounds": [{"user": "uq", "assistant": "ua"}], "valid": 1})
        self._fake_httpx(
            monkeypatch, body={"choices": [{"message": {"content": content}}]}
        )
        backend = RemoteBackend("http://gen.test/chat")
        dialogue = generate_dialogue(render_prompt(small_catalog, basic_sample), backend)
        assert dialogue.turns == (("uq", "ua"),)
        assert dialogue.valid == 1

    def test_remote_malformed_keeps_raw(self, monkeypatch, small_catalog, basic_sample):
        self._fake_httpx(monkeypatch, text="definitely not json")
        backend = RemoteBackend("http://gen.test/chat")
        with pytest.raises(DialogueError) as info:
            generate_dialogue(render_prompt(small_catalog, basic_sample), backend)
        assert info.value.raw == "definitely not json"


class TestPersistence:
    def test_write_and_load_round_trip(self, small_catalog, basic_sample, tmp_path):
        dialogue = template_fallback(small_catalog, basic_sample)
        path = str(tmp_path / "dialogues.jsonl")
        write_dialogues([dialogue], path)
        loaded = load_dialogues(path)
        assert loaded == [dialogue]
