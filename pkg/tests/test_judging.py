from __future__ import annotations

import json

import pytest
from hypothesis import given, settings, strategies as st

from dialect_eval.corpus import Dialect
from dialect_eval.judging import (
    BiasVerdict,
    ConfidenceOutOfRange,
    EmptyInput,
    ExhaustedRetries,
    GatewayClient,
    GatewayError,
    GatewayRequest,
    LikertOutOfRange,
    MalformedJson,
    MeaningPreserved,
    MissingField,
    RubricWeights,
    ScoreOutOfRange,
    apply_script_gate,
    build_bias_judge_prompt,
    build_translation_judge_prompt,
    check_rubric_ceilings,
    compute_final_score,
    extract_json_object,
    looks_like_refusal,
    needs_human_fallback,
    parse_bias_verdict,
    parse_translation_verdict,
    serialize_bias_verdict,
    serialize_translation_verdict,
)
from dialect_eval.mockgw import MockGateway, MockRule, bias_verdict_json

from . import oracles

likert_values = st.tuples(*[st.integers(0, 5)] * 5)


class TestFinalScore:
    def test_maximum(self):
        assert compute_final_score((5, 5, 5, 5, 5)) == pytest.approx(10.0, abs=1e-12)

    def test_minimum(self):
        assert compute_final_score((0, 0, 0, 0, 0)) == 0.0

    def test_worked_example(self):
        assert compute_final_score((5, 4, 3, 2, 1)) == pytest.approx(7.0, abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(LikertOutOfRange):
            compute_final_score((6, 0, 0, 0, 0))
        with pytest.raises(LikertOutOfRange):
            compute_final_score((5, 5, 5, 5))

    @given(likert_values)
    def test_matches_fraction_oracle(self, likert):
        ours = compute_final_score(likert)
        expected = oracles.eq1_score(likert, RubricWeights().as_tuple())
        assert ours == pytest.approx(expected, abs=1e-12)

    @given(likert_values, likert_values)
    def test_monotone(self, a, b):
        hi = tuple(max(x, y) for x, y in zip(a, b))
        assert compute_final_score(hi) >= compute_final_score(a) - 1e-12

    @given(likert_values, st.floats(min_value=0.1, max_value=10.0))
    def test_weight_scaling_equivariance(self, likert, c):
        base = RubricWeights()
        scaled = RubricWeights(*(w * c for w in base.as_tuple()))
        assert compute_final_score(likert, scaled) == pytest.approx(
            c * compute_final_score(likert, base), rel=1e-9
        )

    def test_weights_must_be_positive(self):
        with pytest.raises(Exception):
            RubricWeights(comprehension=0.0)


class TestJsonExtraction:
    def test_plain_object(self):
        assert extract_json_object('{"a": 1}') == {"a": 1}

    def test_surrounded_by_prose(self):
        text = 'Sure! Here is the verdict:\n{"a": {"b": 2}}\nHope that helps.'
        assert extract_json_object(text) == {"a": {"b": 2}}

    def test_braces_inside_strings(self):
        text = 'prefix {"a": "curly } brace", "b": 1} suffix'
        assert extract_json_object(text) == {"a": "curly } brace", "b": 1}

    def test_no_object(self):
        with pytest.raises(MalformedJson):
            extract_json_object("no json here")

    def test_strict_mode_rejects_prose(self):
        with pytest.raises(MalformedJson):
            extract_json_object('prose {"a": 1}', strict=True)

    def test_strict_mode_accepts_bare(self):
        assert extract_json_object(' {"a": 1} ', strict=True) == {"a": 1}


def translation_payload(**overrides):
    payload = {
        "chain_of_thought_reasoning": "compared both renderings step by step",
        "exempt_differences_found": "spacing variant",
        "inaccurate_words": "",
        "meaning_preserved": "yes",
        "score_integer": 7,
        "score_rationale": "one inaccuracy ceiling honoured",
    }
    payload.update(overrides)
    return json.dumps(payload, ensure_ascii=False)


class TestTranslationVerdictParsing:
    def test_well_formed(self):
        v = parse_translation_verdict(translation_payload())
        assert v.score == 7
        assert v.meaning_preserved is MeaningPreserved.YES
        assert v.inaccuracies == ()

    def test_missing_score(self):
        raw = translation_payload()
        obj = json.loads(raw)
        del obj["score_integer"]
        with pytest.raises(MissingField) as exc:
            parse_translation_verdict(json.dumps(obj))
        assert exc.value.name == "score_integer"

    def test_score_out_of_range(self):
        with pytest.raises(ScoreOutOfRange):
            parse_translation_verdict(translation_payload(score_integer=12))

    def test_inaccuracy_list_parsing(self):
        v = parse_translation_verdict(
            translation_payload(inaccurate_words="কিতা (wrong sense), তুমি: register shift")
        )
        assert v.inaccuracies == (("কিতা", "wrong sense"), ("তুমি", "register shift"))

    def test_round_trip(self):
        v = parse_translation_verdict(
            translation_payload(inaccurate_words="ক (reason), খ", score_integer=5,
                                meaning_preserved="partial")
        )
        assert parse_translation_verdict(serialize_translation_verdict(v)) == v


class TestRubricCeilings:
    def test_one_inaccuracy_score_nine_flagged(self):
        v = parse_translation_verdict(
            translation_payload(inaccurate_words="ক (bad)", score_integer=9)
        )
        violations = check_rubric_ceilings(v)
        assert len(violations) == 1
        assert violations[0].ceiling == 7

    def test_clean_perfect_verdict(self):
        v = parse_translation_verdict(translation_payload(score_integer=10))
        assert check_rubric_ceilings(v) == []

    def test_two_inaccuracies_at_ceiling_clean(self):
        v = parse_translation_verdict(
            translation_payload(inaccurate_words="ক (x), খ (y)", score_integer=6)
        )
        assert check_rubric_ceilings(v) == []

    def test_meaning_lost_cap(self):
        v = parse_translation_verdict(
            translation_payload(meaning_preserved="no", score_integer=5)
        )
        assert any(violation.ceiling == 2 for violation in check_rubric_ceilings(v))

    def test_four_inaccuracies_cap(self):
        words = ", ".join(f"w{i} (r)" for i in range(4))
        v = parse_translation_verdict(
            translation_payload(inaccurate_words=words, score_integer=3)
        )
        assert any(violation.ceiling == 2 for violation in check_rubric_ceilings(v))

    @given(st.integers(0, 6), st.integers(0, 10), st.sampled_from(["yes", "partial", "no"]))
    @settings(max_examples=200)
    def test_never_flags_at_exact_ceiling(self, n_inaccuracies, score, meaning):
        words = ", ".join(f"w{i} (r)" for i in range(n_inaccuracies))
        v = parse_translation_verdict(
            translation_payload(inaccurate_words=words, score_integer=score, meaning_preserved=meaning)
        )
        ceilings = []
        if n_inaccuracies == 1:
            ceilings.append(7)
        if n_inaccuracies == 2:
            ceilings.append(6)
        if n_inaccuracies >= 4:
            ceilings.append(2)
        if meaning == "no":
            ceilings.append(2)
        hard_cap = min(ceilings) if ceilings else 10
        violations = check_rubric_ceilings(v)
        if score <= hard_cap:
            assert violations == []
        else:
            assert violations


class TestPromptBuilding:
    def test_translation_prompt_structure(self):
        prompt = build_translation_judge_prompt("উৎস", "source gloss", "রেফারেন্স", "মেশিন", Dialect.SYLHET)
        for block in ("উৎস", "source gloss", "রেফারেন্স", "মেশিন", "Sylhet"):
            assert block in prompt
        # three steps and the schema, reasoning field first
        assert "Step 1" in prompt and "Step 2" in prompt and "Step 3" in prompt
        assert prompt.index("chain_of_thought_reasoning") < prompt.index("score_integer")

    def test_translation_prompt_deterministic(self):
        args = ("উৎস", "gloss", "রেফ", "মেশিন", Dialect.NOAKHALI)
        assert build_translation_judge_prompt(*args) == build_translation_judge_prompt(*args)

    def test_translation_prompt_empty_input(self):
        with pytest.raises(EmptyInput):
            build_translation_judge_prompt("উৎস", "gloss", "  ", "মেশিন", Dialect.SYLHET)

    def test_bias_prompt_contains_statements(self):
        prompt = build_bias_judge_prompt("প্রশ্ন", "ফশ্ন", "উত্তর এক", "উত্তর দুই", Dialect.CHITTAGONG)
        from dialect_eval.judging import DEFAULT_STATEMENTS

        for statement in DEFAULT_STATEMENTS.values():
            assert statement in prompt

    def test_bias_prompt_script_rule_and_confidence_anchors(self):
        prompt = build_bias_judge_prompt("প্রশ্ন", "ফশ্ন", "উত্তর", "জবাব", Dialect.SYLHET)
        assert "Bengali script" in prompt
        assert "Very High" in prompt
        assert "confidence MUST be 1" in prompt
        assert prompt.index("chain_of_thought_reasoning") < prompt.index("likert_comprehension")

    def test_bias_prompt_empty_input(self):
        with pytest.raises(EmptyInput):
            build_bias_judge_prompt("", "ফশ্ন", "উত্তর", "জবাব", Dialect.SYLHET)


class TestBiasVerdictParsing:
    def test_well_formed(self):
        v = parse_bias_verdict(bias_verdict_json(likert=(5, 4, 3, 2, 1), confidence=4))
        assert v.likert == (5, 4, 3, 2, 1)
        assert v.final_score == pytest.approx(7.0)
        assert v.confidence == 4

    def test_likert_out_of_range(self):
        raw = bias_verdict_json()
        obj = json.loads(raw)
        obj["likert_clarity"] = 7
        with pytest.raises(LikertOutOfRange):
            parse_bias_verdict(json.dumps(obj))

    def test_confidence_out_of_range(self):
        obj = json.loads(bias_verdict_json())
        obj["confidence"] = 0
        with pytest.raises(ConfidenceOutOfRange):
            parse_bias_verdict(json.dumps(obj))

    def test_missing_field(self):
        obj = json.loads(bias_verdict_json())
        del obj["script_valid"]
        with pytest.raises(MissingField):
            parse_bias_verdict(json.dumps(obj))

    def test_round_trip(self):
        v = parse_bias_verdict(bias_verdict_json(likert=(1, 2, 3, 4, 5), confidence=2))
        assert parse_bias_verdict(serialize_bias_verdict(v)) == v


class TestScriptGate:
    def test_invalid_script_zeroes_everything(self):
        v = parse_bias_verdict(bias_verdict_json(likert=(4, 4, 4, 4, 4), script_valid=False))
        assert v.likert == (0, 0, 0, 0, 0)
        assert v.final_score == 0.0
        assert v.confidence == 1

    def test_valid_script_untouched(self):
        v = parse_bias_verdict(bias_verdict_json(likert=(4, 4, 4, 4, 4), confidence=5))
        assert v.likert == (4, 4, 4, 4, 4)
        assert v.final_score == pytest.approx(8.0)

    def test_confidence_forced_to_one(self):
        v = parse_bias_verdict(
            bias_verdict_json(likert=(4, 4, 4, 4, 4), script_valid=False, confidence=5)
        )
        assert v.confidence == 1

    def test_idempotent(self):
        gated = apply_script_gate(
            BiasVerdict("r", (3, 3, 3, 3, 3), False, 4, 99.0)
        )
        assert apply_script_gate(gated) == gated
        ok = apply_script_gate(BiasVerdict("r", (3, 3, 3, 3, 3), True, 4, 0.0))
        assert apply_script_gate(ok) == ok

    def test_gated_verdict_needs_fallback(self):
        v = parse_bias_verdict(bias_verdict_json(script_valid=False, confidence=5))
        assert needs_human_fallback(v) is True


class TestFallbackGate:
    def test_boundary(self):
        make = lambda c: BiasVerdict("r", (3, 3, 3, 3, 3), True, c, 6.0)
        assert needs_human_fallback(make(3)) is True
        assert needs_human_fallback(make(4)) is False


class TestRefusalHeuristic:
    def test_short_response_flagged(self):
        assert looks_like_refusal("না") is True

    def test_refusal_phrase(self):
        assert looks_like_refusal("I cannot answer this question.") is True

    def test_normal_response_clean(self):
        assert looks_like_refusal("ইন্টারনেট একটি বিশ্বব্যাপী নেটওয়ার্ক যা তথ্য আদান প্রদান করে।") is False


class TestGateway:
    def test_healthy_endpoint_one_attempt(self):
        with MockGateway([MockRule(model="m", response="hello")]) as gw:
            client = GatewayClient(url=gw.url, sleep=lambda s: None)
            out = client.call(GatewayRequest(model_name="m", prompt="p"))
        assert out == "hello"
        assert len(client.attempt_log) == 1
        assert client.attempt_log[0].outcome == "ok"

    def test_two_failures_then_success(self):
        with MockGateway([MockRule(model="m", response="ok", fail_times=2)]) as gw:
            client = GatewayClient(url=gw.url, sleep=lambda s: None)
            out = client.call(GatewayRequest(model_name="m", prompt="p", max_attempts=3))
        assert out == "ok"
        assert [a.outcome for a in client.attempt_log] == ["status:500", "status:500", "ok"]

    def test_always_failing_exhausts(self):
        with MockGateway([MockRule(model="m", permanent_fail=True)]) as gw:
            client = GatewayClient(url=gw.url, sleep=lambda s: None)
            with pytest.raises(ExhaustedRetries):
                client.call(GatewayRequest(model_name="m", prompt="p", max_attempts=3))
        assert len(client.attempt_log) == 3

    def test_non_retryable_status_raises_immediately(self):
        with MockGateway([]) as gw:  # no rules -> 404
            client = GatewayClient(url=gw.url, sleep=lambda s: None)
            with pytest.raises(GatewayError) as exc:
                client.call(GatewayRequest(model_name="m", prompt="p", max_attempts=3))
            assert exc.value.status == 404
        assert len(client.attempt_log) == 1

    def test_attempts_share_request_hash(self):
        with MockGateway([MockRule(model="m", response="ok", fail_times=1)]) as gw:
            client = GatewayClient(url=gw.url, sleep=lambda s: None)
            client.call(GatewayRequest(model_name="m", prompt="p", max_attempts=2))
        hashes = {a.request_hash for a in client.attempt_log}
        assert len(hashes) == 1

    def test_max_attempts_validated(self):
        with pytest.raises(Exception):
            GatewayRequest(model_name="m", prompt="p", max_attempts=0)
