"""Extraction prompt/parse round-trips and the mock + HTTP backends."""

import json

import httpx
import pytest

from prefloop.adapters import (
    HttpExtractionBackend,
    HttpGenerationBackend,
    MockExtractionBackend,
    MockGenerationBackend,
    build_extraction_prompt,
    parse_extraction_response,
)
from prefloop.errors import (
    BackendUnreachableError,
    ExtractionFormatError,
    IllegalValueError,
    NotMockImageError,
    ValidationError,
)
from prefloop.profiles import ImageRef
from prefloop.prompts import PromptSpec
from prefloop.repository import load_repository
from prefloop.sampling import SampledFeatureBundle

from conftest import make_profile


def bundle_for(repo, discrete=None, ordinal=None):
    return SampledFeatureBundle(
        discrete_choices=discrete or {},
        ordinal_choices=ordinal or {},
        creative_refs=[],
        rng_seed=0,
    )


def prompt_for(repo, bundle, pid="p0-0"):
    return PromptSpec(
        id=pid,
        positive_prompt="a quiet harbor",
        negative_prompt="",
        bundle=bundle,
        initial_prompt="a quiet harbor",
    )


class TestExtractionPrompt:
    def test_contains_role_and_all_feature_ids(self, repo):
        text = build_extraction_prompt(repo)
        assert "expert image analyst" in text
        for spec in repo.all_features():
            assert spec.id in text

    def test_single_feature_repo_lists_its_values(self):
        r = load_repository(json.dumps({
            "version": "t", "dimensions": ["style"],
            "features": [{"id": "style", "dimension": "style", "kind": "discrete",
                          "values": ["woodcut", "collage"]}],
        }))
        text = build_extraction_prompt(r)
        assert "woodcut" in text and "collage" in text

    def test_ordinal_levels_listed_ascending(self, mini_repo):
        text = build_extraction_prompt(mini_repo)
        assert "dark < dim < bright < high_key" in text


class TestParseExtractionResponse:
    def test_happy_path_all_features(self, repo):
        profile = make_profile(
            repo,
            "img-1",
            freeform={"subject": ["a quiet harbor"], "keywords": ["calm"]},
        )
        raw = json.dumps(profile.to_flat_dict())
        parsed = parse_extraction_response(raw, repo, ImageRef("img-1", "u", "p"))
        assert parsed == profile

    def test_prose_wrapped_json_is_repaired(self, repo):
        profile = make_profile(repo, "img-2")
        raw = "Here is the analysis you asked for:\n" + json.dumps(profile.to_flat_dict()) + "\nHope it helps!"
        parsed = parse_extraction_response(raw, repo, ImageRef("img-2", "u", "p"))
        assert parsed == profile

    def test_case_folding_repair(self, repo):
        flat = make_profile(repo, "img-3").to_flat_dict()
        flat["artistic_style"] = "Realistic"
        parsed = parse_extraction_response(json.dumps(flat), repo, ImageRef("img-3", "u", "p"))
        assert parsed.discrete_values["artistic_style"] == "realistic"

    def test_illegal_value_names_the_feature(self, repo):
        flat = make_profile(repo, "img-4").to_flat_dict()
        flat["saturation"] = "neon"
        with pytest.raises(IllegalValueError) as err:
            parse_extraction_response(json.dumps(flat), repo, ImageRef("img-4", "u", "p"))
        assert err.value.feature_id == "saturation"

    def test_missing_feature_fails(self, repo):
        flat = make_profile(repo, "img-5").to_flat_dict()
        del flat["brightness"]
        with pytest.raises(ExtractionFormatError):
            parse_extraction_response(json.dumps(flat), repo, ImageRef("img-5", "u", "p"))

    def test_unparseable_reply(self, repo):
        with pytest.raises(ExtractionFormatError):
            parse_extraction_response("no json here at all", repo, ImageRef("i", "u", "p"))

    def test_bare_freeform_string_wrapped(self, repo):
        flat = make_profile(repo, "img-6").to_flat_dict()
        flat["subject"] = "a quiet harbor"
        parsed = parse_extraction_response(json.dumps(flat), repo, ImageRef("img-6", "u", "p"))
        assert parsed.freeform_values["subject"] == ["a quiet harbor"]


class TestProfileValidation:
    def test_misplaced_kind_rejected(self, mini_repo):
        profile = make_profile(mini_repo, "img")
        profile.discrete_values["brightness"] = profile.ordinal_values.pop("brightness")
        with pytest.raises(ValidationError):
            profile.validate(mini_repo)

    def test_missing_feature_rejected(self, mini_repo):
        profile = make_profile(mini_repo, "img")
        del profile.discrete_values["palette"]
        with pytest.raises(ValidationError):
            profile.validate(mini_repo)


class TestMockGeneration:
    def test_deterministic_given_prompts_and_seed(self, repo):
        backend = MockGenerationBackend(repo)
        prompts = [prompt_for(repo, bundle_for(repo, {"artistic_style": "cartoon"}))]
        first = backend.generate(prompts, seed=7)
        second = backend.generate(prompts, seed=7)
        assert [i.id for i in first] == [i.id for i in second]
        assert [i.embedded_profile for i in first] == [i.embedded_profile for i in second]

    def test_zero_noise_reproduces_bundle(self, repo):
        backend = MockGenerationBackend(repo, p_noise=0.0)
        bundle = SampledFeatureBundle(
            discrete_choices={s.id: s.values[-1] for s in repo.discrete_features()},
            ordinal_choices={s.id: s.values[-1] for s in repo.ordinal_features()},
            creative_refs=[],
            rng_seed=0,
        )
        image = backend.generate([prompt_for(repo, bundle)], seed=3)[0]
        assert image.embedded_profile.discrete_values == bundle.discrete_choices
        assert image.embedded_profile.ordinal_values == bundle.ordinal_choices

    def test_full_noise_resamples_uniformly(self, repo):
        # p_noise=1: each declared value lands with frequency 1/K (+-2%)
        backend = MockGenerationBackend(repo, p_noise=1.0)
        bundle = bundle_for(repo, {"edge_treatment": "hard"})
        prompts = [prompt_for(repo, bundle, pid=f"p0-{i}") for i in range(10_000)]
        images = backend.generate(prompts, seed=123)
        values = [img.embedded_profile.discrete_values["edge_treatment"] for img in images]
        k = len(repo.get("edge_treatment").values)
        for value in repo.get("edge_treatment").values:
            assert values.count(value) / len(values) == pytest.approx(1 / k, abs=0.02)

    def test_unconstrained_features_drawn_uniformly(self, repo):
        backend = MockGenerationBackend(repo, p_noise=0.0)
        prompts = [prompt_for(repo, bundle_for(repo), pid=f"p0-{i}") for i in range(3000)]
        images = backend.generate(prompts, seed=9)
        values = [img.embedded_profile.ordinal_values["saturation"] for img in images]
        for value in repo.get("saturation").values:
            assert values.count(value) / len(values) == pytest.approx(1 / 3, abs=0.03)

    def test_profiles_validate(self, repo):
        backend = MockGenerationBackend(repo)
        images = backend.generate(
            [prompt_for(repo, bundle_for(repo, {"artistic_style": "cartoon"}))], seed=1
        )
        images[0].embedded_profile.validate(repo)


class TestMockExtraction:
    def test_returns_embedded_profiles_in_order(self, repo):
        gen = MockGenerationBackend(repo)
        prompts = [prompt_for(repo, bundle_for(repo), pid=f"p0-{i}") for i in range(4)]
        images = gen.generate(prompts, seed=5)
        profiles = MockExtractionBackend().extract(images)
        assert profiles == [i.embedded_profile for i in images]

    def test_empty_list(self):
        assert MockExtractionBackend().extract([]) == []

    def test_foreign_image_rejected(self):
        with pytest.raises(NotMockImageError):
            MockExtractionBackend().extract([ImageRef("x", "http://img", "p")])


class TestHttpBackends:
    def test_generation_contract_and_order(self, repo):
        seen = []

        def handler(request: httpx.Request) -> httpx.Response:
            body = json.loads(request.content)
            seen.append(body)
            return httpx.Response(
                200, json={"image_id": f"srv-{body['seed']}", "uri": f"http://img/{body['seed']}"}
            )

        backend = HttpGenerationBackend(
            "http://api.test", transport=httpx.MockTransport(handler)
        )
        prompts = [prompt_for(repo, bundle_for(repo), pid=f"p0-{i}") for i in range(3)]
        images = backend.generate(prompts, seed=100)
        assert [i.id for i in images] == ["srv-100", "srv-101", "srv-102"]
        assert all("positive_prompt" in b and "negative_prompt" in b for b in seen)

    def test_extraction_contract(self, repo):
        profile_payload = json.dumps(make_profile(repo, "img-x").to_flat_dict())

        def handler(request: httpx.Request) -> httpx.Response:
            body = json.loads(request.content)
            assert "uri" in body and "instructions" in body
            return httpx.Response(200, text=profile_payload)

        backend = HttpExtractionBackend(
            "http://api.test", repo, transport=httpx.MockTransport(handler)
        )
        profiles = backend.extract([ImageRef("img-x", "http://img/1", "p")])
        assert profiles[0].image == "img-x"

    def test_unreachable_after_retry(self, repo):
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            raise httpx.ConnectError("refused")

        backend = HttpGenerationBackend(
            "http://api.test", retries=1, transport=httpx.MockTransport(handler)
        )
        with pytest.raises(BackendUnreachableError):
            backend.generate([prompt_for(repo, bundle_for(repo))], seed=0)
        assert calls["n"] == 2  # original + one retry
