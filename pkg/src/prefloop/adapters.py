"""Clients for the two external model services: image generation and
structured feature extraction.

Both services sit behind small interfaces so the session loop never
branches on backend identity. The mock pair makes the full loop runnable
offline and deterministic: generated images carry a synthetic profile
(the prompt's feature bundle perturbed by seeded uniform noise), and mock
extraction returns that profile verbatim.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from typing import Protocol, Sequence

import httpx
import numpy as np

from .errors import (
    BackendUnreachableError,
    ExtractionFormatError,
    IllegalValueError,
    NotMockImageError,
)
from .profiles import ImageFeatureProfile, ImageRef
from .repository import FeatureKind, FeatureRepository
from .prompts import PromptSpec

DEFAULT_P_NOISE = 0.15

_DESCRIPTION_TONES = (
    "dreamy", "stark", "playful", "somber", "luminous", "gritty", "serene", "bold",
)
_COLOR_WORDS = (
    "soft pink", "lavender", "cream", "teal", "amber", "charcoal", "ivory",
    "crimson", "sage green", "cobalt",
)
_ELEMENT_WORDS = (
    "glowing particles", "long shadows", "mirror reflections", "floating petals",
    "light rays", "weathered textures", "silhouetted figures", "scattered sparks",
)


class GenerationBackend(Protocol):
    def generate(self, prompts: Sequence[PromptSpec], seed: int) -> list[ImageRef]: ...


class ExtractionBackend(Protocol):
    def extract(self, images: Sequence[ImageRef]) -> list[ImageFeatureProfile]: ...


def build_extraction_prompt(repo: FeatureRepository) -> str:
    """Instruction text for structured feature extraction.

    Contains the role constraint, the complete feature list with legal
    values (ordinal levels listed ascending), and the strict JSON-only
    output requirement keyed flat by feature id.
    """
    lines = [
        "You are an expert image analyst. Analyze the image professionally "
        "and report its visual features.",
        "",
        "Report a value for every feature below.",
    ]
    for spec in repo.all_features():
        if spec.kind is FeatureKind.FREEFORM:
            lines.append(
                f"  - {spec.id} ({spec.dimension}, free-form): a JSON array of "
                "short descriptive strings"
            )
        elif spec.kind is FeatureKind.ORDINAL:
            lines.append(
                f"  - {spec.id} ({spec.dimension}, ordinal, ascending): one of "
                + " < ".join(spec.values)
            )
        else:
            lines.append(
                f"  - {spec.id} ({spec.dimension}, discrete): one of "
                + " | ".join(spec.values)
            )
    lines.append("")
    lines.append(
        "Output a single JSON object and nothing else — no prose, no code "
        "fences. Keys are the feature ids above; discrete and ordinal "
        "features map to one value string, free-form features map to an "
        "array of strings."
    )
    return "\n".join(lines)


def parse_extraction_response(
    raw: str, repo: FeatureRepository, image: ImageRef
) -> ImageFeatureProfile:
    """Parse and validate a raw extraction reply into a profile.

    One repair pass is applied: surrounding prose is stripped down to the
    outermost JSON object, discrete/ordinal value ids are case-folded, and
    bare freeform strings are wrapped into lists. Values still unknown to
    the repository after repair fail hard — guessing would corrupt the
    statistics downstream.
    """
    try:
        parsed = json.loads(raw)
    except json.JSONDecodeError:
        start, end = raw.find("{"), raw.rfind("}")
        if start == -1 or end <= start:
            raise ExtractionFormatError("reply contains no JSON object") from None
        try:
            parsed = json.loads(raw[start : end + 1])
        except json.JSONDecodeError as exc:
            raise ExtractionFormatError(f"reply JSON unparseable: {exc}") from None
    if not isinstance(parsed, dict):
        raise ExtractionFormatError("reply JSON is not an object")

    discrete: dict[str, str] = {}
    ordinal: dict[str, str] = {}
    freeform: dict[str, list[str]] = {}
    for spec in repo.all_features():
        if spec.id not in parsed:
            raise ExtractionFormatError(f"reply missing feature {spec.id!r}")
        value = parsed[spec.id]
        if spec.kind is FeatureKind.FREEFORM:
            if isinstance(value, str):
                value = [value]
            if not isinstance(value, list) or any(not isinstance(t, str) for t in value):
                raise ExtractionFormatError(f"freeform {spec.id!r} must be a list of strings")
            freeform[spec.id] = value
            continue
        if not isinstance(value, str):
            raise ExtractionFormatError(f"feature {spec.id!r} must map to a string")
        folded = value.strip().lower()
        if folded not in spec.values:
            raise IllegalValueError(spec.id, value)
        if spec.kind is FeatureKind.DISCRETE:
            discrete[spec.id] = folded
        else:
            ordinal[spec.id] = folded

    profile = ImageFeatureProfile(
        image=image.id,
        discrete_values=discrete,
        ordinal_values=ordinal,
        freeform_values=freeform,
    )
    profile.validate(repo)
    return profile


class MockGenerationBackend:
    """Offline generator: images carry a synthetic profile derived from the
    prompt's feature bundle.

    Each discrete/ordinal feature present in the bundle is kept as-is and
    independently resampled uniformly with probability ``p_noise``;
    features the bundle leaves unconstrained are drawn uniformly. Output is
    deterministic given (prompts, seed).
    """

    def __init__(self, repo: FeatureRepository, p_noise: float = DEFAULT_P_NOISE):
        if not 0.0 <= p_noise <= 1.0:
            raise ValueError("p_noise must lie in [0, 1]")
        self.repo = repo
        self.p_noise = p_noise

    def generate(self, prompts: Sequence[PromptSpec], seed: int) -> list[ImageRef]:
        return [self._render(prompt, seed, i) for i, prompt in enumerate(prompts)]

    def _render(self, prompt: PromptSpec, seed: int, index: int) -> ImageRef:
        rng = np.random.default_rng([abs(seed), index])
        image_id = f"mock-{seed}-{prompt.id}"
        bundle = prompt.bundle

        discrete: dict[str, str] = {}
        for spec in self.repo.discrete_features():
            discrete[spec.id] = self._realize(
                spec.values, bundle.discrete_choices.get(spec.id), rng
            )
        ordinal: dict[str, str] = {}
        for spec in self.repo.ordinal_features():
            ordinal[spec.id] = self._realize(
                spec.values, bundle.ordinal_choices.get(spec.id), rng
            )

        tone = _DESCRIPTION_TONES[int(rng.integers(len(_DESCRIPTION_TONES)))]
        colors = [
            _COLOR_WORDS[int(i)]
            for i in rng.choice(len(_COLOR_WORDS), size=2, replace=False)
        ]
        element = _ELEMENT_WORDS[int(rng.integers(len(_ELEMENT_WORDS)))]
        freeform = {
            "subject": [prompt.initial_prompt],
            "raw_description": [f"a {tone} rendering of {prompt.initial_prompt}"],
            "keywords": [tone, discrete.get("artistic_style", "untyped")],
            "dominant_colors": [", ".join(colors)],
            "unique_elements": [element],
        }
        # Keep only freeform ids this repository actually declares.
        freeform = {
            spec.id: freeform.get(spec.id, [f"{spec.id} of {prompt.initial_prompt}"])
            for spec in self.repo.freeform_features()
        }

        profile = ImageFeatureProfile(
            image=image_id,
            discrete_values=discrete,
            ordinal_values=ordinal,
            freeform_values=freeform,
        )
        return ImageRef(
            id=image_id,
            content_locator=f"mock://{image_id}",
            prompt_used=prompt.id,
            embedded_profile=profile,
        )

    def _realize(
        self, values: tuple[str, ...], chosen: str | None, rng: np.random.Generator
    ) -> str:
        if chosen is None or rng.random() < self.p_noise:
            return values[int(rng.integers(len(values)))]
        return chosen


class MockExtractionBackend:
    """Returns the synthetic profiles embedded by the mock generator."""

    def extract(self, images: Sequence[ImageRef]) -> list[ImageFeatureProfile]:
        profiles = []
        for image in images:
            if image.embedded_profile is None:
                raise NotMockImageError(f"image {image.id!r} has no embedded profile")
            profiles.append(image.embedded_profile)
        return profiles


def _post_with_retry(
    client: httpx.Client, url: str, payload: dict, retries: int
) -> httpx.Response:
    last_exc: Exception | None = None
    for _ in range(retries + 1):
        try:
            resp = client.post(url, json=payload)
            resp.raise_for_status()
            return resp
        except httpx.HTTPError as exc:
            last_exc = exc
    raise BackendUnreachableError(f"POST {url} failed: {last_exc}")


class HttpGenerationBackend:
    """Generation over HTTP: POST {base_url}/generate per prompt.

    Requests for a batch fan out concurrently; results are reassembled in
    request order.
    """

    def __init__(
        self,
        base_url: str,
        timeout_ms: int = 30000,
        auth_header: str = "",
        auth_token: str = "",
        retries: int = 1,
        transport: httpx.BaseTransport | None = None,
    ):
        headers = {auth_header: auth_token} if auth_header and auth_token else {}
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self._client = httpx.Client(
            timeout=timeout_ms / 1000.0, headers=headers, transport=transport
        )

    def generate(self, prompts: Sequence[PromptSpec], seed: int) -> list[ImageRef]:
        def one(args: tuple[int, PromptSpec]) -> ImageRef:
            i, prompt = args
            payload = {
                "positive_prompt": prompt.positive_prompt,
                "negative_prompt": prompt.negative_prompt,
                "seed": seed + i,
            }
            resp = _post_with_retry(
                self._client, f"{self.base_url}/generate", payload, self.retries
            )
            body = resp.json()
            return ImageRef(
                id=body["image_id"],
                content_locator=body["uri"],
                prompt_used=prompt.id,
            )

        if not prompts:
            return []
        with ThreadPoolExecutor(max_workers=min(8, len(prompts))) as pool:
            return list(pool.map(one, enumerate(prompts)))


class HttpExtractionBackend:
    """Extraction over HTTP: POST {base_url}/extract per image; the raw
    reply text is parsed by :func:`parse_extraction_response`."""

    def __init__(
        self,
        base_url: str,
        repo: FeatureRepository,
        timeout_ms: int = 30000,
        auth_header: str = "",
        auth_token: str = "",
        retries: int = 1,
        transport: httpx.BaseTransport | None = None,
    ):
        headers = {auth_header: auth_token} if auth_header and auth_token else {}
        self.base_url = base_url.rstrip("/")
        self.repo = repo
        self.retries = retries
        self.instructions = build_extraction_prompt(repo)
        self._client = httpx.Client(
            timeout=timeout_ms / 1000.0, headers=headers, transport=transport
        )

    def extract(self, images: Sequence[ImageRef]) -> list[ImageFeatureProfile]:
        def one(image: ImageRef) -> ImageFeatureProfile:
            payload = {"uri": image.content_locator, "instructions": self.instructions}
            resp = _post_with_retry(
                self._client, f"{self.base_url}/extract", payload, self.retries
            )
            return parse_extraction_response(resp.text, self.repo, image)

        if not images:
            return []
        with ThreadPoolExecutor(max_workers=min(8, len(images))) as pool:
            return list(pool.map(one, images))


class HttpTextClient:
    """Plain text-completion client for the model-driven prompt assembly."""

    def __init__(
        self,
        url: str,
        timeout_ms: int = 30000,
        retries: int = 1,
        transport: httpx.BaseTransport | None = None,
    ):
        self.url = url
        self.retries = retries
        self._client = httpx.Client(timeout=timeout_ms / 1000.0, transport=transport)

    def complete(self, instructions: str) -> str:
        resp = _post_with_retry(
            self._client, self.url, {"instructions": instructions}, self.retries
        )
        return resp.text
