"""Render sampled feature bundles into positive/negative generation prompts.

Two paths produce a :class:`PromptSpec`: a language-model-driven path that
hands structured constraints to a text client, and a deterministic template
fallback that keeps the whole loop runnable offline. Both enforce the hard
constraint that the user's initial prompt survives verbatim in intent: its
subject tokens must appear in the positive prompt.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol

from .errors import AssemblyFormatError, DomainError, HardConstraintViolationError
from .repository import FeatureRepository
from .sampling import SampledFeatureBundle

if TYPE_CHECKING:  # pragma: no cover
    from .engine import PreferenceState

NEGATIVE_TERM_CAP = 8
DEFAULT_NEGATIVE_OR_THRESHOLD = 0.5

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class TextClient(Protocol):
    """Minimal text-completion client used by the model-driven path."""

    def complete(self, instructions: str) -> str: ...


@dataclass(frozen=True)
class NegativeTerm:
    """A low-preference discrete value slated for the negative prompt."""

    feature_id: str
    value_id: str
    odds_ratio: float


@dataclass(frozen=True)
class PromptSpec:
    id: str
    positive_prompt: str
    negative_prompt: str
    bundle: SampledFeatureBundle
    initial_prompt: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "positive_prompt": self.positive_prompt,
            "negative_prompt": self.negative_prompt,
            "bundle": self.bundle.to_dict(),
            "initial_prompt": self.initial_prompt,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PromptSpec":
        return cls(
            id=d["id"],
            positive_prompt=d["positive_prompt"],
            negative_prompt=d["negative_prompt"],
            bundle=SampledFeatureBundle.from_dict(d["bundle"]),
            initial_prompt=d["initial_prompt"],
        )


def subject_tokens(text: str) -> list[str]:
    """Lowercased alphanumeric tokens of a prompt."""
    return _TOKEN_RE.findall(text.lower())


def check_hard_constraint(initial_prompt: str, positive_prompt: str) -> bool:
    """True when every subject token of the initial prompt appears in the
    positive prompt (case-insensitive containment after tokenization)."""
    have = set(subject_tokens(positive_prompt))
    return all(tok in have for tok in subject_tokens(initial_prompt))


def _descriptor(repo: FeatureRepository, feature_id: str, value_id: str) -> str:
    spec = repo.get(feature_id)
    return f"{spec.display_name}: {value_id.replace('_', ' ')}"


def _bundle_descriptors(repo: FeatureRepository, bundle: SampledFeatureBundle) -> list[str]:
    # Repository declaration order keeps rendering deterministic.
    out = []
    for spec in repo.all_features():
        value = bundle.discrete_choices.get(spec.id) or bundle.ordinal_choices.get(spec.id)
        if value is not None:
            out.append(_descriptor(repo, spec.id, value))
    return out


def _filter_negatives(
    bundle: SampledFeatureBundle, negatives: list[NegativeTerm]
) -> list[NegativeTerm]:
    # A chosen value and its exclusion must never co-occur.
    chosen = {**bundle.discrete_choices, **bundle.ordinal_choices}
    return [t for t in negatives if chosen.get(t.feature_id) != t.value_id]


def derive_negative_terms(
    state: "PreferenceState",
    repo: FeatureRepository,
    or_neg_threshold: float = DEFAULT_NEGATIVE_OR_THRESHOLD,
) -> list[NegativeTerm]:
    """Discrete values whose cumulative odds ratio fell below the threshold,
    ascending by odds ratio, capped at :data:`NEGATIVE_TERM_CAP` entries."""
    if not 0.0 < or_neg_threshold < 1.0:
        raise DomainError("or_neg_threshold must lie in (0, 1)")
    terms = [
        NegativeTerm(spec.id, v, ratio)
        for spec in repo.discrete_features()
        for v in spec.values
        if (ratio := state.cumulative_odds_ratio(spec.id, v)) < or_neg_threshold
    ]
    terms.sort(key=lambda t: t.odds_ratio)
    return terms[:NEGATIVE_TERM_CAP]


def build_assembly_instructions(
    repo: FeatureRepository,
    initial_prompt: str,
    bundle: SampledFeatureBundle,
    negatives: list[NegativeTerm],
) -> str:
    """Instruction text for the model-driven assembly path.

    Encodes the four constraint classes: the inviolable core subject, the
    sampled feature values as soft guidance, creative reference texts, and
    the strict two-field output format.
    """
    negatives = _filter_negatives(bundle, negatives)
    lines = [
        "You write prompts for a text-to-image generator.",
        "",
        "Hard constraint (inviolable): the image must depict exactly this "
        f"subject, stated by the user: \"{initial_prompt}\". Keep the subject's "
        "wording present in the positive prompt.",
        "",
        "Soft constraints: translate these feature values into natural-language "
        "modifiers, incorporating as many compatible feature values as possible. "
        "Prefer a coherent prompt over forcing every value in.",
    ]
    descriptors = _bundle_descriptors(repo, bundle)
    lines.extend(f"  - {d}" for d in descriptors)
    if not descriptors:
        lines.append("  (none this round)")
    if bundle.creative_refs:
        lines.append("")
        lines.append(
            "Creative references: borrow selectively from these fragments of "
            "previously liked images to enrich detail."
        )
        lines.extend(f"  - {t}" for t in bundle.creative_refs)
    if negatives:
        lines.append("")
        lines.append("Visual elements to exclude (negative prompt material):")
        lines.extend(f"  - {_descriptor(repo, t.feature_id, t.value_id)}" for t in negatives)
    lines.append("")
    lines.append(
        "Output exactly one JSON object with exactly these fields and nothing "
        "else: \"positive_prompt\" (string, required) describing the desired "
        "visual content, and \"negative_prompt\" (string, optional) listing "
        "elements to exclude."
    )
    return "\n".join(lines)


def _extract_json_object(raw: str) -> dict:
    """Parse a JSON object, tolerating one pass of surrounding prose."""
    try:
        parsed = json.loads(raw)
    except json.JSONDecodeError:
        start, end = raw.find("{"), raw.rfind("}")
        if start == -1 or end <= start:
            raise AssemblyFormatError("reply contains no JSON object") from None
        try:
            parsed = json.loads(raw[start : end + 1])
        except json.JSONDecodeError as exc:
            raise AssemblyFormatError(f"reply JSON unparseable: {exc}") from None
    if not isinstance(parsed, dict):
        raise AssemblyFormatError("reply JSON is not an object")
    return parsed


def assemble_prompt_vlm(
    repo: FeatureRepository,
    initial_prompt: str,
    bundle: SampledFeatureBundle,
    negatives: list[NegativeTerm],
    vlm: TextClient,
    prompt_id: str = "p0",
) -> PromptSpec:
    """Model-driven assembly: send instructions, parse the structured reply,
    and verify the hard constraint post-hoc."""
    instructions = build_assembly_instructions(repo, initial_prompt, bundle, negatives)
    reply = vlm.complete(instructions)
    parsed = _extract_json_object(reply)
    positive = parsed.get("positive_prompt")
    if not isinstance(positive, str) or not positive.strip():
        raise AssemblyFormatError("reply missing 'positive_prompt'")
    negative = parsed.get("negative_prompt", "")
    if not isinstance(negative, str):
        raise AssemblyFormatError("'negative_prompt' must be a string")
    if not check_hard_constraint(initial_prompt, positive):
        raise HardConstraintViolationError(
            f"positive prompt dropped subject tokens of {initial_prompt!r}"
        )
    return PromptSpec(
        id=prompt_id,
        positive_prompt=positive.strip(),
        negative_prompt=negative.strip(),
        bundle=bundle,
        initial_prompt=initial_prompt,
    )


def assemble_prompt_template(
    repo: FeatureRepository,
    initial_prompt: str,
    bundle: SampledFeatureBundle,
    negatives: list[NegativeTerm],
    prompt_id: str = "p0",
) -> PromptSpec:
    """Deterministic fallback: initial prompt plus comma-joined descriptors
    in repository declaration order, then creative texts."""
    negatives = _filter_negatives(bundle, negatives)
    parts = [initial_prompt]
    parts.extend(_bundle_descriptors(repo, bundle))
    parts.extend(bundle.creative_refs)
    positive = ", ".join(p for p in parts if p)
    negative = ", ".join(_descriptor(repo, t.feature_id, t.value_id) for t in negatives)
    return PromptSpec(
        id=prompt_id,
        positive_prompt=positive,
        negative_prompt=negative,
        bundle=bundle,
        initial_prompt=initial_prompt,
    )
