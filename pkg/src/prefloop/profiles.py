"""Image references and per-image feature profiles."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import UnknownValueError, ValidationError
from .repository import FeatureKind, FeatureRepository


@dataclass(frozen=True)
class ImageRef:
    """Handle to a generated image.

    ``content_locator`` is an opaque URI; nothing in this package decodes
    image bytes. Mock-generated images carry their synthetic profile in
    ``embedded_profile`` so the offline loop can skip real extraction.
    """

    id: str
    content_locator: str
    prompt_used: str
    embedded_profile: Optional["ImageFeatureProfile"] = field(
        default=None, compare=False, repr=False
    )


@dataclass
class ImageFeatureProfile:
    """One image's value for every repository feature.

    Every feature id of the repository appears in exactly one of the three
    mappings, matching its kind; discrete/ordinal values must be legal per
    the feature spec. Freeform features map to lists of raw text snippets.
    """

    image: str
    discrete_values: dict[str, str]
    ordinal_values: dict[str, str]
    freeform_values: dict[str, list[str]]

    def validate(self, repo: FeatureRepository) -> None:
        """Raise ValidationError / UnknownValueError if the profile is inconsistent."""
        seen: set[str] = set()
        for mapping, kind in (
            (self.discrete_values, FeatureKind.DISCRETE),
            (self.ordinal_values, FeatureKind.ORDINAL),
            (self.freeform_values, FeatureKind.FREEFORM),
        ):
            for fid in mapping:
                if fid not in repo:
                    raise ValidationError(f"profile for {self.image!r}: unknown feature {fid!r}")
                spec = repo.get(fid)
                if spec.kind is not kind:
                    raise ValidationError(
                        f"profile for {self.image!r}: feature {fid!r} is "
                        f"{spec.kind.value}, placed under {kind.value}"
                    )
                if fid in seen:
                    raise ValidationError(
                        f"profile for {self.image!r}: feature {fid!r} appears twice"
                    )
                seen.add(fid)

        for fid, value in {**self.discrete_values, **self.ordinal_values}.items():
            spec = repo.get(fid)
            if value not in spec.values:
                raise UnknownValueError(
                    f"profile for {self.image!r}: {fid!r} has illegal value {value!r}"
                )
        for fid, texts in self.freeform_values.items():
            if not isinstance(texts, list) or any(not isinstance(t, str) for t in texts):
                raise ValidationError(
                    f"profile for {self.image!r}: freeform {fid!r} must be a list of strings"
                )

        missing = set(f.id for f in repo.all_features()) - seen
        if missing:
            raise ValidationError(
                f"profile for {self.image!r}: missing features {sorted(missing)}"
            )

    def value_of(self, feature_id: str) -> str | list[str]:
        """Look up the profile's value for a feature of any kind."""
        for mapping in (self.discrete_values, self.ordinal_values, self.freeform_values):
            if feature_id in mapping:
                return mapping[feature_id]
        raise KeyError(feature_id)

    def to_flat_dict(self) -> dict:
        """Flat {feature_id: value} form — the extraction wire format."""
        flat: dict = {}
        flat.update(self.discrete_values)
        flat.update(self.ordinal_values)
        flat.update({k: list(v) for k, v in self.freeform_values.items()})
        return flat

    def to_dict(self) -> dict:
        return {
            "image": self.image,
            "discrete_values": dict(self.discrete_values),
            "ordinal_values": dict(self.ordinal_values),
            "freeform_values": {k: list(v) for k, v in self.freeform_values.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImageFeatureProfile":
        return cls(
            image=d["image"],
            discrete_values=dict(d["discrete_values"]),
            ordinal_values=dict(d["ordinal_values"]),
            freeform_values={k: list(v) for k, v in d["freeform_values"].items()},
        )

    @classmethod
    def from_flat_dict(
        cls, image: str, flat: dict, repo: FeatureRepository
    ) -> "ImageFeatureProfile":
        """Build a profile from the flat wire form, routing keys by kind.

        Unknown keys are ignored; value legality is checked by ``validate``.
        """
        discrete: dict[str, str] = {}
        ordinal: dict[str, str] = {}
        freeform: dict[str, list[str]] = {}
        for fid, value in flat.items():
            if fid not in repo:
                continue
            kind = repo.get(fid).kind
            if kind is FeatureKind.DISCRETE:
                discrete[fid] = value
            elif kind is FeatureKind.ORDINAL:
                ordinal[fid] = value
            else:
                freeform[fid] = list(value) if isinstance(value, list) else [str(value)]
        return cls(
            image=image,
            discrete_values=discrete,
            ordinal_values=ordinal,
            freeform_values=freeform,
        )
