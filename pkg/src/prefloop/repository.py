"""Feature-standard repository: the typed taxonomy that bounds preference inference.

A repository declares a fixed set of image features, grouped into dimensions.
Each feature is one of three kinds:

* ``discrete`` — unordered categorical values (stored in declaration order),
* ``ordinal``  — ordered levels, linearly normalized onto [0, 1] ascending,
* ``freeform`` — open natural-language text, no declared values.

The bundled default file carries 28 features across 8 dimensions and ships
with the package; callers may load their own file with the same schema.
Repositories are immutable after load and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import IO, Iterator

from .errors import (
    DomainError,
    KindMismatchError,
    ParseError,
    UnknownFeatureError,
    UnknownValueError,
    ValidationError,
)

_DEFAULT_RESOURCE = "feature_repository.json"


class FeatureKind(str, Enum):
    DISCRETE = "discrete"
    ORDINAL = "ordinal"
    FREEFORM = "freeform"


@dataclass(frozen=True)
class FeatureSpec:
    """One feature declaration.

    ``values`` is empty for freeform features. For ordinal features the
    declaration order is ascending and ``levels_normalized`` holds the
    equally spaced normalized levels [0, 1/(L-1), ..., 1].
    """

    id: str
    dimension: str
    kind: FeatureKind
    values: tuple[str, ...] = ()
    display_name: str = ""
    levels_normalized: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.display_name:
            object.__setattr__(self, "display_name", self.id.replace("_", " "))
        if self.kind is FeatureKind.ORDINAL and not self.levels_normalized:
            n = len(self.values)
            levels = tuple(i / (n - 1) for i in range(n)) if n >= 2 else ()
            object.__setattr__(self, "levels_normalized", levels)

    def value_index(self, value_id: str) -> int:
        try:
            return self.values.index(value_id)
        except ValueError:
            raise UnknownValueError(
                f"feature {self.id!r} has no value {value_id!r}"
            ) from None


def normalize_ordinal_level(spec: FeatureSpec, value_id: str) -> float:
    """Map an ordinal value id to its normalized level in [0, 1]."""
    if spec.kind is not FeatureKind.ORDINAL:
        raise KindMismatchError(f"feature {spec.id!r} is {spec.kind.value}, not ordinal")
    return spec.levels_normalized[spec.value_index(value_id)]


def nearest_level(spec: FeatureSpec, x: float) -> str:
    """Return the ordinal value whose normalized level is nearest to ``x``.

    Ties break toward the lower-index level, deterministically.
    """
    if spec.kind is not FeatureKind.ORDINAL:
        raise KindMismatchError(f"feature {spec.id!r} is {spec.kind.value}, not ordinal")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x} outside [0, 1]")
    best_i = 0
    best_dist = abs(spec.levels_normalized[0] - x)
    for i, level in enumerate(spec.levels_normalized[1:], start=1):
        dist = abs(level - x)
        if dist < best_dist:
            best_i, best_dist = i, dist
    return spec.values[best_i]


@dataclass(frozen=True)
class FeatureRepository:
    """Validated, immutable collection of feature specs keyed by id."""

    version: str
    dimensions: tuple[str, ...]
    features: dict[str, FeatureSpec]

    def __len__(self) -> int:
        return len(self.features)

    def __contains__(self, feature_id: str) -> bool:
        return feature_id in self.features

    def get(self, feature_id: str) -> FeatureSpec:
        try:
            return self.features[feature_id]
        except KeyError:
            raise UnknownFeatureError(f"unknown feature {feature_id!r}") from None

    def all_features(self) -> Iterator[FeatureSpec]:
        return iter(self.features.values())

    def by_kind(self, kind: FeatureKind) -> Iterator[FeatureSpec]:
        return (f for f in self.features.values() if f.kind is kind)

    def discrete_features(self) -> Iterator[FeatureSpec]:
        return self.by_kind(FeatureKind.DISCRETE)

    def ordinal_features(self) -> Iterator[FeatureSpec]:
        return self.by_kind(FeatureKind.ORDINAL)

    def freeform_features(self) -> Iterator[FeatureSpec]:
        return self.by_kind(FeatureKind.FREEFORM)


def load_repository(source: IO[str] | str) -> FeatureRepository:
    """Parse and validate a repository document.

    ``source`` is an open text stream or a JSON string in the documented
    schema. Raises :class:`ParseError` for malformed documents and
    :class:`ValidationError` for structural violations (duplicate id,
    ordinal with fewer than 2 levels, unknown kind, unknown dimension).
    """
    text = source if isinstance(source, str) else source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"repository document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("repository document must be a JSON object")

    version = doc.get("version")
    dimensions = doc.get("dimensions")
    raw_features = doc.get("features")
    if not isinstance(version, str) or not version:
        raise ValidationError("missing or empty 'version'")
    if not isinstance(dimensions, list) or not dimensions:
        raise ValidationError("'dimensions' must be a non-empty list")
    if len(set(dimensions)) != len(dimensions):
        raise ValidationError("duplicate dimension names")
    if not isinstance(raw_features, list) or not raw_features:
        raise ValidationError("'features' must be a non-empty list")

    features: dict[str, FeatureSpec] = {}
    for entry in raw_features:
        spec = _parse_feature(entry, dimension_names=dimensions)
        if spec.id in features:
            raise ValidationError(f"duplicate feature id {spec.id!r}")
        features[spec.id] = spec

    return FeatureRepository(
        version=version, dimensions=tuple(dimensions), features=features
    )


def _parse_feature(entry: object, dimension_names: list[str]) -> FeatureSpec:
    if not isinstance(entry, dict):
        raise ValidationError(f"feature entry must be an object, got {type(entry).__name__}")
    fid = entry.get("id")
    if not isinstance(fid, str) or not fid:
        raise ValidationError("feature missing 'id'")
    dimension = entry.get("dimension")
    if dimension not in dimension_names:
        raise ValidationError(f"feature {fid!r}: unknown dimension {dimension!r}")
    kind_raw = entry.get("kind")
    try:
        kind = FeatureKind(kind_raw)
    except ValueError:
        raise ValidationError(f"feature {fid!r}: unknown kind {kind_raw!r}") from None

    values = tuple(entry.get("values", ()))
    if any(not isinstance(v, str) or not v for v in values):
        raise ValidationError(f"feature {fid!r}: values must be non-empty strings")
    if len(set(values)) != len(values):
        raise ValidationError(f"feature {fid!r}: duplicate values")

    if kind is FeatureKind.DISCRETE and not values:
        raise ValidationError(f"discrete feature {fid!r} needs at least one value")
    if kind is FeatureKind.ORDINAL and len(values) < 2:
        raise ValidationError(f"ordinal feature {fid!r} needs at least two levels")
    if kind is FeatureKind.FREEFORM and values:
        raise ValidationError(f"freeform feature {fid!r} must not declare values")

    return FeatureSpec(
        id=fid,
        dimension=dimension,
        kind=kind,
        values=values,
        display_name=entry.get("display_name", ""),
    )


def load_repository_file(path: str) -> FeatureRepository:
    """Load a repository from a file path."""
    with open(path, "r", encoding="utf-8") as fh:
        return load_repository(fh)


@lru_cache(maxsize=1)
def default_repository() -> FeatureRepository:
    """The bundled default repository (28 features, 8 dimensions)."""
    text = resources.files("prefloop.data").joinpath(_DEFAULT_RESOURCE).read_text("utf-8")
    return load_repository(text)
