"""Turn cumulative preference statistics into concrete feature bundles.

Three strategies, one per feature kind:

* discrete — roulette-wheel draw proportional to cumulative odds ratios,
* ordinal  — truncated-Gaussian draw around the liked-group mean, gated on
  a minimum absolute effect size, remapped to the nearest level,
* freeform — uniform without-replacement picks from the creative pool.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping

import numpy as np

from .errors import (
    ConfigError,
    DomainError,
    EmptyDomainError,
    InsufficientDataError,
    KindMismatchError,
)
from .repository import FeatureKind, FeatureRepository, FeatureSpec, nearest_level

if TYPE_CHECKING:  # pragma: no cover
    from .engine import PreferenceState

POOL_CATEGORIES = ("overall_impression", "unique_elements", "dominant_color")

# Freeform features whose liked-image texts feed the creative pool.
POOL_SOURCES = {
    "raw_description": "overall_impression",
    "unique_elements": "unique_elements",
    "dominant_colors": "dominant_color",
}

_MAX_REJECTION_ATTEMPTS = 64


@dataclass(frozen=True)
class PoolEntry:
    category: str
    text: str
    source_round: int


@dataclass
class CreativeMaterialsPool:
    """Accumulated freeform texts from liked images, grouped by category."""

    entries: list[PoolEntry] = field(default_factory=list)

    def add(self, category: str, text: str, source_round: int) -> None:
        if category not in POOL_CATEGORIES:
            raise DomainError(f"unknown pool category {category!r}")
        if not text.strip():
            raise DomainError("pool texts must be non-empty")
        self.entries.append(PoolEntry(category, text, source_round))

    def by_category(self, category: str) -> list[PoolEntry]:
        return [e for e in self.entries if e.category == category]

    def __len__(self) -> int:
        return len(self.entries)

    def to_dict(self) -> list[dict]:
        return [
            {"category": e.category, "text": e.text, "source_round": e.source_round}
            for e in self.entries
        ]

    @classmethod
    def from_dict(cls, entries: list[dict]) -> "CreativeMaterialsPool":
        pool = cls()
        for e in entries:
            pool.entries.append(PoolEntry(e["category"], e["text"], e["source_round"]))
        return pool


@dataclass(frozen=True)
class SamplingConfig:
    """Knobs for bundle sampling.

    ``sigma_samp`` is the truncated-Gaussian spread, ``d_gate`` the minimum
    |effect size| for an ordinal feature to be pinned, ``pool_per_category``
    the per-category cap on creative picks, ``exploration_floor`` an
    optional additive odds-ratio floor, and ``roulette_exponent`` an
    optional tempering exponent on the odds ratios (1.0 = raw ratios).
    """

    sigma_samp: float = 0.03
    d_gate: float = 0.8
    pool_per_category: int = 2
    exploration_floor: float = 0.0
    roulette_exponent: float = 1.0

    def validate(self) -> None:
        if self.sigma_samp <= 0:
            raise ConfigError("sigma_samp must be > 0")
        if self.d_gate < 0:
            raise ConfigError("d_gate must be >= 0")
        if self.pool_per_category < 0:
            raise ConfigError("pool_per_category must be >= 0")
        if self.exploration_floor < 0:
            raise ConfigError("exploration_floor must be >= 0")
        if self.roulette_exponent <= 0:
            raise ConfigError("roulette_exponent must be > 0")

    def to_dict(self) -> dict:
        return {
            "sigma_samp": self.sigma_samp,
            "d_gate": self.d_gate,
            "pool_per_category": self.pool_per_category,
            "exploration_floor": self.exploration_floor,
            "roulette_exponent": self.roulette_exponent,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SamplingConfig":
        cfg = cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class SampledFeatureBundle:
    """One candidate's concrete feature choices plus creative references."""

    discrete_choices: dict[str, str]
    ordinal_choices: dict[str, str]
    creative_refs: list[str]
    rng_seed: int

    def to_dict(self) -> dict:
        return {
            "discrete_choices": dict(self.discrete_choices),
            "ordinal_choices": dict(self.ordinal_choices),
            "creative_refs": list(self.creative_refs),
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SampledFeatureBundle":
        return cls(
            discrete_choices=dict(d["discrete_choices"]),
            ordinal_choices=dict(d["ordinal_choices"]),
            creative_refs=list(d["creative_refs"]),
            rng_seed=d["rng_seed"],
        )


def roulette_sample(or_by_value: Mapping[str, float], rng: np.random.Generator) -> str:
    """Draw a value id with probability proportional to its odds ratio."""
    if not or_by_value:
        raise EmptyDomainError("roulette over an empty value set")
    values = list(or_by_value.keys())
    weights = np.array([or_by_value[v] for v in values], dtype=float)
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise DomainError("odds ratios must be finite and > 0")
    probs = weights / weights.sum()
    idx = rng.choice(len(values), p=probs)
    return values[int(idx)]


def truncated_gaussian(
    mu: float, sigma: float, rng: np.random.Generator
) -> float:
    """Sample Normal(mu, sigma^2) truncated to [0, 1].

    Rejection sampling with a bounded attempt count; after
    ``_MAX_REJECTION_ATTEMPTS`` misses the last draw is clamped into range.
    Bias from the clamp fallback is negligible at the spreads used here.
    """
    x = mu
    for _ in range(_MAX_REJECTION_ATTEMPTS):
        x = rng.normal(mu, sigma)
        if 0.0 <= x <= 1.0:
            return float(x)
    return float(min(max(x, 0.0), 1.0))


def gaussian_sample_ordinal(
    spec: FeatureSpec,
    mu_liked: float,
    cfg: SamplingConfig,
    rng: np.random.Generator,
) -> str:
    """Sample an ordinal level near the liked-group mean."""
    if spec.kind is not FeatureKind.ORDINAL:
        raise KindMismatchError(f"feature {spec.id!r} is {spec.kind.value}, not ordinal")
    if not 0.0 <= mu_liked <= 1.0:
        raise DomainError(f"mu_liked={mu_liked} outside [0, 1]")
    x = truncated_gaussian(mu_liked, cfg.sigma_samp, rng)
    return nearest_level(spec, x)


def pool_sample(
    pool: CreativeMaterialsPool, cfg: SamplingConfig, rng: np.random.Generator
) -> list[str]:
    """Uniformly pick up to ``pool_per_category`` texts per category, without replacement."""
    picked: list[str] = []
    for category in POOL_CATEGORIES:
        entries = pool.by_category(category)
        if not entries or cfg.pool_per_category == 0:
            continue
        k = min(cfg.pool_per_category, len(entries))
        idx = rng.choice(len(entries), size=k, replace=False)
        picked.extend(entries[i].text for i in sorted(int(i) for i in idx))
    return picked


def select_feature_bundle(
    state: "PreferenceState",
    repo: FeatureRepository,
    cfg: SamplingConfig,
    seed: int,
) -> SampledFeatureBundle:
    """Sample one complete feature bundle from the current preference state.

    Every discrete feature gets a roulette draw over its cumulative odds
    ratios (neutral 1.0 for never-observed values, plus the exploration
    floor). Ordinal features are included only when their cumulative effect
    size passes the emphasis gate; the rest are left unconstrained. The
    integer ``seed`` is recorded on the bundle for reproducibility.
    """
    rng = np.random.default_rng(seed)
    discrete_choices: dict[str, str] = {}
    for spec in repo.discrete_features():
        ors = {
            v: (state.cumulative_odds_ratio(spec.id, v) + cfg.exploration_floor)
            ** cfg.roulette_exponent
            for v in spec.values
        }
        discrete_choices[spec.id] = roulette_sample(ors, rng)

    ordinal_choices: dict[str, str] = {}
    for spec in repo.ordinal_features():
        try:
            d, mu_liked, _ = state.cumulative_effect_size(spec.id)
        except InsufficientDataError:
            continue
        if abs(d) >= cfg.d_gate:
            ordinal_choices[spec.id] = gaussian_sample_ordinal(spec, mu_liked, cfg, rng)

    creative_refs = pool_sample(state.pool, cfg, rng)
    return SampledFeatureBundle(
        discrete_choices=discrete_choices,
        ordinal_choices=ordinal_choices,
        creative_refs=creative_refs,
        rng_seed=seed,
    )
