"""Preference statistics: per-round contingency analysis and the cumulative state.

Discrete features are scored per value with odds ratios over a 2x2
liked/disliked x present/absent table, weighted across rounds by the binary
entropy of the value's occurrence rate (non-discriminative rounds get zero
weight). Ordinal features are scored with an effect size (standardized mean
difference between liked and disliked groups) over round-weighted moments,
where a round's weight is its pooled group variance normalized by 0.25 —
the maximum variance attainable on [0, 1].

The state holds only weighted sufficient statistics per (feature, value)
and per feature group, so its size is independent of the number of rounds
ingested. All query operations are pure; only :meth:`PreferenceState.ingest_round`
mutates, and callers must serialize ingestion per session.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum

from .errors import (
    DomainError,
    EmptyGroupError,
    InsufficientDataError,
    KindMismatchError,
    ValidationError,
)
from .profiles import ImageFeatureProfile
from .repository import (
    FeatureKind,
    FeatureRepository,
    nearest_level,
    normalize_ordinal_level,
)
from .sampling import POOL_SOURCES, CreativeMaterialsPool

D_MAX = 10.0
SIGMA_EPS = 1e-6
WEIGHT_EPS = 1e-9
MAX_UNIT_VARIANCE = 0.25
EMPHASIS_GATE = 0.8

STATE_SCHEMA_VERSION = 1


class Annotation(str, Enum):
    LIKED = "liked"
    DISLIKED = "disliked"
    UNLABELED = "unlabeled"


@dataclass(frozen=True)
class FeedbackRound:
    """One interaction round: candidate profiles with their annotations."""

    round_index: int
    entries: list[tuple[ImageFeatureProfile, Annotation]]

    def __post_init__(self):
        if self.round_index < 1:
            raise ValidationError("round_index must be a positive integer")

    def annotated(self) -> list[tuple[ImageFeatureProfile, Annotation]]:
        return [(p, a) for p, a in self.entries if a is not Annotation.UNLABELED]

    def group(self, annotation: Annotation) -> list[ImageFeatureProfile]:
        return [p for p, a in self.entries if a is annotation]

    def is_degenerate(self) -> bool:
        """True when the round lacks a liked or a disliked entry."""
        anns = {a for _, a in self.entries}
        return not (Annotation.LIKED in anns and Annotation.DISLIKED in anns)


@dataclass(frozen=True)
class ContingencyCells:
    """2x2 counts for one (feature, value) in one round."""

    liked_present: int
    disliked_present: int
    liked_absent: int
    disliked_absent: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (
            self.liked_present,
            self.disliked_present,
            self.liked_absent,
            self.disliked_absent,
        )

    @property
    def total(self) -> int:
        return sum(self.as_tuple())


def round_contingency(
    feedback_round: FeedbackRound,
    repo: FeatureRepository,
    feature_id: str,
    value_id: str,
) -> ContingencyCells:
    """Count annotated entries by (annotation, value presence).

    Unlabeled entries are excluded. Works for discrete and ordinal
    features (presence means the profile's value equals ``value_id``);
    freeform features have no presence semantics.
    """
    spec = repo.get(feature_id)
    if spec.kind is FeatureKind.FREEFORM:
        raise KindMismatchError(f"feature {feature_id!r} is freeform")
    spec.value_index(value_id)

    lp = dp = la = da = 0
    for profile, annotation in feedback_round.annotated():
        present = profile.value_of(feature_id) == value_id
        if annotation is Annotation.LIKED:
            lp, la = lp + present, la + (not present)
        else:
            dp, da = dp + present, da + (not present)
    return ContingencyCells(lp, dp, la, da)


def round_odds_ratio(cells: ContingencyCells) -> float:
    """Odds ratio of a 2x2 table, with a +0.5 continuity correction
    applied to every cell iff any cell is zero."""
    a, b, c, d = cells.as_tuple()
    h = 0.5 if 0 in (a, b, c, d) else 0.0
    return ((a + h) * (d + h)) / ((b + h) * (c + h))


def entropy_weight(e: float) -> float:
    """Binary entropy of an occurrence rate, in bits.

    Zero at e=0 and e=1 (non-discriminative rounds), maximal (1.0) at e=0.5.
    """
    if not 0.0 <= e <= 1.0:
        raise DomainError(f"occurrence rate {e} outside [0, 1]")
    if e == 0.0 or e == 1.0:
        return 0.0
    return -e * math.log2(e) - (1.0 - e) * math.log2(1.0 - e)


def _population_variance(values: list[float]) -> tuple[float, float]:
    """(mean, population variance) of a non-empty list."""
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, var


def _standardized_difference(
    mu_liked: float, mu_disliked: float, var_liked: float, var_disliked: float
) -> float:
    """Effect size with the shared epsilon-floor / clamp rules."""
    sigma_pooled = math.sqrt((var_liked + var_disliked) / 2.0)
    delta = mu_liked - mu_disliked
    if sigma_pooled < SIGMA_EPS:
        if abs(delta) < SIGMA_EPS:
            return 0.0
        return math.copysign(D_MAX, delta)
    return delta / sigma_pooled


def cohens_d_round(liked: list[float], disliked: list[float]) -> float:
    """Single-round effect size between liked and disliked value lists.

    Uses population variances and the pooled standard deviation
    sqrt((var_l + var_d) / 2). Zero-variance rounds degrade to 0 (no mean
    difference) or a clamp at +/-10.
    """
    if not liked or not disliked:
        raise EmptyGroupError("both groups must be non-empty")
    mu_l, var_l = _population_variance(liked)
    mu_d, var_d = _population_variance(disliked)
    return _standardized_difference(mu_l, mu_d, var_l, var_d)


@dataclass
class _DiscreteValueStats:
    sum_wa: float = 0.0
    sum_wb: float = 0.0
    sum_wc: float = 0.0
    sum_wd: float = 0.0
    rounds_seen: int = 0

    def as_list(self) -> list:
        return [self.sum_wa, self.sum_wb, self.sum_wc, self.sum_wd, self.rounds_seen]


@dataclass
class _GroupSums:
    sum_w: float = 0.0
    sum_wx: float = 0.0
    sum_wx2: float = 0.0

    def add(self, weight: float, values: list[float]) -> None:
        self.sum_w += weight * len(values)
        self.sum_wx += weight * sum(values)
        self.sum_wx2 += weight * sum(v * v for v in values)

    def moments(self) -> tuple[float, float]:
        mu = self.sum_wx / self.sum_w
        var = max(self.sum_wx2 / self.sum_w - mu * mu, 0.0)
        return mu, var

    def as_list(self) -> list:
        return [self.sum_w, self.sum_wx, self.sum_wx2]


class PreferenceState:
    """Incrementally maintained preference statistics plus the creative pool.

    ``ordinal_dual_route`` additionally runs ordinal features through the
    discrete odds-ratio path (off by default; effect-size analysis is their
    designated treatment). ``round_weight_all_samples`` switches the ordinal
    round weight to use the variance of all annotated samples pooled into
    one group instead of the mean of the two group variances.
    """

    def __init__(
        self,
        repo: FeatureRepository,
        ordinal_dual_route: bool = False,
        round_weight_all_samples: bool = False,
    ):
        self.repo = repo
        self.ordinal_dual_route = ordinal_dual_route
        self.round_weight_all_samples = round_weight_all_samples
        self.rounds_ingested = 0
        self.pool = CreativeMaterialsPool()

        self._discrete: dict[str, dict[str, _DiscreteValueStats]] = {}
        for spec in repo.discrete_features():
            self._discrete[spec.id] = {v: _DiscreteValueStats() for v in spec.values}
        if ordinal_dual_route:
            for spec in repo.ordinal_features():
                self._discrete[spec.id] = {v: _DiscreteValueStats() for v in spec.values}

        self._ordinal: dict[str, dict[str, _GroupSums]] = {
            spec.id: {"liked": _GroupSums(), "disliked": _GroupSums()}
            for spec in repo.ordinal_features()
        }

    # -- ingestion --------------------------------------------------------

    def ingest_round(self, feedback_round: FeedbackRound) -> "PreferenceState":
        """Fold one round into the cumulative statistics.

        Degenerate rounds (no liked or no disliked entry) update only the
        creative pool. Ingestion order does not matter: the accumulators
        are plain weighted sums.
        """
        for profile, _ in feedback_round.entries:
            profile.validate(self.repo)

        self._ingest_pool(feedback_round)
        if feedback_round.is_degenerate():
            return self

        liked = feedback_round.group(Annotation.LIKED)
        disliked = feedback_round.group(Annotation.DISLIKED)
        for feature_id in self._discrete:
            self._ingest_discrete(feature_id, liked, disliked)
        for spec in self.repo.ordinal_features():
            self._ingest_ordinal(spec.id, liked, disliked)

        self.rounds_ingested += 1
        return self

    def _ingest_discrete(
        self,
        feature_id: str,
        liked: list[ImageFeatureProfile],
        disliked: list[ImageFeatureProfile],
    ) -> None:
        liked_counts = Counter(p.value_of(feature_id) for p in liked)
        disliked_counts = Counter(p.value_of(feature_id) for p in disliked)
        n_liked, n_disliked = len(liked), len(disliked)
        n = n_liked + n_disliked
        for value_id, stats in self._discrete[feature_id].items():
            a = liked_counts.get(value_id, 0)
            b = disliked_counts.get(value_id, 0)
            e = (a + b) / n
            if e == 0.0 or e == 1.0:
                continue
            w = entropy_weight(e)
            stats.sum_wa += w * a
            stats.sum_wb += w * b
            stats.sum_wc += w * (n_liked - a)
            stats.sum_wd += w * (n_disliked - b)
            stats.rounds_seen += 1

    def _ingest_ordinal(
        self,
        feature_id: str,
        liked: list[ImageFeatureProfile],
        disliked: list[ImageFeatureProfile],
    ) -> None:
        spec = self.repo.get(feature_id)
        liked_vals = [normalize_ordinal_level(spec, p.value_of(feature_id)) for p in liked]
        disliked_vals = [
            normalize_ordinal_level(spec, p.value_of(feature_id)) for p in disliked
        ]
        if self.round_weight_all_samples:
            _, pooled_var = _population_variance(liked_vals + disliked_vals)
        else:
            _, var_l = _population_variance(liked_vals)
            _, var_d = _population_variance(disliked_vals)
            pooled_var = (var_l + var_d) / 2.0
        weight = min(pooled_var / MAX_UNIT_VARIANCE, 1.0)
        if weight <= 0.0:
            return
        groups = self._ordinal[feature_id]
        groups["liked"].add(weight, liked_vals)
        groups["disliked"].add(weight, disliked_vals)

    def _ingest_pool(self, feedback_round: FeedbackRound) -> None:
        for profile in feedback_round.group(Annotation.LIKED):
            for feature_id, category in POOL_SOURCES.items():
                for text in profile.freeform_values.get(feature_id, []):
                    if text.strip():
                        self.pool.add(category, text, feedback_round.round_index)

    # -- cumulative queries -------------------------------------------------

    def cumulative_odds_ratio(self, feature_id: str, value_id: str) -> float:
        """Cumulative odds ratio over the weighted sums.

        Never-observed values return the neutral prior 1.0; otherwise the
        +0.5 correction applies iff any weighted sum is (numerically) zero.
        """
        spec = self.repo.get(feature_id)
        if feature_id not in self._discrete:
            raise KindMismatchError(
                f"feature {feature_id!r} is {spec.kind.value}; odds ratios track "
                "discrete features (enable ordinal_dual_route for ordinal)"
            )
        spec.value_index(value_id)
        s = self._discrete[feature_id][value_id]
        sums = (s.sum_wa, s.sum_wb, s.sum_wc, s.sum_wd)
        if all(x < WEIGHT_EPS for x in sums):
            return 1.0
        h = 0.5 if any(x < WEIGHT_EPS for x in sums) else 0.0
        return ((s.sum_wa + h) * (s.sum_wd + h)) / ((s.sum_wb + h) * (s.sum_wc + h))

    def cumulative_effect_size(self, feature_id: str) -> tuple[float, float, float]:
        """(d, mu_liked, mu_disliked) for an ordinal feature.

        Raises InsufficientDataError until both groups carry positive weight.
        """
        spec = self.repo.get(feature_id)
        if spec.kind is not FeatureKind.ORDINAL:
            raise KindMismatchError(f"feature {feature_id!r} is {spec.kind.value}, not ordinal")
        groups = self._ordinal[feature_id]
        if groups["liked"].sum_w <= 0.0 or groups["disliked"].sum_w <= 0.0:
            raise InsufficientDataError(f"no weighted data for feature {feature_id!r}")
        mu_l, var_l = groups["liked"].moments()
        mu_d, var_d = groups["disliked"].moments()
        d = _standardized_difference(mu_l, mu_d, var_l, var_d)
        return d, mu_l, mu_d

    def accumulator_footprint(self) -> tuple[int, int]:
        """(number of accumulator entries, total accumulator float slots).

        Bounded by the repository shape; independent of rounds ingested.
        """
        n_discrete = sum(len(values) for values in self._discrete.values())
        n_ordinal = len(self._ordinal)
        return n_discrete + n_ordinal, n_discrete * 4 + n_ordinal * 6

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": STATE_SCHEMA_VERSION,
            "repo_version": self.repo.version,
            "flags": {
                "ordinal_dual_route": self.ordinal_dual_route,
                "round_weight_all_samples": self.round_weight_all_samples,
            },
            "rounds_ingested": self.rounds_ingested,
            "discrete": {
                fid: {v: s.as_list() for v, s in values.items()}
                for fid, values in self._discrete.items()
            },
            "ordinal": {
                fid: {g: s.as_list() for g, s in groups.items()}
                for fid, groups in self._ordinal.items()
            },
            "pool": self.pool.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict, repo: FeatureRepository) -> "PreferenceState":
        if d.get("schema") != STATE_SCHEMA_VERSION:
            raise ValidationError(f"unsupported state schema {d.get('schema')!r}")
        flags = d.get("flags", {})
        state = cls(
            repo,
            ordinal_dual_route=flags.get("ordinal_dual_route", False),
            round_weight_all_samples=flags.get("round_weight_all_samples", False),
        )
        state.rounds_ingested = d["rounds_ingested"]
        for fid, values in d["discrete"].items():
            for v, (wa, wb, wc, wd, seen) in values.items():
                state._discrete[fid][v] = _DiscreteValueStats(wa, wb, wc, wd, seen)
        for fid, groups in d["ordinal"].items():
            for g, (w, wx, wx2) in groups.items():
                state._ordinal[fid][g] = _GroupSums(w, wx, wx2)
        state.pool = CreativeMaterialsPool.from_dict(d["pool"])
        return state


def preference_snapshot(state: PreferenceState, repo: FeatureRepository) -> dict:
    """Pure read of the current preferences, shaped for dashboards.

    Discrete features list every value with its cumulative odds ratio,
    sorted descending (declaration order on ties). Ordinal features report
    (d, mu_liked, mu_disliked) and an emphasis flag, or an insufficient-data
    marker before any weighted rounds arrive.
    """
    discrete: dict[str, list[dict]] = {}
    for spec in repo.discrete_features():
        ranked = [
            {"value": v, "odds_ratio": state.cumulative_odds_ratio(spec.id, v)}
            for v in spec.values
        ]
        ranked.sort(key=lambda item: -item["odds_ratio"])
        discrete[spec.id] = ranked

    ordinal: dict[str, dict] = {}
    for spec in repo.ordinal_features():
        try:
            d, mu_l, mu_d = state.cumulative_effect_size(spec.id)
        except InsufficientDataError:
            ordinal[spec.id] = {"insufficient_data": True}
            continue
        ordinal[spec.id] = {
            "d": d,
            "mu_liked": mu_l,
            "mu_disliked": mu_d,
            "emphasis": abs(d) >= EMPHASIS_GATE,
            "preferred_level": nearest_level(spec, mu_l),
        }

    return {
        "rounds_ingested": state.rounds_ingested,
        "pool_size": len(state.pool),
        "discrete": discrete,
        "ordinal": ordinal,
    }
