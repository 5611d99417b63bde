"""Closed-loop verification: simulated users over mock backends.

A simulated user holds a hidden target profile and annotates candidates by
match fraction. Experiments run whole sessions against the mock backends
and score how well the inferred preferences recover the targets. The
module also hosts the from-scratch recomputation of the cumulative
statistics that serves as the oracle for the incremental engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import SessionConfig
from .engine import Annotation, FeedbackRound, PreferenceState
from .errors import ConfigError, InsufficientDataError, ValidationError
from .profiles import ImageFeatureProfile
from .repository import FeatureKind, FeatureRepository, normalize_ordinal_level
from .session import SessionService, derive_seed


@dataclass(frozen=True)
class TargetProfile:
    """Hidden ground-truth preferences of a simulated user."""

    discrete_targets: dict[str, str] = field(default_factory=dict)
    ordinal_targets: dict[str, str] = field(default_factory=dict)
    like_threshold: float = 0.6
    noise_rate: float = 0.0

    def validate(self, repo: FeatureRepository) -> None:
        for targets, kind in (
            (self.discrete_targets, FeatureKind.DISCRETE),
            (self.ordinal_targets, FeatureKind.ORDINAL),
        ):
            for fid, value in targets.items():
                spec = repo.get(fid)
                if spec.kind is not kind:
                    raise ValidationError(
                        f"target {fid!r} is {spec.kind.value}, expected {kind.value}"
                    )
                spec.value_index(value)
        if not 0.0 < self.like_threshold < 1.0:
            raise ValidationError("like_threshold must lie in (0, 1)")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValidationError("noise_rate must lie in [0, 1]")

    @property
    def target_count(self) -> int:
        return len(self.discrete_targets) + len(self.ordinal_targets)

    def to_dict(self) -> dict:
        return {
            "discrete_targets": dict(self.discrete_targets),
            "ordinal_targets": dict(self.ordinal_targets),
            "like_threshold": self.like_threshold,
            "noise_rate": self.noise_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TargetProfile":
        return cls(
            discrete_targets=dict(d.get("discrete_targets", {})),
            ordinal_targets=dict(d.get("ordinal_targets", {})),
            like_threshold=d.get("like_threshold", 0.6),
            noise_rate=d.get("noise_rate", 0.0),
        )


@dataclass(frozen=True)
class OrdinalOutcome:
    sign_correct: bool
    emphasis_passed: bool
    d: float | None

    def to_dict(self) -> dict:
        return {
            "sign_correct": self.sign_correct,
            "emphasis_passed": self.emphasis_passed,
            "d": self.d,
        }


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-trial evaluation of inferred preferences against the targets."""

    trial: int
    rounds_used: int
    discrete: dict[str, bool]
    ordinal: dict[str, OrdinalOutcome]
    aggregate_accuracy: float

    def to_dict(self) -> dict:
        return {
            "trial": self.trial,
            "rounds_used": self.rounds_used,
            "discrete": dict(self.discrete),
            "ordinal": {fid: o.to_dict() for fid, o in self.ordinal.items()},
            "aggregate_accuracy": self.aggregate_accuracy,
        }


def candidate_utility(profile: TargetProfile, candidate: ImageFeatureProfile) -> float:
    """Fraction of targeted features the candidate matches exactly."""
    if profile.target_count == 0:
        return 0.0
    matches = sum(
        1
        for fid, value in profile.discrete_targets.items()
        if candidate.discrete_values.get(fid) == value
    )
    matches += sum(
        1
        for fid, value in profile.ordinal_targets.items()
        if candidate.ordinal_values.get(fid) == value
    )
    return matches / profile.target_count


def simulated_feedback(
    profile: TargetProfile,
    candidates: list[ImageFeatureProfile],
    rng: np.random.Generator,
) -> dict[str, Annotation]:
    """Annotate candidates: like when utility clears the threshold, then
    flip each annotation independently with probability ``noise_rate``."""
    annotations: dict[str, Annotation] = {}
    for candidate in candidates:
        liked = candidate_utility(profile, candidate) >= profile.like_threshold
        if rng.random() < profile.noise_rate:
            liked = not liked
        annotations[candidate.image] = Annotation.LIKED if liked else Annotation.DISLIKED
    return annotations


def evaluate_state(
    state: PreferenceState,
    profile: TargetProfile,
    repo: FeatureRepository,
    trial: int,
    rounds_used: int,
) -> ConvergenceReport:
    discrete: dict[str, bool] = {}
    for fid, target in profile.discrete_targets.items():
        spec = repo.get(fid)
        best = max(spec.values, key=lambda v: state.cumulative_odds_ratio(fid, v))
        discrete[fid] = best == target

    ordinal: dict[str, OrdinalOutcome] = {}
    for fid, target in profile.ordinal_targets.items():
        spec = repo.get(fid)
        target_level = normalize_ordinal_level(spec, target)
        try:
            d, _, _ = state.cumulative_effect_size(fid)
        except InsufficientDataError:
            ordinal[fid] = OrdinalOutcome(False, False, None)
            continue
        if target_level > 0.5:
            sign_correct = d > 0
        elif target_level < 0.5:
            sign_correct = d < 0
        else:
            sign_correct = True
        ordinal[fid] = OrdinalOutcome(sign_correct, abs(d) >= 0.8, d)

    outcomes = list(discrete.values()) + [
        o.sign_correct and o.emphasis_passed for o in ordinal.values()
    ]
    accuracy = sum(outcomes) / len(outcomes) if outcomes else 1.0
    return ConvergenceReport(
        trial=trial,
        rounds_used=rounds_used,
        discrete=discrete,
        ordinal=ordinal,
        aggregate_accuracy=accuracy,
    )


def run_experiment(
    repo: FeatureRepository,
    profile: TargetProfile,
    session_cfg: SessionConfig,
    rounds: int,
    trials: int,
) -> list[ConvergenceReport]:
    """Run independent simulated sessions and score each final state.

    Per-trial seeds derive from the config seed, so a fixed config yields
    byte-identical reports. The round cap is lifted to ``rounds`` when the
    config's cap would cut the experiment short.
    """
    if rounds < 1:
        raise ConfigError("rounds must be >= 1")
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if session_cfg.backend.kind != "mock":
        raise ConfigError("experiments run on the mock backend only")
    profile.validate(repo)
    if session_cfg.max_rounds <= rounds:
        session_cfg = replace(session_cfg, max_rounds=rounds + 1)

    reports: list[ConvergenceReport] = []
    for trial in range(trials):
        trial_seed = derive_seed(session_cfg.seed, trial)
        cfg = replace(session_cfg, seed=trial_seed)
        service = SessionService(repo)
        record = service.create_session(cfg)
        feedback_rng = np.random.default_rng([trial_seed, 7])
        for _ in range(rounds):
            annotations = simulated_feedback(
                profile, [c.profile for c in record.current_candidates], feedback_rng
            )
            service.submit_feedback(record.session_id, annotations)
            record = service.advance_round(record.session_id)
        reports.append(
            evaluate_state(record.state, profile, repo, trial, rounds_used=rounds)
        )
    return reports


def summarize_reports(reports: list[ConvergenceReport]) -> dict:
    """Cross-trial summary: mean discrete top-1 accuracy, per-trial ordinal
    pass rate (sign and emphasis both right), mean aggregate accuracy."""
    n = len(reports)
    discrete_scores = [
        sum(r.discrete.values()) / len(r.discrete) for r in reports if r.discrete
    ]
    ordinal_pass = [
        all(o.sign_correct and o.emphasis_passed for o in r.ordinal.values())
        for r in reports
        if r.ordinal
    ]
    return {
        "trials": n,
        "mean_discrete_top1": (
            sum(discrete_scores) / len(discrete_scores) if discrete_scores else None
        ),
        "ordinal_pass_rate": (
            sum(ordinal_pass) / len(ordinal_pass) if ordinal_pass else None
        ),
        "mean_aggregate_accuracy": (
            sum(r.aggregate_accuracy for r in reports) / n if n else None
        ),
    }


# -- from-scratch oracle ----------------------------------------------------


def _binary_entropy(e: float) -> float:
    if e <= 0.0 or e >= 1.0:
        return 0.0
    return -(e * math.log2(e)) - ((1.0 - e) * math.log2(1.0 - e))


class BruteForceStats:
    """Cumulative statistics recomputed directly from stored rounds.

    Deliberately independent of the incremental engine: it keeps per-round
    weighted tables and sample lists, sums them with ``math.fsum`` at query
    time, and computes group variances with an explicit two-pass mean /
    squared-deviation formula rather than running moments.
    """

    def __init__(
        self,
        rounds: list[FeedbackRound],
        repo: FeatureRepository,
        ordinal_dual_route: bool = False,
        round_weight_all_samples: bool = False,
    ):
        self.repo = repo
        or_kinds = [FeatureKind.DISCRETE]
        if ordinal_dual_route:
            or_kinds.append(FeatureKind.ORDINAL)
        self._or_features = [
            spec for spec in repo.all_features() if spec.kind in or_kinds
        ]
        # (feature, value) -> list of per-round [wA, wB, wC, wD]
        self._tables: dict[tuple[str, str], list[list[float]]] = {
            (spec.id, v): [] for spec in self._or_features for v in spec.values
        }
        # feature -> per-round (weight, liked values, disliked values)
        self._ordinal_rounds: dict[str, list[tuple[float, list[float], list[float]]]] = {
            spec.id: [] for spec in repo.ordinal_features()
        }
        for feedback_round in rounds:
            self._fold(feedback_round, round_weight_all_samples)

    def _fold(self, feedback_round: FeedbackRound, all_samples_weight: bool) -> None:
        liked = [p for p, a in feedback_round.entries if a is Annotation.LIKED]
        disliked = [p for p, a in feedback_round.entries if a is Annotation.DISLIKED]
        if not liked or not disliked:
            return
        n = len(liked) + len(disliked)

        for spec in self._or_features:
            liked_values = [p.value_of(spec.id) for p in liked]
            disliked_values = [p.value_of(spec.id) for p in disliked]
            for value in spec.values:
                a = sum(1 for v in liked_values if v == value)
                b = sum(1 for v in disliked_values if v == value)
                c = len(liked_values) - a
                d = len(disliked_values) - b
                w = _binary_entropy((a + b) / n)
                if w > 0.0:
                    self._tables[(spec.id, value)].append([w * a, w * b, w * c, w * d])

        for spec in self.repo.ordinal_features():
            lv = [spec.levels_normalized[spec.values.index(p.value_of(spec.id))] for p in liked]
            dv = [
                spec.levels_normalized[spec.values.index(p.value_of(spec.id))]
                for p in disliked
            ]
            if all_samples_weight:
                pooled = _two_pass_variance(lv + dv)
            else:
                pooled = (_two_pass_variance(lv) + _two_pass_variance(dv)) / 2.0
            weight = min(pooled / 0.25, 1.0)
            if weight > 0.0:
                self._ordinal_rounds[spec.id].append((weight, lv, dv))

    def cumulative_odds_ratio(self, feature_id: str, value_id: str) -> float:
        tables = self._tables[(feature_id, value_id)]
        wa = math.fsum(t[0] for t in tables)
        wb = math.fsum(t[1] for t in tables)
        wc = math.fsum(t[2] for t in tables)
        wd = math.fsum(t[3] for t in tables)
        if all(x < 1e-9 for x in (wa, wb, wc, wd)):
            return 1.0
        h = 0.5 if any(x < 1e-9 for x in (wa, wb, wc, wd)) else 0.0
        return ((wa + h) * (wd + h)) / ((wb + h) * (wc + h))

    def cumulative_effect_size(self, feature_id: str) -> tuple[float, float, float]:
        per_round = self._ordinal_rounds[feature_id]
        weights_l = [w for w, lv, _ in per_round for _ in lv]
        values_l = [v for w, lv, _ in per_round for v in lv]
        weights_d = [w for w, _, dv in per_round for _ in dv]
        values_d = [v for w, _, dv in per_round for v in dv]
        if math.fsum(weights_l) <= 0.0 or math.fsum(weights_d) <= 0.0:
            raise InsufficientDataError(f"no weighted data for feature {feature_id!r}")
        mu_l, var_l = _weighted_two_pass(weights_l, values_l)
        mu_d, var_d = _weighted_two_pass(weights_d, values_d)
        sigma_pooled = math.sqrt((var_l + var_d) / 2.0)
        delta = mu_l - mu_d
        if sigma_pooled < 1e-6:
            d = 0.0 if abs(delta) < 1e-6 else math.copysign(10.0, delta)
        else:
            d = delta / sigma_pooled
        return d, mu_l, mu_d


def _two_pass_variance(values: list[float]) -> float:
    mean = math.fsum(values) / len(values)
    return math.fsum((v - mean) ** 2 for v in values) / len(values)


def _weighted_two_pass(weights: list[float], values: list[float]) -> tuple[float, float]:
    total = math.fsum(weights)
    mean = math.fsum(w * v for w, v in zip(weights, values)) / total
    var = math.fsum(w * (v - mean) ** 2 for w, v in zip(weights, values)) / total
    return mean, var


def brute_force_state(
    rounds: list[FeedbackRound],
    repo: FeatureRepository,
    ordinal_dual_route: bool = False,
    round_weight_all_samples: bool = False,
) -> BruteForceStats:
    """Recompute every cumulative statistic directly from stored rounds."""
    return BruteForceStats(rounds, repo, ordinal_dual_route, round_weight_all_samples)
