"""Simulated users, experiments, and the brute-force oracle itself."""

import numpy as np
import pytest

from prefloop.config import BackendSettings, SessionConfig
from prefloop.engine import Annotation
from prefloop.errors import (
    ConfigError,
    InsufficientDataError,
    UnknownValueError,
    ValidationError,
)
from prefloop.sim import (
    TargetProfile,
    brute_force_state,
    candidate_utility,
    run_experiment,
    simulated_feedback,
    summarize_reports,
)

from conftest import make_profile, make_round


PROFILE = TargetProfile(
    discrete_targets={
        "visual_flow": "circular",
        "era_style": "futuristic",
        "edge_treatment": "stylized",
        "perspective": "birds_eye",
        "layout": "symmetrical",
    },
    ordinal_targets={"saturation": "vibrant", "frame": "closeup"},
    like_threshold=0.6,
)


def session_config(**overrides):
    base = dict(
        initial_prompt="a lighthouse on a cliff",
        candidates_per_round=6,
        seed=2024,
        max_rounds=30,
    )
    base.update(overrides)
    return SessionConfig(**base)


class TestSimulatedFeedback:
    def test_full_match_is_liked(self, repo):
        candidate = make_profile(
            repo, "img",
            {**PROFILE.discrete_targets, **PROFILE.ordinal_targets},
        )
        assert candidate_utility(PROFILE, candidate) == 1.0
        ann = simulated_feedback(PROFILE, [candidate], np.random.default_rng(0))
        assert ann["img"] is Annotation.LIKED

    NON_TARGETS = {
        "visual_flow": "static",
        "era_style": "classical",
        "edge_treatment": "hard",
        "perspective": "low_angle",
        "layout": "centered",
        "saturation": "desaturated",
        "frame": "wide",
    }

    def test_no_match_is_disliked(self, repo):
        candidate = make_profile(repo, "img", self.NON_TARGETS)
        assert candidate_utility(PROFILE, candidate) == 0.0
        ann = simulated_feedback(PROFILE, [candidate], np.random.default_rng(0))
        assert ann["img"] is Annotation.DISLIKED

    def test_threshold_boundary(self, repo):
        # 5 of 7 matches = 0.714 >= 0.6; 4 of 7 = 0.571 < 0.6
        targets = {**PROFILE.discrete_targets, **PROFILE.ordinal_targets}
        keys = list(targets)
        five = {**self.NON_TARGETS, **{k: targets[k] for k in keys[:5]}}
        candidate = make_profile(repo, "img", five)
        assert candidate_utility(PROFILE, candidate) == pytest.approx(5 / 7)
        ann = simulated_feedback(PROFILE, [candidate], np.random.default_rng(0))
        assert ann["img"] is Annotation.LIKED
        four = {**self.NON_TARGETS, **{k: targets[k] for k in keys[:4]}}
        ann = simulated_feedback(
            PROFILE, [make_profile(repo, "img", four)], np.random.default_rng(0)
        )
        assert ann["img"] is Annotation.DISLIKED

    def test_full_noise_inverts_every_annotation(self, repo):
        rng_a = np.random.default_rng(9)
        rng_b = np.random.default_rng(9)
        candidates = [make_profile(repo, f"img{i}") for i in range(6)]
        clean = simulated_feedback(PROFILE, candidates, rng_a)
        noisy_profile = TargetProfile.from_dict({**PROFILE.to_dict(), "noise_rate": 1.0})
        flipped = simulated_feedback(noisy_profile, candidates, rng_b)
        for image_id in clean:
            assert clean[image_id] is not flipped[image_id]

    def test_profile_validation(self, repo):
        with pytest.raises(ValidationError):
            TargetProfile(discrete_targets={"saturation": "vibrant"}).validate(repo)
        with pytest.raises(UnknownValueError):
            TargetProfile(discrete_targets={"visual_flow": "spiral"}).validate(repo)


class TestRunExperiment:
    def test_trivial_profile_reports_empty_sections(self, repo):
        reports = run_experiment(
            repo, TargetProfile(), session_config(candidates_per_round=4), rounds=1, trials=2
        )
        assert all(r.discrete == {} and r.ordinal == {} for r in reports)
        assert all(r.aggregate_accuracy == 1.0 for r in reports)

    def test_fixed_seed_reports_are_identical(self, repo):
        a = run_experiment(repo, PROFILE, session_config(), rounds=2, trials=2)
        b = run_experiment(repo, PROFILE, session_config(), rounds=2, trials=2)
        assert [r.to_dict() for r in a] == [r.to_dict() for r in b]

    def test_bad_arguments(self, repo):
        with pytest.raises(ConfigError):
            run_experiment(repo, PROFILE, session_config(), rounds=0, trials=1)
        with pytest.raises(ConfigError):
            run_experiment(repo, PROFILE, session_config(), rounds=1, trials=0)
        http_cfg = session_config(
            backend=BackendSettings(kind="http", generate_url="http://x", extract_url="http://y")
        )
        with pytest.raises(ConfigError):
            run_experiment(repo, PROFILE, http_cfg, rounds=1, trials=1)

    def test_aggregate_accuracy_in_unit_interval(self, repo):
        reports = run_experiment(repo, PROFILE, session_config(), rounds=3, trials=5)
        assert all(0.0 <= r.aggregate_accuracy <= 1.0 for r in reports)

    def test_feasible_threshold_converges(self, repo):
        # Machinery check under a cold-start-feasible threshold (>=4/7 matches):
        # discrete preferences are recovered well within 10 rounds.
        profile = TargetProfile.from_dict({**PROFILE.to_dict(), "like_threshold": 0.5})
        reports = run_experiment(repo, profile, session_config(), rounds=10, trials=40)
        summary = summarize_reports(reports)
        assert summary["mean_discrete_top1"] >= 0.8

    def test_noise_monotonicity(self, repo):
        # Aggregate accuracy must not improve as annotation noise grows.
        profile_dict = {**PROFILE.to_dict(), "like_threshold": 0.5}
        accuracies = []
        for noise in (0.0, 0.1, 0.3):
            profile = TargetProfile.from_dict({**profile_dict, "noise_rate": noise})
            reports = run_experiment(repo, profile, session_config(), rounds=6, trials=40)
            accuracies.append(summarize_reports(reports)["mean_aggregate_accuracy"])
        assert accuracies[0] >= accuracies[1] - 0.05
        assert accuracies[1] >= accuracies[2] - 0.05
        assert accuracies[0] >= accuracies[2] - 0.05


class TestBruteForceOracle:
    def test_empty_history_is_neutral(self, mini_repo):
        oracle = brute_force_state([], mini_repo)
        assert oracle.cumulative_odds_ratio("palette", "warm") == 1.0
        with pytest.raises(InsufficientDataError):
            oracle.cumulative_effect_size("saturation")

    def test_single_round_matches_single_round_formulas(self, mini_repo):
        from prefloop.engine import cohens_d_round, round_contingency, round_odds_ratio

        # all four cells positive so the round weight cancels in the ratio
        r = make_round(
            mini_repo, 1,
            liked_values=[{"palette": "warm", "saturation": "vibrant"},
                          {"palette": "warm", "saturation": "muted"},
                          {"palette": "cold", "saturation": "desaturated"}],
            disliked_values=[{"palette": "warm", "saturation": "muted"},
                             {"palette": "cold", "saturation": "desaturated"},
                             {"palette": "cold", "saturation": "desaturated"}],
        )
        oracle = brute_force_state([r], mini_repo)
        expected_or = round_odds_ratio(round_contingency(r, mini_repo, "palette", "warm"))
        assert expected_or == 4.0
        assert oracle.cumulative_odds_ratio("palette", "warm") == pytest.approx(
            expected_or, rel=1e-12
        )
        expected_d = cohens_d_round([1.0, 0.5, 0.0], [0.5, 0.0, 0.0])
        assert oracle.cumulative_effect_size("saturation")[0] == pytest.approx(
            expected_d, rel=1e-12
        )

    def test_degenerate_rounds_skipped(self, mini_repo):
        r = make_round(mini_repo, 1, liked_values=[{"palette": "warm"}], disliked_values=[])
        oracle = brute_force_state([r], mini_repo)
        assert oracle.cumulative_odds_ratio("palette", "warm") == 1.0
