"""Session state machine, batch generation, persistence, replay."""

import json

import pytest

from prefloop.config import SessionConfig
from prefloop.errors import (
    ConfigError,
    RoundLimitReachedError,
    SchemaVersionMismatchError,
    SessionNotFoundError,
    UnknownImageError,
    WrongPhaseError,
)
from prefloop.persistence import DirectoryStore
from prefloop.session import Phase, SessionService, replay_state


def config(**overrides):
    base = dict(initial_prompt="a lighthouse on a cliff", seed=42)
    base.update(overrides)
    return SessionConfig(**base)


def annotate(record, liked=1, disliked=1):
    ids = [c.image.id for c in record.current_candidates]
    ann = {ids[i]: "liked" for i in range(liked)}
    ann.update({ids[liked + i]: "disliked" for i in range(disliked)})
    return ann


class TestCreateSession:
    def test_candidate_count_and_distinct_prompts(self, repo):
        record = SessionService(repo).create_session(config())
        assert record.phase is Phase.AWAITING_FEEDBACK
        assert len(record.current_candidates) == 4
        assert len({c.prompt.id for c in record.current_candidates}) == 4

    def test_end_to_end_determinism(self, repo):
        a = SessionService(repo).create_session(config())
        b = SessionService(repo).create_session(config())
        assert [c.profile for c in a.current_candidates] == [
            c.profile for c in b.current_candidates
        ]

    def test_single_candidate_config_rejected(self, repo):
        with pytest.raises(ConfigError):
            SessionService(repo).create_session(config(candidates_per_round=1))

    def test_empty_prompt_rejected(self, repo):
        with pytest.raises(ConfigError):
            SessionService(repo).create_session(config(initial_prompt="  "))

    def test_initial_prompt_survives_in_positive_prompts(self, repo):
        record = SessionService(repo).create_session(config())
        for c in record.current_candidates:
            assert c.prompt.positive_prompt.startswith("a lighthouse on a cliff")


class TestRegenerate:
    def test_statistics_neutral(self, repo):
        service = SessionService(repo)
        record = service.create_session(config())
        before = json.dumps(record.state.to_dict())
        old_ids = [c.image.id for c in record.current_candidates]
        record = service.regenerate_candidates(record.session_id)
        assert json.dumps(record.state.to_dict()) == before
        assert [c.image.id for c in record.current_candidates] != old_ids

    def test_successive_regenerations_use_fresh_streams(self, repo):
        service = SessionService(repo)
        record = service.create_session(config())
        first = service.regenerate_candidates(record.session_id)
        seeds_first = [c.prompt.bundle.rng_seed for c in first.current_candidates]
        second = service.regenerate_candidates(record.session_id)
        seeds_second = [c.prompt.bundle.rng_seed for c in second.current_candidates]
        assert set(seeds_first).isdisjoint(seeds_second)

    def test_wrong_phase(self, repo):
        service = SessionService(repo)
        record = service.create_session(config())
        service.submit_feedback(record.session_id, annotate(record))
        with pytest.raises(WrongPhaseError):
            service.regenerate_candidates(record.session_id)


class TestSubmitFeedback:
    def test_happy_path_updates_state(self, repo):
        service = SessionService(repo)
        record = service.create_session(config())
        record = service.submit_feedback(record.session_id, annotate(record, 2, 2))
        assert record.phase is Phase.GENERATING
        assert record.state.rounds_ingested == 1
        assert record.rounds[0].round_index == 1

    def test_all_unlabeled_round_is_recorded_but_neutral(self, repo):
        service = SessionService(repo)
        record = service.create_session(config())
        record = service.submit_feedback(record.session_id, {})
        assert len(record.rounds) == 1
        assert record.state.rounds_ingested == 0

    def test_unknown_image_rejected(self, repo):
        service = SessionService(repo)
        record = service.create_session(config())
        with pytest.raises(UnknownImageError):
            service.submit_feedback(record.session_id, {"nope": "liked"})

    def test_wrong_phase(self, repo):
        service = SessionService(repo)
        record = service.create_session(config())
        service.submit_feedback(record.session_id, annotate(record))
        with pytest.raises(WrongPhaseError):
            service.submit_feedback(record.session_id, {})


class TestAdvanceRound:
    def test_generates_new_batch_from_updated_state(self, repo):
        service = SessionService(repo)
        record = service.create_session(config())
        record = service.submit_feedback(record.session_id, annotate(record, 2, 2))
        record = service.advance_round(record.session_id)
        assert record.phase is Phase.AWAITING_FEEDBACK
        assert len(record.current_candidates) == 4

    def test_round_limit_closes_session(self, repo):
        service = SessionService(repo)
        record = service.create_session(config(max_rounds=1))
        service.submit_feedback(record.session_id, annotate(record))
        with pytest.raises(RoundLimitReachedError):
            service.advance_round(record.session_id)
        assert service.get(record.session_id).phase is Phase.CLOSED

    def test_wrong_phase(self, repo):
        service = SessionService(repo)
        record = service.create_session(config())
        with pytest.raises(WrongPhaseError):
            service.advance_round(record.session_id)

    def test_deterministic_next_round(self, repo):
        profiles = []
        for _ in range(2):
            service = SessionService(repo)
            record = service.create_session(config())
            service.submit_feedback(record.session_id, annotate(record, 2, 2))
            record = service.advance_round(record.session_id)
            profiles.append([c.profile for c in record.current_candidates])
        assert profiles[0] == profiles[1]

    def test_favored_value_appears_more_often(self, repo):
        # craft a state with a dominant odds ratio, then sample a big batch
        service = SessionService(repo)
        record = service.create_session(config(candidates_per_round=40, seed=11))
        doc = record.state.to_dict()
        doc["discrete"]["visual_flow"]["circular"] = [9.9, 0.1, 1.0, 1.0, 1]  # OR 99
        from prefloop.engine import PreferenceState

        record.state = PreferenceState.from_dict(doc, repo)
        record.phase = Phase.GENERATING
        record = service.advance_round(record.session_id)
        chosen = [
            c.prompt.bundle.discrete_choices["visual_flow"]
            for c in record.current_candidates
        ]
        # expected frequency 99/101 by fitness-proportionate sampling
        assert chosen.count("circular") >= 30


class TestPersistence:
    def test_round_trip_structural_equality(self, repo, tmp_path):
        store = DirectoryStore(tmp_path)
        service = SessionService(repo, store=store)
        record = service.create_session(config())
        service.submit_feedback(record.session_id, annotate(record, 2, 1))

        fresh = SessionService(repo, store=store)
        loaded = fresh.load_session(record.session_id)
        assert loaded.to_dict() == service.get(record.session_id).to_dict()

    def test_load_unknown_id(self, repo, tmp_path):
        service = SessionService(repo, store=DirectoryStore(tmp_path))
        with pytest.raises(SessionNotFoundError):
            service.load_session("missing0000")

    def test_future_schema_version_rejected(self, repo, tmp_path):
        store = DirectoryStore(tmp_path)
        service = SessionService(repo, store=store)
        record = service.create_session(config())
        doc = store.load(record.session_id)
        doc["schema"] = 99
        store.save(record.session_id, doc)
        fresh = SessionService(repo, store=store)
        with pytest.raises(SchemaVersionMismatchError):
            fresh.load_session(record.session_id)

    def test_resume_loop_after_reload(self, repo, tmp_path):
        store = DirectoryStore(tmp_path)
        service = SessionService(repo, store=store)
        record = service.create_session(config())
        service.submit_feedback(record.session_id, annotate(record, 2, 2))

        fresh = SessionService(repo, store=store)
        record = fresh.advance_round(record.session_id)
        assert record.phase is Phase.AWAITING_FEEDBACK

    def test_replay_reproduces_state_exactly(self, repo, tmp_path):
        store = DirectoryStore(tmp_path)
        service = SessionService(repo, store=store)
        record = service.create_session(config())
        for _ in range(3):
            record = service.get(record.session_id)
            service.submit_feedback(record.session_id, annotate(record, 2, 2))
            record = service.advance_round(record.session_id)
        loaded = SessionService(repo, store=store).load_session(record.session_id)
        replayed = replay_state(loaded, repo)
        assert replayed.to_dict() == loaded.state.to_dict()


class TestCloseSession:
    def test_close_clears_candidates(self, repo):
        service = SessionService(repo)
        record = service.create_session(config())
        record = service.close_session(record.session_id)
        assert record.phase is Phase.CLOSED
        assert record.current_candidates == []
