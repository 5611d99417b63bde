"""Session orchestration: the feedback loop as an explicit state machine.

A session cycles AwaitingFeedback -> Generating -> AwaitingFeedback ...
until closed. Candidate batches are sampled from the current preference
state with per-candidate RNG streams derived from (session seed,
generation counter, candidate index), so regeneration and resumption are
reproducible. Only feedback submission mutates the preference statistics.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .adapters import (
    ExtractionBackend,
    GenerationBackend,
    HttpExtractionBackend,
    HttpGenerationBackend,
    HttpTextClient,
    MockExtractionBackend,
    MockGenerationBackend,
)
from .config import SessionConfig
from .engine import Annotation, FeedbackRound, PreferenceState, preference_snapshot
from .errors import (
    RoundLimitReachedError,
    SessionNotFoundError,
    UnknownImageError,
    WrongPhaseError,
)
from .persistence import RECORD_SCHEMA_VERSION, check_schema_version
from .profiles import ImageFeatureProfile, ImageRef
from .prompts import (
    PromptSpec,
    TextClient,
    assemble_prompt_template,
    assemble_prompt_vlm,
    derive_negative_terms,
)
from .repository import FeatureRepository, default_repository
from .sampling import select_feature_bundle


class Phase(str, Enum):
    AWAITING_FEEDBACK = "awaiting_feedback"
    GENERATING = "generating"
    CLOSED = "closed"


def derive_seed(*parts: int) -> int:
    """Deterministic child seed from integer parts."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


@dataclass
class Candidate:
    image: ImageRef
    profile: ImageFeatureProfile
    prompt: PromptSpec

    def to_dict(self) -> dict:
        return {
            "image": {
                "id": self.image.id,
                "content_locator": self.image.content_locator,
                "prompt_used": self.image.prompt_used,
            },
            "profile": self.profile.to_dict(),
            "prompt": self.prompt.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Candidate":
        return cls(
            image=ImageRef(**d["image"]),
            profile=ImageFeatureProfile.from_dict(d["profile"]),
            prompt=PromptSpec.from_dict(d["prompt"]),
        )


@dataclass
class SessionRecord:
    session_id: str
    config: SessionConfig
    state: PreferenceState
    phase: Phase
    generation_counter: int = 0
    rounds: list[FeedbackRound] = field(default_factory=list)
    current_candidates: list[Candidate] = field(default_factory=list)

    @property
    def round_index(self) -> int:
        return len(self.rounds)

    def to_view(self) -> dict:
        """API-facing view without raw accumulators."""
        return {
            "session_id": self.session_id,
            "phase": self.phase.value,
            "round_index": self.round_index,
            "initial_prompt": self.config.initial_prompt,
            "candidates_per_round": self.config.candidates_per_round,
            "max_rounds": self.config.max_rounds,
            "candidates": [
                {
                    "image_id": c.image.id,
                    "uri": c.image.content_locator,
                    "prompt": c.prompt.positive_prompt,
                    "negative_prompt": c.prompt.negative_prompt,
                }
                for c in self.current_candidates
            ],
            "rounds": [
                {
                    "round_index": r.round_index,
                    "liked": sum(1 for _, a in r.entries if a is Annotation.LIKED),
                    "disliked": sum(1 for _, a in r.entries if a is Annotation.DISLIKED),
                    "unlabeled": sum(1 for _, a in r.entries if a is Annotation.UNLABELED),
                }
                for r in self.rounds
            ],
        }

    def to_dict(self) -> dict:
        return {
            "schema": RECORD_SCHEMA_VERSION,
            "session_id": self.session_id,
            "phase": self.phase.value,
            "generation_counter": self.generation_counter,
            "config": self.config.to_dict(),
            "state": self.state.to_dict(),
            "rounds": [
                {
                    "round_index": r.round_index,
                    "entries": [
                        {"profile": p.to_dict(), "annotation": a.value}
                        for p, a in r.entries
                    ],
                }
                for r in self.rounds
            ],
            "current_candidates": [c.to_dict() for c in self.current_candidates],
        }

    @classmethod
    def from_dict(cls, doc: dict, repo: FeatureRepository) -> "SessionRecord":
        check_schema_version(doc)
        return cls(
            session_id=doc["session_id"],
            config=SessionConfig.from_dict(doc["config"]),
            state=PreferenceState.from_dict(doc["state"], repo),
            phase=Phase(doc["phase"]),
            generation_counter=doc["generation_counter"],
            rounds=[
                FeedbackRound(
                    round_index=r["round_index"],
                    entries=[
                        (
                            ImageFeatureProfile.from_dict(e["profile"]),
                            Annotation(e["annotation"]),
                        )
                        for e in r["entries"]
                    ],
                )
                for r in doc["rounds"]
            ],
            current_candidates=[
                Candidate.from_dict(c) for c in doc["current_candidates"]
            ],
        )


BackendsFactory = Callable[
    [SessionConfig, FeatureRepository],
    tuple[GenerationBackend, ExtractionBackend, Optional[TextClient]],
]


def default_backends(
    config: SessionConfig, repo: FeatureRepository
) -> tuple[GenerationBackend, ExtractionBackend, Optional[TextClient]]:
    b = config.backend
    if b.kind == "mock":
        gen: GenerationBackend = MockGenerationBackend(repo, p_noise=b.p_noise)
        ext: ExtractionBackend = MockExtractionBackend()
    else:
        gen = HttpGenerationBackend(
            b.generate_url, b.timeout_ms, b.auth_header, b.auth_token
        )
        ext = HttpExtractionBackend(
            b.extract_url, repo, b.timeout_ms, b.auth_header, b.auth_token
        )
    text = HttpTextClient(b.vlm_url, b.timeout_ms) if b.prompt_mode == "vlm" else None
    return gen, ext, text


class SessionService:
    """Serves concurrent sessions; per-session mutations are serialized."""

    def __init__(
        self,
        repo: FeatureRepository | None = None,
        store=None,
        backends_factory: BackendsFactory = default_backends,
    ):
        self.repo = repo or default_repository()
        self.store = store
        self.backends_factory = backends_factory
        self._records: dict[str, SessionRecord] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    # -- record access -----------------------------------------------------

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def get(self, session_id: str) -> SessionRecord:
        record = self._records.get(session_id)
        if record is None:
            if self.store is None:
                raise SessionNotFoundError(f"no session {session_id!r}")
            record = self.load_session(session_id)
        return record

    def _persist(self, record: SessionRecord) -> None:
        if self.store is not None:
            self.store.save(record.session_id, record.to_dict())

    def persist_session(self, session_id: str) -> None:
        self._persist(self.get(session_id))

    def load_session(self, session_id: str) -> SessionRecord:
        if self.store is None:
            raise SessionNotFoundError("service has no store configured")
        record = SessionRecord.from_dict(self.store.load(session_id), self.repo)
        self._records[session_id] = record
        return record

    # -- batch construction --------------------------------------------------

    def _build_batch(self, record: SessionRecord) -> list[Candidate]:
        config = record.config
        gen, ext, text_client = self.backends_factory(config, self.repo)
        negatives = derive_negative_terms(record.state, self.repo)
        prompts: list[PromptSpec] = []
        for i in range(config.candidates_per_round):
            bundle_seed = derive_seed(config.seed, record.generation_counter, i)
            bundle = select_feature_bundle(
                record.state, self.repo, config.sampling, bundle_seed
            )
            prompt_id = f"p{record.generation_counter}-{i}"
            if text_client is not None:
                prompt = assemble_prompt_vlm(
                    self.repo, config.initial_prompt, bundle, negatives,
                    text_client, prompt_id,
                )
            else:
                prompt = assemble_prompt_template(
                    self.repo, config.initial_prompt, bundle, negatives, prompt_id
                )
            prompts.append(prompt)

        batch_seed = derive_seed(config.seed, record.generation_counter)
        images = gen.generate(prompts, seed=batch_seed)
        profiles = ext.extract(images)
        if len(images) != len(prompts) or len(profiles) != len(images):
            raise RuntimeError("backend broke the one-result-per-request contract")
        return [
            Candidate(image=img, profile=prof, prompt=pr)
            for img, prof, pr in zip(images, profiles, prompts)
        ]

    # -- session operations ---------------------------------------------------

    def create_session(self, config: SessionConfig) -> SessionRecord:
        config.validate()
        session_id = uuid.uuid4().hex[:12]
        record = SessionRecord(
            session_id=session_id,
            config=config,
            state=PreferenceState(self.repo),
            phase=Phase.GENERATING,
        )
        record.current_candidates = self._build_batch(record)
        record.phase = Phase.AWAITING_FEEDBACK
        self._records[session_id] = record
        self._persist(record)
        return record

    def regenerate_candidates(self, session_id: str) -> SessionRecord:
        with self._lock_for(session_id):
            record = self.get(session_id)
            if record.phase is not Phase.AWAITING_FEEDBACK:
                raise WrongPhaseError(f"cannot regenerate in phase {record.phase.value}")
            record.generation_counter += 1
            record.current_candidates = self._build_batch(record)
            self._persist(record)
            return record

    def submit_feedback(
        self, session_id: str, annotations: dict[str, str | Annotation]
    ) -> SessionRecord:
        with self._lock_for(session_id):
            record = self.get(session_id)
            if record.phase is not Phase.AWAITING_FEEDBACK:
                raise WrongPhaseError(f"cannot accept feedback in phase {record.phase.value}")
            known = {c.image.id for c in record.current_candidates}
            for image_id in annotations:
                if image_id not in known:
                    raise UnknownImageError(f"image {image_id!r} is not a current candidate")
            normalized = {
                image_id: Annotation(a) for image_id, a in annotations.items()
            }
            entries = [
                (c.profile, normalized.get(c.image.id, Annotation.UNLABELED))
                for c in record.current_candidates
            ]
            feedback_round = FeedbackRound(
                round_index=len(record.rounds) + 1, entries=entries
            )
            record.state.ingest_round(feedback_round)
            record.rounds.append(feedback_round)
            record.phase = Phase.GENERATING
            self._persist(record)
            return record

    def advance_round(self, session_id: str) -> SessionRecord:
        with self._lock_for(session_id):
            record = self.get(session_id)
            if record.phase is not Phase.GENERATING:
                raise WrongPhaseError(f"cannot advance in phase {record.phase.value}")
            if len(record.rounds) >= record.config.max_rounds:
                record.phase = Phase.CLOSED
                self._persist(record)
                raise RoundLimitReachedError(
                    f"session reached max_rounds={record.config.max_rounds}"
                )
            record.generation_counter += 1
            record.current_candidates = self._build_batch(record)
            record.phase = Phase.AWAITING_FEEDBACK
            self._persist(record)
            return record

    def preferences(self, session_id: str) -> dict:
        record = self.get(session_id)
        return preference_snapshot(record.state, self.repo)

    def close_session(self, session_id: str) -> SessionRecord:
        with self._lock_for(session_id):
            record = self.get(session_id)
            record.phase = Phase.CLOSED
            record.current_candidates = []
            self._persist(record)
            return record


def replay_state(record: SessionRecord, repo: FeatureRepository) -> PreferenceState:
    """Rebuild the preference state by re-ingesting the recorded rounds.

    The history oracle for persistence tests: a persisted state must equal
    the replayed one exactly.
    """
    state = PreferenceState(
        repo,
        ordinal_dual_route=record.state.ordinal_dual_route,
        round_weight_all_samples=record.state.round_weight_all_samples,
    )
    for feedback_round in record.rounds:
        state.ingest_round(feedback_round)
    return state
