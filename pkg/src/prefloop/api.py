"""HTTP surface over the session service, consumed by the web UI and CLI."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .config import SessionConfig
from .errors import (
    ConfigError,
    PrefloopError,
    RoundLimitReachedError,
    SessionNotFoundError,
    UnknownImageError,
    WrongPhaseError,
)
from .session import SessionService

_STATUS_BY_ERROR = (
    (SessionNotFoundError, 404),
    (WrongPhaseError, 409),
    (RoundLimitReachedError, 409),
    (UnknownImageError, 422),
    (ConfigError, 422),
)


class CreateSessionBody(BaseModel):
    initial_prompt: str
    candidates_per_round: int | None = None
    max_rounds: int | None = None
    seed: int | None = None
    backend: dict = Field(default_factory=dict)
    sampling: dict = Field(default_factory=dict)

    def to_config(self) -> SessionConfig:
        doc: dict = {"initial_prompt": self.initial_prompt}
        for key in ("candidates_per_round", "max_rounds", "seed"):
            value = getattr(self, key)
            if value is not None:
                doc[key] = value
        doc["backend"] = self.backend
        doc["sampling"] = self.sampling
        return SessionConfig.from_dict(doc)


class FeedbackBody(BaseModel):
    annotations: dict[str, str]


def _candidates_payload(record) -> list[dict]:
    return [
        {
            "image_id": c.image.id,
            "uri": c.image.content_locator,
            "prompt": c.prompt.positive_prompt,
            "negative_prompt": c.prompt.negative_prompt,
        }
        for c in record.current_candidates
    ]


def create_app(
    service: SessionService | None = None, ui_dir: str | None = None
) -> FastAPI:
    service = service or SessionService()
    app = FastAPI(title="prefloop", version="0.1.0")
    app.state.service = service
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    # the UI bundle may be served from any static host
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(PrefloopError)
    async def domain_error_handler(request: Request, exc: PrefloopError):
        status = next(
            (code for etype, code in _STATUS_BY_ERROR if isinstance(exc, etype)), 400
        )
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        record = service.create_session(body.to_config())
        return {
            "session_id": record.session_id,
            "candidates": _candidates_payload(record),
        }

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return service.get(session_id).to_view()

    @app.post("/sessions/{session_id}/feedback")
    def submit_feedback(session_id: str, body: FeedbackBody):
        service.submit_feedback(session_id, body.annotations)
        return {"ok": True}

    @app.post("/sessions/{session_id}/next")
    def next_round(session_id: str):
        record = service.advance_round(session_id)
        return {
            "session_id": record.session_id,
            "round_index": record.round_index,
            "candidates": _candidates_payload(record),
        }

    @app.post("/sessions/{session_id}/regenerate")
    def regenerate(session_id: str):
        record = service.regenerate_candidates(session_id)
        return {
            "session_id": record.session_id,
            "round_index": record.round_index,
            "candidates": _candidates_payload(record),
        }

    @app.get("/sessions/{session_id}/preferences")
    def preferences(session_id: str):
        return service.preferences(session_id)

    @app.delete("/sessions/{session_id}")
    def close_session(session_id: str):
        service.close_session(session_id)
        return {"ok": True}

    return app
