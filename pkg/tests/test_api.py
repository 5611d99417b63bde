"""HTTP API surface: endpoint contracts and error mapping."""

import pytest
from fastapi.testclient import TestClient

from prefloop.api import create_app
from prefloop.cli import API_CLI_PARITY
from prefloop.session import SessionService


@pytest.fixture()
def client(repo):
    return TestClient(create_app(SessionService(repo)))


def create(client, **overrides):
    body = {"initial_prompt": "a lighthouse on a cliff", "seed": 42}
    body.update(overrides)
    resp = client.post("/sessions", json=body)
    assert resp.status_code == 200
    return resp.json()


class TestSessionEndpoints:
    def test_create_returns_id_and_candidates(self, client):
        body = create(client)
        assert len(body["candidates"]) == 4
        assert all({"image_id", "uri", "prompt"} <= set(c) for c in body["candidates"])

    def test_get_view_has_no_raw_accumulators(self, client):
        body = create(client)
        view = client.get(f"/sessions/{body['session_id']}").json()
        assert view["phase"] == "awaiting_feedback"
        assert "state" not in view and "discrete" not in view

    def test_feedback_next_cycle(self, client):
        body = create(client)
        sid = body["session_id"]
        ids = [c["image_id"] for c in body["candidates"]]
        resp = client.post(
            f"/sessions/{sid}/feedback",
            json={"annotations": {ids[0]: "liked", ids[1]: "disliked"}},
        )
        assert resp.json() == {"ok": True}
        resp = client.post(f"/sessions/{sid}/next")
        assert resp.status_code == 200
        assert len(resp.json()["candidates"]) == 4

    def test_regenerate(self, client):
        body = create(client)
        resp = client.post(f"/sessions/{body['session_id']}/regenerate")
        new_ids = [c["image_id"] for c in resp.json()["candidates"]]
        assert new_ids != [c["image_id"] for c in body["candidates"]]

    def test_preferences_snapshot_shape(self, client):
        body = create(client)
        snap = client.get(f"/sessions/{body['session_id']}/preferences").json()
        assert {"discrete", "ordinal", "pool_size", "rounds_ingested"} <= set(snap)

    def test_delete_closes(self, client):
        body = create(client)
        assert client.delete(f"/sessions/{body['session_id']}").json() == {"ok": True}
        view = client.get(f"/sessions/{body['session_id']}").json()
        assert view["phase"] == "closed"


class TestErrorMapping:
    def test_unknown_session_404(self, client):
        assert client.get("/sessions/doesnotexist").status_code == 404

    def test_wrong_phase_409(self, client):
        body = create(client)
        resp = client.post(f"/sessions/{body['session_id']}/next")
        assert resp.status_code == 409
        assert resp.json()["error"] == "WrongPhaseError"

    def test_unknown_image_422(self, client):
        body = create(client)
        resp = client.post(
            f"/sessions/{body['session_id']}/feedback",
            json={"annotations": {"ghost": "liked"}},
        )
        assert resp.status_code == 422

    def test_bad_config_422(self, client):
        resp = client.post(
            "/sessions", json={"initial_prompt": "x", "candidates_per_round": 1}
        )
        assert resp.status_code == 422
        assert resp.json()["error"] == "ConfigError"


class TestCliParity:
    def test_every_route_has_a_cli_counterpart(self, client):
        app = client.app
        routes = {
            f"{method} {route.path}"
            for route in app.routes
            if getattr(route, "methods", None) and route.path.startswith("/sessions")
            for method in route.methods - {"HEAD", "OPTIONS"}
        }
        assert routes == set(API_CLI_PARITY)
