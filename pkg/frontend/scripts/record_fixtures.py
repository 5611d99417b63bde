"""Record real API responses as fixtures for the UI parity tests.

Drives an in-process session service (mock backends, fixed seed) through a
create -> feedback -> next cycle and saves each response verbatim.
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from prefloop.api import create_app
from prefloop.session import SessionService

OUT = Path(__file__).resolve().parent.parent / "test" / "fixtures"


def save(name: str, payload) -> None:
    path = OUT / f"{name}.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path.relative_to(OUT.parent.parent)}")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    client = TestClient(create_app(SessionService()))

    created = client.post(
        "/sessions", json={"initial_prompt": "a lighthouse on a cliff", "seed": 42}
    ).json()
    save("create_session", created)
    sid = created["session_id"]

    save("session_view", client.get(f"/sessions/{sid}").json())
    save("preferences_fresh", client.get(f"/sessions/{sid}/preferences").json())

    ids = [c["image_id"] for c in created["candidates"]]
    annotations = {ids[0]: "liked", ids[1]: "liked", ids[2]: "disliked", ids[3]: "disliked"}
    save(
        "feedback_ok",
        client.post(f"/sessions/{sid}/feedback", json={"annotations": annotations}).json(),
    )
    save("next_round", client.post(f"/sessions/{sid}/next").json())
    save("preferences_after_round", client.get(f"/sessions/{sid}/preferences").json())


if __name__ == "__main__":
    main()
