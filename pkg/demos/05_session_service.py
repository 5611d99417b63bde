"""Driving the session loop directly: create, annotate, advance, inspect.

The same operations are exposed over HTTP (`prefloop serve`) and the CLI
(`prefloop session ...`); this script uses the service in-process.
"""

from prefloop import SessionConfig, SessionService

service = SessionService()
config = SessionConfig(initial_prompt="a lighthouse on a cliff", seed=7)
record = service.create_session(config)
print(f"session {record.session_id}, phase={record.phase.value}")

for c in record.current_candidates:
    print(f"  {c.image.id}: {c.prompt.positive_prompt[:90]}...")

# Like the first two candidates, dislike the rest.
ids = [c.image.id for c in record.current_candidates]
annotations = {ids[0]: "liked", ids[1]: "liked", ids[2]: "disliked", ids[3]: "disliked"}
service.submit_feedback(record.session_id, annotations)
record = service.advance_round(record.session_id)
print(f"\nafter one round: phase={record.phase.value}, rounds={record.round_index}")

snapshot = service.preferences(record.session_id)
print(f"pool size: {snapshot['pool_size']}")
strongest = max(
    ((fid, ranked[0]) for fid, ranked in snapshot["discrete"].items()),
    key=lambda item: item[1]["odds_ratio"],
)
print(f"strongest discrete signal: {strongest[0]} -> {strongest[1]}")

# Candidates can be regenerated without touching the statistics.
before = record.state.rounds_ingested
record = service.regenerate_candidates(record.session_id)
assert record.state.rounds_ingested == before
print("\nregenerated candidates (statistics untouched):")
for c in record.current_candidates:
    print(f"  {c.image.id}")
