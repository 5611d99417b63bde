"""Operator entry point: sessions, simulations, repository checks, serving.

Exit codes: 0 success, 1 domain error, 2 usage error. With ``--json`` every
output line (including errors on stderr) is a JSON document.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click

from .config import load_session_config
from .errors import ConfigError, PrefloopError
from .persistence import DirectoryStore
from .repository import default_repository, load_repository_file
from .session import SessionService
from .sim import TargetProfile, run_experiment, summarize_reports

DEFAULT_STORE = ".prefloop-sessions"

# Every HTTP endpoint has a CLI counterpart (tested by enumeration).
API_CLI_PARITY = {
    "POST /sessions": "session new",
    "GET /sessions/{session_id}": "session show",
    "POST /sessions/{session_id}/feedback": "session feedback",
    "POST /sessions/{session_id}/next": "session next",
    "POST /sessions/{session_id}/regenerate": "session regenerate",
    "GET /sessions/{session_id}/preferences": "session prefs",
    "DELETE /sessions/{session_id}": "session close",
}


def _emit(ctx: click.Context, payload: dict, text: str) -> None:
    if ctx.obj.get("json"):
        click.echo(json.dumps(payload))
    else:
        click.echo(text)


def domain_errors(fn):
    """Map package errors to exit code 1, with JSON on stderr when asked."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return fn(*args, **kwargs)
        except PrefloopError as exc:
            if ctx.obj and ctx.obj.get("json"):
                click.echo(
                    json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
                    err=True,
                )
            else:
                click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _service(store_dir: str) -> SessionService:
    return SessionService(store=DirectoryStore(store_dir))


def _store_option(fn):
    return click.option(
        "--store",
        default=lambda: os.environ.get("PREFLOOP_STORE", DEFAULT_STORE),
        show_default=DEFAULT_STORE,
        help="Session store directory.",
    )(fn)


def _candidate_lines(record) -> list[str]:
    lines = []
    for i, c in enumerate(record.current_candidates, start=1):
        summary = ", ".join(
            f"{fid}={value}" for fid, value in list(c.profile.discrete_values.items())[:4]
        )
        lines.append(f"  [{i}] {c.image.id}  {c.image.content_locator}")
        lines.append(f"      {summary}")
    return lines


def _snapshot_tables(snapshot: dict) -> str:
    out = [
        f"rounds ingested: {snapshot['rounds_ingested']}   "
        f"pool size: {snapshot['pool_size']}",
        "",
        f"{'FEATURE':<20}{'VALUE':<20}{'ODDS RATIO':>12}",
    ]
    for fid, ranked in snapshot["discrete"].items():
        for i, item in enumerate(ranked):
            name = fid if i == 0 else ""
            out.append(f"{name:<20}{item['value']:<20}{item['odds_ratio']:>12.3f}")
    out.append("")
    out.append(f"{'FEATURE':<20}{'D':>8}{'MU_LIKED':>10}{'MU_DISLIKED':>13}  EMPHASIS")
    for fid, stats in snapshot["ordinal"].items():
        if stats.get("insufficient_data"):
            out.append(f"{fid:<20}{'-':>8}{'-':>10}{'-':>13}  insufficient data")
        else:
            flag = "yes" if stats["emphasis"] else "no"
            out.append(
                f"{fid:<20}{stats['d']:>8.3f}{stats['mu_liked']:>10.3f}"
                f"{stats['mu_disliked']:>13.3f}  {flag}"
            )
    return "\n".join(out)


@click.group()
@click.option("--json", "json_mode", is_flag=True, help="Line-delimited JSON output.")
@click.pass_context
def main(ctx: click.Context, json_mode: bool):
    """Preference-feedback loop for text-to-image generation."""
    ctx.ensure_object(dict)
    ctx.obj["json"] = json_mode


# -- repo ------------------------------------------------------------------


@main.group()
def repo():
    """Feature repository commands."""


@repo.command("validate")
@click.argument("source", default="default")
@click.pass_context
@domain_errors
def repo_validate(ctx: click.Context, source: str):
    """Validate SOURCE ('default' or a path to a repository file)."""
    repository = default_repository() if source == "default" else load_repository_file(source)
    payload = {
        "ok": True,
        "features": len(repository),
        "dimensions": len(repository.dimensions),
        "version": repository.version,
    }
    _emit(ctx, payload, f"{len(repository)} features OK "
                        f"({len(repository.dimensions)} dimensions, version {repository.version})")


# -- session -----------------------------------------------------------------


@main.group()
def session():
    """Interactive session commands."""


def _config_options(fn):
    fn = click.option("--config", "config_path", default=None, help="Config file (JSON).")(fn)
    fn = click.option("--seed", type=int, default=None, help="Session seed.")(fn)
    fn = click.option("--backend", default=None, help="Backend kind: mock or http.")(fn)
    fn = click.option("--candidates", type=int, default=None, help="Candidates per round.")(fn)
    return fn


def _build_config(prompt, config_path, seed, backend, candidates):
    flags = {
        "initial_prompt": prompt,
        "seed": seed,
        "backend": backend,
        "candidates_per_round": candidates,
    }
    return load_session_config(config_path, flags={k: v for k, v in flags.items() if v is not None})


@session.command("new")
@click.option("--prompt", required=True, help="The initial generation prompt.")
@_config_options
@_store_option
@click.pass_context
@domain_errors
def session_new(ctx, prompt, config_path, seed, backend, candidates, store):
    """Create a session and generate the first candidate batch."""
    service = _service(store)
    record = service.create_session(_build_config(prompt, config_path, seed, backend, candidates))
    payload = {
        "session_id": record.session_id,
        "candidates": [c.image.id for c in record.current_candidates],
    }
    text = "\n".join(
        [f"session {record.session_id} created ({len(record.current_candidates)} candidates)"]
        + _candidate_lines(record)
    )
    _emit(ctx, payload, text)


@session.command("show")
@click.argument("session_id")
@_store_option
@click.pass_context
@domain_errors
def session_show(ctx, session_id, store):
    """Show a session's phase and current candidates."""
    record = _service(store).get(session_id)
    view = record.to_view()
    text = "\n".join(
        [
            f"session {session_id}  phase={view['phase']}  round={view['round_index']}",
            f"prompt: {view['initial_prompt']}",
        ]
        + _candidate_lines(record)
    )
    _emit(ctx, view, text)


@session.command("prefs")
@click.argument("session_id")
@_store_option
@click.pass_context
@domain_errors
def session_prefs(ctx, session_id, store):
    """Render the preference snapshot as tables."""
    snapshot = _service(store).preferences(session_id)
    _emit(ctx, snapshot, _snapshot_tables(snapshot))


def _resolve_ids(record, marks: tuple[str, ...]) -> list[str]:
    ids = [c.image.id for c in record.current_candidates]
    resolved = []
    for mark in marks:
        if mark.isdigit() and 1 <= int(mark) <= len(ids):
            resolved.append(ids[int(mark) - 1])
        else:
            resolved.append(mark)
    return resolved


@session.command("feedback")
@click.argument("session_id")
@click.option("--like", "likes", multiple=True, help="Image id or 1-based index.")
@click.option("--dislike", "dislikes", multiple=True, help="Image id or 1-based index.")
@_store_option
@click.pass_context
@domain_errors
def session_feedback(ctx, session_id, likes, dislikes, store):
    """Annotate the current candidates (unmentioned ones stay unlabeled)."""
    service = _service(store)
    record = service.get(session_id)
    annotations: dict[str, str] = {}
    annotations.update({i: "liked" for i in _resolve_ids(record, likes)})
    annotations.update({i: "disliked" for i in _resolve_ids(record, dislikes)})
    service.submit_feedback(session_id, annotations)
    payload = {"ok": True, "annotated": len(annotations)}
    _emit(ctx, payload, f"feedback recorded ({len(annotations)} annotations)")


@session.command("next")
@click.argument("session_id")
@_store_option
@click.pass_context
@domain_errors
def session_next(ctx, session_id, store):
    """Generate the next candidate batch from the updated preferences."""
    record = _service(store).advance_round(session_id)
    payload = {
        "round_index": record.round_index,
        "candidates": [c.image.id for c in record.current_candidates],
    }
    text = "\n".join([f"round {record.round_index} candidates:"] + _candidate_lines(record))
    _emit(ctx, payload, text)


@session.command("regenerate")
@click.argument("session_id")
@_store_option
@click.pass_context
@domain_errors
def session_regenerate(ctx, session_id, store):
    """Replace the current candidates without recording feedback."""
    record = _service(store).regenerate_candidates(session_id)
    payload = {"candidates": [c.image.id for c in record.current_candidates]}
    text = "\n".join(["regenerated candidates:"] + _candidate_lines(record))
    _emit(ctx, payload, text)


@session.command("close")
@click.argument("session_id")
@_store_option
@click.pass_context
@domain_errors
def session_close(ctx, session_id, store):
    """Close a session."""
    _service(store).close_session(session_id)
    _emit(ctx, {"ok": True}, f"session {session_id} closed")


@session.command("interactive")
@click.option("--prompt", required=True, help="The initial generation prompt.")
@_config_options
@_store_option
@click.pass_context
@domain_errors
def session_interactive(ctx, prompt, config_path, seed, backend, candidates, store):
    """Drive a session from the terminal with l/d/u marks per candidate."""
    service = _service(store)
    record = service.create_session(_build_config(prompt, config_path, seed, backend, candidates))
    click.echo(f"session {record.session_id} — marks: l=like d=dislike u=skip, "
               "or 'r' to regenerate, 'q' to quit")
    while True:
        click.echo("\n".join(_candidate_lines(record)))
        raw = click.prompt("marks", default="q", show_default=False).strip().lower()
        if raw == "q":
            break
        if raw == "r":
            record = service.regenerate_candidates(record.session_id)
            continue
        marks = raw.split() if " " in raw else list(raw)
        annotations = {}
        for c, mark in zip(record.current_candidates, marks):
            if mark == "l":
                annotations[c.image.id] = "liked"
            elif mark == "d":
                annotations[c.image.id] = "disliked"
        service.submit_feedback(record.session_id, annotations)
        click.echo(_snapshot_tables(service.preferences(record.session_id)))
        try:
            record = service.advance_round(record.session_id)
        except PrefloopError as exc:
            click.echo(f"stopping: {exc}")
            break
    _emit(ctx, {"session_id": record.session_id}, f"session {record.session_id} saved")


# -- sim -----------------------------------------------------------------


@main.group()
def sim():
    """Closed-loop simulation over the mock backends."""


@sim.command("run")
@click.option("--profile", "profile_path", default=None,
              help="Target profile file (JSON); omit for an empty profile.")
@click.option("--prompt", default="a mountain cabin at dusk", show_default=True)
@click.option("--rounds", type=int, default=10, show_default=True)
@click.option("--trials", type=int, default=20, show_default=True)
@click.option("--noise", type=float, default=None, help="Override the profile's noise rate.")
@click.option("--out", "out_path", default=None, help="Write the report JSON here.")
@_config_options
@click.pass_context
@domain_errors
def sim_run(ctx, profile_path, prompt, rounds, trials, noise, out_path,
            config_path, seed, backend, candidates):
    """Run simulated sessions and report convergence metrics."""
    if profile_path:
        try:
            with open(profile_path, "r", encoding="utf-8") as fh:
                profile = TargetProfile.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot load profile {profile_path!r}: {exc}") from exc
    else:
        profile = TargetProfile()
    if noise is not None:
        profile = TargetProfile.from_dict({**profile.to_dict(), "noise_rate": noise})

    cfg = _build_config(prompt, config_path, seed, backend, candidates)
    reports = run_experiment(default_repository(), profile, cfg, rounds, trials)
    document = {
        "profile": profile.to_dict(),
        "rounds": rounds,
        "trials": trials,
        "reports": [r.to_dict() for r in reports],
        "summary": summarize_reports(reports),
    }
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(document, fh, indent=2)
    summary = document["summary"]
    _emit(
        ctx,
        document if not out_path else {"ok": True, "out": out_path, "summary": summary},
        f"trials={trials} rounds={rounds} "
        f"mean_discrete_top1={summary['mean_discrete_top1']} "
        f"ordinal_pass_rate={summary['ordinal_pass_rate']} "
        f"mean_aggregate_accuracy={summary['mean_aggregate_accuracy']}",
    )


# -- serve ------------------------------------------------------------------


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--ui", "ui_dir", default=None,
              help="Serve a built web-UI bundle at /ui from this directory.")
@_store_option
@domain_errors
def serve(host, port, ui_dir, store):
    """Run the HTTP API (used by the web UI)."""
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(_service(store), ui_dir=ui_dir), host=host, port=port)


if __name__ == "__main__":
    main()
