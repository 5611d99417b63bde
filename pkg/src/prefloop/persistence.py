"""Directory-backed JSON store for session documents.

One document per session, written atomically (tmp file + rename). The
store moves raw dicts; (de)serialization of session records lives with the
session types. A pluggable store only needs ``save``, ``load``, ``delete``
and ``list_ids``.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .errors import SchemaVersionMismatchError, SessionNotFoundError, StoreError

RECORD_SCHEMA_VERSION = 1


def check_schema_version(doc: dict) -> None:
    version = doc.get("schema")
    if version != RECORD_SCHEMA_VERSION:
        raise SchemaVersionMismatchError(
            f"session document schema {version!r}, supported {RECORD_SCHEMA_VERSION}"
        )


class DirectoryStore:
    """Persists each session as ``<dir>/<session_id>.json``."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StoreError(f"cannot create store directory: {exc}") from exc

    def _path(self, session_id: str) -> Path:
        safe = "".join(c for c in session_id if c.isalnum() or c in "-_")
        if safe != session_id or not safe:
            raise StoreError(f"unsafe session id {session_id!r}")
        return self.directory / f"{safe}.json"

    def save(self, session_id: str, doc: dict) -> None:
        path = self._path(session_id)
        try:
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(doc, fh)
            os.replace(tmp, path)
        except OSError as exc:
            raise StoreError(f"cannot write session {session_id!r}: {exc}") from exc

    def load(self, session_id: str) -> dict:
        path = self._path(session_id)
        if not path.exists():
            raise SessionNotFoundError(f"no session {session_id!r}")
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreError(f"cannot read session {session_id!r}: {exc}") from exc
        check_schema_version(doc)
        return doc

    def delete(self, session_id: str) -> None:
        path = self._path(session_id)
        try:
            path.unlink(missing_ok=True)
        except OSError as exc:
            raise StoreError(f"cannot delete session {session_id!r}: {exc}") from exc

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.json"))
