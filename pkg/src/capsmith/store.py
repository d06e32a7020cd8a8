"""Pluggable persistence for documents, analysis artifacts, and sessions.

The default store is a JSON file directory with atomic per-key writes
(write-then-rename); an in-memory store backs tests.  A document-database
client would implement the same interface.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from pathlib import Path
from typing import Any, Optional, Protocol
from urllib.parse import quote, unquote

from .bundle import parse_bundle, serialize_bundle
from .model import CaptionSession, Document, session_from_json, session_to_json


class StoreError(RuntimeError):
    pass


class Store(Protocol):
    def put_document(self, doc: Document) -> None: ...

    def get_document(self, doc_id: str) -> Optional[Document]: ...

    def list_doc_ids(self) -> list[str]: ...

    def put_analysis(self, doc_id: str, analysis: dict[str, Any]) -> None: ...

    def get_analysis(self, doc_id: str) -> Optional[dict[str, Any]]: ...

    def put_session(self, session: CaptionSession) -> None: ...

    def get_session(self, doc_id: str, figure_id: str) -> Optional[CaptionSession]: ...


class MemoryStore:
    """Process-local store for tests and ephemeral runs."""

    def __init__(self) -> None:
        self._docs: dict[str, bytes] = {}
        self._analysis: dict[str, str] = {}
        self._sessions: dict[tuple[str, str], str] = {}
        self._lock = threading.Lock()

    def put_document(self, doc: Document) -> None:
        with self._lock:
            self._docs[doc.doc_id] = serialize_bundle(doc)

    def get_document(self, doc_id: str) -> Optional[Document]:
        with self._lock:
            raw = self._docs.get(doc_id)
        return parse_bundle(raw) if raw is not None else None

    def list_doc_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._docs)

    def put_analysis(self, doc_id: str, analysis: dict[str, Any]) -> None:
        with self._lock:
            self._analysis[doc_id] = json.dumps(analysis)

    def get_analysis(self, doc_id: str) -> Optional[dict[str, Any]]:
        with self._lock:
            raw = self._analysis.get(doc_id)
        return json.loads(raw) if raw is not None else None

    def put_session(self, session: CaptionSession) -> None:
        with self._lock:
            self._sessions[(session.doc_id, session.figure_id)] = json.dumps(
                session_to_json(session)
            )

    def get_session(self, doc_id: str, figure_id: str) -> Optional[CaptionSession]:
        with self._lock:
            raw = self._sessions.get((doc_id, figure_id))
        return session_from_json(json.loads(raw)) if raw is not None else None


class FileStore:
    """JSON files under a root directory; writes are atomic per key."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        for sub in ("documents", "analysis", "sessions"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    @staticmethod
    def _safe(key: str) -> str:
        return quote(key, safe="")

    def _write_atomic(self, path: Path, data: bytes) -> None:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except OSError as exc:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise StoreError(f"write failed for {path}: {exc}") from exc

    def put_document(self, doc: Document) -> None:
        path = self.root / "documents" / f"{self._safe(doc.doc_id)}.json"
        self._write_atomic(path, serialize_bundle(doc))

    def get_document(self, doc_id: str) -> Optional[Document]:
        path = self.root / "documents" / f"{self._safe(doc_id)}.json"
        if not path.exists():
            return None
        return parse_bundle(path.read_bytes())

    def list_doc_ids(self) -> list[str]:
        out = []
        for path in (self.root / "documents").glob("*.json"):
            out.append(unquote(path.stem))
        return sorted(out)

    def put_analysis(self, doc_id: str, analysis: dict[str, Any]) -> None:
        path = self.root / "analysis" / f"{self._safe(doc_id)}.json"
        self._write_atomic(path, json.dumps(analysis, ensure_ascii=False).encode("utf-8"))

    def get_analysis(self, doc_id: str) -> Optional[dict[str, Any]]:
        path = self.root / "analysis" / f"{self._safe(doc_id)}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text("utf-8"))

    def put_session(self, session: CaptionSession) -> None:
        name = f"{self._safe(session.doc_id)}__{self._safe(session.figure_id)}.json"
        path = self.root / "sessions" / name
        self._write_atomic(
            path, json.dumps(session_to_json(session), ensure_ascii=False).encode("utf-8")
        )

    def get_session(self, doc_id: str, figure_id: str) -> Optional[CaptionSession]:
        name = f"{self._safe(doc_id)}__{self._safe(figure_id)}.json"
        path = self.root / "sessions" / name
        if not path.exists():
            return None
        return session_from_json(json.loads(path.read_text("utf-8")))
