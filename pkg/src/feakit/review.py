"""Manual-inspection service: serve synthesized candidates, record accept/reject decisions.

A single-annotator desk tool. State is the candidate JSONL plus an append-only
decision journal beside it; replaying the journal over the candidates
reproduces the in-memory state exactly, so a killed service loses nothing.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import os
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, unquote, urlparse

from .dataset import SampleRecord, read_jsonl, write_jsonl

logger = logging.getLogger(__name__)

DECISIONS = ("accepted", "rejected")
DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 7341

_ITEM_RE = re.compile(r"^/api/items/([0-9a-f]{32})$")
_DECISION_RE = re.compile(r"^/api/items/([0-9a-f]{32})/decision$")
_IMAGE_RE = re.compile(r"^/api/images/([^/]+)/([^/]+)$")

_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>review service</title></head>
<body style="font-family: sans-serif; margin: 2rem;">
<h1>Review service is running</h1>
<p>No UI bundle is configured. Point <code>--ui-dir</code> at a built frontend,
or use the JSON API directly: <code>/api/items</code>, <code>/api/stats</code>.</p>
</body></html>
"""


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class ReviewItem:
    record: SampleRecord
    status: str = "pending"
    note: str | None = None
    decided_at: str | None = None
    reviewer: str | None = None

    def to_summary(self) -> dict:
        return {
            "id": self.record.id,
            "dataset": self.record.dataset,
            "image": self.record.image,
            "question": self.record.question,
            "labels": list(self.record.labels),
            "status": self.status,
            "decided_at": self.decided_at,
        }

    def to_full(self) -> dict:
        full = self.to_summary()
        full.update(
            {
                "AUs": list(self.record.aus),
                "description": self.record.description,
                "meta_info": dict(self.record.meta_info),
                "note": self.note,
                "reviewer": self.reviewer,
            }
        )
        return full


class ReviewStore:
    """Candidate items keyed by id with a durable append-only decision journal."""

    def __init__(self, candidates_path: str | Path, journal_path: str | Path):
        self.candidates_path = Path(candidates_path)
        self.journal_path = Path(journal_path)
        self._lock = threading.Lock()
        records, skipped = read_jsonl(self.candidates_path)
        if skipped:
            logger.warning("skipped %d malformed candidate lines", len(skipped))
        self.items: dict[str, ReviewItem] = {}
        for record in sorted(records, key=lambda r: r.id):
            if record.id in self.items:
                logger.warning("duplicate candidate id %s, keeping the first", record.id)
                continue
            self.items[record.id] = ReviewItem(record=record)
        self._replay_journal()

    def _replay_journal(self):
        if not self.journal_path.exists():
            return
        with self.journal_path.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                    self._apply(entry)
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    logger.warning("ignoring journal line %d: %s", line_no, exc)

    def _apply(self, entry: dict):
        item = self.items.get(entry["id"])
        if item is None:
            logger.warning("journal entry for unknown id %s ignored", entry.get("id"))
            return
        decision = entry["decision"]
        if decision not in DECISIONS:
            raise ValueError(f"bad decision {decision!r}")
        item.status = decision
        item.note = entry.get("note")
        item.reviewer = entry.get("reviewer")
        item.decided_at = entry.get("decided_at")

    def record_decision(self, item_id: str, decision: str, note: str | None = None, reviewer: str | None = None) -> ReviewItem:
        """Apply and durably journal one decision; re-deciding overwrites (last write wins)."""
        if decision not in DECISIONS:
            raise ValueError(f"decision must be one of {DECISIONS}, got {decision!r}")
        with self._lock:
            if item_id not in self.items:
                raise KeyError(item_id)
            entry = {
                "id": item_id,
                "decision": decision,
                "note": note,
                "reviewer": reviewer,
                "decided_at": _utc_now(),
            }
            with self.journal_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._apply(entry)
            return self.items[item_id]

    def list_items(self, status: str | None = None, page: int = 1, page_size: int = 50) -> tuple[list[ReviewItem], int]:
        """Stable id-ordered page of items; returns (page items, filtered total)."""
        if page < 1 or page_size < 1:
            raise ValueError("page and page_size must be >= 1")
        selected = [item for item in self.items.values() if status is None or item.status == status]
        start = (page - 1) * page_size
        return selected[start:start + page_size], len(selected)

    def get(self, item_id: str) -> ReviewItem:
        return self.items[item_id]

    def stats(self) -> dict:
        counts = {"pending": 0, "accepted": 0, "rejected": 0}
        for item in self.items.values():
            counts[item.status] += 1
        counts["total"] = len(self.items)
        return counts

    def export_approved(self, path: str | Path) -> int:
        """Write accepted items' records as standard JSONL; returns the count."""
        accepted = [item.record for item in self.items.values() if item.status == "accepted"]
        return write_jsonl(accepted, path)


def build_server(
    store: ReviewStore,
    image_root: str | Path | None = None,
    ui_dir: str | Path | None = None,
    host: str = DEFAULT_HOST,
    port: int = DEFAULT_PORT,
) -> ThreadingHTTPServer:
    """HTTP server exposing the review JSON API and, when configured, the UI bundle."""
    image_root_path = Path(image_root).resolve() if image_root else None
    ui_path = Path(ui_dir).resolve() if ui_dir else None

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            logger.debug("%s - %s", self.address_string(), fmt % args)

        def _send_json(self, code: int, payload):
            body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            self.send_response(code)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _send_bytes(self, code: int, body: bytes, content_type: str):
            self.send_response(code)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()

        def do_GET(self):
            parsed = urlparse(self.path)
            path = unquote(parsed.path)
            if path == "/api/items":
                return self._handle_list(parse_qs(parsed.query))
            item_match = _ITEM_RE.match(path)
            if item_match:
                return self._handle_item(item_match.group(1))
            if path == "/api/stats":
                return self._send_json(200, store.stats())
            image_match = _IMAGE_RE.match(path)
            if image_match:
                return self._handle_image(image_match.group(1), image_match.group(2))
            return self._handle_static(path)

        def do_POST(self):
            path = unquote(urlparse(self.path).path)
            match = _DECISION_RE.match(path)
            if not match:
                return self._send_json(404, {"error": f"no such endpoint: {path}"})
            try:
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length) or b"{}")
                decision = payload["decision"]
            except (ValueError, KeyError) as exc:
                return self._send_json(400, {"error": f"malformed decision body: {exc}"})
            try:
                item = store.record_decision(
                    match.group(1), decision, note=payload.get("note"), reviewer=payload.get("reviewer")
                )
            except KeyError:
                return self._send_json(404, {"error": f"unknown item id: {match.group(1)}"})
            except ValueError as exc:
                return self._send_json(400, {"error": str(exc)})
            return self._send_json(200, item.to_full())

        def _handle_list(self, query: dict):
            status = query.get("status", [None])[0] or None
            if status is not None and status not in ("pending",) + DECISIONS:
                return self._send_json(400, {"error": f"unknown status filter: {status}"})
            try:
                page = int(query.get("page", ["1"])[0])
                page_size = int(query.get("page_size", ["50"])[0])
                items, total = store.list_items(status, page, page_size)
            except ValueError as exc:
                return self._send_json(400, {"error": f"invalid pagination: {exc}"})
            return self._send_json(
                200,
                {
                    "items": [item.to_summary() for item in items],
                    "total": total,
                    "page": page,
                    "page_size": page_size,
                    "stats": store.stats(),
                },
            )

        def _handle_item(self, item_id: str):
            try:
                item = store.get(item_id)
            except KeyError:
                return self._send_json(404, {"error": f"unknown item id: {item_id}"})
            return self._send_json(200, item.to_full())

        def _handle_image(self, dataset: str, filename: str):
            if image_root_path is None:
                return self._send_json(404, {"error": "no image root configured"})
            candidate = (image_root_path / dataset / filename).resolve()
            if not candidate.is_relative_to(image_root_path):
                return self._send_json(403, {"error": "path traversal rejected"})
            if not candidate.is_file():
                return self._send_json(404, {"error": f"image not found: {dataset}/{filename}"})
            media_type = mimetypes.guess_type(candidate.name)[0] or "application/octet-stream"
            return self._send_bytes(200, candidate.read_bytes(), media_type)

        def _handle_static(self, path: str):
            if ui_path is None:
                if path in ("/", "/index.html"):
                    return self._send_bytes(200, _FALLBACK_PAGE.encode("utf-8"), "text/html; charset=utf-8")
                return self._send_json(404, {"error": f"no such endpoint: {path}"})
            relative = "index.html" if path == "/" else path.lstrip("/")
            candidate = (ui_path / relative).resolve()
            if not candidate.is_relative_to(ui_path) or not candidate.is_file():
                return self._send_json(404, {"error": f"not found: {path}"})
            media_type = mimetypes.guess_type(candidate.name)[0] or "application/octet-stream"
            return self._send_bytes(200, candidate.read_bytes(), media_type)

    return ThreadingHTTPServer((host, port), Handler)
