"""Canonical, byte-stable serialization helpers.

All card/report/registry documents are JSON with sorted keys, two-space
indent, and a trailing newline; identical content always yields identical
bytes, which makes content hashing and round-trip tests meaningful.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone

from .errors import MalformedDocument


def dumps(obj) -> bytes:
    text = json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def loads(data: bytes | str) -> dict:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument(f"document is not valid UTF-8: {exc}") from exc
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"document is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedDocument("document root must be an object")
    return obj


def format_ts(ts: datetime) -> str:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).isoformat()


def parse_ts(text: str) -> datetime:
    try:
        ts = datetime.fromisoformat(text)
    except ValueError as exc:
        raise MalformedDocument(f"bad timestamp {text!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def reject_unknown_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise MalformedDocument(f"unknown fields in {where}: {sorted(unknown)}")
