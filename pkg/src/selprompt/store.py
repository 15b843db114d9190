"""Append-only, write-once key/value persistence.

Two layouts share one interface: a single JSON-lines log, or a directory
with one file per key. A key maps to exactly one value for the life of the
store; later writes for an existing key are ignored, so concurrent misses
converge on the first stored value.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path

from .errors import StoreError


def content_key(*parts: str) -> str:
    digest = hashlib.sha256()
    for part in parts:
        digest.update(part.encode("utf-8"))
        digest.update(b"\x1f")
    return digest.hexdigest()


def _dump(value: dict) -> str:
    return json.dumps(value, ensure_ascii=False, sort_keys=True)


class KeyValueLog:
    """Thread-safe write-once store keyed by strings, holding JSON dicts."""

    def __init__(self, path: str | Path, layout: str = "jsonl"):
        if layout not in ("jsonl", "dir"):
            raise StoreError(f"unknown store layout {layout!r}")
        self.path = Path(path)
        self.layout = layout
        self._lock = threading.Lock()
        self._entries: dict[str, dict] = {}
        try:
            if layout == "jsonl":
                self.path.parent.mkdir(parents=True, exist_ok=True)
                if self.path.exists():
                    self._load_jsonl()
            else:
                self.path.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StoreError(f"cannot open store at {self.path}: {exc}") from exc

    def _load_jsonl(self) -> None:
        for line in self.path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            self._entries.setdefault(obj["key"], obj["value"])

    def __contains__(self, key: str) -> bool:
        with self._lock:
            if self.layout == "jsonl":
                return key in self._entries
        return (self.path / key).exists()

    def get(self, key: str) -> dict | None:
        if self.layout == "jsonl":
            with self._lock:
                return self._entries.get(key)
        target = self.path / key
        if not target.exists():
            return None
        return json.loads(target.read_text(encoding="utf-8"))

    def put_once(self, key: str, value: dict) -> dict:
        """Store the value unless the key exists; returns the stored value."""
        with self._lock:
            if self.layout == "jsonl":
                existing = self._entries.get(key)
                if existing is not None:
                    return existing
                try:
                    with self.path.open("a", encoding="utf-8") as fh:
                        fh.write(_dump({"key": key, "value": value}) + "\n")
                        fh.flush()
                        os.fsync(fh.fileno())
                except OSError as exc:
                    raise StoreError(f"cannot append to {self.path}: {exc}") from exc
                self._entries[key] = value
                return value
            target = self.path / key
            if target.exists():
                return json.loads(target.read_text(encoding="utf-8"))
            try:
                tmp = target.with_suffix(".tmp")
                tmp.write_text(_dump(value), encoding="utf-8")
                tmp.replace(target)
            except OSError as exc:
                raise StoreError(f"cannot write {target}: {exc}") from exc
            return value

    def keys(self) -> list[str]:
        if self.layout == "jsonl":
            with self._lock:
                return list(self._entries)
        return sorted(p.name for p in self.path.iterdir() if not p.name.endswith(".tmp"))

    def items(self) -> list[tuple[str, dict]]:
        if self.layout == "jsonl":
            with self._lock:
                return list(self._entries.items())
        return [(k, self.get(k)) for k in self.keys()]

    def __len__(self) -> int:
        return len(self.keys())
