"""Tiny JSON cache for expensive mode-solve results.

Entries are keyed by a SHA-256 of the canonical JSON of the inputs. Each
key maps to one file, written atomically, so concurrent writers of
different keys never collide.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

ENV_VAR = "LNMPM_CACHE_DIR"


def cache_key(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


class ResultCache:
    def __init__(self, directory=None):
        directory = directory or os.environ.get(ENV_VAR)
        self.directory = Path(directory) if directory else None
        self._memory = {}

    def _path(self, key):
        return self.directory / f"{key}.json"

    def get(self, payload: dict):
        key = cache_key(payload)
        if key in self._memory:
            return self._memory[key]
        if self.directory is not None:
            path = self._path(key)
            if path.exists():
                value = json.loads(path.read_text())["value"]
                self._memory[key] = value
                return value
        return None

    def put(self, payload: dict, value):
        key = cache_key(payload)
        self._memory[key] = value
        if self.directory is None:
            return
        self.directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            json.dump({"inputs": payload, "value": value}, fh, sort_keys=True)
        os.replace(tmp, self._path(key))
