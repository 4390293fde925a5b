"""Content-addressed artifact store with atomic write-then-publish.

Artifacts (datasets, posteriors, priors, scenarios) are stored one file
per object under ``<dir>/objects/<sha256>.json``; the id is the hash of
the canonical payload bytes, so re-uploading identical content is a
no-op that returns the same id.  Provenance links (dataset -> posterior
-> prior) must resolve at put time.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import DataFormatError
from .model import sha256_hex

KINDS = ("dataset", "posterior", "prior", "scenario")


@dataclass(frozen=True)
class Artifact:
    id: str
    kind: str
    payload: dict
    provenance: dict


class ArtifactStore:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.objects = self.root / "objects"
        self.objects.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def put(self, kind: str, payload_bytes: str, provenance: dict | None = None) -> str:
        """Store canonical payload bytes; returns the content id."""
        if kind not in KINDS:
            raise DataFormatError(f"unknown artifact kind {kind!r}")
        provenance = provenance or {}
        for key, ref in provenance.items():
            if key.endswith("Id") and ref and not self.exists(ref):
                raise DataFormatError(f"provenance link {key}={ref} does not resolve")
        artifact_id = sha256_hex(payload_bytes)
        record = {
            "v": 1,
            "id": artifact_id,
            "kind": kind,
            "payload": payload_bytes,
            "provenance": provenance,
        }
        path = self.objects / f"{artifact_id}.json"
        with self._lock:
            if not path.exists():
                fd, tmp = tempfile.mkstemp(dir=self.objects, suffix=".tmp")
                try:
                    with os.fdopen(fd, "w", encoding="utf-8") as fh:
                        json.dump(record, fh)
                    os.replace(tmp, path)
                except BaseException:
                    if os.path.exists(tmp):
                        os.unlink(tmp)
                    raise
        return artifact_id

    def exists(self, artifact_id: str) -> bool:
        return (self.objects / f"{artifact_id}.json").exists()

    def get(self, artifact_id: str, kind: str | None = None) -> Artifact | None:
        path = self.objects / f"{artifact_id}.json"
        if not path.exists():
            return None
        record = json.loads(path.read_text("utf-8"))
        if kind is not None and record["kind"] != kind:
            return None
        return Artifact(
            id=record["id"],
            kind=record["kind"],
            payload=json.loads(record["payload"]),
            provenance=record.get("provenance", {}),
        )

    def get_bytes(self, artifact_id: str, kind: str | None = None) -> str | None:
        path = self.objects / f"{artifact_id}.json"
        if not path.exists():
            return None
        record = json.loads(path.read_text("utf-8"))
        if kind is not None and record["kind"] != kind:
            return None
        return record["payload"]
