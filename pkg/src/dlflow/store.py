"""Persistent design store: one directory per design holding the graph,
metadata, and generated code; atomic writes, optimistic versioning, and
quarantine of unreadable records."""

from __future__ import annotations

import json
import os
import shutil
import tempfile
import threading
import time
import uuid
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from . import codegen
from .graph import CompGraph, from_json, to_json, validate

ENV_STORE = "DLP2C_STORE"
PROVENANCES = ("simulated", "extracted_figure", "extracted_table", "edited")


class StoreError(RuntimeError):
    pass


class NotFound(StoreError):
    pass


class VersionConflict(StoreError):
    pass


class InvalidRating(StoreError):
    pass


@dataclass
class DesignRecord:
    id: str
    graph: dict
    provenance: str = "edited"
    created: float = 0.0
    updated: float = 0.0
    version: int = 1
    ratings: list[int] = field(default_factory=list)
    draft: bool = False
    source_ref: str | None = None
    generated: dict = field(default_factory=dict)

    def meta(self) -> dict:
        return {
            "id": self.id,
            "provenance": self.provenance,
            "created": self.created,
            "updated": self.updated,
            "version": self.version,
            "ratings": self.ratings,
            "draft": self.draft,
            "source_ref": self.source_ref,
            "generated": self.generated,
        }

    def to_dict(self) -> dict:
        out = self.meta()
        out["graph"] = self.graph
        out["rating_average"] = self.rating_average()
        return out

    def rating_average(self) -> float | None:
        if not self.ratings:
            return None
        return round(sum(self.ratings) / len(self.ratings), 2)


def _atomic_write(path: Path, data: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class DesignStore:
    """File-per-design store rooted at `root` (defaults to $DLP2C_STORE)."""

    def __init__(self, root: str | Path | None = None):
        if root is None:
            root = os.environ.get(ENV_STORE)
        if root is None:
            raise StoreError(f"no store path: pass root or set {ENV_STORE}")
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._registry_lock = threading.Lock()
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._scan()

    def _lock(self, design_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks[design_id]

    def _dir(self, design_id: str) -> Path:
        return self.root / design_id

    def _scan(self) -> None:
        """Rebuild the index; unreadable records move to _corrupt/."""
        for entry in list(self.root.iterdir()):
            if not entry.is_dir() or entry.name.startswith("_"):
                continue
            try:
                self._read(entry.name)
            except (OSError, ValueError, KeyError):
                quarantine = self.root / "_corrupt"
                quarantine.mkdir(exist_ok=True)
                shutil.move(str(entry), str(quarantine / entry.name))

    def _read(self, design_id: str) -> DesignRecord:
        d = self._dir(design_id)
        if not d.is_dir():
            raise NotFound(f"no design {design_id}")
        meta = json.loads((d / "meta.json").read_text())
        graph = json.loads((d / "design.json").read_text())
        return DesignRecord(
            id=meta["id"],
            graph=graph,
            provenance=meta["provenance"],
            created=meta["created"],
            updated=meta["updated"],
            version=meta["version"],
            ratings=list(meta["ratings"]),
            draft=meta["draft"],
            source_ref=meta.get("source_ref"),
            generated=meta.get("generated", {}),
        )

    def _write(self, record: DesignRecord) -> None:
        d = self._dir(record.id)
        d.mkdir(exist_ok=True)
        _atomic_write(d / "design.json", json.dumps(record.graph, indent=2))
        _atomic_write(d / "meta.json", json.dumps(record.meta(), indent=2))

    def _regenerate(self, record: DesignRecord) -> None:
        """Refresh draft flag and generated code files from the graph."""
        d = self._dir(record.id)
        d.mkdir(exist_ok=True)
        try:
            graph = from_json(json.dumps(record.graph))
            report = validate(graph, strict_domains=False)
        except ValueError:
            report = None
        if report is None or not report.ok:
            record.draft = True
            record.generated = {}
            for name in ("model.py", "model.prototxt"):
                (d / name).unlink(missing_ok=True)
            return
        record.draft = False
        _atomic_write(d / "model.py", codegen.generate(graph, codegen.KERAS))
        _atomic_write(d / "model.prototxt", codegen.generate(graph, codegen.CAFFE))
        record.generated = {
            "keras_path": str(d / "model.py"),
            "caffe_path": str(d / "model.prototxt"),
        }

    # -- public API ---------------------------------------------------------

    def create(
        self,
        graph: dict | CompGraph,
        provenance: str = "edited",
        source_ref: str | None = None,
    ) -> DesignRecord:
        if provenance not in PROVENANCES:
            raise StoreError(f"provenance must be one of {PROVENANCES}")
        if isinstance(graph, CompGraph):
            graph = json.loads(to_json(graph))
        now = time.time()
        record = DesignRecord(
            id=str(uuid.uuid4()),
            graph=graph,
            provenance=provenance,
            created=now,
            updated=now,
            source_ref=source_ref,
        )
        with self._lock(record.id):
            self._regenerate(record)
            self._write(record)
        return record

    def get(self, design_id: str) -> DesignRecord:
        with self._lock(design_id):
            return self._read(design_id)

    def list_ids(self) -> list[str]:
        return sorted(
            e.name for e in self.root.iterdir()
            if e.is_dir() and not e.name.startswith("_")
        )

    def update(self, design_id: str, graph: dict, version: int) -> DesignRecord:
        with self._lock(design_id):
            record = self._read(design_id)
            if version != record.version:
                raise VersionConflict(
                    f"design {design_id} is at version {record.version}, update sent {version}"
                )
            record.graph = graph
            record.version += 1
            record.updated = time.time()
            self._regenerate(record)
            self._write(record)
            return record

    def rate(self, design_id: str, stars: int) -> DesignRecord:
        if not isinstance(stars, int) or not 1 <= stars <= 5:
            raise InvalidRating("stars must be an integer in [1, 5]")
        with self._lock(design_id):
            record = self._read(design_id)
            record.ratings.append(stars)
            record.updated = time.time()
            self._write(record)
            return record

    def delete(self, design_id: str) -> None:
        with self._lock(design_id):
            d = self._dir(design_id)
            if not d.is_dir():
                raise NotFound(f"no design {design_id}")
            shutil.rmtree(d)
