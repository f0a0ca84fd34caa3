"""Review service core: deterministic inference over uploaded drop images,
a crystal-likelihood queue, and durable human annotations.

Persistence is two newline-delimited JSON logs under the data directory,
`items.ndjson` (inference results, append-only) and `events.ndjson`
(annotations, append-only). Every append is flushed and fsynced before the
call returns, so an acknowledged write survives a crash; startup replays
both logs to rebuild the in-memory index. A torn trailing line is discarded
on replay since its write was never acknowledged.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import imgio, zoo
from .augment import CROP_SIDE, preprocess
from .corpus import (CRYSTAL_IDS, ClassLabel, ImageRecord, Manifest,
                     label_by_id, label_by_name, make_manifest)
from .metrics import EvalReport, PredictionRecord, rank_labels, report

ACTIONS = ("confirm_crystal", "confirm_noncrystal", "relabel")
STATUSES = ("pending", "confirmed_crystal", "confirmed_noncrystal", "relabeled")
STATUS_BY_ACTION = {
    "confirm_crystal": "confirmed_crystal",
    "confirm_noncrystal": "confirmed_noncrystal",
    "relabel": "relabeled",
}
STRATEGIES = {"top1": 1, "top2": 2, "top3": 3}


class ServiceError(Exception):
    code = "service_error"


class UnknownRecordError(ServiceError):
    code = "unknown_record"


class BadRequestError(ServiceError):
    code = "bad_request"


class BadImageError(ServiceError):
    code = "bad_image"


class NoAnnotationsError(ServiceError):
    code = "no_annotations"


class LogCorruptError(ServiceError):
    code = "corrupt_log"


@dataclass(frozen=True)
class AnnotationEvent:
    record_id: str
    action: str
    reviewer: str
    label: Optional[ClassLabel] = None
    timestamp: float = 0.0
    idempotency_key: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "record_id": self.record_id,
            "action": self.action,
            "reviewer": self.reviewer,
            "label": self.label.name if self.label else None,
            "timestamp": self.timestamp,
            "idempotency_key": self.idempotency_key,
        }

    @staticmethod
    def from_json(obj: dict) -> "AnnotationEvent":
        label = obj.get("label")
        return AnnotationEvent(
            record_id=obj["record_id"],
            action=obj["action"],
            reviewer=obj["reviewer"],
            label=label_by_name(label) if label else None,
            timestamp=obj.get("timestamp", 0.0),
            idempotency_key=obj.get("idempotency_key"),
        )


@dataclass(frozen=True)
class TriageItem:
    record_id: str
    image_path: str
    image_digest: str
    checkpoint_digest: str
    activations: tuple[float, ...]
    ranked_labels: tuple[int, ...]
    crystal_flag_topn: dict[int, bool]
    ingested_at: float
    status: str = "pending"
    human_label: Optional[ClassLabel] = None
    reviewer: str = ""
    reviewed_at: Optional[float] = None

    @property
    def max_crystal_activation(self) -> float:
        return max(self.activations[c] for c in CRYSTAL_IDS)

    def ground_truth_label(self) -> Optional[ClassLabel]:
        """The label a review decided on. Relabels are explicit; a bare
        confirm means "the model's kind (crystal or not) was right", so the
        highest-ranked label of that kind stands in for the exact class."""
        if self.status == "pending":
            return None
        if self.status == "relabeled":
            return self.human_label
        want_crystal = self.status == "confirmed_crystal"
        for lid in self.ranked_labels:
            if label_by_id(lid).is_crystal == want_crystal:
                return label_by_id(lid)
        raise AssertionError("both label kinds always exist")

    def to_json(self) -> dict:
        return {
            "record_id": self.record_id,
            "image_path": self.image_path,
            "image_digest": self.image_digest,
            "checkpoint_digest": self.checkpoint_digest,
            "activations": list(self.activations),
            "ranked_labels": list(self.ranked_labels),
            "crystal_flag_topn": {str(n): v for n, v in
                                  sorted(self.crystal_flag_topn.items())},
            "ingested_at": self.ingested_at,
            "status": self.status,
            "human_label": self.human_label.name if self.human_label else None,
            "reviewer": self.reviewer,
            "reviewed_at": self.reviewed_at,
        }

    @staticmethod
    def from_json(obj: dict) -> "TriageItem":
        human = obj.get("human_label")
        return TriageItem(
            record_id=obj["record_id"],
            image_path=obj["image_path"],
            image_digest=obj["image_digest"],
            checkpoint_digest=obj["checkpoint_digest"],
            activations=tuple(obj["activations"]),
            ranked_labels=tuple(obj["ranked_labels"]),
            crystal_flag_topn={int(n): v for n, v in
                               obj["crystal_flag_topn"].items()},
            ingested_at=obj["ingested_at"],
            status=obj.get("status", "pending"),
            human_label=label_by_name(human) if human else None,
            reviewer=obj.get("reviewer", ""),
            reviewed_at=obj.get("reviewed_at"),
        )


def _digest_pixels(pixels: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(f"{pixels.shape[0]}x{pixels.shape[1]}:".encode())
    h.update(np.ascontiguousarray(pixels).tobytes())
    return h.hexdigest()


def _read_log(path: Path) -> list[dict]:
    """Parse an NDJSON log. Only the final line may be torn (a write the
    process died inside before acknowledging); damage earlier is corruption."""
    if not path.exists():
        return []
    out = []
    lines = path.read_bytes().split(b"\n")
    last = len(lines) - 1
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError:
            if i >= last - 1:
                break
            raise LogCorruptError(f"{path}: undecodable line {i + 1}")
    return out


class TriageService:
    """In-memory index over the two append-only logs, plus the model."""

    def __init__(self, data_dir: str | Path, model: zoo.Model,
                 checkpoint_digest: str):
        self.data_dir = Path(data_dir)
        self.image_dir = self.data_dir / "images"
        self.image_dir.mkdir(parents=True, exist_ok=True)
        self.model = model
        self.checkpoint_digest = checkpoint_digest
        self.items_path = self.data_dir / "items.ndjson"
        self.events_path = self.data_dir / "events.ndjson"
        self._lock = threading.Lock()
        self._items: dict[str, TriageItem] = {}
        self._by_key: dict[tuple[str, str], str] = {}
        self._seen_events: set[str] = set()
        self._event_count = 0
        self._replay()

    @staticmethod
    def from_checkpoint(data_dir: str | Path,
                        checkpoint_path: str | Path) -> "TriageService":
        model, _ = zoo.load_checkpoint(checkpoint_path)
        return TriageService(data_dir, model,
                             zoo.checkpoint_digest(checkpoint_path))

    # -- persistence ------------------------------------------------------

    def _replay(self) -> None:
        for obj in _read_log(self.items_path):
            item = TriageItem.from_json(obj)
            self._items[item.record_id] = item
            self._by_key[(item.image_digest, item.checkpoint_digest)] = \
                item.record_id
        for obj in _read_log(self.events_path):
            event = AnnotationEvent.from_json(obj)
            if event.record_id not in self._items:
                raise LogCorruptError(
                    f"event for unknown record {event.record_id!r}")
            self._apply(event)
            self._event_count += 1

    def _append(self, path: Path, obj: dict) -> None:
        with open(path, "a") as fh:
            fh.write(json.dumps(obj) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _apply(self, event: AnnotationEvent) -> TriageItem:
        item = replace(
            self._items[event.record_id],
            status=STATUS_BY_ACTION[event.action],
            human_label=event.label if event.action == "relabel" else None,
            reviewer=event.reviewer,
            reviewed_at=event.timestamp,
        )
        self._items[item.record_id] = item
        if event.idempotency_key:
            self._seen_events.add(event.idempotency_key)
        return item

    # -- ingest -----------------------------------------------------------

    def ingest_pixels(self, pixels: np.ndarray) -> TriageItem:
        """Classify one RGB image and persist the result. Re-ingesting the
        same pixels under the same checkpoint returns the existing item."""
        if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
            raise BadImageError("expected an RGB uint8 image")
        if min(pixels.shape[:2]) < CROP_SIDE:
            raise BadImageError(
                f"image must be at least {CROP_SIDE}x{CROP_SIDE}, "
                f"got {pixels.shape[1]}x{pixels.shape[0]}")
        digest = _digest_pixels(pixels)
        key = (digest, self.checkpoint_digest)
        with self._lock:
            existing = self._by_key.get(key)
            if existing is not None:
                return self._items[existing]

        tile = preprocess(pixels)
        logits = self.model.forward(tile[None])[0]
        ranked = rank_labels(logits)
        record_id = "item-" + hashlib.sha256(
            f"{digest}|{self.checkpoint_digest}".encode()).hexdigest()[:16]
        image_path = self.image_dir / f"{digest}.png"
        if not image_path.exists():
            imgio.write_rgb(image_path, pixels)
        item = TriageItem(
            record_id=record_id,
            image_path=str(image_path),
            image_digest=digest,
            checkpoint_digest=self.checkpoint_digest,
            activations=tuple(float(a) for a in logits),
            ranked_labels=ranked,
            crystal_flag_topn={n: not CRYSTAL_IDS.isdisjoint(ranked[:n])
                               for n in (1, 2, 3)},
            ingested_at=time.time(),
        )
        with self._lock:
            if key in self._by_key:  # lost a race to an identical upload
                return self._items[self._by_key[key]]
            self._append(self.items_path, item.to_json())
            self._items[record_id] = item
            self._by_key[key] = record_id
        return item

    def ingest(self, paths: Sequence[str | Path]) -> list[TriageItem]:
        return [self.ingest_pixels(imgio.read_rgb(p)) for p in paths]

    # -- queries ----------------------------------------------------------

    def get(self, record_id: str) -> TriageItem:
        try:
            return self._items[record_id]
        except KeyError:
            raise UnknownRecordError(f"no item {record_id!r}") from None

    def __len__(self) -> int:
        return len(self._items)

    @property
    def event_count(self) -> int:
        return self._event_count

    def queue(self, strategy: str = "top1", status: Optional[str] = None,
              offset: int = 0, limit: int = 50
              ) -> tuple[list[TriageItem], int]:
        """Items crystal-flagged under the strategy, most crystal-like
        first; returns (page, total matching)."""
        n = STRATEGIES.get(strategy)
        if n is None:
            raise BadRequestError(f"unknown strategy {strategy!r}")
        if status is not None and status not in STATUSES:
            raise BadRequestError(f"unknown status {status!r}")
        if offset < 0 or limit < 1:
            raise BadRequestError("offset must be >= 0 and limit >= 1")
        matches = [i for i in self._items.values()
                   if i.crystal_flag_topn[n]
                   and (status is None or i.status == status)]
        matches.sort(key=lambda i: (-i.max_crystal_activation, i.record_id))
        return matches[offset:offset + limit], len(matches)

    # -- annotation -------------------------------------------------------

    def annotate(self, record_id: str, action: str, reviewer: str,
                 label: Optional[ClassLabel] = None,
                 idempotency_key: Optional[str] = None) -> TriageItem:
        if action not in ACTIONS:
            raise BadRequestError(f"unknown action {action!r}")
        if action == "relabel" and label is None:
            raise BadRequestError("relabel requires a label")
        if action != "relabel" and label is not None:
            raise BadRequestError(f"{action} does not take a label")
        if not reviewer:
            raise BadRequestError("reviewer is required")
        with self._lock:
            if record_id not in self._items:
                raise UnknownRecordError(f"no item {record_id!r}")
            if idempotency_key and idempotency_key in self._seen_events:
                return self._items[record_id]
            event = AnnotationEvent(record_id=record_id, action=action,
                                    reviewer=reviewer, label=label,
                                    timestamp=time.time(),
                                    idempotency_key=idempotency_key)
            # durable before acknowledged: fsync the event, then index it
            self._append(self.events_path, event.to_json())
            item = self._apply(event)
            self._event_count += 1
        return item

    def events(self) -> list[AnnotationEvent]:
        return [AnnotationEvent.from_json(o) for o in _read_log(self.events_path)]

    # -- reporting and export ----------------------------------------------

    def annotated_predictions(self) -> list[PredictionRecord]:
        preds = [
            PredictionRecord(record_id=i.record_id,
                             true_label=i.ground_truth_label(),
                             activations=i.activations)
            for i in self._items.values() if i.status != "pending"
        ]
        preds.sort(key=lambda p: p.record_id)
        return preds

    def metrics_report(self) -> EvalReport:
        preds = self.annotated_predictions()
        if not preds:
            raise NoAnnotationsError("no annotated items yet")
        return report(preds)

    def export_manifest(self) -> Manifest:
        """Reviewed items as a corpus manifest usable for retraining."""
        records = [
            ImageRecord(record_id=i.record_id, source_path=i.image_path,
                        label=i.ground_truth_label())
            for i in sorted(self._items.values(), key=lambda i: i.record_id)
            if i.status != "pending"
        ]
        return make_manifest(records)


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: str
    checkpoint_path: str
    auth_token: str
    listen_address: str = "127.0.0.1:8861"

    @staticmethod
    def from_mapping(mapping: dict) -> "ServiceConfig":
        known = {"data_dir", "checkpoint_path", "auth_token", "listen_address"}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        missing = {"data_dir", "checkpoint_path", "auth_token"} - set(mapping)
        if missing:
            raise ValueError(f"missing config keys: {sorted(missing)}")
        cfg = ServiceConfig(**{k: str(v) for k, v in mapping.items()})
        cfg.host_port()
        return cfg

    def host_port(self) -> tuple[str, int]:
        host, sep, port = self.listen_address.rpartition(":")
        if not sep or not port.isdigit():
            raise ValueError(f"listen_address must be host:port, "
                             f"got {self.listen_address!r}")
        return host, int(port)
