"""Content-addressed dataset store.

Uploaded CSV bytes are stored verbatim under an id derived from their
hash, so identical uploads are idempotent. Column kind and role
overrides live in a sidecar JSON next to the raw file and are applied
at parse time.
"""
from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from pathlib import Path

from ..errors import ContractError, EffectLabError
from ..table import SampleTable


class DatasetNotFound(EffectLabError):
    """No dataset stored under the requested id."""


@dataclass
class DatasetRecord:
    """A stored dataset: parsed table plus its identity and overrides."""

    dataset_id: str
    table: SampleTable
    kinds: dict[str, str]
    roles: dict[str, str]

    def describe(self) -> dict:
        return {
            "id": self.dataset_id,
            "n_rows": self.table.n_rows,
            "columns": [
                {
                    "name": c.name,
                    "kind": c.kind,
                    "categories": c.categories,
                    "role": c.role,
                }
                for c in self.table.columns
            ],
        }


class DatasetStore:
    """Datasets as raw CSV files addressed by content hash."""

    def __init__(self, root):
        self.root = Path(root)
        (self.root / "datasets").mkdir(parents=True, exist_ok=True)
        (self.root / "checkpoints").mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _csv_path(self, dataset_id: str) -> Path:
        return self.root / "datasets" / f"{dataset_id}.csv"

    def _meta_path(self, dataset_id: str) -> Path:
        return self.root / "datasets" / f"{dataset_id}.meta.json"

    def checkpoint_path(self, name: str) -> Path:
        if "/" in name or "\\" in name or name.startswith("."):
            raise ContractError(f"invalid checkpoint name {name!r}")
        return self.root / "checkpoints" / name

    def put_csv(self, raw: bytes) -> DatasetRecord:
        """Store raw CSV bytes; parsing is validated before anything is kept."""
        if isinstance(raw, str):
            raw = raw.encode("utf-8")
        dataset_id = hashlib.sha256(raw).hexdigest()[:16]
        SampleTable.from_csv(raw)  # raises with location info on bad input
        with self._lock:
            if not self._csv_path(dataset_id).exists():
                self._csv_path(dataset_id).write_bytes(raw)
                self._meta_path(dataset_id).write_text(
                    json.dumps({"kinds": {}, "roles": {}}), encoding="utf-8"
                )
        return self.get(dataset_id)

    def get(self, dataset_id: str) -> DatasetRecord:
        path = self._csv_path(dataset_id)
        if not path.exists():
            raise DatasetNotFound(f"no dataset with id {dataset_id!r}")
        meta = json.loads(self._meta_path(dataset_id).read_text(encoding="utf-8"))
        table = SampleTable.from_csv(
            path.read_bytes(), kinds=meta["kinds"], roles=meta["roles"]
        )
        return DatasetRecord(dataset_id, table, meta["kinds"], meta["roles"])

    def raw_csv(self, dataset_id: str) -> bytes:
        path = self._csv_path(dataset_id)
        if not path.exists():
            raise DatasetNotFound(f"no dataset with id {dataset_id!r}")
        return path.read_bytes()

    def set_columns(self, dataset_id: str, kinds: dict[str, str] | None = None,
                    roles: dict[str, str] | None = None) -> DatasetRecord:
        """Merge column overrides; the table must still parse under them."""
        record = self.get(dataset_id)
        new_kinds = dict(record.kinds)
        new_roles = dict(record.roles)
        known = set(record.table.column_names)
        for mapping in (kinds or {}, roles or {}):
            unknown = set(mapping) - known
            if unknown:
                raise ContractError(f"unknown columns {sorted(unknown)}")
        new_kinds.update(kinds or {})
        new_roles.update(roles or {})
        # validate before persisting
        SampleTable.from_csv(self.raw_csv(dataset_id), kinds=new_kinds, roles=new_roles)
        with self._lock:
            self._meta_path(dataset_id).write_text(
                json.dumps({"kinds": new_kinds, "roles": new_roles}, sort_keys=True),
                encoding="utf-8",
            )
        return self.get(dataset_id)

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "datasets").glob("*.csv"))
