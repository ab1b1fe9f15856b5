"""Persistent solution catalog: one JSON file, unique ids, records never rewritten."""

from __future__ import annotations

import json
import os
import tempfile
from importlib import resources
from pathlib import Path
from typing import Any

from . import hidata
from .hidata import HIDatum

RECORD_KEYS = ("id", "datum", "classification", "modular", "provenance")


class DuplicateRecord(ValueError):
    pass


class CatalogError(ValueError):
    pass


def bundled_path() -> Path:
    return Path(str(resources.files("fuscat") / "data" / "catalog.json"))


def validate_record(rec: dict) -> None:
    missing = [k for k in RECORD_KEYS if k not in rec]
    if missing:
        raise CatalogError(f"record {rec.get('id', '?')!r} is missing {missing}")
    datum = rec["datum"]
    if "qsystem" in datum:
        q = datum["qsystem"]
        if not {"nu", "j"} <= set(q):
            raise CatalogError(f"record {rec['id']!r}: qsystem needs nu and j")
    else:
        HIDatum.from_json(datum)


class Catalog:
    def __init__(self, records: list[dict] | None = None, path: Path | None = None):
        self.path = path
        self.records: dict[str, dict] = {}
        for rec in records or []:
            self._insert(rec)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "Catalog":
        p = Path(path) if path else bundled_path()
        if not p.exists():
            return cls([], p)
        data = json.loads(p.read_text())
        return cls(data.get("records", []), p)

    def _insert(self, rec: dict) -> None:
        validate_record(rec)
        if rec["id"] in self.records:
            raise DuplicateRecord(f"catalog already holds {rec['id']!r}; records are immutable")
        self.records[rec["id"]] = rec

    def add(self, rec: dict) -> None:
        self._insert(rec)

    def save(self, path: str | Path | None = None) -> Path:
        p = Path(path) if path else self.path
        if p is None:
            raise CatalogError("no catalog path")
        p.parent.mkdir(parents=True, exist_ok=True)
        payload = json.dumps({"records": list(self.records.values())}, indent=1, default=str) + "\n"
        fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=".catalog-")
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, p)
        self.path = p
        return p

    def ids(self) -> list[str]:
        return list(self.records)

    def __contains__(self, rid: str) -> bool:
        return rid in self.records

    def __getitem__(self, rid: str) -> dict:
        try:
            return self.records[rid]
        except KeyError:
            raise CatalogError(f"no catalog record {rid!r}") from None

    def datum(self, rid: str) -> HIDatum:
        rec = self[rid]
        if "qsystem" in rec["datum"]:
            q = rec["datum"]["qsystem"]
            spec = hidata.QSystemJSpec(int(q["nu"]), tuple(float(x) for x in q["j"]), rid)
            d = hidata.from_qsystem_j(spec)
            d.meta.setdefault("id", rid)
            return d
        d = HIDatum.from_json(rec["datum"])
        d.meta["id"] = rid
        return d


def modular_summary(stage_data: dict[str, Any] | None) -> dict | None:
    if not stage_data:
        return None
    fits = stage_data.get("fits") or []
    return {"primaries": stage_data["primaries"], "T_orders": stage_data["T_orders"],
            "positive_columns": stage_data.get("positive_columns"),
            "fit": ({"H": fits[0]["H"], "beta": fits[0]["beta"]} if fits else None)}


def record_for(d: HIDatum, modular_data: dict | None = None, provenance: str | None = None,
               qsystem: hidata.QSystemJSpec | None = None) -> dict:
    datum = {"qsystem": {"nu": qsystem.nu, "j": list(qsystem.j)}} if qsystem else d.to_json()
    return {"id": d.name, "datum": datum, "classification": hidata.classify(d),
            "modular": modular_summary(modular_data),
            "provenance": provenance or d.meta.get("source", "")}
