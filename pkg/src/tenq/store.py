"""Persisting itemization results: per-item text files named
"{document_id}_{part}_{item_id}.txt", a JSON manifest per filing, and
exports to directory / JSON / CSV forms."""

from __future__ import annotations

import csv
import io
import json
import zipfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Sequence

from tenq import __version__
from tenq.docmodel import NormalizedDoc
from tenq.itemize import ItemRecord

MANIFEST_SCHEMA = 1


class DuplicateKey(Exception):
    """Two records render the same item key: an upstream invariant broke."""


class ExportFormat(Enum):
    PLAIN_DIR = "dir"
    JSON_BUNDLE = "json"
    CSV = "csv"


def document_id(filing_id: str) -> str:
    """Filesystem-safe document id: the accession number without dashes."""
    return filing_id.replace("-", "")


def item_key(doc_id: str, part: int, item_id: str) -> str:
    return f"{doc_id}_{part}_{item_id}"


@dataclass
class Manifest:
    filing_id: str
    format: str
    split_source: str | None
    items: list[dict]
    outcomes: dict = field(default_factory=dict)
    created_at: str = ""
    tool_version: str = __version__
    schema: int = MANIFEST_SCHEMA

    @property
    def document_id(self) -> str:
        return document_id(self.filing_id)

    def keys(self) -> list[str]:
        return [it["key"] for it in self.items]

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "filing_id": self.filing_id,
            "document_id": self.document_id,
            "format": self.format,
            "split_source": self.split_source,
            "items": self.items,
            "outcomes": self.outcomes,
            "created_at": self.created_at,
            "tool_version": self.tool_version,
        }

    @staticmethod
    def from_dict(d: dict) -> "Manifest":
        return Manifest(
            filing_id=d["filing_id"],
            format=d["format"],
            split_source=d.get("split_source"),
            items=list(d["items"]),
            outcomes=dict(d.get("outcomes", {})),
            created_at=d.get("created_at", ""),
            tool_version=d.get("tool_version", ""),
            schema=int(d.get("schema", MANIFEST_SCHEMA)),
        )


def _content_text(doc: NormalizedDoc, start: int, stop: int) -> str:
    return "\n\n".join(b.text for b in doc.blocks[start:stop] if b.text)


def write_items(
    filing: NormalizedDoc,
    records: Sequence[ItemRecord],
    out_dir: Path | str,
    *,
    split_source: str | None = None,
    outcomes: dict | None = None,
) -> Manifest:
    """Write one UTF-8 text file per record plus the filing manifest.

    Content is the record's block texts joined by blank lines. Re-running
    is idempotent: files are byte-identical, the manifest differs only in
    its timestamp. Raises DuplicateKey when two records collide.
    """
    out_dir = Path(out_dir)
    doc_id = document_id(filing.filing_id)
    seen: set[str] = set()
    items: list[dict] = []
    payloads: list[tuple[Path, str]] = []
    for rec in records:
        key = item_key(doc_id, rec.part, rec.item_id)
        if key in seen:
            raise DuplicateKey(key)
        seen.add(key)
        payloads.append((out_dir / f"{key}.txt", _content_text(filing, rec.content_start, rec.content_stop)))
        items.append(
            {
                "key": key,
                "part": rec.part,
                "item_id": rec.item_id,
                "method": rec.method.value,
                "title_block": rec.title_block,
                "content_start": rec.content_start,
                "content_stop": rec.content_stop,
                "title_text": rec.title_text,
            }
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    for path, text in payloads:
        path.write_text(text, encoding="utf-8")
    manifest = Manifest(
        filing_id=filing.filing_id,
        format=filing.format.value,
        split_source=split_source,
        items=items,
        outcomes=dict(outcomes or {}),
        created_at=datetime.now(timezone.utc).isoformat(),
    )
    manifest_path = out_dir / f"{doc_id}.manifest.json"
    manifest_path.write_text(json.dumps(manifest.to_dict(), indent=1) + "\n", encoding="utf-8")
    return manifest


def load_manifest(path: Path | str) -> Manifest:
    return Manifest.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def list_manifests(out_dir: Path | str) -> list[Manifest]:
    return [load_manifest(p) for p in sorted(Path(out_dir).glob("*.manifest.json"))]


def read_item_texts(out_dir: Path | str, manifest: Manifest) -> dict[str, str]:
    out_dir = Path(out_dir)
    return {
        key: (out_dir / f"{key}.txt").read_text(encoding="utf-8") for key in manifest.keys()
    }


def export_bytes(out_dir: Path | str, manifest: Manifest, fmt: ExportFormat) -> tuple[str, bytes]:
    """Render one filing's export as (suggested filename, bytes).

    The same function backs the CLI and the HTTP service, so exports are
    byte-identical regardless of the route. The directory format renders
    as a deterministic (timestamp-free, stored) zip of the item files.
    """
    texts = read_item_texts(out_dir, manifest)
    doc_id = manifest.document_id
    if fmt is ExportFormat.JSON_BUNDLE:
        body = json.dumps({k: texts[k] for k in sorted(texts)}, indent=1, ensure_ascii=False) + "\n"
        return f"{doc_id}.json", body.encode("utf-8")
    if fmt is ExportFormat.CSV:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "part", "item_id", "text"])
        for it in sorted(manifest.items, key=lambda d: d["key"]):
            writer.writerow([it["key"], it["part"], it["item_id"], texts[it["key"]]])
        return f"{doc_id}.csv", buf.getvalue().encode("utf-8")
    if fmt is ExportFormat.PLAIN_DIR:
        buf_b = io.BytesIO()
        with zipfile.ZipFile(buf_b, "w", compression=zipfile.ZIP_STORED) as zf:
            for key in sorted(texts):
                info = zipfile.ZipInfo(f"{key}.txt", date_time=(1980, 1, 1, 0, 0, 0))
                zf.writestr(info, texts[key].encode("utf-8"))
        return f"{doc_id}.zip", buf_b.getvalue()
    raise ValueError(f"unknown export format: {fmt}")  # pragma: no cover


def export(out_dir: Path | str, manifest: Manifest, fmt: ExportFormat, dest: Path | str) -> Path:
    """Write one filing's export under ``dest`` and return the path.

    PLAIN_DIR writes the txt layout into a directory; the other formats
    write a single file.
    """
    dest = Path(dest)
    if fmt is ExportFormat.PLAIN_DIR:
        dest.mkdir(parents=True, exist_ok=True)
        texts = read_item_texts(out_dir, manifest)
        for key in sorted(texts):
            (dest / f"{key}.txt").write_text(texts[key], encoding="utf-8")
        return dest
    name, body = export_bytes(out_dir, manifest, fmt)
    dest.mkdir(parents=True, exist_ok=True)
    target = dest / name
    target.write_bytes(body)
    return target


def parse_csv_export(body: bytes) -> dict[str, str]:
    """Inverse of the CSV export: key -> text."""
    reader = csv.DictReader(io.StringIO(body.decode("utf-8")))
    return {row["key"]: row["text"] for row in reader}
