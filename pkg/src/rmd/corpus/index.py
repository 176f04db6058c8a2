"""JSONL index persistence.

Line 1 is a header record; each following line is one entry. Keys are
sorted and floats are written with 9 significant digits, so saving a loaded
index reproduces the file byte for byte.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from ..agents.decompose import DecompositionSet
from ..errors import IndexFormatError, InvalidArgumentError, SchemaVersionError
from .database import EMBEDDING_KEYS, SCHEMA_VERSION, DatabaseEntry, MotionDatabase

NORM_TOL = 1e-6
HEADER_FIELDS = ("schema_version", "embedding_dim", "provider_tag", "count", "motion_root",
                 "feature_mean", "feature_std")


def _floats(v) -> list | None:
    if v is None:
        return None
    return [float(f"{x:.9g}") for x in np.asarray(v, dtype=np.float64).ravel()]


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def entry_record(e: DatabaseEntry) -> dict:
    return {
        "id": e.id,
        "motion_path": e.motion_path,
        "length": e.length,
        "fps": float(f"{e.fps:.9g}"),
        "texts_full": list(e.texts_full),
        "decomposition": e.decomposition.to_dict(),
        "embeddings": {k: _floats(v) for k, v in e.embeddings.items()},
    }


def save_index(db: MotionDatabase, path) -> None:
    path = Path(path)
    if not db.is_embedded:
        raise InvalidArgumentError("only fully decomposed and embedded databases can be saved")
    root = os.path.relpath(db.motion_root.resolve(), path.resolve().parent)
    header = {
        "schema_version": SCHEMA_VERSION,
        "embedding_dim": db.embedding_dim,
        "provider_tag": db.provider_tag,
        "count": len(db),
        "motion_root": Path(root).as_posix(),
        "feature_mean": _floats(db.feature_mean),
        "feature_std": _floats(db.feature_std),
    }
    lines = [_dumps(header)] + [_dumps(entry_record(e)) for e in db]
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", "utf-8")
    os.replace(tmp, path)


def _parse(line: str, n: int) -> dict:
    try:
        obj = json.loads(line)
    except ValueError as exc:
        raise IndexFormatError(f"invalid JSON ({exc.msg})", line=n) from None
    if not isinstance(obj, dict):
        raise IndexFormatError("record is not a JSON object", line=n)
    return obj


def _entry(rec: dict, n: int, dim: int) -> DatabaseEntry:
    missing = [k for k in ("id", "motion_path", "length", "fps", "texts_full", "decomposition", "embeddings")
               if k not in rec]
    if missing:
        raise IndexFormatError(f"entry lacks fields {missing}", line=n)
    emb = rec["embeddings"]
    if not isinstance(emb, dict) or set(emb) != set(EMBEDDING_KEYS):
        got = sorted(emb) if isinstance(emb, dict) else type(emb).__name__
        raise IndexFormatError(f"entry {rec['id']!r}: embeddings must have keys {list(EMBEDDING_KEYS)}, got {got}",
                               line=n)
    vectors = {}
    for key, v in emb.items():
        a = np.asarray(v, dtype=np.float32)
        if a.shape != (dim,):
            raise IndexFormatError(f"entry {rec['id']!r}: embedding {key!r} has shape {a.shape}, expected ({dim},)",
                                   line=n)
        norm = float(np.linalg.norm(a.astype(np.float64)))
        if abs(norm - 1.0) > NORM_TOL:
            raise IndexFormatError(f"entry {rec['id']!r}: embedding {key!r} has norm {norm:.9g}", line=n)
        vectors[key] = a
    try:
        return DatabaseEntry(rec["id"], rec["motion_path"], rec["length"], rec["fps"], rec["texts_full"],
                             DecompositionSet.from_dict(rec["decomposition"]), vectors)
    except (InvalidArgumentError, TypeError) as exc:
        raise IndexFormatError(str(exc), line=n) from None


def load_index(path) -> MotionDatabase:
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read index {path}: {exc.strerror or exc}") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise IndexFormatError("index file is empty", line=1)
    header = _parse(lines[0], 1)
    if header.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported index schema_version {header.get('schema_version')!r} "
                                 f"(expected {SCHEMA_VERSION})", line=1)
    missing = [k for k in HEADER_FIELDS if k not in header]
    if missing:
        raise IndexFormatError(f"header lacks fields {missing}", line=1)
    dim = header["embedding_dim"]
    entries, seen = [], set()
    for n, line in enumerate(lines[1:], start=2):
        e = _entry(_parse(line, n), n, dim)
        if e.id in seen:
            raise IndexFormatError(f"duplicate entry id {e.id!r}", line=n)
        seen.add(e.id)
        entries.append(e)
    if len(entries) != header["count"]:
        raise IndexFormatError(f"header count {header['count']} but {len(entries)} entries", line=len(lines))
    root = Path(header["motion_root"])
    if not root.is_absolute():
        root = (path.resolve().parent / root).resolve()
    return MotionDatabase(entries, embedding_dim=dim, provider_tag=header["provider_tag"], motion_root=root,
                          feature_mean=header["feature_mean"], feature_std=header["feature_std"])
