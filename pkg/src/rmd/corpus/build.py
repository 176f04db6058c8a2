"""Database construction: ingest captioned motions, decompose captions, embed descriptions."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .._seeding import derive_seed
from ..agents.decompose import decompose
from ..errors import DecompositionError, IngestError, InvalidArgumentError, ProviderError, RMDError
from ..motion import load_motion, to_pose_features
from .database import DatabaseEntry, MotionDatabase

log = logging.getLogger(__name__)

STD_FLOOR = 1e-3


def read_annotations(path) -> list[dict]:
    """Annotation JSONL: one ``{"id", "motion", "texts"}`` record per line."""
    path = Path(path)
    try:
        lines = path.read_text("utf-8").splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read annotations {path}: {exc.strerror or exc}") from None
    records, seen = [], set()
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except ValueError as exc:
            raise IngestError(f"{path}: line {n}: invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict) or not isinstance(rec.get("id"), str) or not isinstance(rec.get("motion"), str):
            raise IngestError(f"{path}: line {n}: record needs string 'id' and 'motion'")
        texts = rec.get("texts")
        if isinstance(texts, str):
            texts = [texts]
        if not texts or not all(isinstance(t, str) and t.strip() for t in texts):
            raise IngestError(f"{path}: line {n}: entry {rec['id']!r} needs at least one non-empty text")
        if rec["id"] in seen:
            raise IngestError(f"{path}: line {n}: duplicate id {rec['id']!r}")
        seen.add(rec["id"])
        records.append({"id": rec["id"], "motion": rec["motion"], "texts": list(texts)})
    return records


def feature_stats(features: list[np.ndarray], std_floor: float = STD_FLOOR):
    """Per-channel mean and floored standard deviation over all frames."""
    if not features:
        return None, None
    allf = np.concatenate(features, axis=0)
    return allf.mean(axis=0), np.maximum(allf.std(axis=0), std_floor)


def ingest_corpus(motion_dir, annotations) -> MotionDatabase:
    """Read annotations and motion files into an un-decomposed, un-embedded database."""
    motion_dir = Path(motion_dir).resolve()
    entries, feats = [], []
    for rec in read_annotations(annotations):
        path = motion_dir / rec["motion"]
        if not path.is_file():
            raise IngestError(f"entry {rec['id']!r}: motion file not found: {path}")
        try:
            clip, skeleton = load_motion(path)
        except RMDError as exc:
            raise IngestError(f"entry {rec['id']!r}: cannot read motion {path}: {exc}") from None
        entries.append(DatabaseEntry(rec["id"], rec["motion"], clip.length, clip.fps, rec["texts"]))
        if clip.length >= 2:
            feats.append(to_pose_features(clip, skeleton))
    mean, std = feature_stats(feats)
    return MotionDatabase(entries, motion_root=motion_dir, feature_mean=mean, feature_std=std)


def decompose_entries(db: MotionDatabase, provider, *, seed: int = 0, max_retries: int = 2,
                      max_in_flight: int = 4, cache: MotionDatabase | None = None,
                      prompt_dir=None) -> MotionDatabase:
    """Attach one decomposition per entry (temperature 0).

    Entries that already carry a decomposition, or whose decomposition input
    matches an entry of ``cache`` with the same id, make no provider call.
    """
    cached = {}
    if cache is not None:
        cached = {e.id: e for e in cache if e.decomposition is not None}

    def one(entry: DatabaseEntry) -> DatabaseEntry:
        if entry.decomposition is not None:
            return entry
        hit = cached.get(entry.id)
        if hit is not None and hit.decomposition_input == entry.decomposition_input:
            return entry.with_(decomposition=hit.decomposition)
        try:
            d = decompose(provider, entry.decomposition_input, temperature=0.0,
                          seed=derive_seed(seed, f"db-decompose:{entry.id}"), max_retries=max_retries,
                          prompt_dir=prompt_dir)
        except DecompositionError as exc:
            raise DecompositionError(f"entry {entry.id!r}: {exc}", raw_reply=exc.raw_reply, causes=exc.causes) from exc
        except ProviderError as exc:
            raise ProviderError(f"entry {entry.id!r}: {exc}") from exc
        return entry.with_(decomposition=d)

    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        entries = list(pool.map(one, db.entries))
    return db.replace(entries)


def _embed_with_retry(provider, texts, max_retries):
    last = None
    for attempt in range(max_retries + 1):
        try:
            out = np.asarray(provider.embed(texts), dtype=np.float32)
            if out.shape[0] != len(texts):
                raise ProviderError(f"embedder returned {out.shape[0]} rows for {len(texts)} texts")
            return out
        except ProviderError as exc:
            last = exc
            if attempt < max_retries:
                log.warning("embedding batch failed (%s); retry %d/%d", exc, attempt + 1, max_retries)
    raise last


def embed_all(db: MotionDatabase, provider, *, batch_size: int = 64, max_in_flight: int = 4,
              max_retries: int = 2, cache: MotionDatabase | None = None) -> MotionDatabase:
    """Embed every full, half and fine description of every entry.

    Identical texts are embedded once. Vectors are reused from ``cache`` when
    it was built with the same provider tag.
    """
    if db.embedding_dim is not None and provider.dim is not None and provider.dim != db.embedding_dim and len(db):
        raise InvalidArgumentError(f"provider dim {provider.dim} != database dim {db.embedding_dim}")
    if batch_size < 1:
        raise InvalidArgumentError("batch_size must be >= 1")
    known: dict[str, np.ndarray] = {}
    if cache is not None and cache.provider_tag == provider.tag:
        for e in cache:
            descs = e.descriptions()
            for k, v in e.embeddings.items():
                if k in descs:
                    known[descs[k]] = v
    owners: dict[str, tuple[str, str]] = {}
    for e in db:
        if e.decomposition is None:
            raise InvalidArgumentError(f"entry {e.id!r} has no decomposition; decompose before embedding")
        for k, text in e.descriptions().items():
            if text not in known:
                owners.setdefault(text, (e.id, k))
    todo = list(owners)
    batches = [todo[i:i + batch_size] for i in range(0, len(todo), batch_size)]

    def run(batch):
        try:
            return _embed_with_retry(provider, batch, max_retries)
        except ProviderError as exc:
            eid, key = owners[batch[0]]
            raise ProviderError(f"embedding failed for entry {eid!r} description {key!r}"
                                f"{' and others' if len(batch) > 1 else ''}: {exc}", key=key) from exc

    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        for batch, vecs in zip(batches, pool.map(run, batches)):
            known.update(zip(batch, vecs))
    dims = {v.shape[0] for v in known.values()}
    if len(dims) > 1:
        raise ProviderError(f"embedder returned mixed dimensions {sorted(dims)}")
    dim = dims.pop() if dims else (provider.dim or db.embedding_dim)
    entries = [e.with_(embeddings={k: known[t] for k, t in e.descriptions().items()}) for e in db]
    return db.replace(entries, embedding_dim=dim, provider_tag=provider.tag)


def build_database(motion_dir, annotations, llm, embedder, *, seed: int = 0, cache: MotionDatabase | None = None,
                   max_retries: int = 2, max_in_flight: int = 4, prompt_dir=None) -> MotionDatabase:
    """ingest -> decompose (cached) -> embed."""
    db = ingest_corpus(motion_dir, annotations)
    db = decompose_entries(db, llm, seed=seed, max_retries=max_retries, max_in_flight=max_in_flight,
                           cache=cache, prompt_dir=prompt_dir)
    return embed_all(db, embedder, max_retries=max_retries, max_in_flight=max_in_flight, cache=cache)
