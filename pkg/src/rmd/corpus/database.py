"""In-memory retrieval database of captioned motions."""
from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from ..agents.decompose import FINE_PARTS, HALF_PARTS, DecompositionSet
from ..errors import InvalidArgumentError
from ..motion import MotionClip, SkeletonDef, load_motion

SCHEMA_VERSION = 1
EMBEDDING_KEYS = ("full",) + tuple(f"half.{p}" for p in HALF_PARTS) + tuple(f"fine.{p}" for p in FINE_PARTS)
INFORM_LINE = "The following descriptions all describe the same motion."


def part_key(part: str) -> str:
    """Map a body-part name (``full``, ``upper``, ``left_arm``...) to its description key."""
    if part == "full":
        return "full"
    if part in HALF_PARTS:
        return f"half.{part}"
    if part in FINE_PARTS:
        return f"fine.{part}"
    raise InvalidArgumentError(f"unknown body part {part!r}")


def _frozen_vector(v) -> np.ndarray:
    a = np.array(v, dtype=np.float32)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DatabaseEntry:
    id: str
    motion_path: str
    length: int
    fps: float
    texts_full: tuple
    decomposition: DecompositionSet | None = None
    embeddings: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise InvalidArgumentError("entry id is empty")
        if int(self.length) < 1:
            raise InvalidArgumentError(f"entry {self.id!r}: length must be >= 1")
        texts = tuple(self.texts_full)
        if not texts or not all(isinstance(t, str) and t.strip() for t in texts):
            raise InvalidArgumentError(f"entry {self.id!r}: needs at least one non-empty text")
        object.__setattr__(self, "texts_full", texts)
        object.__setattr__(self, "length", int(self.length))
        object.__setattr__(self, "fps", float(self.fps))
        object.__setattr__(self, "embeddings", {k: _frozen_vector(v) for k, v in self.embeddings.items()})

    @property
    def full_text(self) -> str:
        return "\n".join(self.texts_full)

    @property
    def decomposition_input(self) -> str:
        """Text sent to the decomposition agent; multi-caption entries get an informing first line."""
        if len(self.texts_full) == 1:
            return self.texts_full[0]
        return INFORM_LINE + "\n" + self.full_text

    def descriptions(self) -> dict:
        """Description key -> text for every stored description."""
        d = {"full": self.full_text}
        if self.decomposition is not None:
            d.update(self.decomposition.descriptions())
        return d

    @property
    def is_embedded(self) -> bool:
        return self.decomposition is not None and set(self.embeddings) == set(EMBEDDING_KEYS)

    def with_(self, **changes) -> "DatabaseEntry":
        return replace(self, **changes)

    def __eq__(self, other):
        if not isinstance(other, DatabaseEntry):
            return NotImplemented
        return ((self.id, self.motion_path, self.length, self.fps, self.texts_full, self.decomposition)
                == (other.id, other.motion_path, other.length, other.fps, other.texts_full, other.decomposition)
                and self.embeddings.keys() == other.embeddings.keys()
                and all(np.array_equal(v, other.embeddings[k]) for k, v in self.embeddings.items()))

    __hash__ = None


class MotionDatabase:
    """Ordered, read-only collection of entries sharing one embedding space.

    ``feature_mean`` / ``feature_std`` are per-channel pose-feature statistics
    used to z-score features before diffusion refinement.
    """

    def __init__(self, entries: Iterable[DatabaseEntry] = (), *, embedding_dim: int | None = None,
                 provider_tag: str | None = None, motion_root=".", feature_mean=None, feature_std=None,
                 schema_version: int = SCHEMA_VERSION):
        self._entries = tuple(entries)
        self.embedding_dim = embedding_dim
        self.provider_tag = provider_tag
        self.motion_root = Path(motion_root)
        self.feature_mean = None if feature_mean is None else _frozen_vector(feature_mean)
        self.feature_std = None if feature_std is None else _frozen_vector(feature_std)
        self.schema_version = schema_version
        self._by_id = {}
        for e in self._entries:
            if e.id in self._by_id:
                raise InvalidArgumentError(f"duplicate entry id {e.id!r}")
            self._by_id[e.id] = e
            for key, v in e.embeddings.items():
                if embedding_dim is not None and v.shape != (embedding_dim,):
                    raise InvalidArgumentError(f"entry {e.id!r} embedding {key!r} has shape {v.shape}, "
                                               f"expected ({embedding_dim},)")
        self._matrices: dict = {}
        self._lock = threading.Lock()

    @property
    def entries(self) -> tuple:
        return self._entries

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __getitem__(self, entry_id: str) -> DatabaseEntry:
        try:
            return self._by_id[entry_id]
        except KeyError:
            raise InvalidArgumentError(f"no entry with id {entry_id!r}") from None

    def __contains__(self, entry_id) -> bool:
        return entry_id in self._by_id

    @property
    def ids(self) -> tuple:
        return tuple(e.id for e in self._entries)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self._entries], dtype=np.int64)

    @property
    def is_embedded(self) -> bool:
        return all(e.is_embedded for e in self._entries)

    def matrix(self, key: str) -> np.ndarray:
        """(N, dim) float64 matrix of the ``key`` embedding of every entry (cached)."""
        if key not in EMBEDDING_KEYS:
            raise InvalidArgumentError(f"unknown description key {key!r}")
        with self._lock:
            if key not in self._matrices:
                missing = [e.id for e in self._entries if key not in e.embeddings]
                if missing:
                    raise InvalidArgumentError(f"entry {missing[0]!r} has no {key!r} embedding")
                m = np.array([e.embeddings[key] for e in self._entries], dtype=np.float64)
                m = m.reshape(len(self._entries), self.embedding_dim or (m.shape[1] if m.ndim == 2 else 0))
                m.setflags(write=False)
                self._matrices[key] = m
            return self._matrices[key]

    def motion_file(self, entry: DatabaseEntry | str) -> Path:
        entry = self[entry] if isinstance(entry, str) else entry
        return self.motion_root / entry.motion_path

    def load_clip(self, entry: DatabaseEntry | str) -> tuple[MotionClip, SkeletonDef]:
        return load_motion(self.motion_file(entry))

    def replace(self, entries=None, **changes) -> "MotionDatabase":
        kw = dict(embedding_dim=self.embedding_dim, provider_tag=self.provider_tag, motion_root=self.motion_root,
                  feature_mean=self.feature_mean, feature_std=self.feature_std, schema_version=self.schema_version)
        kw.update(changes)
        return MotionDatabase(self._entries if entries is None else entries, **kw)

    def __eq__(self, other):
        if not isinstance(other, MotionDatabase):
            return NotImplemented

        def same(a, b):
            return (a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b))

        return (self._entries == other._entries and self.embedding_dim == other.embedding_dim
                and self.provider_tag == other.provider_tag and self.schema_version == other.schema_version
                and self.motion_root.resolve() == other.motion_root.resolve()
                and same(self.feature_mean, other.feature_mean) and same(self.feature_std, other.feature_std))

    __hash__ = None

    def __repr__(self):
        return f"MotionDatabase({len(self)} entries, dim={self.embedding_dim}, tag={self.provider_tag!r})"
