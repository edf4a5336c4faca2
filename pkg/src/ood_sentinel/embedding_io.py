"""EMB1 embedding files and dataset manifests.

EMB1 is a little-endian binary matrix format shared with the encoder
toolchain: bytes 0-3 magic ``EMB1``, byte 4 version (1), byte 5 dtype code
(1 = float32), bytes 6-7 reserved zero, bytes 8-11 count (u32), bytes
12-15 dim (u32), then count*dim float32 values row-major. No footer.
Serialization is deterministic, so equal inputs give byte-identical files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError

MAGIC = b"EMB1"
VERSION = 1
DTYPE_FLOAT32 = 1
_HEADER = struct.Struct("<4sBBHII")

# Guard against headers whose count*dim would allocate absurd amounts
# before the payload-length check can catch them.
_MAX_CELLS = 1 << 40


@dataclass(frozen=True)
class EmbeddingMeta:
    encoder_name: str = ""
    label: str = ""


@dataclass(frozen=True)
class EmbeddingSet:
    """Immutable count x dim float32 matrix with provenance metadata."""

    vectors: np.ndarray
    meta: EmbeddingMeta = field(default_factory=EmbeddingMeta)

    def __post_init__(self):
        v = self.vectors
        if v.ndim != 2:
            raise DataError(f"embedding matrix must be 2-D, got shape {v.shape}")
        if v.shape[1] < 1:
            raise DataError("embedding dim must be >= 1")
        if v.dtype != np.float32:
            raise DataError(f"embedding storage must be float32, got {v.dtype}")
        if not np.isfinite(v).all():
            raise DataError("embedding matrix contains NaN or Inf entries")
        v.setflags(write=False)

    @classmethod
    def from_array(cls, arr, encoder_name: str = "", label: str = "") -> "EmbeddingSet":
        """Build a set from any array-like, casting to the float32 storage dtype."""
        a = np.ascontiguousarray(arr, dtype=np.float64)
        if a.ndim != 2:
            raise DataError(f"embedding matrix must be 2-D, got shape {a.shape}")
        if not np.isfinite(a).all():
            raise DataError("embedding matrix contains NaN or Inf entries")
        return cls(a.astype(np.float32), EmbeddingMeta(encoder_name, label))

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def row(self, i: int) -> np.ndarray:
        """Row i as float64; the engine computes in 64-bit after load."""
        return self.vectors[i].astype(np.float64)

    def rows64(self) -> np.ndarray:
        return self.vectors.astype(np.float64)


def read_embedding_file(path) -> EmbeddingSet:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, dtype, reserved, count, dim = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype != DTYPE_FLOAT32:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    if reserved != 0:
        raise FormatError(f"{path}: reserved header bytes must be zero")
    if dim == 0:
        raise FormatError(f"{path}: dim must be positive")
    if count * dim > _MAX_CELLS:
        raise FormatError(f"{path}: count*dim overflows sane limits ({count}x{dim})")
    payload = blob[_HEADER.size:]
    expected = count * dim * 4
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} "
            f"for {count}x{dim} float32"
        )
    vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim).copy()
    if not np.isfinite(vectors).all():
        raise DataError(f"{path}: payload contains NaN or Inf entries")
    return EmbeddingSet(vectors)


def write_embedding_file(embedding_set: EmbeddingSet, path) -> None:
    path = Path(path)
    header = _HEADER.pack(
        MAGIC, VERSION, DTYPE_FLOAT32, 0, embedding_set.count, embedding_set.dim
    )
    payload = np.ascontiguousarray(embedding_set.vectors, dtype="<f4").tobytes()
    try:
        path.write_bytes(header + payload)
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc


_ROLES = ("id", "ood")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    role: str
    ood_type: str = ""
    encoder: str = ""


@dataclass(frozen=True)
class PromptFiles:
    normal: str = ""
    anomalous: str = ""


@dataclass(frozen=True)
class DatasetManifest:
    """Catalog of embedding files plus the prompt-embedding file pair."""

    entries: tuple[ManifestEntry, ...]
    prompt_files: PromptFiles = field(default_factory=PromptFiles)
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.role not in _ROLES:
                raise DataError(f"manifest entry {e.path!r}: unknown role {e.role!r}")
            if e.role == "ood" and not e.ood_type:
                raise DataError(f"manifest entry {e.path!r}: ood entry needs ood_type")
            if e.role == "id" and e.ood_type:
                raise DataError(f"manifest entry {e.path!r}: id entry must have empty ood_type")
            if e.path in seen:
                raise DataError(f"manifest lists {e.path!r} twice")
            seen.add(e.path)

    def resolve(self, rel_path: str) -> Path:
        """Entry paths are relative to the manifest's own directory."""
        p = Path(rel_path)
        return p if p.is_absolute() else self.base_dir / p


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: not a valid manifest: {exc}") from exc
    if not isinstance(doc, dict) or "entries" not in doc:
        raise FormatError(f"{path}: manifest must be an object with an 'entries' array")
    raw_entries = doc["entries"]
    if not isinstance(raw_entries, list):
        raise FormatError(f"{path}: 'entries' must be an array")
    entries = []
    for raw in raw_entries:
        if not isinstance(raw, dict) or "path" not in raw or "role" not in raw:
            raise FormatError(f"{path}: every entry needs 'path' and 'role'")
        entries.append(
            ManifestEntry(
                path=str(raw["path"]),
                role=str(raw["role"]),
                ood_type=str(raw.get("ood_type", "")),
                encoder=str(raw.get("encoder", "")),
            )
        )
    prompts_raw = doc.get("prompt_files", {})
    prompts = PromptFiles(
        normal=str(prompts_raw.get("normal", "")),
        anomalous=str(prompts_raw.get("anomalous", "")),
    )
    return DatasetManifest(tuple(entries), prompts, base_dir=path.parent)


def write_manifest(manifest: DatasetManifest, path) -> None:
    doc = {
        "entries": [
            {"path": e.path, "role": e.role, "ood_type": e.ood_type, "encoder": e.encoder}
            for e in manifest.entries
        ],
        "prompt_files": {
            "normal": manifest.prompt_files.normal,
            "anomalous": manifest.prompt_files.anomalous,
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
