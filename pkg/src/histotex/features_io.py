"""Shared binary interchange format for per-image feature vectors.

Layout (little-endian): magic ``KPFT``, version u16, count u32, dim u32,
then count*dim float32 values row-major. Labels travel in a text sidecar
(default: the feature path plus ``.labels``) with one ``id,class_label``
line per row, in row order. The same format carries LBP histograms and
externally extracted deep features, so the evaluation harness treats all
feature families uniformly.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .validation import check_labels, check_matrix

_MAGIC = b"KPFT"
_VERSION = 1
_HEADER = "<HII"  # version, count, dim


class FeatureFileError(ValueError):
    """Malformed feature file; ``offset`` is the failing byte position."""

    def __init__(self, message, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class FeatureSet:
    """Vectors plus per-row ids and integer class labels."""

    vectors: np.ndarray = field(repr=False)
    ids: tuple
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.ids) != self.vectors.shape[0]:
            raise ValueError("ids must match vector count")
        if self.labels.shape[0] != self.vectors.shape[0]:
            raise ValueError("labels must match vector count")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("ids must be unique")

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def default_labels_path(path) -> Path:
    return Path(str(path) + ".labels")


def write_feature_file(path, vectors, ids, labels, labels_path=None) -> None:
    """Write vectors as float32 plus the labels sidecar."""
    vectors = check_matrix(vectors, "vectors")
    n, dim = vectors.shape
    ids = [str(i) for i in ids]
    labels = check_labels(labels, n)
    if len(ids) != n:
        raise ValueError(f"got {len(ids)} ids for {n} vectors")
    if len(set(ids)) != len(ids):
        raise ValueError("ids must be unique")
    for image_id in ids:
        if "," in image_id or "\n" in image_id:
            raise ValueError(f"id {image_id!r} may not contain ',' or newline")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack(_HEADER, _VERSION, n, dim))
        fh.write(np.ascontiguousarray(vectors, dtype="<f4").tobytes(order="C"))
    sidecar = default_labels_path(path) if labels_path is None else Path(labels_path)
    lines = [f"{i},{int(lbl)}\n" for i, lbl in zip(ids, labels)]
    sidecar.write_text("".join(lines), encoding="utf-8")


def read_feature_file(path, labels_path=None) -> FeatureSet:
    """Parse a feature file and its labels sidecar.

    Vectors are upcast to float64 for metric computation; the stored
    float32 values are preserved exactly.
    """
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 4 or blob[:4] != _MAGIC:
        raise FeatureFileError(
            f"{path}: bad magic {blob[:4]!r}, expected {_MAGIC!r}", offset=0
        )
    header_size = struct.calcsize(_HEADER)
    if len(blob) < 4 + header_size:
        raise FeatureFileError(f"{path}: truncated header", offset=len(blob))
    version, count, dim = struct.unpack_from(_HEADER, blob, 4)
    if version != _VERSION:
        raise FeatureFileError(
            f"{path}: unsupported version {version}", offset=4
        )
    body_offset = 4 + header_size
    expected = body_offset + count * dim * 4
    if len(blob) != expected:
        raise FeatureFileError(
            f"{path}: body should end at byte {expected}, file has "
            f"{len(blob)} bytes",
            offset=min(expected, len(blob)),
        )
    vectors = np.frombuffer(
        blob, dtype="<f4", count=count * dim, offset=body_offset
    ).reshape(count, dim).astype(np.float64)

    sidecar = default_labels_path(path) if labels_path is None else Path(labels_path)
    if not sidecar.is_file():
        raise FeatureFileError(
            f"{path}: labels sidecar {sidecar} not found", offset=expected
        )
    ids = []
    labels = []
    text = sidecar.read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            image_id, label = line.rsplit(",", 1)
            labels.append(int(label))
        except ValueError:
            raise FeatureFileError(
                f"{sidecar}: line {lineno} is not 'id,class_label'",
                offset=expected,
            ) from None
        ids.append(image_id)
    if len(ids) != count:
        raise FeatureFileError(
            f"{sidecar}: {len(ids)} label lines for {count} vectors",
            offset=expected,
        )
    return FeatureSet(
        vectors=vectors, ids=tuple(ids), labels=np.asarray(labels, dtype=np.int64)
    )
