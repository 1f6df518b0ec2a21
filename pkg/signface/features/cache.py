"""
On-disk feature cache keyed by a content hash of (backend, kind, text).

Record layout: 8-byte magic, little-endian uint32 version, uint32 label code,
then the vector as little-endian float32.
"""
import hashlib
import logging
import os
import tempfile
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from signface.core.config import FEATURE_CACHE_MAGIC, FEATURE_CACHE_VERSION, SENTIMENT_LABELS

logger = logging.getLogger(__name__)

_HEADER_BYTES = len(FEATURE_CACHE_MAGIC) + 8


def _label_code(label: Optional[str]) -> int:
    return 0 if label is None else SENTIMENT_LABELS.index(label) + 1


def _label_from_code(code: int) -> Optional[str]:
    return None if code == 0 else SENTIMENT_LABELS[code - 1]


class FeatureCache:
    """Directory of binary feature records."""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)
        self.hits = 0
        self.misses = 0

    def key(self, backend_id: str, kind: str, text: str) -> str:
        return hashlib.sha256(f"{backend_id}\x00{kind}\x00{text}".encode("utf-8")).hexdigest()

    def path_for(self, backend_id: str, kind: str, text: str) -> Path:
        return self.directory / f"{self.key(backend_id, kind, text)}.feat"

    def get(self, backend_id: str, kind: str, text: str) -> Optional[Tuple[np.ndarray, Optional[str]]]:
        """Return (vector, label) or None on a miss or an unreadable record."""
        path = self.path_for(backend_id, kind, text)
        if not path.exists():
            self.misses += 1
            return None

        data = path.read_bytes()
        magic = data[:len(FEATURE_CACHE_MAGIC)]
        header = np.frombuffer(data[len(FEATURE_CACHE_MAGIC):_HEADER_BYTES], dtype="<u4")
        if magic != FEATURE_CACHE_MAGIC or header.size != 2 or int(header[0]) != FEATURE_CACHE_VERSION:
            logger.warning(f"Ignoring unreadable cache record {path.name}")
            self.misses += 1
            return None

        self.hits += 1
        vector = np.frombuffer(data[_HEADER_BYTES:], dtype="<f4").astype(np.float32)
        return vector, _label_from_code(int(header[1]))

    def put(self, backend_id: str, kind: str, text: str, vector: np.ndarray, label: Optional[str] = None) -> Path:
        """Write a record atomically."""
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path_for(backend_id, kind, text)
        payload = (
            FEATURE_CACHE_MAGIC
            + np.array([FEATURE_CACHE_VERSION, _label_code(label)], dtype="<u4").tobytes()
            + np.asarray(vector, dtype="<f4").tobytes()
        )
        fd, temporary = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(payload)
            os.replace(temporary, path)
        except OSError:
            if os.path.exists(temporary):
                os.unlink(temporary)
            raise
        return path
