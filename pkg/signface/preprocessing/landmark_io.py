"""
Landmark files (JSON) and dataset manifests (JSON-lines).
"""
import json
import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from signface.core.config import (
    LANDMARK_FILE_VERSION,
    MANIFEST_VERSION,
    NUM_DETECTED_LANDMARKS,
)
from signface.core.errors import ConfigurationError, InvalidInputError, MissingArtifactError, VersionMismatchError
from signface.models.landmarks import DatasetManifest, LandmarkSequence, ManifestRecord
from signface.topology.template import append_centroid

logger = logging.getLogger(__name__)


def load_landmark_file(path: Union[str, Path]) -> LandmarkSequence:
    """Load a landmark file; 68-point detector output gains the centroid vertex.

    Args:
        path: Path to the landmark JSON file

    Returns:
        LandmarkSequence
    """
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"Landmark file not found: {path}")

    try:
        with open(path, "r") as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"Unreadable landmark file {path}: {str(e)}") from e

    version = document.get("format_version", LANDMARK_FILE_VERSION)
    if version != LANDMARK_FILE_VERSION:
        raise VersionMismatchError("landmark file", LANDMARK_FILE_VERSION, version)

    coords = np.asarray(document.get("coords", []), dtype=np.float64)
    if coords.ndim == 3 and coords.shape[1] == NUM_DETECTED_LANDMARKS:
        coords = append_centroid(coords)

    try:
        return LandmarkSequence(
            sample_id=document["sample_id"],
            speaker_id=document.get("speaker_id", "unknown"),
            text=document.get("text", ""),
            sentiment_label=document.get("sentiment"),
            fps=document.get("fps", 24.0),
            coords=coords,
            conditioning=document.get("conditioning"),
        )
    except (KeyError, ValueError) as e:
        raise InvalidInputError(f"Invalid landmark file {path}: {str(e)}") from e


def save_landmark_file(seq: LandmarkSequence, path: Union[str, Path], extra: dict = None) -> Path:
    """Write a landmark file.

    Args:
        seq: Sequence to write
        path: Output path
        extra: Additional metadata fields

    Returns:
        Path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {
        "format_version": LANDMARK_FILE_VERSION,
        "sample_id": seq.sample_id,
        "speaker_id": seq.speaker_id,
        "text": seq.text,
        "sentiment": seq.sentiment_label,
        "fps": seq.fps,
        "coords": seq.coords.tolist(),
    }
    if seq.conditioning:
        document["conditioning"] = seq.conditioning
    if extra:
        document.update(extra)
    with open(path, "w") as f:
        json.dump(document, f)
    return path


def load_manifest(path: Union[str, Path]) -> DatasetManifest:
    """Load a JSON-lines manifest; paths are resolved relative to it.

    Args:
        path: Manifest path

    Returns:
        DatasetManifest with absolute paths
    """
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"Manifest not found: {path}")

    records = []
    with open(path, "r") as f:
        lines = [line for line in f if line.strip()]

    if not lines:
        return DatasetManifest(records=[])

    try:
        header = json.loads(lines[0])
    except ValueError as e:
        raise ConfigurationError(f"Unreadable header in manifest {path}: {str(e)}") from e
    if not isinstance(header, dict) or "manifest_version" not in header:
        raise ConfigurationError(f"Manifest {path} lacks a manifest_version header")
    if header["manifest_version"] != MANIFEST_VERSION:
        raise VersionMismatchError("manifest", MANIFEST_VERSION, header["manifest_version"])

    for number, line in enumerate(lines[1:], start=2):
        try:
            record = ManifestRecord(**json.loads(line))
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid record on line {number} of manifest {path}: {str(e)}") from e
        record.path = str((path.parent / record.path).resolve())
        records.append(record)

    try:
        return DatasetManifest(records=records)
    except ValueError as e:
        raise ConfigurationError(f"Invalid manifest {path}: {str(e)}") from e


def save_manifest(manifest: DatasetManifest, path: Union[str, Path]) -> Path:
    """Write a JSON-lines manifest; record paths are written as given."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(json.dumps({"manifest_version": MANIFEST_VERSION}) + "\n")
        for record in manifest.records:
            f.write(record.model_dump_json() + "\n")
    return path


def select_split(manifest: DatasetManifest, split: str) -> Tuple[List[ManifestRecord], List[ManifestRecord]]:
    """Person-specific train/test partition from a ``speaker:<id>`` selector.

    Records without a split tag are assigned deterministically: the last
    quarter of the speaker's sample ids (sorted) goes to test.

    Args:
        manifest: Dataset manifest
        split: Selector such as ``speaker:8``

    Returns:
        (train records, test records)
    """
    kind, _, speaker = split.partition(":")
    if kind != "speaker" or not speaker:
        raise ConfigurationError(f"Split selector must look like 'speaker:<id>', got '{split}'")

    records = sorted((r for r in manifest.records if r.speaker_id == speaker), key=lambda r: r.sample_id)
    if not records:
        raise ConfigurationError(f"No samples for speaker '{speaker}'")

    untagged = [r for r in records if r.split is None]
    cut = len(untagged) - len(untagged) // 4
    assigned = {r.sample_id: ("train" if i < cut else "test") for i, r in enumerate(untagged)}

    train, test = [], []
    for record in records:
        tag = record.split or assigned[record.sample_id]
        (train if tag == "train" else test).append(record)
    return train, test
