"""
Procedural dataset of animated faces paired with templated sentences.
"""
import logging
from typing import Dict, List, Tuple

import numpy as np

from signface.core.config import SENTIMENT_LABELS, SEQUENCE_LENGTH
from signface.core.errors import InvalidParameterError
from signface.models.landmarks import DatasetManifest, LandmarkSequence, ManifestRecord
from signface.preprocessing.conditioning import normalize_bbox
from signface.topology.template import append_centroid, detected_template

logger = logging.getLogger(__name__)

SYNTHETIC_FPS = 24.0

SENTENCE_TEMPLATES: Dict[str, Tuple[str, ...]] = {
    "joy": (
        "I am so happy about the {}",
        "What a wonderful {}",
        "I am glad you found the {}",
    ),
    "sadness": (
        "I am sad about the {}",
        "I am sorry the {} is gone",
        "I miss the old {}",
    ),
    "anger": (
        "I am angry about the {}",
        "I hate the {}",
        "I am furious about the {}",
    ),
}

OBJECTS = ("house", "train", "dog", "garden", "letter", "weather", "game", "school", "river", "market")

DAYS = ("on monday", "on tuesday", "on wednesday", "on thursday", "on friday", "on saturday", "on sunday")

# Landmark groups moved by the displacement fields
MOUTH_CORNERS = (48, 54, 60, 64)
LOWER_LIP = (55, 56, 57, 58, 59, 65, 66, 67)
UPPER_LIDS = (37, 38, 43, 44)
INNER_BROWS = (20, 21, 22, 23)
INTERIOR = tuple(range(17, 68))


def _sentence(index: int, label: str, objects: np.ndarray) -> str:
    templates = SENTENCE_TEMPLATES[label]
    position = index // len(SENTIMENT_LABELS)
    text = templates[position % len(templates)].format(objects[position % len(objects)])
    if index >= 10:
        text = f"{text} {DAYS[(index // 10) % len(DAYS)]} {index}"
    return text


def _animate(label: str, rng: np.random.Generator) -> np.ndarray:
    """Return (64, 68, 2) raw landmarks for one sample."""
    base = detected_template()
    times = np.arange(SEQUENCE_LENGTH) / SYNTHETIC_FPS
    frames = np.repeat(base[None], SEQUENCE_LENGTH, axis=0)

    # Sentiment builds up over the first second, then holds
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.clip(times / 1.0, 0.0, 1.0))
    intensity = rng.uniform(0.7, 1.0) * ramp

    # Speech: the lower lip opens and closes
    frequency = rng.uniform(1.5, 3.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    opening = rng.uniform(0.04, 0.08) * (0.5 + 0.5 * np.sin(2.0 * np.pi * frequency * times + phase))
    frames[:, list(LOWER_LIP), 1] += opening[:, None]

    if label == "joy":
        frames[:, list(MOUTH_CORNERS), 1] -= 0.08 * intensity[:, None]
        frames[:, [48, 60], 0] -= 0.02 * intensity[:, None]
        frames[:, [54, 64], 0] += 0.02 * intensity[:, None]
    elif label == "sadness":
        frames[:, list(MOUTH_CORNERS), 1] += 0.06 * intensity[:, None]
        frames[:, list(UPPER_LIDS), 1] += 0.03 * intensity[:, None]
    elif label == "anger":
        frames[:, list(INNER_BROWS), 1] += 0.08 * intensity[:, None]
        frames[:, [21, 20], 0] += 0.03 * intensity[:, None]
        frames[:, [22, 23], 0] -= 0.03 * intensity[:, None]

    # Low-amplitude idle motion of the interior points
    idle_phase = rng.uniform(0.0, 2.0 * np.pi, size=(len(INTERIOR), 2))
    idle_frequency = rng.uniform(0.3, 0.8)
    idle = 0.004 * np.sin(2.0 * np.pi * idle_frequency * times[:, None, None] + idle_phase[None])
    frames[:, list(INTERIOR)] += idle

    return frames


def generate_synthetic_dataset(n_samples: int, seed: int = 0) -> Tuple[DatasetManifest, List[LandmarkSequence]]:
    """Generate a seeded dataset of animated faces with sentences and labels.

    Labels cycle joy, sadness, anger; every fourth sample is tagged for the
    test split. All samples belong to one synthetic speaker.

    Args:
        n_samples: Number of samples
        seed: Random seed

    Returns:
        (manifest with paths ``<sample_id>.json``, sequences)
    """
    if n_samples < 1:
        raise InvalidParameterError(f"n_samples must be at least 1, got {n_samples}")

    rng = np.random.default_rng(seed)
    objects = rng.permutation(np.array(OBJECTS))
    speaker_id = f"synth-{seed}"

    records = []
    sequences = []
    for i in range(n_samples):
        label = SENTIMENT_LABELS[i % len(SENTIMENT_LABELS)]
        sample_id = f"{speaker_id}-{i:04d}"
        text = _sentence(i, label, objects)
        coords = normalize_bbox(append_centroid(_animate(label, rng)))

        sequences.append(LandmarkSequence(
            sample_id=sample_id,
            speaker_id=speaker_id,
            text=text,
            sentiment_label=label,
            fps=SYNTHETIC_FPS,
            coords=coords,
        ))
        records.append(ManifestRecord(
            sample_id=sample_id,
            speaker_id=speaker_id,
            text=text,
            sentiment_label=label,
            path=f"{sample_id}.json",
            split="test" if i % 4 == 3 else "train",
        ))

    logger.info(f"Generated {n_samples} synthetic samples (seed {seed})")
    return DatasetManifest(records=records), sequences
