"""
Tests for landmark conditioning, landmark files, manifests and the
synthetic dataset.
"""
import json

import numpy as np
import pytest

from signface.core.config import MANIFEST_VERSION, STABLE_ANCHORS
from signface.core.errors import (
    ConfigurationError,
    DegenerateFrameError,
    InvalidParameterError,
    MissingArtifactError,
    VersionMismatchError,
)
from signface.models.landmarks import DatasetManifest, LandmarkSequence, ManifestRecord
from signface.preprocessing.conditioners import ConditioningPipeline, Frontalizer, UniformResampler, condition_sequence
from signface.preprocessing.conditioning import (
    frontalize,
    normalize_bbox,
    one_euro_filter,
    resample_indices,
    resample_uniform,
)
from signface.preprocessing.landmark_io import (
    load_landmark_file,
    load_manifest,
    save_landmark_file,
    save_manifest,
    select_split,
)
from signface.preprocessing.synthetic import generate_synthetic_dataset
from signface.topology.template import canonical_template, detected_template


def _sequence(coords, fps=24.0):
    return LandmarkSequence(sample_id="s", coords=coords, fps=fps)


def _shaped_face():
    """Canonical template with the non-anchor points perturbed."""
    face = canonical_template()
    rng = np.random.default_rng(4)
    moving = [i for i in range(69) if i not in STABLE_ANCHORS]
    face[moving] += 0.01 * rng.standard_normal((len(moving), 2))
    return face


def _similarity(face, degrees, scale, shift):
    angle = np.deg2rad(degrees)
    rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    return scale * face @ rotation.T + np.asarray(shift)


def test_normalize_bbox_hand_example():
    normalized = normalize_bbox(np.array([[0.0, 0.0], [3.0, 4.0]]))
    np.testing.assert_allclose(normalized, [[0.2, 0.1], [0.8, 0.9]], rtol=0, atol=1e-12)


def test_normalize_bbox_degenerate():
    with pytest.raises(DegenerateFrameError):
        normalize_bbox(np.ones((5, 2)))


def test_frontalize_canonical_pose_is_identity():
    face = _shaped_face()
    output = frontalize(_sequence(np.stack([face, face])))
    np.testing.assert_allclose(output.coords, np.stack([face, face]), atol=1e-6)


def test_frontalize_removes_rotation():
    face = _shaped_face()
    rotated = _similarity(face, 10.0, 1.0, (0.3, -0.2))
    np.testing.assert_allclose(frontalize(_sequence(rotated[None])).coords[0], face, atol=1e-6)


def test_frontalize_removes_scale():
    face = _shaped_face()
    scaled = _similarity(face, 0.0, 2.0, (0.0, 0.0))
    np.testing.assert_allclose(frontalize(_sequence(scaled[None])).coords[0], face, atol=1e-6)


def test_frontalize_flags_collinear_frames():
    face = _shaped_face()
    collinear = face.copy()
    collinear[list(STABLE_ANCHORS)] = [[0.1 * i, 0.1 * i] for i in range(len(STABLE_ANCHORS))]
    output = frontalize(_sequence(np.stack([face, collinear])))
    assert output.flagged_frames == [1]
    np.testing.assert_array_equal(output.coords[1], collinear)


def test_one_euro_constant_signal():
    coords = np.full((20, 69, 2), 0.3)
    np.testing.assert_allclose(one_euro_filter(_sequence(coords)).coords, coords)


def test_one_euro_step_has_no_overshoot():
    coords = np.zeros((40, 69, 2))
    coords[10:] = 1.0
    track = one_euro_filter(_sequence(coords)).coords[:, 0, 0]
    assert np.all(np.diff(track) >= 0)
    assert track.max() <= 1.0
    assert track[-1] > 0.5


def test_one_euro_reduces_noise_variance():
    noise = np.random.default_rng(0).standard_normal((200, 69, 2))
    smoothed = one_euro_filter(_sequence(noise)).coords
    assert smoothed.var() < noise.var()


def test_one_euro_rejects_bad_cutoffs():
    with pytest.raises(InvalidParameterError):
        one_euro_filter(_sequence(np.zeros((3, 69, 2))), min_cutoff=0.0)


def test_resample_index_formula():
    expected = np.floor(np.arange(64) * 127 / 63 + 0.5).astype(int)
    np.testing.assert_array_equal(resample_indices(128, 64), expected)
    np.testing.assert_array_equal(resample_indices(64, 64), np.arange(64))
    np.testing.assert_array_equal(resample_indices(1, 64), np.zeros(64))


def test_resample_single_frame():
    coords = np.random.default_rng(0).random((1, 69, 2))
    output = resample_uniform(_sequence(coords), 64)
    assert output.num_frames == 64
    assert np.array_equal(output.coords[10], coords[0])


def test_condition_sequence():
    face = detected_template()
    face = np.vstack([face, face.mean(axis=0)])
    frames = np.stack([_similarity(face, 5.0 * t, 1.0 + 0.01 * t, (t, 0)) for t in range(90)])
    output = condition_sequence(_sequence(frames, fps=30.0))
    assert output.num_frames == 64
    extent = output.coords.max(axis=1) - output.coords.min(axis=1)
    np.testing.assert_allclose(np.linalg.norm(extent, axis=1), 1.0)


def test_pipeline_describe():
    pipeline = ConditioningPipeline([Frontalizer(), UniformResampler(64)])
    assert [step["name"] for step in pipeline.describe()] == ["frontalize", "resample"]


def test_landmark_file_round_trip(tmp_path):
    coords = np.random.default_rng(1).random((5, 69, 2))
    seq = LandmarkSequence(sample_id="a", speaker_id="7", text="hello", sentiment_label="joy", coords=coords)
    loaded = load_landmark_file(save_landmark_file(seq, tmp_path / "a.json"))
    assert loaded.sample_id == "a"
    assert loaded.sentiment_label == "joy"
    np.testing.assert_array_equal(loaded.coords, coords)


def test_detector_files_gain_the_centroid(tmp_path):
    coords = np.random.default_rng(1).random((3, 68, 2))
    path = tmp_path / "raw.json"
    path.write_text(json.dumps({"format_version": "landmarks-v1", "sample_id": "raw", "coords": coords.tolist()}))
    loaded = load_landmark_file(path)
    assert loaded.coords.shape == (3, 69, 2)
    np.testing.assert_allclose(loaded.coords[:, 68], coords.mean(axis=1))


def test_landmark_file_errors(tmp_path):
    with pytest.raises(MissingArtifactError):
        load_landmark_file(tmp_path / "missing.json")
    path = tmp_path / "old.json"
    path.write_text(json.dumps({"format_version": "landmarks-v0", "sample_id": "x", "coords": []}))
    with pytest.raises(VersionMismatchError):
        load_landmark_file(path)


def test_manifest_paths_are_resolved(tmp_path):
    manifest = DatasetManifest(records=[ManifestRecord(sample_id="a", speaker_id="1", text="hi", path="a.json")])
    path = save_manifest(manifest, tmp_path / "data" / "manifest.jsonl")
    loaded = load_manifest(path)
    assert loaded.records[0].path == str((tmp_path / "data" / "a.json").resolve())


def test_manifest_header_is_required(tmp_path):
    path = tmp_path / "manifest.jsonl"
    path.write_text(json.dumps({"sample_id": "a", "speaker_id": "1", "text": "hi", "path": "a.json"}) + "\n")
    with pytest.raises(ConfigurationError):
        load_manifest(path)
    path.write_text("")
    assert load_manifest(path).records == []


def test_person_specific_split():
    records = [ManifestRecord(sample_id=f"s{i}", speaker_id="8", text="t", path="p") for i in range(8)]
    records.append(ManifestRecord(sample_id="other", speaker_id="9", text="t", path="p"))
    train, test = select_split(DatasetManifest(records=records), "speaker:8")
    assert [r.sample_id for r in train] == [f"s{i}" for i in range(6)]
    assert [r.sample_id for r in test] == ["s6", "s7"]
    with pytest.raises(ConfigurationError):
        select_split(DatasetManifest(records=records), "person:8")


def test_synthetic_dataset_is_deterministic():
    first_manifest, first = generate_synthetic_dataset(8, seed=0)
    second_manifest, second = generate_synthetic_dataset(8, seed=0)
    assert first_manifest == second_manifest
    assert all(np.array_equal(a.coords, b.coords) for a, b in zip(first, second))


def test_synthetic_dataset_layout(synthetic_data):
    manifest, sequences = synthetic_data
    assert [r.sentiment_label for r in manifest.records[:3]] == ["joy", "sadness", "anger"]
    assert [r.sample_id for r in manifest.by_split("test")] == ["synth-0-0003", "synth-0-0007"]
    assert all(seq.coords.shape == (64, 69, 2) for seq in sequences)
    assert len({r.text for r in manifest.records}) == 8


def test_conditioning_twice_equals_conditioning_once(synthetic_data):
    _, sequences = synthetic_data
    raw = sequences[0].with_coords(sequences[0].coords * 3.0 + 1.0)
    once = condition_sequence(raw)
    twice = condition_sequence(once)
    assert once.conditioning is not None
    assert twice.conditioning == once.conditioning
    np.testing.assert_allclose(twice.coords, once.coords, rtol=0, atol=1e-6)


def test_conditioning_mark_survives_files_and_clears_on_new_coords(tmp_path, synthetic_data):
    _, sequences = synthetic_data
    once = condition_sequence(sequences[0])
    loaded = load_landmark_file(save_landmark_file(once, tmp_path / "a.json"))
    assert loaded.conditioning == once.conditioning
    np.testing.assert_allclose(condition_sequence(loaded).coords, once.coords, rtol=0, atol=1e-6)
    assert loaded.with_coords(loaded.coords).conditioning is None


def test_resample_keeps_first_and_last_frames():
    coords = np.random.default_rng(5).random((97, 69, 2))
    for n in (2, 16, 64, 200):
        output = resample_uniform(_sequence(coords), n)
        assert np.array_equal(output.coords[0], coords[0])
        assert np.array_equal(output.coords[-1], coords[-1])


def test_manifest_record_without_path_is_a_configuration_error(tmp_path):
    path = tmp_path / "manifest.jsonl"
    header = json.dumps({"manifest_version": MANIFEST_VERSION})
    path.write_text(header + "\n" + json.dumps({"sample_id": "a", "speaker_id": "1", "text": "hi"}) + "\n")
    with pytest.raises(ConfigurationError):
        load_manifest(path)
