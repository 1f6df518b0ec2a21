"""
Command implementations behind the CLI.

Every command takes a resolved RunConfig, writes ``resolved_config.json``
next to its outputs and returns a small result object.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from signface.core.config import SEQUENCE_LENGTH, write_resolved_config
from signface.core.errors import (
    ConfigurationError,
    InvalidInputError,
    MissingArtifactError,
    SignFaceError,
)
from signface.features.extractor import FeatureExtractor, build_extractor
from signface.models.landmarks import DatasetManifest, LandmarkSequence, ManifestRecord
from signface.models.report import EvalReport
from signface.models.run_config import ABLATION_FLAGS, AblationFlags, RunConfig
from signface.networks.decoder import decode_batch
from signface.preprocessing.conditioners import default_pipeline
from signface.preprocessing.landmark_io import (
    load_landmark_file,
    load_manifest,
    save_landmark_file,
    save_manifest,
    select_split,
)
from signface.preprocessing.synthetic import generate_synthetic_dataset
from signface.reporting.animation import render_animation
from signface.reporting.plots import save_distribution_plot, save_loss_plot
from signface.reporting.report_generator import ReportGenerator, save_report
from signface.synthesis.heuristics import FeatureBank
from signface.synthesis.inference import infer
from signface.topology.pyramid import GraphPyramid, build_pyramid
from signface.topology.topology_file import load_topology, save_topology
from signface.training.artifacts import (
    load_end_to_end,
    load_feature_bank,
    load_fed_model,
    load_glo_state,
    load_sampler,
    save_end_to_end,
    save_feature_bank,
    save_fed_model,
    save_glo_state,
    save_sampler,
)
from signface.training.fed_trainer import train_fed_autoencoder
from signface.training.glo_trainer import interpolate_latents, reconstruction_l1, train_glo
from signface.training.history import write_loss_history
from signface.training.sampler_trainer import mean_cosine_loss, train_end_to_end, train_sampler

logger = logging.getLogger(__name__)

STAGES = ("glo", "sampler", "fed")

# Files in sequence directories that are not landmark files
RESERVED_FILES = {"resolved_config.json", "eval_report.json", "fingerprint.json", "interpolation.json"}


@dataclass
class PreprocessResult:
    manifest_path: Path
    written: List[str]
    failed: List[str]
    fingerprint: str

    @property
    def failure_ratio(self) -> float:
        total = len(self.written) + len(self.failed)
        return len(self.failed) / total if total else 0.0


@dataclass
class TrainResult:
    stage: str
    checkpoint: Path
    digest: str
    metrics: Dict[str, float] = field(default_factory=dict)


@dataclass
class InferResult:
    landmark_path: Path
    animation_path: Path
    sequence: LandmarkSequence


def apply_seed(config: RunConfig, seed: int) -> RunConfig:
    """Set the run seed and every stage seed."""
    config.seed = seed
    config.glo.seed = seed
    config.sampler.seed = seed
    config.fed.seed = seed
    config.backend.seed = seed
    return config


def apply_ablations(config: RunConfig, flags: List[str]) -> RunConfig:
    for flag in flags:
        if flag not in ABLATION_FLAGS:
            raise ConfigurationError(f"Unknown ablation flag '{flag}'")
        setattr(config.ablation, flag, True)
    return config


def _output_dir(config: RunConfig, *parts: str) -> Path:
    return Path(config.paths.output_dir).joinpath(*parts)


def _checkpoint_dir(config: RunConfig) -> Path:
    return Path(config.paths.checkpoints)


def _decoder_variant(ablation: AblationFlags) -> str:
    active = [flag for flag in ("wo_gcn", "wo_knn") if getattr(ablation, flag)]
    return "+".join(active) if active else "full"


def glo_checkpoint_path(config: RunConfig) -> Path:
    return _checkpoint_dir(config) / f"glo_{_decoder_variant(config.ablation)}.pt"


def sampler_checkpoint_path(config: RunConfig) -> Path:
    ablation = config.ablation
    if ablation.wo_glo:
        prefix = "end_to_end"
    elif ablation.wo_sn:
        prefix = "bank"
    else:
        prefix = "sampler"
    return _checkpoint_dir(config) / f"{prefix}_{ablation.name}.pt"


def fed_checkpoint_path(config: RunConfig) -> Path:
    return _checkpoint_dir(config) / "fed.pt"


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(f"Missing artifact {path}: {hint}")
    return path


def load_pyramid(config: RunConfig) -> GraphPyramid:
    """Topology file from the config, or a freshly built pyramid (k = 0 under wo_knn)."""
    k = 0 if config.ablation.wo_knn else config.topology.k
    if config.paths.topology and Path(config.paths.topology).exists():
        pyramid = load_topology(config.paths.topology)
        if pyramid.k == k and pyramid.max_geodesic == config.topology.max_geodesic:
            return pyramid
        logger.warning(f"Topology file {config.paths.topology} was built with k={pyramid.k}; rebuilding with k={k}")
    return build_pyramid(level_sizes=config.topology.level_sizes, k=k, max_geodesic=config.topology.max_geodesic)


def _manifest(config: RunConfig) -> DatasetManifest:
    if not config.paths.manifest:
        raise ConfigurationError("paths.manifest is not set")
    return load_manifest(config.paths.manifest)


def split_records(config: RunConfig, manifest: DatasetManifest, split: str) -> List[ManifestRecord]:
    """Records of the train or test split; untagged records count as train."""
    if config.preprocess.split:
        train, test = select_split(manifest, config.preprocess.split)
        return train if split == "train" else test
    if split == "test":
        return [r for r in manifest.records if r.split == "test"]
    return [r for r in manifest.records if r.split != "test"]


def _load_conditioned(record: ManifestRecord) -> np.ndarray:
    seq = load_landmark_file(record.path)
    if seq.num_frames != SEQUENCE_LENGTH:
        raise InvalidInputError(
            f"Sample {record.sample_id} has {seq.num_frames} frames; run 'preprocess' first"
        )
    return seq.coords


def _features(extractor: FeatureExtractor, records: List[ManifestRecord]):
    return [extractor.extract(record.text) for record in records]


def _sequence_dir(directory: Path) -> Dict[str, np.ndarray]:
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingArtifactError(f"Sequence directory not found: {directory}")
    sequences = {}
    for path in sorted(directory.glob("*.json")):
        if path.name in RESERVED_FILES:
            continue
        seq = load_landmark_file(path)
        sequences[seq.sample_id] = seq.coords
    return sequences


def cmd_synth_data(config: RunConfig, n_samples: int = 8, output_dir: Optional[str] = None) -> Path:
    """Write a synthetic dataset (landmark files and manifest).

    Args:
        config: Run configuration (its seed seeds the generator)
        n_samples: Number of samples
        output_dir: Target directory; ``<output_dir>/synthetic`` by default

    Returns:
        Path of the manifest
    """
    output = Path(output_dir) if output_dir else _output_dir(config, "synthetic")
    manifest, sequences = generate_synthetic_dataset(n_samples, config.seed)
    for seq in sequences:
        save_landmark_file(seq, output / f"{seq.sample_id}.json")
    manifest_path = save_manifest(manifest, output / "manifest.jsonl")
    write_resolved_config(config, output)
    logger.info(f"Wrote {len(sequences)} synthetic samples to {output}")
    return manifest_path


def cmd_preprocess(
    config: RunConfig,
    manifest_path: Optional[str] = None,
    output_dir: Optional[str] = None,
) -> PreprocessResult:
    """Condition every sample of a manifest.

    Per-sample failures are logged and skipped; the caller decides whether
    the failure ratio is acceptable. With ``preprocess.split`` set, only the
    selected speaker is kept and every record is tagged train or test.

    Args:
        config: Run configuration
        manifest_path: Input manifest; ``paths.manifest`` by default
        output_dir: Target directory; ``<output_dir>/preprocessed`` by default

    Returns:
        PreprocessResult
    """
    manifest = load_manifest(manifest_path) if manifest_path else _manifest(config)
    output = Path(output_dir) if output_dir else _output_dir(config, "preprocessed")
    pipeline = default_pipeline(config.preprocess)
    parameters = json.dumps(pipeline.describe(), sort_keys=True)

    selected = manifest.records
    if config.preprocess.split:
        train, test = select_split(manifest, config.preprocess.split)
        selected = [r.model_copy(update={"split": "train"}) for r in train]
        selected += [r.model_copy(update={"split": "test"}) for r in test]
        logger.info(f"Split {config.preprocess.split}: {len(train)} train, {len(test)} test samples")

    hasher = hashlib.sha256(parameters.encode("utf-8"))
    records, written, failed = [], [], []
    for record in selected:
        try:
            seq = pipeline.run(load_landmark_file(record.path))
        except (SignFaceError, OSError, ValueError) as e:
            logger.warning(f"Skipping sample {record.sample_id}: {str(e)}")
            failed.append(record.sample_id)
            continue

        save_landmark_file(seq, output / f"{record.sample_id}.json")
        hasher.update(record.sample_id.encode("utf-8"))
        hasher.update(seq.coords.tobytes())
        records.append(record.model_copy(update={"path": f"{record.sample_id}.json"}))
        written.append(record.sample_id)

    fingerprint = hasher.hexdigest()
    output_manifest = save_manifest(DatasetManifest(records=records), output / "manifest.jsonl")
    with open(output / "fingerprint.json", "w") as f:
        json.dump({
            "fingerprint": fingerprint,
            "conditioning": pipeline.fingerprint,
            "pipeline": pipeline.describe(),
            "split": config.preprocess.split,
            "samples": written,
        }, f, indent=2)
    write_resolved_config(config, output)

    logger.info(f"Preprocessed {len(written)} samples ({len(failed)} failed), fingerprint {fingerprint[:12]}")
    return PreprocessResult(output_manifest, written, failed, fingerprint)


def cmd_topology(config: RunConfig, output: Optional[str] = None) -> Path:
    """Write the versioned topology file."""
    pyramid = load_pyramid(config)
    path = Path(output) if output else _output_dir(config, "topology.json")
    save_topology(pyramid, path)
    write_resolved_config(config, path.parent)
    logger.info(f"Topology {pyramid.fingerprint} with levels {pyramid.level_sizes} written to {path}")
    return path


def _train_glo(config: RunConfig, output: Path) -> TrainResult:
    if config.ablation.wo_glo:
        raise ConfigurationError("wo_glo trains decoder and sampler end to end; run the 'sampler' stage instead")

    pyramid = load_pyramid(config)
    records = split_records(config, _manifest(config), "train")
    dataset = [(record.sample_id, _load_conditioned(record)) for record in records]
    path = glo_checkpoint_path(config)

    def on_checkpoint(state):
        save_glo_state(state, path, pyramid, {"ablation": config.ablation.active()})

    state = train_glo(
        dataset,
        config.glo,
        pyramid,
        config.decoder,
        use_gcn=not config.ablation.wo_gcn,
        on_checkpoint=on_checkpoint,
    )
    final_l1 = reconstruction_l1(state, dataset)
    digest = save_glo_state(state, path, pyramid, {"ablation": config.ablation.active(), "final_l1": final_l1})

    write_loss_history(state.loss_history, output / f"glo_{_decoder_variant(config.ablation)}_loss.csv")
    if state.loss_history:
        save_loss_plot(state.loss_history, output / f"glo_{_decoder_variant(config.ablation)}_loss.png", "batch l1")
    logger.info(f"GLO final reconstruction l1 {final_l1:.6f}")
    return TrainResult("glo", path, digest, {"final_l1": final_l1})


def _train_sampler(config: RunConfig, output: Path) -> TrainResult:
    pyramid = load_pyramid(config)
    records = split_records(config, _manifest(config), "train")
    extractor = build_extractor(config.backend)
    path = sampler_checkpoint_path(config)

    if config.ablation.wo_glo:
        sequences = [_load_conditioned(record) for record in records]
        state = train_end_to_end(
            _features(extractor, records), sequences, pyramid, config.sampler, config.decoder, config.ablation
        )
        final_l1 = state.loss_history[-1].batch_loss if state.loss_history else None
        digest = save_end_to_end(state, path, config.ablation, pyramid, {"final_l1": final_l1})
        write_loss_history(state.loss_history, output / f"end_to_end_{config.ablation.name}_loss.csv")
        return TrainResult("sampler", path, digest)

    glo_path = _require(glo_checkpoint_path(config), "run 'train --stage glo' first")
    glo_state = load_glo_state(glo_path, pyramid)
    records = [r for r in records if r.sample_id in glo_state.sample_ids]
    if not records:
        raise ConfigurationError(f"No training sample of the manifest has a latent in {glo_path}")

    features = _features(extractor, records)
    pairs = [(f, glo_state.latent(record.sample_id)) for record, f in zip(records, features)]

    if config.ablation.wo_sn:
        bank = FeatureBank.from_pairs(pairs, [record.sample_id for record in records])
        digest = save_feature_bank(bank, path, glo_state.checkpoint_id, pyramid)
        return TrainResult("sampler", path, digest, {"bank_size": float(len(bank))})

    state = train_sampler(pairs, config.sampler, config.ablation)
    final_cosine = mean_cosine_loss(state.network, pairs)
    digest = save_sampler(
        state, path, glo_state.checkpoint_id, config.ablation, pyramid, {"final_cosine": final_cosine}
    )
    write_loss_history(state.loss_history, output / f"sampler_{config.ablation.name}_loss.csv", "batch_cosine")
    logger.info(f"Sampler final mean cosine loss {final_cosine:.6f}")
    return TrainResult("sampler", path, digest, {"final_cosine": final_cosine})


def _train_fed(config: RunConfig, output: Path) -> TrainResult:
    manifest = _manifest(config)
    sequences = [_load_conditioned(record) for record in split_records(config, manifest, "train")]
    model = train_fed_autoencoder(sequences, config.fed)
    path = fed_checkpoint_path(config)
    digest = save_fed_model(model, path)
    write_loss_history(model.loss_history, output / "fed_loss.csv", "batch_mse")
    return TrainResult("fed", path, digest, {"final_mse": model.reconstruction_mse(sequences)})


def cmd_train(config: RunConfig, stage: str) -> TrainResult:
    """Train one stage: ``glo``, ``sampler`` or ``fed``.

    Args:
        config: Run configuration (ablation flags select the variant)
        stage: Stage name

    Returns:
        TrainResult naming the checkpoint and its digest
    """
    if stage not in STAGES:
        raise ConfigurationError(f"Unknown stage '{stage}', expected one of {', '.join(STAGES)}")
    output = _output_dir(config, "train")
    output.mkdir(parents=True, exist_ok=True)

    trainer = {"glo": _train_glo, "sampler": _train_sampler, "fed": _train_fed}[stage]
    result = trainer(config, output)
    write_resolved_config(config, output)
    logger.info(f"Stage {stage} checkpoint {result.digest[:12]} at {result.checkpoint}")
    return result


def load_generator(config: RunConfig, pyramid: GraphPyramid):
    """Latent source, decoder and artifact ids of the configured variant."""
    path = _require(sampler_checkpoint_path(config), "run 'train --stage sampler' first")
    if config.ablation.wo_glo:
        network, decoder, checkpoint = load_end_to_end(path, pyramid)
        return network, decoder, {"end_to_end": checkpoint.digest}

    glo_path = _require(glo_checkpoint_path(config), "run 'train --stage glo' first")
    glo_state = load_glo_state(glo_path, pyramid)
    if config.ablation.wo_sn:
        source, checkpoint = load_feature_bank(path, glo_state.checkpoint_id, pyramid)
    else:
        source, checkpoint = load_sampler(path, glo_state.checkpoint_id, pyramid)
    return source, glo_state.decoder, {"glo": glo_state.checkpoint_id, checkpoint.kind: checkpoint.digest}


def _write_sequence(sequence, sample_id: str, path: Path, artifact_ids: Dict[str, str], text: str) -> LandmarkSequence:
    seq = LandmarkSequence(
        sample_id=sample_id,
        speaker_id="generated",
        text=text,
        sentiment_label=sequence.metadata.get("sentiment_label") or None,
        coords=sequence.coords,
    )
    save_landmark_file(seq, path, extra={"metadata": sequence.metadata, "artifact_ids": artifact_ids})
    return seq


def cmd_infer(
    config: RunConfig,
    text: str,
    sentiment_override: Optional[str] = None,
    output_dir: Optional[str] = None,
) -> InferResult:
    """Synthesize one sentence: landmark file plus animation.

    Args:
        config: Run configuration
        text: Sentence
        sentiment_override: Optional label replacing the predicted sentiment
        output_dir: Target directory; ``<output_dir>/infer`` by default

    Returns:
        InferResult
    """
    output = Path(output_dir) if output_dir else _output_dir(config, "infer")
    pyramid = load_pyramid(config)
    source, decoder, artifact_ids = load_generator(config, pyramid)

    sequence = infer(text, build_extractor(config.backend), source, decoder, sentiment_override)
    key = hashlib.sha256(f"{text}\x00{sentiment_override or ''}".encode("utf-8")).hexdigest()[:10]
    name = f"infer-{key}"

    seq = _write_sequence(sequence, name, output / f"{name}.json", artifact_ids, text)
    animation_path = output / f"{name}.gif"
    render_animation(sequence.coords, pyramid.levels[-1].sorted_edges(), animation_path, title=text[:60])
    write_resolved_config(config, output)
    metadata = sequence.metadata
    logger.info(f"Sentence synthesized with sentiment '{metadata['sentiment_label']}' ({metadata['sentiment_source']})")
    return InferResult(output / f"{name}.json", animation_path, seq)


def cmd_generate(
    config: RunConfig,
    split: str = "test",
    output_dir: Optional[str] = None,
    sentiment_override: Optional[str] = None,
) -> Tuple[Path, Dict[str, np.ndarray]]:
    """Synthesize every sentence of a split into a directory of landmark files."""
    output = Path(output_dir) if output_dir else _output_dir(config, "generated", config.ablation.name)
    pyramid = load_pyramid(config)
    source, decoder, artifact_ids = load_generator(config, pyramid)
    extractor = build_extractor(config.backend)

    records = split_records(config, _manifest(config), split)
    if not records:
        raise ConfigurationError(f"The '{split}' split is empty")

    generated = {}
    for record in records:
        sequence = infer(record.text, extractor, source, decoder, sentiment_override)
        _write_sequence(sequence, record.sample_id, output / f"{record.sample_id}.json", artifact_ids, record.text)
        generated[record.sample_id] = sequence.coords
    write_resolved_config(config, output)
    logger.info(f"Generated {len(generated)} sequences into {output}")
    return output, generated


def cmd_evaluate(
    config: RunConfig,
    generated_dir: str,
    reference_dir: Optional[str] = None,
    fed_checkpoint: Optional[str] = None,
    output_dir: Optional[str] = None,
) -> EvalReport:
    """Evaluate generated sequences against references with matching ids.

    Args:
        config: Run configuration
        generated_dir: Directory of generated landmark files
        reference_dir: Directory of reference files; the manifest's test split by default
        fed_checkpoint: FED autoencoder checkpoint; the configured one by default
        output_dir: Target directory; ``<output_dir>/evaluation`` by default

    Returns:
        EvalReport (also written as JSON next to the distribution plot)
    """
    output = Path(output_dir) if output_dir else _output_dir(config, "evaluation")
    generated = _sequence_dir(Path(generated_dir))
    if reference_dir:
        reference = _sequence_dir(Path(reference_dir))
    else:
        reference = {r.sample_id: _load_conditioned(r) for r in split_records(config, _manifest(config), "test")}

    fed_path = Path(fed_checkpoint) if fed_checkpoint else fed_checkpoint_path(config)
    fed_path = _require(fed_path, "run 'train --stage fed' first")
    fed_model, checkpoint = load_fed_model(fed_path)

    generator = ReportGenerator(fed_model)
    report = generator.generate_eval_report(generated, reference, config.ablation.name, {"fed": checkpoint.digest})
    save_report(report, output / "eval_report.json")
    save_distribution_plot(report.avg_landmark_distance, output / "distance_distribution.png", report.run_name)
    write_resolved_config(config, output)
    return report


def cmd_interpolate(
    config: RunConfig,
    sample_a: str,
    sample_b: str,
    steps: int = 16,
    output_dir: Optional[str] = None,
) -> Path:
    """Decode a slerp between two training latents and render the morph."""
    output = Path(output_dir) if output_dir else _output_dir(config, "interpolate")
    pyramid = load_pyramid(config)
    glo_state = load_glo_state(_require(glo_checkpoint_path(config), "run 'train --stage glo' first"), pyramid)

    latents = interpolate_latents(glo_state.latent(sample_a), glo_state.latent(sample_b), steps)
    decoded = decode_batch(np.stack(latents), glo_state.decoder)
    step_changes = [float(np.abs(b - a).max()) for a, b in zip(decoded, decoded[1:])]

    for index, coords in enumerate(decoded):
        seq = LandmarkSequence(sample_id=f"step-{index:02d}", speaker_id="interpolated", coords=coords)
        save_landmark_file(seq, output / f"step_{index:02d}.json")
    with open(output / "interpolation.json", "w") as f:
        json.dump({"from": sample_a, "to": sample_b, "steps": steps, "max_step_change": step_changes}, f, indent=2)

    # Every 4th frame of every step keeps the morph short
    morph = np.concatenate([coords[::4] for coords in decoded])
    render_animation(morph, pyramid.levels[-1].sorted_edges(), output / "morph.gif", title=f"{sample_a} -> {sample_b}")
    write_resolved_config(config, output)
    return output


def cmd_ablate(config: RunConfig, runs: Optional[List[str]] = None) -> Dict:
    """Train, generate and evaluate the full model and each ablation.

    Args:
        config: Base run configuration (its own ablation flags are ignored)
        runs: Subset of ``full`` and the ablation flags; all by default

    Returns:
        Comparative report ranking the runs by FED
    """
    runs = runs or ["full", *ABLATION_FLAGS]
    base = config.model_copy(deep=True)
    base.ablation = AblationFlags()
    root = _output_dir(base, "ablation")

    fed_result = cmd_train(base, "fed")
    fed_model, _ = load_fed_model(fed_result.checkpoint)

    reports = []
    trained_variants = set()
    for run in runs:
        run_config = base.model_copy(deep=True)
        if run != "full":
            apply_ablations(run_config, [run])
        run_config.paths.output_dir = str(root / run)
        logger.info(f"Ablation run '{run}'")

        if not run_config.ablation.wo_glo:
            variant = _decoder_variant(run_config.ablation)
            if variant not in trained_variants:
                cmd_train(run_config, "glo")
                trained_variants.add(variant)
        cmd_train(run_config, "sampler")
        generated_dir, _ = cmd_generate(run_config)
        report = cmd_evaluate(run_config, str(generated_dir), fed_checkpoint=str(fed_result.checkpoint))
        reports.append(report)

    generator = ReportGenerator(fed_model)
    comparative = generator.generate_comparative_report(reports)
    save_report(comparative, root / "comparative_report.json")
    write_resolved_config(base, root)
    print(generator.format_table(reports))
    return comparative
