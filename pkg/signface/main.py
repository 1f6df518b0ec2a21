"""
Main application entry point.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from signface.commands import (
    STAGES,
    apply_ablations,
    apply_seed,
    cmd_ablate,
    cmd_evaluate,
    cmd_generate,
    cmd_infer,
    cmd_interpolate,
    cmd_preprocess,
    cmd_synth_data,
    cmd_topology,
    cmd_train,
)
from signface.core.config import EXIT_OK, EXIT_USER_ERROR, LOG_LEVEL, SENTIMENT_LABELS, load_run_config
from signface.core.errors import SignFaceError
from signface.models.run_config import ABLATION_FLAGS
from signface.reporting.report_generator import ReportGenerator

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-command per operation."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Path to a TOML or JSON run configuration")
    common.add_argument("--seed", type=int, help="Seed for every stage (overrides the config)")
    common.add_argument("--ablation", action="append", default=[], choices=ABLATION_FLAGS,
                        help="Ablation flag; repeat for several")
    common.add_argument("--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(description="Sentiment-aware facial expression synthesis for sign language")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth-data", parents=[common], help="Generate a synthetic dataset")
    synth.add_argument("--n-samples", type=int, default=8)
    synth.add_argument("--output")

    preprocess = commands.add_parser("preprocess", parents=[common], help="Condition a dataset")
    preprocess.add_argument("--manifest")
    preprocess.add_argument("--split", help="Person-specific split, e.g. speaker:8")
    preprocess.add_argument("--output")

    train = commands.add_parser("train", parents=[common], help="Train one stage")
    train.add_argument("--stage", required=True, choices=STAGES)

    infer = commands.add_parser("infer", parents=[common], help="Synthesize one sentence")
    infer.add_argument("--text", required=True)
    infer.add_argument("--sentiment", choices=SENTIMENT_LABELS)
    infer.add_argument("--output")

    generate = commands.add_parser("generate", parents=[common], help="Synthesize every sentence of a split")
    generate.add_argument("--split", default="test", choices=("train", "test"))
    generate.add_argument("--sentiment", choices=SENTIMENT_LABELS)
    generate.add_argument("--output")

    evaluate = commands.add_parser("evaluate", parents=[common], help="Evaluate generated sequences")
    evaluate.add_argument("--generated", required=True)
    evaluate.add_argument("--reference")
    evaluate.add_argument("--fed-checkpoint")
    evaluate.add_argument("--output")

    interpolate = commands.add_parser("interpolate", parents=[common], help="Morph between two training samples")
    interpolate.add_argument("--from", dest="sample_a", required=True)
    interpolate.add_argument("--to", dest="sample_b", required=True)
    interpolate.add_argument("--steps", type=int, default=16)
    interpolate.add_argument("--output")

    ablate = commands.add_parser("ablate", parents=[common], help="Run the full model and every ablation")
    ablate.add_argument("--runs", nargs="+", choices=("full", *ABLATION_FLAGS))

    topology = commands.add_parser("topology", parents=[common], help="Write the topology file")
    topology.add_argument("--output")

    return parser


def run(args: argparse.Namespace) -> int:
    """Dispatch a parsed command line; returns the exit code."""
    config = load_run_config(args.config)
    if args.seed is not None:
        apply_seed(config, args.seed)
    apply_ablations(config, args.ablation)

    if args.command == "synth-data":
        manifest = cmd_synth_data(config, args.n_samples, args.output)
        print(f"Manifest: {manifest}")
    elif args.command == "preprocess":
        if args.split:
            config.preprocess.split = args.split
        result = cmd_preprocess(config, args.manifest, args.output)
        print(f"Manifest: {result.manifest_path} ({len(result.written)} written, {len(result.failed)} failed)")
        if result.failure_ratio > config.preprocess.max_failure_ratio:
            logger.error(
                f"{len(result.failed)} of {len(result.written) + len(result.failed)} samples failed "
                f"(limit {config.preprocess.max_failure_ratio:.0%})"
            )
            return EXIT_USER_ERROR
    elif args.command == "train":
        result = cmd_train(config, args.stage)
        print(json.dumps({"stage": result.stage, "checkpoint": str(result.checkpoint),
                          "digest": result.digest, **result.metrics}, indent=2))
    elif args.command == "infer":
        result = cmd_infer(config, args.text, args.sentiment, args.output)
        print(f"Landmarks: {result.landmark_path}\nAnimation: {result.animation_path}")
    elif args.command == "generate":
        output, generated = cmd_generate(config, args.split, args.output, args.sentiment)
        print(f"Generated {len(generated)} sequences in {output}")
    elif args.command == "evaluate":
        report = cmd_evaluate(config, args.generated, args.reference, args.fed_checkpoint, args.output)
        print(ReportGenerator.format_table([report]))
    elif args.command == "interpolate":
        output = cmd_interpolate(config, args.sample_a, args.sample_b, args.steps, args.output)
        print(f"Interpolation: {output}")
    elif args.command == "ablate":
        comparative = cmd_ablate(config, args.runs)
        print(f"Best run: {comparative['best_run']}")
    elif args.command == "topology":
        print(f"Topology: {cmd_topology(config, args.output)}")

    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main function."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else LOG_LEVEL,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )

    try:
        return run(args)
    except SignFaceError as e:
        logger.error(f"{type(e).__name__}: {str(e)}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
