"""
Report generator for evaluation runs.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from signface.core.errors import InvalidInputError
from signface.evaluation.metrics import avg_landmark_distance_distribution, fed, region_distances
from signface.models.report import EvalReport, RegionDistances

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ("rank", "run", "FED", "mouth", "eyebrows", "jaw-lips", "avg dist")


class ReportGenerator:
    """Generator for evaluation reports."""

    def __init__(self, fed_model, bins: int = 20):
        """Initialize the report generator.

        Args:
            fed_model: FedModel defining the FED feature space
            bins: Histogram bins of the distance distribution
        """
        self.fed_model = fed_model
        self.bins = bins

    def generate_eval_report(
        self,
        generated: Dict[str, np.ndarray],
        reference: Dict[str, np.ndarray],
        run_name: str = "default",
        artifact_ids: Optional[Dict[str, str]] = None,
    ) -> EvalReport:
        """Evaluate generated sequences against references with the same ids.

        Args:
            generated: sample id -> generated (64, 69, 2) sequence
            reference: sample id -> reference sequence
            run_name: Name of the evaluated run
            artifact_ids: Checkpoint ids to record

        Returns:
            EvalReport
        """
        matched = sorted(set(generated) & set(reference))
        excluded = sorted(set(generated) ^ set(reference))
        if excluded:
            logger.warning(f"Excluding {len(excluded)} unmatched samples: {', '.join(excluded)}")
        if not matched:
            raise InvalidInputError("No sample ids match between generated and reference sets")

        generated_list = [generated[sample_id] for sample_id in matched]
        reference_list = [reference[sample_id] for sample_id in matched]

        regions = [region_distances(g, r) for g, r in zip(generated_list, reference_list)]
        distribution = avg_landmark_distance_distribution(list(zip(generated_list, reference_list)), self.bins)

        return EvalReport(
            run_name=run_name,
            fed=fed(generated_list, reference_list, self.fed_model),
            region_distances=RegionDistances(
                mouth=float(np.mean([r.mouth for r in regions])),
                eyebrows=float(np.mean([r.eyebrows for r in regions])),
                jaw_lips=float(np.mean([r.jaw_lips for r in regions])),
            ),
            avg_landmark_distance=distribution,
            sample_count=len(matched),
            excluded_ids=excluded,
            artifact_ids=artifact_ids or {},
        )

    @staticmethod
    def rank_runs(reports: List[EvalReport]) -> List[Dict[str, Any]]:
        """Rank runs by FED (lower is better), ties by run name.

        Args:
            reports: One report per run

        Returns:
            List of ranked rows
        """
        rows = [
            {
                "run_name": report.run_name,
                "fed": report.fed,
                "mouth": report.region_distances.mouth,
                "eyebrows": report.region_distances.eyebrows,
                "jaw_lips": report.region_distances.jaw_lips,
                "avg_landmark_distance": report.avg_landmark_distance.mean,
                "sample_count": report.sample_count,
            }
            for report in reports
        ]

        # Sort runs by FED (ascending)
        rows.sort(key=lambda x: (x["fed"], x["run_name"]))

        # Add rank to each run
        for i, row in enumerate(rows):
            row["rank"] = i + 1

        return rows

    def generate_comparative_report(self, reports: List[EvalReport]) -> Dict[str, Any]:
        """Compare the full model with its ablations.

        Args:
            reports: One report per run

        Returns:
            Report data
        """
        if not reports:
            raise InvalidInputError("No runs to compare")

        ranked = self.rank_runs(reports)
        full = next((row for row in ranked if row["run_name"] == "full"), None)

        report = {
            "run_count": len(ranked),
            "ranking": ranked,
            "best_run": ranked[0]["run_name"],
            "average_fed": sum(row["fed"] for row in ranked) / len(ranked),
        }
        if full is not None:
            report["full_model_rank"] = full["rank"]
            report["fed_gap_to_full"] = {row["run_name"]: row["fed"] - full["fed"] for row in ranked}

        return report

    @staticmethod
    def format_table(reports: List[EvalReport]) -> str:
        """Console table of FED and region distances, best run first."""
        rows = ReportGenerator.rank_runs(reports)
        cells = [TABLE_COLUMNS] + [
            (
                str(row["rank"]),
                row["run_name"],
                f"{row['fed']:.4f}",
                f"{row['mouth']:.4f}",
                f"{row['eyebrows']:.4f}",
                f"{row['jaw_lips']:.4f}",
                f"{row['avg_landmark_distance']:.4f}",
            )
            for row in rows
        ]
        widths = [max(len(line[i]) for line in cells) for i in range(len(TABLE_COLUMNS))]
        lines = ["  ".join(value.ljust(width) for value, width in zip(line, widths)) for line in cells]
        lines.insert(1, "  ".join("-" * width for width in widths))
        return "\n".join(lines)


def save_report(report: Union[EvalReport, Dict[str, Any]], path: Union[str, Path]) -> Path:
    """Write a report as JSON with sorted keys."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = report.model_dump(mode="json") if isinstance(report, EvalReport) else report
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
    return path


def load_report(path: Union[str, Path]) -> EvalReport:
    with open(path, "r") as f:
        return EvalReport(**json.load(f))
