"""
Loss-history records and their CSV files.
"""
import csv
from pathlib import Path
from typing import List, NamedTuple, Union


class LossRecord(NamedTuple):
    iteration: int
    batch_loss: float
    wallclock: float


def write_loss_history(history: List[LossRecord], path: Union[str, Path], loss_name: str = "batch_l1") -> Path:
    """Write ``iteration,<loss_name>,wallclock`` rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["iteration", loss_name, "wallclock"])
        for record in history:
            writer.writerow([record.iteration, f"{record.batch_loss:.9g}", f"{record.wallclock:.3f}"])
    return path


def read_loss_history(path: Union[str, Path]) -> List[LossRecord]:
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        next(reader)
        return [LossRecord(int(row[0]), float(row[1]), float(row[2])) for row in reader]
