"""
Seeded mini-batch order shared by the training loops.
"""
from typing import Iterator, List

import torch


def epoch_batches(num_samples: int, batch_size: int, generator: torch.Generator) -> Iterator[List[int]]:
    """Yield index batches forever; each epoch is a fresh permutation.

    Batches never straddle epochs, so the last batch of an epoch may be short.
    """
    batch_size = max(1, min(batch_size, num_samples))
    while True:
        order = torch.randperm(num_samples, generator=generator).tolist()
        for start in range(0, num_samples, batch_size):
            yield order[start:start + batch_size]
