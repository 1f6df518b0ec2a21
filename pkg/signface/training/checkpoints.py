"""
Versioned checkpoint containers.

A checkpoint holds module state dicts, loose tensors and JSON-compatible
metadata; its digest (sha256 over tensor bytes and metadata) is the id other
checkpoints refer to.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union

import torch

from signface.core.config import CHECKPOINT_VERSION
from signface.core.errors import ConfigurationError, MissingArtifactError, VersionMismatchError
from signface.topology.pyramid import GraphPyramid

logger = logging.getLogger(__name__)


@dataclass
class Checkpoint:
    """Loaded (or to-be-saved) checkpoint contents."""

    kind: str
    states: Dict[str, Dict[str, torch.Tensor]] = field(default_factory=dict)
    tensors: Dict[str, torch.Tensor] = field(default_factory=dict)
    metadata: Dict = field(default_factory=dict)
    optimizers: Dict[str, Dict] = field(default_factory=dict)
    topology_version: Optional[str] = None
    topology_fingerprint: Optional[str] = None
    digest: str = ""


def _update_tensor(hasher, name: str, tensor: torch.Tensor) -> None:
    tensor = tensor.detach().cpu().contiguous()
    hasher.update(f"{name}:{tensor.dtype}:{tuple(tensor.shape)}".encode("utf-8"))
    hasher.update(tensor.numpy().tobytes())


def compute_digest(checkpoint: Checkpoint) -> str:
    """sha256 over kind, topology, tensors (sorted by name) and metadata."""
    hasher = hashlib.sha256()
    header = {
        "format_version": CHECKPOINT_VERSION,
        "kind": checkpoint.kind,
        "topology_version": checkpoint.topology_version,
        "topology_fingerprint": checkpoint.topology_fingerprint,
        "metadata": checkpoint.metadata,
    }
    hasher.update(json.dumps(header, sort_keys=True).encode("utf-8"))
    for module_name in sorted(checkpoint.states):
        state = checkpoint.states[module_name]
        for name in sorted(state):
            _update_tensor(hasher, f"{module_name}.{name}", state[name])
    for name in sorted(checkpoint.tensors):
        _update_tensor(hasher, name, checkpoint.tensors[name])
    return hasher.hexdigest()


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path], pyramid: Optional[GraphPyramid] = None) -> str:
    """Write a checkpoint and return its digest.

    Args:
        checkpoint: Contents to write
        path: Output file
        pyramid: Topology the checkpoint was trained on, recorded by version and fingerprint

    Returns:
        Checkpoint digest
    """
    if pyramid is not None:
        checkpoint.topology_version = pyramid.topology_version
        checkpoint.topology_fingerprint = pyramid.fingerprint
    checkpoint.digest = compute_digest(checkpoint)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    container = {
        "format_version": CHECKPOINT_VERSION,
        "kind": checkpoint.kind,
        "topology_version": checkpoint.topology_version,
        "topology_fingerprint": checkpoint.topology_fingerprint,
        "states": {name: dict(state) for name, state in checkpoint.states.items()},
        "tensors": checkpoint.tensors,
        "metadata_json": json.dumps(checkpoint.metadata, sort_keys=True),
        "optimizers": checkpoint.optimizers,
        "digest": checkpoint.digest,
    }
    torch.save(container, path)
    logger.info(f"Saved {checkpoint.kind} checkpoint {checkpoint.digest[:12]} to {path}")
    return checkpoint.digest


def load_checkpoint(
    path: Union[str, Path],
    kind: Optional[str] = None,
    pyramid: Optional[GraphPyramid] = None,
) -> Checkpoint:
    """Load a checkpoint and verify version, kind, topology and digest.

    Args:
        path: Checkpoint file
        kind: Expected kind (``glo``, ``sampler`` ...), if any
        pyramid: Topology in use; mismatching checkpoints are refused

    Returns:
        Checkpoint
    """
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"Checkpoint not found: {path}")

    container = torch.load(path, map_location="cpu", weights_only=True)
    version = container.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise VersionMismatchError("checkpoint", CHECKPOINT_VERSION, str(version))
    if kind is not None and container["kind"] != kind:
        raise ConfigurationError(f"{path} is a '{container['kind']}' checkpoint, expected '{kind}'")

    checkpoint = Checkpoint(
        kind=container["kind"],
        states={name: dict(state) for name, state in container["states"].items()},
        tensors=dict(container["tensors"]),
        metadata=json.loads(container["metadata_json"]),
        optimizers=container.get("optimizers", {}),
        topology_version=container["topology_version"],
        topology_fingerprint=container["topology_fingerprint"],
    )
    checkpoint.digest = compute_digest(checkpoint)
    if checkpoint.digest != container["digest"]:
        raise ConfigurationError(f"Checkpoint {path} is corrupted (digest mismatch)")

    if pyramid is not None and checkpoint.topology_version is not None:
        if checkpoint.topology_version != pyramid.topology_version:
            raise VersionMismatchError("topology", pyramid.topology_version, checkpoint.topology_version)
        if checkpoint.topology_fingerprint != pyramid.fingerprint:
            raise VersionMismatchError("topology fingerprint", pyramid.fingerprint, checkpoint.topology_fingerprint)

    return checkpoint
