"""
Configuration module for the application.
"""
import json
import os

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Optional, Union

from dotenv import load_dotenv
from pydantic import ValidationError

from signface.core.errors import ConfigurationError

# Load environment variables from .env file
load_dotenv()

# Face representation
NUM_DETECTED_LANDMARKS = 68
NUM_LANDMARKS = 69
ROOT_VERTEX = 68
SEQUENCE_LENGTH = 64

# Latent space and sentence features
LATENT_CHANNELS = 768
FEATURE_DIM = 768

# Graph pyramid
LEVEL_SIZES = (1, 7, 16, 43, 69)
KNN_NEIGHBORS = 3
MAX_GEODESIC = 2

# Sentiment labels of the test data
SENTIMENT_LABELS = ("joy", "sadness", "anger")

# Five stable anchors: eye corners, nose tip, mouth corners
STABLE_ANCHORS = (36, 45, 33, 48, 54)

# Evaluation regions (68-landmark convention, vertex 68 belongs to no region)
REGION_INDICES = {
    "mouth": tuple(range(48, 68)),
    "eyebrows": tuple(range(17, 27)),
    "jaw_lips": tuple(range(0, 17)) + tuple(range(48, 68)),
}

# File format versions
TOPOLOGY_VERSION = "facegraph-v1"
CHECKPOINT_VERSION = "signface-ckpt-v1"
LANDMARK_FILE_VERSION = "landmarks-v1"
MANIFEST_VERSION = "manifest-v1"
FEATURE_CACHE_MAGIC = b"SGNFEAT\x00"
FEATURE_CACHE_VERSION = 1

# Environment settings
CACHE_DIR = os.getenv("SIGNFACE_CACHE_DIR")
LOG_LEVEL = os.getenv("SIGNFACE_LOG_LEVEL", "INFO")

# Exit codes
EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_NUMERICAL_ERROR = 2
EXIT_BACKEND_ERROR = 3


def read_config_document(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a TOML or JSON configuration document.

    Args:
        path: Path to a ``.toml`` or ``.json`` file

    Returns:
        Raw configuration mapping
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config file not found: {path}")

    try:
        if path.suffix == ".json":
            with open(path, "r") as f:
                return json.load(f)
        with open(path, "rb") as f:
            return tomllib.load(f)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"Error parsing config {path}: {str(e)}") from e


def load_run_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None):
    """Load and validate the run configuration.

    The environment may override the backend endpoint only.

    Args:
        path: Optional config file; defaults apply when omitted
        overrides: Optional top-level values applied after the file (e.g. ``seed``)

    Returns:
        Validated RunConfig
    """
    from signface.models.run_config import RunConfig

    document = read_config_document(path) if path else {}
    if overrides:
        document = {**document, **overrides}

    try:
        config = RunConfig(**document)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid configuration: {str(e)}") from e

    endpoint = os.getenv("SIGNFACE_BACKEND_URL")
    if endpoint:
        config.backend.endpoint = endpoint

    return config


def write_resolved_config(config, output_dir: Union[str, Path]) -> Path:
    """Write the resolved config snapshot next to a command's outputs.

    Args:
        config: RunConfig to snapshot
        output_dir: Directory receiving ``resolved_config.json``

    Returns:
        Path of the snapshot
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    snapshot = output_dir / "resolved_config.json"
    with open(snapshot, "w") as f:
        json.dump(config.model_dump(mode="json"), f, indent=2, sort_keys=True)
    return snapshot
