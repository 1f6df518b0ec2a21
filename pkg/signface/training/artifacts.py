"""
Checkpoint layouts of the trained artifacts: GLO state, sampler, end-to-end
model, feature bank and FED autoencoder.
"""
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import torch
from torch import nn

from signface.core.errors import VersionMismatchError
from signface.models.run_config import AblationFlags, DecoderConfig, GloTrainingConfig, SamplerTrainingConfig
from signface.networks.decoder import build_decoder
from signface.networks.sampler import SamplingNetwork, build_sampler
from signface.synthesis.heuristics import FeatureBank
from signface.topology.pyramid import GraphPyramid
from signface.training.checkpoints import Checkpoint, load_checkpoint, save_checkpoint
from signface.training.fed_trainer import FedModel, build_fed_autoencoder
from signface.training.glo_trainer import GloState
from signface.training.sampler_trainer import EndToEndState, SamplerState

logger = logging.getLogger(__name__)

GLO_KIND = "glo"
SAMPLER_KIND = "sampler"
END_TO_END_KIND = "end_to_end"
BANK_KIND = "feature_bank"
FED_KIND = "fed"

PathLike = Union[str, Path]


def _check_reference(checkpoint: Checkpoint, glo_id: Optional[str]) -> None:
    found = checkpoint.metadata.get("glo_checkpoint")
    if glo_id is not None and found != glo_id:
        raise VersionMismatchError("GLO checkpoint", glo_id, str(found))


def save_glo_state(state: GloState, path: PathLike, pyramid: GraphPyramid, metadata: Optional[Dict] = None) -> str:
    """Decoder parameters, latent table and optimizer states."""
    checkpoint = Checkpoint(
        kind=GLO_KIND,
        states={"decoder": state.decoder.state_dict()},
        tensors={"latents": state.latents.detach().clone()},
        metadata={
            "decoder_config": state.decoder_config.model_dump(),
            "glo_config": state.config.model_dump(),
            "use_gcn": state.use_gcn,
            "sample_ids": state.sample_ids,
            "iteration": state.iteration,
            "seed": state.seed,
            **(metadata or {}),
        },
        optimizers={
            "params": state.param_optimizer.state_dict(),
            "latents": state.latent_optimizer.state_dict(),
        },
    )
    state.checkpoint_id = save_checkpoint(checkpoint, path, pyramid)
    return state.checkpoint_id


def load_glo_state(path: PathLike, pyramid: GraphPyramid) -> GloState:
    """Rebuild a GloState; refuses checkpoints of another topology."""
    checkpoint = load_checkpoint(path, GLO_KIND, pyramid)
    metadata = checkpoint.metadata
    decoder_config = DecoderConfig(**metadata["decoder_config"])
    config = GloTrainingConfig(**metadata["glo_config"])

    decoder = build_decoder(pyramid, decoder_config, seed=config.seed, use_gcn=metadata["use_gcn"])
    decoder.load_state_dict(checkpoint.states["decoder"])
    decoder.eval()
    latents = nn.Parameter(checkpoint.tensors["latents"].clone())

    param_optimizer = torch.optim.Adam(decoder.parameters(), lr=config.lr_params)
    latent_optimizer = torch.optim.SGD([latents], lr=config.lr_latents)
    if "params" in checkpoint.optimizers:
        param_optimizer.load_state_dict(checkpoint.optimizers["params"])
        latent_optimizer.load_state_dict(checkpoint.optimizers["latents"])

    return GloState(
        decoder=decoder,
        latents=latents,
        sample_ids=list(metadata["sample_ids"]),
        param_optimizer=param_optimizer,
        latent_optimizer=latent_optimizer,
        decoder_config=decoder_config,
        config=config,
        use_gcn=metadata["use_gcn"],
        iteration=metadata["iteration"],
        checkpoint_id=checkpoint.digest,
    )


def save_sampler(
    state: SamplerState,
    path: PathLike,
    glo_id: str,
    ablation: AblationFlags,
    pyramid: Optional[GraphPyramid] = None,
    metadata: Optional[Dict] = None,
) -> str:
    """Sampler parameters, referencing the GLO checkpoint they were fitted to."""
    network = state.network
    checkpoint = Checkpoint(
        kind=SAMPLER_KIND,
        states={"sampler": network.state_dict()},
        metadata={
            "glo_checkpoint": glo_id,
            "ablation": ablation.active(),
            "sampler_config": state.config.model_dump(),
            "feature_dim": network.feature_dim,
            "latent_dim": network.latent_dim,
            "use_semantic": network.use_semantic,
            "use_sentiment": network.use_sentiment,
            "steps": state.steps,
            **(metadata or {}),
        },
    )
    return save_checkpoint(checkpoint, path, pyramid)


def _rebuild_sampler(checkpoint: Checkpoint) -> SamplingNetwork:
    metadata = checkpoint.metadata
    config = SamplerTrainingConfig(**metadata["sampler_config"])
    network = build_sampler(
        hidden_dim=config.hidden_dim,
        latent_dim=metadata["latent_dim"],
        seed=config.seed,
        use_semantic=metadata["use_semantic"],
        use_sentiment=metadata["use_sentiment"],
        feature_dim=metadata["feature_dim"],
    )
    network.load_state_dict(checkpoint.states["sampler"])
    network.eval()
    return network


def load_sampler(
    path: PathLike,
    glo_id: Optional[str] = None,
    pyramid: Optional[GraphPyramid] = None,
) -> Tuple[SamplingNetwork, Checkpoint]:
    """Load a sampler; refuses one trained against another GLO checkpoint."""
    checkpoint = load_checkpoint(path, SAMPLER_KIND, pyramid)
    _check_reference(checkpoint, glo_id)
    return _rebuild_sampler(checkpoint), checkpoint


def save_end_to_end(
    state: EndToEndState,
    path: PathLike,
    ablation: AblationFlags,
    pyramid: GraphPyramid,
    metadata: Optional[Dict] = None,
) -> str:
    network = state.network
    checkpoint = Checkpoint(
        kind=END_TO_END_KIND,
        states={"sampler": network.state_dict(), "decoder": state.decoder.state_dict()},
        metadata={
            "ablation": ablation.active(),
            "sampler_config": state.config.model_dump(),
            "decoder_config": state.decoder_config.model_dump(),
            "use_gcn": state.use_gcn,
            "feature_dim": network.feature_dim,
            "latent_dim": network.latent_dim,
            "use_semantic": network.use_semantic,
            "use_sentiment": network.use_sentiment,
            "steps": state.steps,
            **(metadata or {}),
        },
    )
    return save_checkpoint(checkpoint, path, pyramid)


def load_end_to_end(path: PathLike, pyramid: GraphPyramid) -> Tuple[SamplingNetwork, nn.Module, Checkpoint]:
    checkpoint = load_checkpoint(path, END_TO_END_KIND, pyramid)
    decoder_config = DecoderConfig(**checkpoint.metadata["decoder_config"])
    decoder = build_decoder(pyramid, decoder_config, use_gcn=checkpoint.metadata["use_gcn"])
    decoder.load_state_dict(checkpoint.states["decoder"])
    decoder.eval()
    return _rebuild_sampler(checkpoint), decoder, checkpoint


def save_feature_bank(bank: FeatureBank, path: PathLike, glo_id: str, pyramid: Optional[GraphPyramid] = None) -> str:
    checkpoint = Checkpoint(
        kind=BANK_KIND,
        tensors={
            "features": torch.from_numpy(np.ascontiguousarray(bank.features)),
            "latents": torch.from_numpy(np.ascontiguousarray(bank.latents)),
        },
        metadata={"glo_checkpoint": glo_id, "sample_ids": bank.sample_ids, "ablation": ["wo_sn"]},
    )
    return save_checkpoint(checkpoint, path, pyramid)


def load_feature_bank(
    path: PathLike,
    glo_id: Optional[str] = None,
    pyramid: Optional[GraphPyramid] = None,
) -> Tuple[FeatureBank, Checkpoint]:
    checkpoint = load_checkpoint(path, BANK_KIND, pyramid)
    _check_reference(checkpoint, glo_id)
    bank = FeatureBank(
        features=checkpoint.tensors["features"].numpy(),
        latents=checkpoint.tensors["latents"].numpy(),
        sample_ids=list(checkpoint.metadata["sample_ids"]),
    )
    return bank, checkpoint


def save_fed_model(model: FedModel, path: PathLike) -> str:
    checkpoint = Checkpoint(
        kind=FED_KIND,
        states={"autoencoder": model.autoencoder.state_dict()},
        metadata={
            "feature_dim": model.feature_dim,
            "dataset_id": model.dataset_id,
            "seed": model.seed,
            "final_mse": model.final_mse,
        },
    )
    return save_checkpoint(checkpoint, path)


def load_fed_model(path: PathLike) -> Tuple[FedModel, Checkpoint]:
    checkpoint = load_checkpoint(path, FED_KIND)
    metadata = checkpoint.metadata
    autoencoder = build_fed_autoencoder(metadata["feature_dim"], metadata["seed"])
    autoencoder.load_state_dict(checkpoint.states["autoencoder"])
    autoencoder.eval()
    return FedModel(autoencoder, metadata["feature_dim"], metadata["dataset_id"], metadata["seed"]), checkpoint
