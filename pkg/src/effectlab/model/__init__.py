"""In-context effect model: numpy transformer, trainer, checkpoints."""
from .config import ModelConfig, TrainConfig
from .network import (
    assemble_tokens,
    count_parameters,
    episode_loss,
    forward,
    init_params,
    loss_and_grads,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .train import TrainResult, train
from .inference import CateEstimate, predict_cate, predict_episode

__all__ = [
    "ModelConfig",
    "TrainConfig",
    "assemble_tokens",
    "count_parameters",
    "episode_loss",
    "forward",
    "init_params",
    "loss_and_grads",
    "load_checkpoint",
    "save_checkpoint",
    "TrainResult",
    "train",
    "CateEstimate",
    "predict_cate",
    "predict_episode",
]
