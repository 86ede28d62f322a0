from kdnav.nn.mlp import MlpStack
from kdnav.nn.setnet import (
    GaussianPolicy,
    SetNet,
    forward,
    make_policy_net,
    make_value_net,
    sample_action,
)
from kdnav.nn.optim import Adam
from kdnav.nn.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "MlpStack",
    "SetNet",
    "GaussianPolicy",
    "forward",
    "sample_action",
    "make_policy_net",
    "make_value_net",
    "Adam",
    "save_checkpoint",
    "load_checkpoint",
]
