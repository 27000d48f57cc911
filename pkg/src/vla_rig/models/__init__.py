"""
Public exports for vla_rig.models

The action codec and the token policy are the stable entry points:

    from vla_rig.models import ActionCodec, TokenPolicy, fit_codec, predict, train
"""

from .action_codec import (
    ActionCodec,
    ActionSpec,
    TokenMap,
    detokenize,
    fit_codec,
    load_codec,
    save_codec,
    tokenize,
    zero_action_tokens,
)
from .features import FeatureEncoder
from .token_policy import (
    TokenPolicy,
    TrainConfig,
    build_training_set,
    init_policy,
    load_policy,
    predict,
    save_policy,
    train,
)

__all__ = [
    "ActionCodec",
    "ActionSpec",
    "FeatureEncoder",
    "TokenMap",
    "TokenPolicy",
    "TrainConfig",
    "build_training_set",
    "detokenize",
    "fit_codec",
    "init_policy",
    "load_codec",
    "load_policy",
    "predict",
    "save_codec",
    "save_policy",
    "tokenize",
    "train",
    "zero_action_tokens",
]
