"""Alternating cross-entropy / complement-entropy training lab.

Thin numpy bindings over the C++ core: loss functions, synthetic dataset
generators, MLP training in both modes, evaluation, and the FGSM / I-FGSM
attacks. Everything is deterministic for a fixed seed.
"""

from ._core import (
    CotError,
    Model,
    complement_loss,
    cross_entropy,
    digits,
    evaluate,
    fgsm,
    ifgsm,
    normalized_complement_entropy,
    softmax,
    spirals,
    train,
    two_moons,
)

__all__ = [
    "CotError",
    "Model",
    "complement_loss",
    "cross_entropy",
    "digits",
    "evaluate",
    "fgsm",
    "ifgsm",
    "normalized_complement_entropy",
    "softmax",
    "spirals",
    "train",
    "two_moons",
]
