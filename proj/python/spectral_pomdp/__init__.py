"""Spectral estimation of POMDPs and optimistic memoryless learning."""

from ._core import (
    Dims,
    Model,
    SpomdpError,
    estimate,
    estimate_exact,
    generate,
    plan,
    run,
    simulate,
)

__all__ = [
    "Dims",
    "Model",
    "SpomdpError",
    "estimate",
    "estimate_exact",
    "generate",
    "plan",
    "run",
    "simulate",
]
