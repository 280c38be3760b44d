# Sampler Module
from .draws import PosteriorDraws, MOVES
from .backfitting import (
    BackfittingSampler,
    ChainState,
    ChainError,
    Proposal,
    run_chain,
    run_chains,
)

__all__ = [
    "PosteriorDraws",
    "MOVES",
    "BackfittingSampler",
    "ChainState",
    "ChainError",
    "Proposal",
    "run_chain",
    "run_chains",
]
