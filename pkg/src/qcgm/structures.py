"""Built-in conditional-independence structures used by the CLI and experiments.

They span 1-4 vertices, 1-3 cliques and clique sizes 1-3.
"""
import numpy as np

from ._random import make_rng
from .model import GraphicalModel

STRUCTURES = {
    "single-vertex": (1, ((0,),)),
    "single-edge": (2, ((0, 1),)),
    "3-chain": (3, ((0, 1), (1, 2))),
    "3-star": (4, ((0, 1), (0, 2), (0, 3))),
    "triangle": (3, ((0, 1, 2),)),
    "two-disjoint-edges": (4, ((0, 1), (2, 3))),
    "4-chain": (4, ((0, 1), (1, 2), (2, 3))),
    "3-clique-plus-pendant-edge": (4, ((0, 1, 2), (2, 3))),
}


def structure(name):
    try:
        return STRUCTURES[name]
    except KeyError:
        raise ValueError(f"unknown structure {name!r}; choose from {', '.join(STRUCTURES)}") from None


def random_structure_model(name, seed, low=-5.0, high=0.0) -> GraphicalModel:
    """Model with parameters drawn uniformly from ``[low, high)``."""
    if high > 0:
        raise ValueError("parameter range must lie in (-inf, 0]")
    n, cliques = structure(name)
    d = sum(2 ** len(c) for c in cliques)
    theta = make_rng(seed, 7).uniform(low, high, size=d)
    return GraphicalModel(n, cliques, theta)
