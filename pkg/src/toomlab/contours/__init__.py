"""Toom contours: structure, measures and the contour-extending chain."""
from .chain import (Cemetery, ContourChain, ChainDistribution, enumerate_contours,
                    exact_chain_distribution, exploration_spec, partial_peierls_sum,
                    sample_contour, sample_many)
from .graph import (SINK, SOURCE, DecoratedContour, ToomCycle, as_cycle, canonical_order,
                    canonicalize, is_toom_cycle, loose_ends, most_urgent, validate)
from .measures import DependenceRealization, nu_value, presence_check, presence_probability

__all__ = [
    "Cemetery", "ContourChain", "ChainDistribution", "enumerate_contours",
    "exact_chain_distribution", "exploration_spec", "partial_peierls_sum", "sample_contour",
    "sample_many", "SINK", "SOURCE", "DecoratedContour", "ToomCycle", "as_cycle",
    "canonical_order", "canonicalize", "is_toom_cycle", "loose_ends", "most_urgent", "validate",
    "DependenceRealization", "nu_value", "presence_check", "presence_probability",
]
