"""Random hierarchical association processes: sampling, string statistics and entropy bounds."""

from .sampler import LazyGrammar, SymbolSequence, sample_block, sample_prefix
from .schedule import (
    PerplexitySchedule,
    make_constant_schedule,
    make_explicit_schedule,
    make_hilberg_schedule,
    make_squaring_schedule,
    validate_schedule,
)

__all__ = [
    "LazyGrammar",
    "PerplexitySchedule",
    "SymbolSequence",
    "make_constant_schedule",
    "make_explicit_schedule",
    "make_hilberg_schedule",
    "make_squaring_schedule",
    "sample_block",
    "sample_prefix",
    "validate_schedule",
]
