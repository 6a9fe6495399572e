"""Weighted multilevel / multi-index Monte Carlo toolkit."""

try:
    from ._core import (
        estimate,
        estimate_moments,
        mimc_plan,
        normalized_cost_mlmc,
        normalized_cost_weighted,
        plan,
    )
except ImportError:  # pragma: no cover - in-tree builds place _core at top level
    from _core import (
        estimate,
        estimate_moments,
        mimc_plan,
        normalized_cost_mlmc,
        normalized_cost_weighted,
        plan,
    )

__all__ = [
    "estimate",
    "estimate_moments",
    "mimc_plan",
    "normalized_cost_mlmc",
    "normalized_cost_weighted",
    "plan",
]
