"""Composite eating-quality score built from consumer panel records."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

SCORES_PER_TRAIT = 10
_TRIM = 2  # scores clipped from each end of a trait before averaging

# (trait, weight) in fixed order; weights sum to 1.
TRAIT_WEIGHTS = (
    ("tenderness", 0.3),
    ("juiciness", 0.1),
    ("flavour", 0.3),
    ("overall", 0.3),
)


def trimmed_trait_mean(scores: Sequence[float]) -> float:
    """Mean of the six central scores after clipping the two highest and the
    two lowest of the ten panel scores for one trait."""
    arr = np.asarray(scores, dtype=float)
    if arr.shape != (SCORES_PER_TRAIT,):
        raise ValueError(
            f"expected exactly {SCORES_PER_TRAIT} scores per trait, got {arr.size}"
        )
    if not np.isfinite(arr).all():
        raise ValueError("panel scores must be finite")
    if arr.min() < 0.0 or arr.max() > 100.0:
        raise ValueError("panel scores must lie in [0, 100]")
    return float(np.sort(arr)[_TRIM : SCORES_PER_TRAIT - _TRIM].mean())


@dataclass(frozen=True)
class PanelRecord:
    """Ten consumer scores per sensory trait for one tasted sample."""

    tenderness: tuple[float, ...]
    juiciness: tuple[float, ...]
    flavour: tuple[float, ...]
    overall: tuple[float, ...]

    def trait_scores(self, trait: str) -> tuple[float, ...]:
        return getattr(self, trait)


def mq4(record: PanelRecord) -> float:
    """Composite quality score: 0.3/0.1/0.3/0.3-weighted combination of the
    trimmed trait means for tenderness, juiciness, flavour and overall liking.

    The result lies in [0, 100] because each trimmed mean does and the
    weights sum to one.
    """
    total = 0.0
    for trait, weight in TRAIT_WEIGHTS:
        total += weight * trimmed_trait_mean(record.trait_scores(trait))
    return total
