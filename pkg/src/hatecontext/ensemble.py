"""Score combination rules for the two model families.

Both combiners work on probabilities at equal weight. At any threshold the
max rule's positive set is exactly the union of the component positive sets,
so its recall can never drop below either component's.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ScoredPrediction:
    comment_id: str
    p_lr: float
    p_nn: float


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")


def max_ensemble(p_lr: float, p_nn: float) -> float:
    """The larger of the two model scores."""
    _check_probability("p_lr", p_lr)
    _check_probability("p_nn", p_nn)
    return max(p_lr, p_nn)


def avg_ensemble(p_lr: float, p_nn: float) -> float:
    """The arithmetic mean of the two model scores."""
    _check_probability("p_lr", p_lr)
    _check_probability("p_nn", p_nn)
    return (p_lr + p_nn) / 2.0
