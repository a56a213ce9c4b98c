"""Coin-betting OLO engines: the 1-D and vectorial KT algorithms.

The reduction is the same in both cases: keep the sum of past gradients,
bet the fraction (sum)/(t) of current wealth in that direction, and let
the wealth ledger absorb the per-round linear reward <g_t, w_t>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from betolo.core_betting import kt_bet_fraction, log_kt_potential

__all__ = [
    "GRADIENT_NORM_SLACK",
    "WealthLedger",
    "KtOloState",
    "KtOlo",
    "check_gradient",
    "kt_olo_action",
    "kt_olo_update",
    "one_dim_kt_olo",
]

# Gradients may exceed the unit ball by rounding dust only.
GRADIENT_NORM_SLACK = 1e-12

# Coin-betting wealth is positive by construction; anything at or below
# this is numerical corruption.
_WEALTH_FLOOR = -1e-15


def check_gradient(
    g: Sequence[float], dim: Optional[int] = None, clip: bool = False
) -> np.ndarray:
    """Validate (or, with clip=True, rescale) a gradient into the unit ball."""
    arr = np.asarray(g, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"gradient must be a 1-D vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"gradient dimension {arr.shape[0]} != expected {dim}")
    norm = float(np.linalg.norm(arr))
    if norm > 1.0 + GRADIENT_NORM_SLACK:
        if not clip:
            raise ValueError(
                f"gradient norm {norm!r} exceeds the unit ball; "
                "pass clip=True to rescale"
            )
        arr = arr / norm
    return arr


@dataclass
class WealthLedger:
    """Running wealth of an OLO engine plus the replay log backing it.

    Coin-betting engines keep wealth strictly positive; engines whose
    wealth is merely W_0 plus accumulated linear reward (the baselines)
    construct the ledger with enforce_positive=False.
    """

    initial_wealth: float
    current_wealth: float = field(init=False)
    round: int = field(init=False, default=0)
    enforce_positive: bool = True
    record: bool = True
    actions: List[np.ndarray] = field(init=False, default_factory=list)
    gradients: List[np.ndarray] = field(init=False, default_factory=list)

    def __post_init__(self) -> None:
        if not self.initial_wealth > 0:
            raise ValueError("initial wealth must be positive")
        self.current_wealth = float(self.initial_wealth)

    def settle_round(self, gradient: np.ndarray, action: np.ndarray) -> float:
        """Credit <gradient, action>, advance the round, log for replay."""
        gain = float(np.dot(gradient, action))
        self.current_wealth += gain
        self.round += 1
        if self.record:
            self.actions.append(np.array(action, dtype=float, copy=True))
            self.gradients.append(np.array(gradient, dtype=float, copy=True))
        if self.enforce_positive and self.current_wealth <= _WEALTH_FLOOR:
            raise ArithmeticError(
                f"coin-betting wealth {self.current_wealth!r} lost positivity "
                f"at round {self.round}: numerical corruption"
            )
        return gain

    def replay_wealth(self) -> List[float]:
        """Recompute the wealth trace from the logged actions/gradients."""
        if not self.record:
            raise ValueError("ledger was created without a replay log")
        trace = [float(self.initial_wealth)]
        w = float(self.initial_wealth)
        for g, a in zip(self.gradients, self.actions):
            w += float(np.dot(g, a))
            trace.append(w)
        return trace

    def verify_replay(self, rtol: float = 1e-12) -> None:
        """Assert the stored wealth matches an independent replay."""
        trace = self.replay_wealth()
        if len(trace) != self.round + 1:
            raise AssertionError("replay log length disagrees with round count")
        replayed = trace[-1]
        scale = max(abs(replayed), abs(self.current_wealth), 1.0)
        if abs(replayed - self.current_wealth) > rtol * scale:
            raise AssertionError(
                f"stored wealth {self.current_wealth!r} != replayed {replayed!r}"
            )


@dataclass
class KtOloState:
    """Sufficient statistics of the vectorial KT engine."""

    ledger: WealthLedger
    sum_vector: np.ndarray
    count: int = 0

    def check(self) -> None:
        norm = float(np.linalg.norm(self.sum_vector))
        if norm > self.count + 1e-9 * max(1.0, self.count):
            raise AssertionError(
                f"gradient-sum norm {norm!r} exceeds round count {self.count}"
            )


def kt_olo_action(state: KtOloState) -> np.ndarray:
    """Action of the vectorial KT engine: (F / (count + 1)) * W_{t-1}."""
    return (state.sum_vector / (state.count + 1)) * state.ledger.current_wealth


def kt_olo_update(
    state: KtOloState, g_t: Sequence[float], clip: bool = False
) -> KtOloState:
    """Play the current action against g_t and absorb it into the state."""
    g = check_gradient(g_t, dim=state.sum_vector.shape[0], clip=clip)
    action = kt_olo_action(state)
    state.ledger.settle_round(g, action)
    state.sum_vector = state.sum_vector + g
    state.count += 1
    return state


class KtOlo:
    """Object wrapper around the vectorial KT engine state machine."""

    def __init__(self, dim: int, initial_wealth: float = 1.0, clip: bool = False):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.clip = clip
        self.state = KtOloState(
            ledger=WealthLedger(initial_wealth), sum_vector=np.zeros(dim)
        )

    @property
    def wealth(self) -> float:
        return self.state.ledger.current_wealth

    @property
    def count(self) -> int:
        return self.state.count

    def action(self) -> np.ndarray:
        return kt_olo_action(self.state)

    def update(self, g_t: Sequence[float]) -> None:
        kt_olo_update(self.state, g_t, clip=self.clip)

    def log_wealth_floor(self) -> float:
        """Guaranteed log-wealth: ln W_0 + log potential of the gradient sum."""
        return math.log(self.state.ledger.initial_wealth) + log_kt_potential(
            self.state.count, float(np.linalg.norm(self.state.sum_vector))
        )


def one_dim_kt_olo(
    g_sequence: Sequence[float], initial_wealth: float = 1.0
) -> Tuple[List[float], List[float]]:
    """Run the 1-D KT engine over a +-1-bounded scalar sequence.

    Returns (actions, wealth trace); the trace has T + 1 entries and
    starts at the initial wealth.
    """
    if not initial_wealth > 0:
        raise ValueError("initial wealth must be positive")
    wealth = float(initial_wealth)
    total = 0.0
    actions: List[float] = []
    trace: List[float] = [wealth]
    for t, g in enumerate(g_sequence, start=1):
        g = float(g)
        if abs(g) > 1.0 + GRADIENT_NORM_SLACK:
            raise ValueError(f"|g_{t}| = {abs(g)!r} exceeds 1")
        w_t = kt_bet_fraction(t, total) * wealth
        actions.append(w_t)
        wealth += g * w_t
        total += g
        trace.append(wealth)
        if wealth <= _WEALTH_FLOOR:
            raise ArithmeticError(f"wealth lost positivity at round {t}")
    return actions, trace
