"""Mixture OLO over several side-information streams, and the addition combiner.

A mixture component is anything with the small protocol
{log_potential() -> float, bet(h) -> vector, advance(h, g) -> None}:
per-state KT stats tables satisfy it, and so do context-tree engines.
The mixture bets the posterior-weighted average of the component bets
against one shared wealth, so its wealth dominates every component's
prior-discounted wealth guarantee.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence

import numpy as np

from betolo.olo_engines import WealthLedger, check_gradient
from betolo.per_state import ProductKtState

__all__ = [
    "MixtureState",
    "MixtureOlo",
    "mixture_action",
    "mixture_update",
    "AdditionCombiner",
    "addition_combine",
]

_PRIOR_TOL = 1e-12


def _validate_prior(prior: Sequence[float], m: int) -> np.ndarray:
    arr = np.asarray(prior, dtype=float)
    if arr.shape != (m,):
        raise ValueError(f"prior has {arr.shape} entries, expected {m}")
    if np.any(arr <= 0.0):
        raise ValueError("prior weights must be strictly positive")
    total = float(arr.sum())
    if abs(total - 1.0) > _PRIOR_TOL:
        raise ValueError(f"prior weights sum to {total!r}, not 1")
    return arr


class MixtureState:
    """Shared wealth plus per-component potentials and prior weights."""

    def __init__(
        self,
        components: Sequence,
        prior: Optional[Sequence[float]] = None,
        initial_wealth: float = 1.0,
    ):
        if not components:
            raise ValueError("mixture needs at least one component")
        self.components = list(components)
        m = len(self.components)
        weights = (
            np.full(m, 1.0 / m) if prior is None else _validate_prior(prior, m)
        )
        self.log_prior = np.log(weights)
        self.ledger = WealthLedger(initial_wealth)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def component_log_potentials(self) -> np.ndarray:
        return np.array([c.log_potential() for c in self.components])

    def log_mixture_potential(self) -> float:
        terms = self.log_prior + self.component_log_potentials()
        return float(np.logaddexp.reduce(terms))

    def posterior(self) -> np.ndarray:
        terms = self.log_prior + self.component_log_potentials()
        return np.exp(terms - np.logaddexp.reduce(terms))

    def check(self, tol: float = 1e-9) -> None:
        ln_mix = self.log_mixture_potential()
        if not math.isfinite(ln_mix):
            raise AssertionError(f"mixture log potential {ln_mix!r} not finite")
        p = self.posterior()
        if abs(float(p.sum()) - 1.0) > 1e-12:
            raise AssertionError(f"posterior sums to {float(p.sum())!r}")
        lhs = math.log(self.ledger.current_wealth)
        rhs = math.log(self.ledger.initial_wealth) + ln_mix
        if lhs < rhs - tol:
            raise AssertionError(f"mixture wealth bound violated: {lhs!r} < {rhs!r}")


def mixture_action(state: MixtureState, h_ts: Sequence) -> np.ndarray:
    """Posterior-weighted average of component bets, scaled by wealth."""
    if len(h_ts) != len(state.components):
        raise ValueError(
            f"{len(h_ts)} side-information symbols for "
            f"{len(state.components)} components"
        )
    p = state.posterior()
    v = np.zeros(state.dim)
    for weight, component, h in zip(p, state.components, h_ts):
        v = v + weight * component.bet(h)
    return v * state.ledger.current_wealth


def mixture_update(
    state: MixtureState, h_ts: Sequence, g_t: Sequence[float], clip: bool = False
) -> MixtureState:
    """Settle the round and advance every component on its own symbol."""
    g = check_gradient(g_t, dim=state.dim, clip=clip)
    action = mixture_action(state, h_ts)
    state.ledger.settle_round(g, action)
    for component, h in zip(state.components, h_ts):
        component.advance(h, g)
    return state


class MixtureOlo:
    """Object wrapper around the mixture state machine."""

    def __init__(
        self,
        components: Sequence,
        prior: Optional[Sequence[float]] = None,
        initial_wealth: float = 1.0,
    ):
        self.state = MixtureState(components, prior, initial_wealth)

    @classmethod
    def of_state_tables(
        cls,
        dim: int,
        num_components: int,
        prior: Optional[Sequence[float]] = None,
        initial_wealth: float = 1.0,
    ) -> "MixtureOlo":
        components = [
            ProductKtState(dim, track_wealth=False) for _ in range(num_components)
        ]
        return cls(components, prior, initial_wealth)

    @property
    def wealth(self) -> float:
        return self.state.ledger.current_wealth

    def action(self, h_ts: Sequence) -> np.ndarray:
        return mixture_action(self.state, h_ts)

    def update(self, h_ts: Sequence, g_t: Sequence[float]) -> None:
        mixture_update(self.state, h_ts, g_t)

    def posterior(self) -> np.ndarray:
        return self.state.posterior()


class AdditionCombiner:
    """Plays the vector sum of sub-engine actions on a shared stream.

    Sub-engines own their side-information sources and expose the no-
    argument protocol {action() -> vector, update(g) -> None, wealth}.
    Against the zero competitor each coin-betting sub-engine loses at
    most its initial wealth, so the combination trails the best
    sub-engine by at most the sum of the other engines' initial wealths.
    """

    def __init__(self, engines: Sequence):
        if not engines:
            raise ValueError("addition needs at least one engine")
        self.engines = list(engines)

    def action(self) -> np.ndarray:
        total = self.engines[0].action()
        for engine in self.engines[1:]:
            total = total + engine.action()
        return total

    def update(self, g_t: Sequence[float]) -> None:
        for engine in self.engines:
            engine.update(g_t)

    @property
    def wealth(self) -> float:
        return float(sum(engine.wealth for engine in self.engines))


def addition_combine(engines: Sequence) -> AdditionCombiner:
    return AdditionCombiner(engines)
