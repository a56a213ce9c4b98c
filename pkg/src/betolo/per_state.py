"""Per-state engines driven by a single side-information stream.

The flagship engine runs one KT bet per side-information state against a
single shared wealth: its potential is the product over states of the
scalar KT potentials of the per-state gradient sums.  The baselines
(per-state OGD, per-state dimension-free exponentiated gradient,
per-state AdaNormal) keep independent per-state iterates instead of a
shared wealth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Hashable, Iterator, Optional, Sequence, Tuple

import numpy as np

from betolo.core_betting import log_kt_potential, log_kt_potential_ratio
from betolo.olo_engines import WealthLedger, check_gradient

__all__ = [
    "StateRecord",
    "StateTable",
    "ProductKtState",
    "product_kt_action",
    "product_kt_update",
    "PerStateOgd",
    "per_state_ogd",
    "PerStateDfeg",
    "per_state_dfeg",
    "PerStateAdanormal",
    "per_state_adanormal",
]

State = Hashable


@dataclass
class StateRecord:
    """Sufficient statistics of one side-information state."""

    count: int
    sum_vector: np.ndarray


class StateTable:
    """Lazily allocated per-state records of fixed dimension."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = dim
        self._records: Dict[State, StateRecord] = {}

    def record(self, state: State) -> StateRecord:
        rec = self._records.get(state)
        if rec is None:
            rec = StateRecord(0, np.zeros(self.dim))
            self._records[state] = rec
        return rec

    def peek(self, state: State) -> Optional[StateRecord]:
        return self._records.get(state)

    def items(self) -> Iterator[Tuple[State, StateRecord]]:
        return iter(self._records.items())

    def __len__(self) -> int:
        return len(self._records)

    def total_count(self) -> int:
        return sum(rec.count for rec in self._records.values())

    def check(self) -> None:
        for state, rec in self._records.items():
            norm = float(np.linalg.norm(rec.sum_vector))
            if norm > rec.count + 1e-9 * max(1.0, rec.count):
                raise AssertionError(
                    f"state {state!r}: sum norm {norm!r} exceeds count {rec.count}"
                )


class ProductKtState:
    """Shared-wealth KT betting across side-information states.

    Maintains the per-state records, the running log of the product
    potential, and (unless track_wealth=False, the mode used for mixture
    components that share an external ledger) the wealth ledger.
    """

    def __init__(
        self, dim: int, initial_wealth: float = 1.0, track_wealth: bool = True
    ):
        self.table = StateTable(dim)
        self.log_product_potential = 0.0
        self.ledger: Optional[WealthLedger] = (
            WealthLedger(initial_wealth) if track_wealth else None
        )

    @property
    def dim(self) -> int:
        return self.table.dim

    def log_potential(self) -> float:
        """Running log product potential (mixture-component protocol)."""
        return self.log_product_potential

    def bet(self, state: State) -> np.ndarray:
        """Vectorial bet fraction for the active state: F_s / (T_s + 1)."""
        rec = self.table.peek(state)
        if rec is None:
            return np.zeros(self.dim)
        return rec.sum_vector / (rec.count + 1)

    def advance(self, state: State, g: np.ndarray) -> float:
        """Fold g into the active state; returns the log-potential ratio."""
        rec = self.table.record(state)
        old_norm = float(np.linalg.norm(rec.sum_vector))
        rec.sum_vector = rec.sum_vector + g
        new_norm = float(np.linalg.norm(rec.sum_vector))
        rec.count += 1
        ratio = log_kt_potential_ratio(rec.count - 1, old_norm, new_norm)
        self.log_product_potential += ratio
        return ratio

    def recompute_log_potential(self) -> float:
        """From-scratch log product potential over all state records."""
        total = 0.0
        for _, rec in self.table.items():
            total += log_kt_potential(rec.count, float(np.linalg.norm(rec.sum_vector)))
        return total

    def check(self, tol: float = 1e-9) -> None:
        self.table.check()
        fresh = self.recompute_log_potential()
        scale = max(1.0, abs(fresh))
        if abs(fresh - self.log_product_potential) > tol * scale:
            raise AssertionError(
                f"incremental log potential {self.log_product_potential!r} "
                f"drifted from recomputation {fresh!r}"
            )
        if self.ledger is not None:
            lhs = math.log(self.ledger.current_wealth)
            rhs = math.log(self.ledger.initial_wealth) + self.log_product_potential
            if lhs < rhs - tol:
                raise AssertionError(
                    f"wealth bound violated: ln W = {lhs!r} < {rhs!r}"
                )


def product_kt_action(state: ProductKtState, h_t: State) -> np.ndarray:
    """Action of the shared-wealth per-state engine for the active state."""
    if state.ledger is None:
        raise ValueError("state tracks no wealth; use bet() for raw fractions")
    rec = state.table.peek(h_t)
    if rec is None:
        return np.zeros(state.dim)
    return (rec.sum_vector / (rec.count + 1)) * state.ledger.current_wealth


def product_kt_update(
    state: ProductKtState, h_t: State, g_t: Sequence[float], clip: bool = False
) -> ProductKtState:
    """Play the current action against g_t and fold g_t into state h_t."""
    if state.ledger is None:
        raise ValueError("state tracks no wealth; use advance() for raw stats")
    g = check_gradient(g_t, dim=state.dim, clip=clip)
    action = product_kt_action(state, h_t)
    state.ledger.settle_round(g, action)
    state.advance(h_t, g)
    return state


class PerStateOgd:
    """Independent gradient-ascent iterate per side-information state."""

    def __init__(self, step_scale: float, dim: int, initial_wealth: float = 1.0):
        if step_scale < 0:
            raise ValueError("step scale must be nonnegative")
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.step_scale = float(step_scale)
        self.dim = dim
        self.ledger = WealthLedger(initial_wealth, enforce_positive=False)
        self._iterates: Dict[State, np.ndarray] = {}

    @property
    def wealth(self) -> float:
        return self.ledger.current_wealth

    def action(self, h_t: State) -> np.ndarray:
        w = self._iterates.get(h_t)
        return np.zeros(self.dim) if w is None else w.copy()

    def update(self, h_t: State, g_t: Sequence[float], clip: bool = False) -> None:
        g = check_gradient(g_t, dim=self.dim, clip=clip)
        w = self._iterates.setdefault(h_t, np.zeros(self.dim))
        self.ledger.settle_round(g, w)
        self._iterates[h_t] = w + self.step_scale * g


def per_state_ogd(
    step_scale: float, dim: int, initial_wealth: float = 1.0
) -> PerStateOgd:
    return PerStateOgd(step_scale, dim, initial_wealth)


_DFEG_A_RANGE = (0.882, 1.109)


class PerStateDfeg:
    """Per-state dimension-free exponentiated gradient (regression harness).

    The per-round protocol is two-phase because the scale accumulator is
    fed the feature norm before the action is formed: begin_round(state,
    feature_norm) returns the action; finish_round(loss_gradient)
    consumes the round's loss gradient (already multiplied by the
    feature vector).
    """

    def __init__(
        self,
        lipschitz: float,
        delta: float,
        a: float,
        dim: int,
        initial_wealth: float = 1.0,
    ):
        if not _DFEG_A_RANGE[0] <= a <= _DFEG_A_RANGE[1]:
            raise ValueError(
                f"a={a!r} outside the admissible range "
                f"[{_DFEG_A_RANGE[0]}, {_DFEG_A_RANGE[1]}]"
            )
        if not delta > 0:
            raise ValueError("delta must be positive")
        if not lipschitz > 0:
            raise ValueError("Lipschitz constant must be positive")
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.lipschitz = float(lipschitz)
        self.delta = float(delta)
        self.a = float(a)
        self.dim = dim
        self.ledger = WealthLedger(initial_wealth, enforce_positive=False)
        self._theta: Dict[State, np.ndarray] = {}
        self._scale: Dict[State, float] = {}
        self._pending: Optional[Tuple[State, np.ndarray]] = None

    @property
    def wealth(self) -> float:
        return self.ledger.current_wealth

    def scale_accumulator(self, h_t: State) -> float:
        return self._scale.get(h_t, self.delta)

    def begin_round(self, h_t: State, feature_norm: float) -> np.ndarray:
        if self._pending is not None:
            raise RuntimeError("previous round not finished")
        if feature_norm < 0:
            raise ValueError("feature norm must be nonnegative")
        L = self.lipschitz
        H = self._scale.get(h_t, self.delta)
        H += L * L * max(feature_norm, feature_norm * feature_norm)
        self._scale[h_t] = H
        alpha = self.a * math.sqrt(H)
        beta = H ** 1.5
        theta = self._theta.get(h_t)
        if theta is None or not float(np.linalg.norm(theta)) > 0.0:
            w = np.zeros(self.dim)
        else:
            norm = float(np.linalg.norm(theta))
            w = (theta / (beta * norm)) * math.exp(norm / alpha)
        self._pending = (h_t, w)
        return w.copy()

    def finish_round(self, loss_gradient: Sequence[float]) -> None:
        if self._pending is None:
            raise RuntimeError("begin_round must precede finish_round")
        h_t, w = self._pending
        self._pending = None
        g = np.asarray(loss_gradient, dtype=float)
        if g.shape != (self.dim,):
            raise ValueError(f"loss gradient shape {g.shape} != ({self.dim},)")
        # Wealth accrues the reward convention: minus the linearized loss.
        self.ledger.settle_round(-g, w)
        theta = self._theta.setdefault(h_t, np.zeros(self.dim))
        self._theta[h_t] = theta - g


def per_state_dfeg(
    lipschitz: float,
    delta: float,
    a: float,
    dim: int,
    initial_wealth: float = 1.0,
) -> PerStateDfeg:
    return PerStateDfeg(lipschitz, delta, a, dim, initial_wealth)


class PerStateAdanormal:
    """Per-state AdaNormal betting on raw loss-gradient streams.

    theta is per state; the time index inside the action display is the
    global round count, matching the listing this engine follows.
    """

    def __init__(
        self,
        lipschitz: float,
        a: float,
        eps: float,
        dim: int,
        initial_wealth: float = 1.0,
    ):
        if not lipschitz > 0:
            raise ValueError("Lipschitz constant must be positive")
        threshold = 3.0 * lipschitz * lipschitz * math.pi / 4.0
        if a < threshold - 1e-12 * max(1.0, threshold):
            raise ValueError(
                f"a={a!r} below the admissible minimum {threshold!r}"
            )
        if not eps > 0:
            raise ValueError("eps must be positive")
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.lipschitz = float(lipschitz)
        self.a = float(a)
        self.eps = float(eps)
        self.dim = dim
        self.ledger = WealthLedger(initial_wealth, enforce_positive=False)
        self._theta: Dict[State, np.ndarray] = {}
        self.rounds_played = 0

    @property
    def wealth(self) -> float:
        return self.ledger.current_wealth

    def action(self, h_t: State) -> np.ndarray:
        t = self.rounds_played + 1
        theta = self._theta.get(h_t)
        if theta is None:
            return np.zeros(self.dim)
        norm = float(np.linalg.norm(theta))
        if not norm > 0.0:
            return np.zeros(self.dim)
        L = self.lipschitz
        denom = 2.0 * self.a * t
        coef = (
            self.eps
            / (2.0 * L * math.log(t + 1.0) ** 2)
            * (
                math.exp((norm + L) ** 2 / denom)
                - math.exp((norm - L) ** 2 / denom)
            )
        )
        return (theta / norm) * coef

    def update(self, h_t: State, loss_gradient: Sequence[float]) -> None:
        g = np.asarray(loss_gradient, dtype=float)
        if g.shape != (self.dim,):
            raise ValueError(f"loss gradient shape {g.shape} != ({self.dim},)")
        norm = float(np.linalg.norm(g))
        if norm > self.lipschitz + 1e-12 * max(1.0, self.lipschitz):
            raise ValueError(
                f"loss gradient norm {norm!r} exceeds Lipschitz bound "
                f"{self.lipschitz}"
            )
        w = self.action(h_t)
        self.ledger.settle_round(-g, w)
        theta = self._theta.setdefault(h_t, np.zeros(self.dim))
        self._theta[h_t] = theta - g
        self.rounds_played += 1


def per_state_adanormal(
    lipschitz: float,
    a: float,
    eps: float,
    dim: int,
    initial_wealth: float = 1.0,
) -> PerStateAdanormal:
    return PerStateAdanormal(lipschitz, a, eps, dim, initial_wealth)
