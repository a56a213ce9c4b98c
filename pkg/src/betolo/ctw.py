"""Context-tree-weighted OLO with O(depth) work per round.

The engine maintains, for every visited context suffix, a node holding
the KT statistics of the rounds matching that suffix, plus (at internal
nodes) the log of the ratio between the node's own KT potential and the
product of its children's tree-weighted potentials.  A round touches
only the depth+1 nodes on the active path: once to form the action and
once to fold in the gradient.

All bookkeeping is in log space: the potentials and the per-node ratios
span hundreds of orders of magnitude over long runs.
"""

from __future__ import annotations

import csv
import math
import os
from typing import Dict, List, Optional, Sequence, TextIO

import numpy as np

from betolo.core_betting import log_kt_potential, log_kt_potential_ratio
from betolo.olo_engines import WealthLedger, check_gradient

__all__ = [
    "NodeState",
    "ContextTree",
    "CtwOlo",
    "CtwComponent",
    "ctw_action",
    "ctw_update",
    "ctw_log_potential",
]

# Test-only fault-injection hook: the per-round log-beta increment is
# multiplied by this factor.  Anything other than +1.0 corrupts the
# weighting in a way the brute-force oracles must detect.
_BETA_UPDATE_SIGN = 1.0


def _log_sigmoid(z: float) -> float:
    """ln(sigmoid(z)), stable for large |z|."""
    if z >= 0.0:
        return -math.log1p(math.exp(-z))
    return z - math.log1p(math.exp(z))


def _sigmoid(z: float) -> float:
    """sigmoid(z) without overflow at large |z|."""
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


class NodeState:
    """Per-suffix statistics: visit count, gradient sum, log-beta."""

    __slots__ = ("count", "sum_vector", "log_beta")

    def __init__(self, dim: int):
        self.count = 0
        self.sum_vector = np.zeros(dim)
        self.log_beta = 0.0


class ContextTree:
    """Lazily allocated store of context-suffix nodes.

    Node keys are context suffixes ('' for the root); a depth-d path node
    for context c is c[depth-d:].  Only nodes on visited active paths are
    ever allocated, so the store holds at most (depth+1) * rounds nodes.
    """

    def __init__(self, depth: int, dim: int):
        if depth < 0:
            raise ValueError("depth must be nonnegative")
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.depth = depth
        self.dim = dim
        self.nodes: Dict[str, NodeState] = {}
        self.rounds = 0
        self.node_touches = 0
        self.log_ctw_potential = 0.0

    def _check_context(self, context: str) -> None:
        if len(context) != self.depth:
            raise ValueError(
                f"context length {len(context)} != tree depth {self.depth}"
            )
        for ch in context:
            if ch not in "10":
                raise ValueError(f"context characters must be '1'/'0', got {ch!r}")

    def touch(self, suffix: str) -> NodeState:
        """Access (allocating if needed) a node, counting the touch."""
        self.node_touches += 1
        node = self.nodes.get(suffix)
        if node is None:
            node = NodeState(self.dim)
            self.nodes[suffix] = node
        return node

    def active_path(self, context: str) -> List[str]:
        """Suffixes of the active path, root first: '', c[-1:], ..., c."""
        self._check_context(context)
        return [context[self.depth - d:] for d in range(self.depth + 1)]


def _path_bet(tree: ContextTree, path_nodes: Sequence[NodeState]) -> np.ndarray:
    """Leaf-to-root mixing of per-node KT bets along the active path."""
    leaf = path_nodes[-1]
    v = leaf.sum_vector / (leaf.count + 1)
    for node in reversed(path_nodes[:-1]):
        v_kt = node.sum_vector / (node.count + 1)
        sigma = _sigmoid(node.log_beta)
        v = sigma * v_kt + (1.0 - sigma) * v
    return v


def ctw_action(tree: ContextTree, context: str, wealth_prev: float) -> np.ndarray:
    """Action for the coming round: mixed bet along the active path x wealth.

    Touches exactly depth+1 nodes.
    """
    path = tree.active_path(context)
    nodes = [tree.touch(s) for s in path]
    return _path_bet(tree, nodes) * wealth_prev


def ctw_update(
    tree: ContextTree,
    context: str,
    g_t: Sequence[float],
    ledger: Optional[WealthLedger] = None,
    clip: bool = False,
) -> float:
    """Fold g_t into the active path; returns the root log-potential ratio.

    When a ledger is given, the round's action (recomputed from the same
    pre-update node accesses) is settled against g_t first.  Touches
    exactly depth+1 nodes.
    """
    g = check_gradient(g_t, dim=tree.dim, clip=clip)
    path = tree.active_path(context)
    nodes = [tree.touch(s) for s in path]

    if ledger is not None:
        action = _path_bet(tree, nodes) * ledger.current_wealth
        ledger.settle_round(g, action)

    # Leaf-to-root pass on pre-update statistics.
    child_ctw_ratio = 0.0
    for d in range(tree.depth, -1, -1):
        node = nodes[d]
        old_norm = float(np.linalg.norm(node.sum_vector))
        new_norm = float(np.linalg.norm(node.sum_vector + g))
        kt_ratio = log_kt_potential_ratio(node.count, old_norm, new_norm)
        if d == tree.depth:
            ctw_ratio = kt_ratio
        else:
            ls = _log_sigmoid(node.log_beta)
            l1ms = _log_sigmoid(-node.log_beta)
            ctw_ratio = float(
                np.logaddexp(ls + kt_ratio, l1ms + child_ctw_ratio)
            )
            node.log_beta += _BETA_UPDATE_SIGN * (kt_ratio - child_ctw_ratio)
        node.sum_vector = node.sum_vector + g
        node.count += 1
        child_ctw_ratio = ctw_ratio
    tree.log_ctw_potential += child_ctw_ratio
    tree.rounds += 1
    return child_ctw_ratio


def ctw_log_potential(tree: ContextTree) -> float:
    """Diagnostic from-scratch log potential via the full tree recursion.

    Walks every allocated node; unallocated subtrees contribute log 1.
    Cost is linear in the store size, not in the round count.
    """
    ln_half = -math.log(2.0)

    def rec(suffix: str, depth: int) -> float:
        node = tree.nodes.get(suffix)
        if node is None:
            return 0.0
        ln_kt = log_kt_potential(
            node.count, float(np.linalg.norm(node.sum_vector))
        )
        if depth == tree.depth:
            return ln_kt
        ln_children = rec("1" + suffix, depth + 1) + rec("0" + suffix, depth + 1)
        return float(np.logaddexp(ln_half + ln_kt, ln_half + ln_children))

    return rec("", 0)


class CtwOlo:
    """Context-tree engine bound to a wealth ledger.

    When the environment variable BETOLO_TRACE is set to 1, every update
    appends a CSV row (t, omega_t, ln_wealth, ln_ctw_potential,
    node_touches) to the file named by BETOLO_TRACE_FILE (default
    betolo_trace.csv).
    """

    def __init__(self, depth: int, dim: int, initial_wealth: float = 1.0):
        self.tree = ContextTree(depth, dim)
        self.ledger = WealthLedger(initial_wealth)
        self._trace: Optional[TextIO] = None
        if os.environ.get("BETOLO_TRACE") == "1":
            path = os.environ.get("BETOLO_TRACE_FILE", "betolo_trace.csv")
            fresh = not os.path.exists(path) or os.path.getsize(path) == 0
            self._trace = open(path, "a", newline="")
            if fresh:
                csv.writer(self._trace).writerow(
                    ["t", "omega_t", "ln_wealth", "ln_ctw_potential", "node_touches"]
                )

    @property
    def depth(self) -> int:
        return self.tree.depth

    @property
    def dim(self) -> int:
        return self.tree.dim

    @property
    def wealth(self) -> float:
        return self.ledger.current_wealth

    def action(self, context: str) -> np.ndarray:
        return ctw_action(self.tree, context, self.ledger.current_wealth)

    def update(self, context: str, g_t: Sequence[float], omega_t: int = 0) -> None:
        ctw_update(self.tree, context, g_t, self.ledger)
        if self._trace is not None:
            csv.writer(self._trace).writerow(
                [
                    self.tree.rounds,
                    omega_t,
                    format(math.log(self.ledger.current_wealth), ".17g"),
                    format(self.tree.log_ctw_potential, ".17g"),
                    self.tree.node_touches,
                ]
            )
            self._trace.flush()

    def close(self) -> None:
        if self._trace is not None:
            self._trace.close()
            self._trace = None


class CtwComponent:
    """Ledger-free context-tree stats (mixture-component protocol).

    bet/advance mirror the engine without settling any wealth; the
    mixture owns the shared ledger.
    """

    def __init__(self, depth: int, dim: int):
        self.tree = ContextTree(depth, dim)

    @property
    def dim(self) -> int:
        return self.tree.dim

    def log_potential(self) -> float:
        return self.tree.log_ctw_potential

    def bet(self, context: str) -> np.ndarray:
        path = self.tree.active_path(context)
        nodes = [self.tree.touch(s) for s in path]
        return _path_bet(self.tree, nodes)

    def advance(self, context: str, g: np.ndarray) -> None:
        ctw_update(self.tree, context, g, ledger=None)
