"""Brute-force reference implementations used only by tests.

Everything here recomputes from the raw gradient/context history and
walks the full perfect tree in plain (non-log) arithmetic, deliberately
avoiding the efficient engine's incremental log-beta bookkeeping so the
two routes can check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from betolo.core_betting import log_kt_potential
from betolo.side_information import SuffixTree, enumerate_suffix_trees, match_suffix, tree_complexity

__all__ = [
    "FullTreeSnapshot",
    "naive_ctw_bet",
    "naive_ctw_action",
    "naive_ctw_replay",
    "explicit_mixture_potential",
    "TreeCompetitor",
    "best_tree_competitor",
]

_NAIVE_DEPTH_LIMIT = 6
_ENUM_DEPTH_LIMIT = 3

Stats = Dict[str, Tuple[int, np.ndarray]]


def _check_history(
    gradients: Sequence[np.ndarray], contexts: Sequence[str], depth: int
) -> None:
    if len(gradients) != len(contexts):
        raise ValueError(
            f"{len(gradients)} gradients vs {len(contexts)} contexts"
        )
    for ctx in contexts:
        if len(ctx) != depth:
            raise ValueError(f"context {ctx!r} is not of length {depth}")


def _all_suffixes(depth: int) -> List[str]:
    out = [""]
    frontier = [""]
    for _ in range(depth):
        frontier = [c + s for s in frontier for c in "10"]
        out.extend(frontier)
    return out


@dataclass
class FullTreeSnapshot:
    """Statistics of every perfect-tree node, rebuilt from raw history."""

    depth: int
    dim: int
    stats: Stats

    @classmethod
    def from_history(
        cls,
        gradients: Sequence[np.ndarray],
        contexts: Sequence[str],
        depth: int,
        dim: int,
    ) -> "FullTreeSnapshot":
        if depth > _NAIVE_DEPTH_LIMIT:
            raise ValueError(f"depth {depth} exceeds oracle limit {_NAIVE_DEPTH_LIMIT}")
        _check_history(gradients, contexts, depth)
        stats: Stats = {s: (0, np.zeros(dim)) for s in _all_suffixes(depth)}
        for g, ctx in zip(gradients, contexts):
            g = np.asarray(g, dtype=float)
            for d in range(depth + 1):
                s = ctx[depth - d:]
                count, total = stats[s]
                stats[s] = (count + 1, total + g)
        return cls(depth, dim, stats)

    def check_consistency(self) -> None:
        """Internal node statistics must equal the sum of their children's."""
        for s, (count, total) in self.stats.items():
            if len(s) == self.depth:
                continue
            c1, t1 = self.stats["1" + s]
            c0, t0 = self.stats["0" + s]
            if count != c1 + c0:
                raise AssertionError(
                    f"node {s!r}: count {count} != children {c1}+{c0}"
                )
            if not np.allclose(total, t1 + t0, rtol=0, atol=1e-12):
                raise AssertionError(f"node {s!r}: sum differs from children")


def _raw_kt_potential(count: int, sum_vector: np.ndarray) -> float:
    return math.exp(log_kt_potential(count, float(np.linalg.norm(sum_vector))))


def _u_and_psi(
    stats: Stats, suffix: str, depth: int, max_depth: int, context: str, dim: int
) -> Tuple[Union[float, np.ndarray], float]:
    """Unnormalized bet u and tree-weighted potential of one subtree.

    u is a vector for subtrees containing active (context-matching)
    nodes and the scalar equal to the potential elsewhere, following the
    case split that treats off-path node bets as the scalar 1.
    """
    count, total = stats.get(suffix, (0, np.zeros(dim)))
    psi_kt = _raw_kt_potential(count, total)
    active = context.endswith(suffix)
    if depth == max_depth:
        if active:
            return psi_kt * (total / (count + 1)), psi_kt
        return psi_kt, psi_kt
    u1, p1 = _u_and_psi(stats, "1" + suffix, depth + 1, max_depth, context, dim)
    u0, p0 = _u_and_psi(stats, "0" + suffix, depth + 1, max_depth, context, dim)
    psi_ctw = 0.5 * psi_kt + 0.5 * p1 * p0
    if active:
        v = total / (count + 1)
        u = 0.5 * psi_kt * v + 0.5 * u1 * u0
    else:
        u = psi_ctw
    return u, psi_ctw


def naive_ctw_bet(snapshot: FullTreeSnapshot, context: str) -> np.ndarray:
    """Bet vector v of the full-tree recursion for the given context."""
    if len(context) != snapshot.depth:
        raise ValueError("context length must equal the snapshot depth")
    u, psi = _u_and_psi(
        snapshot.stats, "", 0, snapshot.depth, context, snapshot.dim
    )
    return np.asarray(u, dtype=float) / psi


def naive_ctw_replay(
    gradients: Sequence[np.ndarray],
    contexts: Sequence[str],
    depth: int,
    dim: int,
    initial_wealth: float = 1.0,
) -> Tuple[List[np.ndarray], List[float], List[float]]:
    """Replay the whole run with the naive recursion.

    Returns (per-round actions, wealth trace starting at the initial
    wealth, per-round log tree-weighted potential after each round).
    """
    if depth > _NAIVE_DEPTH_LIMIT:
        raise ValueError(f"depth {depth} exceeds oracle limit {_NAIVE_DEPTH_LIMIT}")
    _check_history(gradients, contexts, depth)
    stats: Stats = {s: (0, np.zeros(dim)) for s in _all_suffixes(depth)}
    wealth = float(initial_wealth)
    actions: List[np.ndarray] = []
    trace = [wealth]
    log_potentials: List[float] = []
    for g, ctx in zip(gradients, contexts):
        g = np.asarray(g, dtype=float)
        u, psi = _u_and_psi(stats, "", 0, depth, ctx, dim)
        action = (np.asarray(u, dtype=float) / psi) * wealth
        actions.append(action)
        wealth += float(np.dot(g, action))
        trace.append(wealth)
        for d in range(depth + 1):
            s = ctx[depth - d:]
            count, total = stats[s]
            stats[s] = (count + 1, total + g)
        _, psi_after = _u_and_psi(stats, "", 0, depth, ctx, dim)
        log_potentials.append(math.log(psi_after))
    return actions, trace, log_potentials


def naive_ctw_action(
    gradients: Sequence[np.ndarray],
    contexts: Sequence[str],
    next_context: str,
    depth: int,
    dim: int,
    initial_wealth: float = 1.0,
) -> np.ndarray:
    """Action the naive algorithm would play next, from raw history alone."""
    _, trace, _ = naive_ctw_replay(gradients, contexts, depth, dim, initial_wealth)
    snapshot = FullTreeSnapshot.from_history(gradients, contexts, depth, dim)
    return naive_ctw_bet(snapshot, next_context) * trace[-1]


def explicit_mixture_potential(
    gradients: Sequence[np.ndarray],
    contexts: Sequence[str],
    depth: int,
) -> float:
    """Log of the tree-prior mixture of per-leaf KT potential products.

    Enumerates every suffix tree of depth <= depth, runs an independent
    per-leaf statistics table for each, and mixes with the exact prior
    weights 2^-complexity.
    """
    if depth > _ENUM_DEPTH_LIMIT:
        raise ValueError(f"depth {depth} exceeds enumeration limit {_ENUM_DEPTH_LIMIT}")
    _check_history(gradients, contexts, depth)
    terms = []
    for tree in enumerate_suffix_trees(depth):
        leaf_stats: Dict[str, Tuple[int, Optional[np.ndarray]]] = {
            s: (0, None) for s in tree.leaves
        }
        for g, ctx in zip(gradients, contexts):
            leaf = match_suffix(tree, ctx)
            count, total = leaf_stats[leaf]
            g = np.asarray(g, dtype=float)
            leaf_stats[leaf] = (count + 1, g if total is None else total + g)
        ln_psi = 0.0
        for count, total in leaf_stats.values():
            norm = 0.0 if total is None else float(np.linalg.norm(total))
            ln_psi += log_kt_potential(count, norm)
        ln_weight = -tree_complexity(tree, depth) * math.log(2.0)
        terms.append(ln_weight + ln_psi)
    return float(np.logaddexp.reduce(terms))


@dataclass
class TreeCompetitor:
    """Per-leaf gradient sums of a fixed suffix tree over a history."""

    tree: SuffixTree
    leaf_counts: Dict[str, int]
    leaf_sums: Dict[str, np.ndarray]

    def best_reward(self, leaf_norms: Union[float, Dict[str, float]]) -> float:
        """Best comparator reward when leaf s may use norm c_s: sum c_s |F_s|."""
        total = 0.0
        for leaf, vec in self.leaf_sums.items():
            c = leaf_norms if isinstance(leaf_norms, (int, float)) else leaf_norms[leaf]
            total += float(c) * float(np.linalg.norm(vec))
        return total

    def competitors(
        self, leaf_norms: Union[float, Dict[str, float]]
    ) -> Dict[str, np.ndarray]:
        """The maximizing per-leaf vectors c_s F_s / |F_s| (zero if F_s = 0)."""
        out = {}
        for leaf, vec in self.leaf_sums.items():
            norm = float(np.linalg.norm(vec))
            c = leaf_norms if isinstance(leaf_norms, (int, float)) else leaf_norms[leaf]
            out[leaf] = np.zeros_like(vec) if norm == 0.0 else float(c) * vec / norm
        return out


def best_tree_competitor(
    gradients: Sequence[np.ndarray],
    contexts: Sequence[str],
    tree: SuffixTree,
) -> TreeCompetitor:
    """Aggregate gradients by matched leaf of the given suffix tree."""
    if gradients and len(np.shape(gradients[0])) != 1:
        raise ValueError("gradients must be vectors")
    counts = {s: 0 for s in tree.leaves}
    dim = len(gradients[0]) if gradients else 1
    sums = {s: np.zeros(dim) for s in tree.leaves}
    for g, ctx in zip(gradients, contexts):
        leaf = match_suffix(tree, ctx)
        counts[leaf] += 1
        sums[leaf] = sums[leaf] + np.asarray(g, dtype=float)
    return TreeCompetitor(tree, counts, sums)
