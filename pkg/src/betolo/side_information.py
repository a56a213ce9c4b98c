"""Side information sources: quantizers, Markov contexts, suffix trees.

Binary symbols are +1 / -1 in numeric form.  Context and leaf strings use
the characters '1' (for +1) and '0' (for -1), written oldest symbol
first, so the last character is the most recent symbol and leaf matching
is a string-suffix test.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "BinaryQuantizer",
    "TreeValidation",
    "SuffixTree",
    "quantize",
    "symbols_to_string",
    "string_to_symbols",
    "markov_context",
    "match_suffix",
    "validate_suffix_tree",
    "enumerate_suffix_trees",
    "tree_complexity",
    "tree_weight",
    "perfect_tree",
]

_PAD_SYMBOL = 1  # positions before the first round read as +1


def _sign(x: float) -> int:
    # sgn(0) := +1 by convention, so the output alphabet is exactly {+1, -1}.
    return 1 if x >= 0.0 else -1


@dataclass(frozen=True)
class BinaryQuantizer:
    """Maps a gradient to a binary symbol.

    Either a canonical axis quantizer (sign of coordinate axis_index) or a
    general direction quantizer (sign of the inner product with
    direction).  Exactly one of the two must be given.
    """

    axis_index: Optional[int] = None
    direction: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if (self.axis_index is None) == (self.direction is None):
            raise ValueError("provide exactly one of axis_index or direction")
        if self.axis_index is not None and self.axis_index < 0:
            raise ValueError("axis_index must be nonnegative")
        if self.direction is not None:
            object.__setattr__(self, "direction", tuple(float(v) for v in self.direction))


def quantize(q: BinaryQuantizer, g: Sequence[float]) -> int:
    """Binary symbol of a gradient under the quantizer; sgn(0) = +1."""
    arr = np.asarray(g, dtype=float)
    if q.axis_index is not None:
        if q.axis_index >= arr.shape[0]:
            raise ValueError(
                f"axis {q.axis_index} out of range for dimension {arr.shape[0]}"
            )
        return _sign(float(arr[q.axis_index]))
    f = np.asarray(q.direction, dtype=float)
    if f.shape != arr.shape:
        raise ValueError(f"direction shape {f.shape} != gradient shape {arr.shape}")
    return _sign(float(np.dot(f, arr)))


def symbols_to_string(symbols: Iterable[int]) -> str:
    """Encode +1/-1 symbols as '1'/'0' characters, oldest first."""
    out = []
    for s in symbols:
        if s == 1:
            out.append("1")
        elif s == -1:
            out.append("0")
        else:
            raise ValueError(f"symbol must be +1 or -1, got {s!r}")
    return "".join(out)


def string_to_symbols(text: str) -> List[int]:
    """Decode a '1'/'0' string into +1/-1 symbols."""
    out = []
    for ch in text:
        if ch == "1":
            out.append(1)
        elif ch == "0":
            out.append(-1)
        else:
            raise ValueError(f"context characters must be '1' or '0', got {ch!r}")
    return out


def markov_context(omega: Sequence[int], t: int, depth: int) -> str:
    """The depth most recent auxiliary symbols before round t, as a string.

    Position k <= 0 (before the first round) reads as +1.  omega[i] is
    the symbol revealed at the end of round i + 1, so the context for
    round t is omega_{t-depth} ... omega_{t-1}, oldest first.
    """
    if t < 1:
        raise ValueError("round index starts at 1")
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    syms = []
    for k in range(t - depth, t):
        syms.append(omega[k - 1] if k >= 1 else _PAD_SYMBOL)
    return symbols_to_string(syms)


@dataclass(frozen=True)
class TreeValidation:
    ok: bool
    reason: str = ""
    witness: str = ""


def _validate_leaves(leaves: FrozenSet[str], seen_suffix: str) -> TreeValidation:
    # Recursive split on the most recent symbol (last character).
    if leaves == frozenset([""]):
        return TreeValidation(True)
    if "" in leaves:
        other = next(s for s in leaves if s != "")
        return TreeValidation(
            False, "properness", f"'{other + seen_suffix}' extends leaf '{seen_suffix}'"
        )
    ones = frozenset(s[:-1] for s in leaves if s.endswith("1"))
    zeros = frozenset(s[:-1] for s in leaves if s.endswith("0"))
    if not ones:
        return TreeValidation(False, "completeness", "no leaf matches ...1" + seen_suffix)
    if not zeros:
        return TreeValidation(False, "completeness", "no leaf matches ...0" + seen_suffix)
    for branch, sub in (("1", ones), ("0", zeros)):
        res = _validate_leaves(sub, branch + seen_suffix)
        if not res.ok:
            return res
    return TreeValidation(True)


def validate_suffix_tree(leaves: Iterable[str]) -> TreeValidation:
    """Check properness and completeness of a set of leaf suffixes.

    Accepts exactly the leaf sets of full binary trees: no leaf is a
    suffix of another, and every semi-infinite symbol string has a
    matching leaf.  On failure names the violated property and a witness.
    """
    leafset = frozenset(leaves)
    if not leafset:
        return TreeValidation(False, "completeness", "empty leaf set matches nothing")
    for s in leafset:
        for ch in s:
            if ch not in "10":
                return TreeValidation(False, "alphabet", f"bad character {ch!r} in '{s}'")
    return _validate_leaves(leafset, "")


@dataclass(frozen=True)
class SuffixTree:
    """A proper and complete set of binary suffix strings (full binary tree)."""

    leaves: FrozenSet[str]

    def __post_init__(self) -> None:
        res = validate_suffix_tree(self.leaves)
        if not res.ok:
            raise ValueError(f"invalid suffix tree ({res.reason}): {res.witness}")
        object.__setattr__(self, "leaves", frozenset(self.leaves))

    @property
    def depth(self) -> int:
        return max(len(s) for s in self.leaves)

    def to_string(self) -> str:
        """Canonical text form: sorted leaves, comma-separated.

        The root-only tree serializes to the empty string.
        """
        return ",".join(sorted(self.leaves))

    @classmethod
    def from_string(cls, text: str) -> "SuffixTree":
        parts = text.split(",") if text else [""]
        return cls(frozenset(p.strip() for p in parts))


def match_suffix(tree: SuffixTree, context: str) -> str:
    """The unique leaf that is a suffix of the context string."""
    if len(context) < tree.depth:
        raise ValueError(
            f"context of length {len(context)} shorter than tree depth {tree.depth}"
        )
    matches = [s for s in tree.leaves if context.endswith(s)]
    if len(matches) != 1:
        raise AssertionError(
            f"context {context!r} matched {len(matches)} leaves; tree invariant broken"
        )
    return matches[0]


def enumerate_suffix_trees(depth: int) -> List[SuffixTree]:
    """All suffix trees of depth at most `depth` (sizes 1, 2, 5, 26).

    Refuses depth > 3: the count grows like O(2^(2^depth)).
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if depth > 3:
        raise ValueError("enumeration supported only for depth <= 3")

    def build(d: int) -> List[FrozenSet[str]]:
        if d == 0:
            return [frozenset([""])]
        sub = build(d - 1)
        out = [frozenset([""])]
        for t1 in sub:
            for t0 in sub:
                out.append(
                    frozenset(s + "1" for s in t1) | frozenset(s + "0" for s in t0)
                )
        return out

    return [SuffixTree(leaves) for leaves in build(depth)]


def tree_complexity(tree: SuffixTree, depth: int) -> int:
    """Complexity Gamma = 2|T| - 1 - #leaves at maximal depth."""
    if tree.depth > depth:
        raise ValueError(f"tree depth {tree.depth} exceeds bound {depth}")
    at_depth = sum(1 for s in tree.leaves if len(s) == depth)
    return 2 * len(tree.leaves) - 1 - at_depth


def tree_weight(tree: SuffixTree, depth: int) -> Fraction:
    """Prior weight w(T) = 2^-Gamma as an exact rational."""
    return Fraction(1, 2 ** tree_complexity(tree, depth))


def perfect_tree(depth: int) -> SuffixTree:
    """The perfect tree of the given depth: every string of that length."""
    if depth == 0:
        return SuffixTree(frozenset([""]))
    leaves = frozenset(
        "".join(bits) for bits in itertools.product("10", repeat=depth)
    )
    return SuffixTree(leaves)
