"""Complete binary trees with child, descendant, and sibling relations.

A *dendroid* of depth ``n`` is the complete binary tree of depth ``n``
equipped with three binary relations: ``T`` (parent to child), ``D``
(proper ancestor to descendant, the transitive closure of ``T``), and
``S`` (the symmetric sibling relation).  Once a linear order is placed
on the domain, each sibling pair splits into a *left* child (the
smaller) and a *right* child (the larger), and the tree acquires a
unique root-to-leaf *zig-zag* path that starts at the root, steps to a
right child, and then alternates left/right.

The headline formula :func:`phi_even_zigzag` is a two-variable sentence
using the order that holds exactly on dendroids of even depth — under
every choice of the order — while failing to be order-invariant over
unrestricted structures.  :func:`class_invariance_experiment` reproduces
that behaviour empirically and :func:`deep_dendroid_similarity` runs the
depth-similarity games.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from . import games
from .evaluator import evaluate
from .logic import (
    And,
    Atom,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Less,
    Not,
    Or,
    conjunction,
)
from .structures import Signature, Structure

DENDROID_SIGNATURE = Signature(relations=(("T", 2), ("D", 2), ("S", 2)))


def _word_index(word: str) -> int:
    """Level-order index of a binary word: the root is 0, then by length."""
    base = (1 << len(word)) - 1
    return base + (int(word, 2) if word else 0)


def make_dendroid(depth: int) -> Structure:
    """The complete binary tree of the given depth over ``T``, ``D``, ``S``.

    Elements are numbered in level order: the root is ``0``, the two
    children of node ``v`` are ``2v + 1`` and ``2v + 2``.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    words = [""]
    frontier = [""]
    for _ in range(depth):
        frontier = [w + bit for w in frontier for bit in ("0", "1")]
        words.extend(frontier)
    t_rel = set()
    d_rel = set()
    s_rel = set()
    for w in words:
        if len(w) < depth:
            for bit in ("0", "1"):
                t_rel.add((_word_index(w), _word_index(w + bit)))
            s_rel.add((_word_index(w + "0"), _word_index(w + "1")))
            s_rel.add((_word_index(w + "1"), _word_index(w + "0")))
    for w in words:
        for u in words:
            if len(u) > len(w) and u.startswith(w):
                d_rel.add((_word_index(w), _word_index(u)))
    return Structure(
        signature=DENDROID_SIGNATURE,
        domain_size=len(words),
        relations={
            "T": frozenset(t_rel),
            "D": frozenset(d_rel),
            "S": frozenset(s_rel),
        },
    )


def dendroid_depth(s: Structure) -> int:
    """Depth of a dendroid (validated by :func:`is_dendroid` beforehand)."""
    size = s.domain_size
    depth = 0
    while (1 << (depth + 1)) - 1 < size:
        depth += 1
    return depth


def is_dendroid(s: Structure) -> bool:
    """Structural membership test for the dendroid class.

    Checks: one root; every node has zero or two children, each with a
    single parent; all leaves at the same depth; ``D`` equal to the
    transitive closure of ``T``; ``S`` the symmetric sibling relation.
    """
    names = {name for name, _ in s.signature.relations}
    if not {"T", "D", "S"} <= names:
        return False
    if any(s.signature.arity(r) != 2 for r in ("T", "D", "S")):
        return False
    t_rel = s.rel("T")
    children: dict[int, list[int]] = {e: [] for e in s.elements}
    parents: dict[int, list[int]] = {e: [] for e in s.elements}
    for a, b in t_rel:
        children[a].append(b)
        parents[b].append(a)
    roots = [e for e in s.elements if not parents[e]]
    if len(roots) != 1:
        return False
    root = roots[0]
    if any(len(ps) > 1 for ps in parents.values()):
        return False
    depth_of: dict[int, int] = {root: 0}
    queue = [root]
    while queue:
        v = queue.pop()
        if len(children[v]) not in (0, 2):
            return False
        for c in children[v]:
            if c in depth_of:
                return False
            depth_of[c] = depth_of[v] + 1
            queue.append(c)
    if len(depth_of) != s.domain_size:
        return False
    leaf_depths = {depth_of[e] for e in s.elements if not children[e]}
    if len(leaf_depths) != 1:
        return False
    closure = set()
    for e in s.elements:
        stack = list(children[e])
        while stack:
            d = stack.pop()
            if (e, d) not in closure:
                closure.add((e, d))
                stack.extend(children[d])
    if closure != set(s.rel("D")):
        return False
    siblings = set()
    for v, kids in children.items():
        if len(kids) == 2:
            a, b = kids
            siblings.add((a, b))
            siblings.add((b, a))
    return siblings == set(s.rel("S"))


# ---------------------------------------------------------------------------
# The even-zig-zag sentence
# ---------------------------------------------------------------------------


def _is_root(v: str, other: str) -> Formula:
    return Not(Exists(other, Atom("T", (other, v))))


def _is_leaf(v: str, other: str) -> Formula:
    return Not(Exists(other, Atom("T", (v, other))))


def _left_sibling(v: str, other: str) -> Formula:
    return Exists(other, And(Atom("S", (v, other)), Less("<", v, other)))


def _right_sibling(v: str, other: str) -> Formula:
    return Exists(other, And(Atom("S", (v, other)), Less("<", other, v)))


def _is_second(v: str, other: str) -> Formula:
    return Exists(other, And(Atom("T", (other, v)), _is_root(other, v)))


def phi_even_zigzag() -> Formula:
    """Two-variable order sentence true exactly on even-depth dendroids.

    It asserts the existence of a leaf ``x`` that is a left child and
    whose chain of ancestors alternates correctly: the depth-1 ancestor
    is a right child, every deeper right-child ancestor has a left-child
    parent, and every deeper left-child ancestor has a right-child
    parent.  The ancestor-or-self guard makes the constraints reach the
    leaf itself, closing the chain.
    """
    ancestor_or_self = Or(Atom("D", ("y", "x")), Eq("y", "x"))
    second_is_right = Forall(
        "y",
        Implies(
            And(_is_second("y", "x"), ancestor_or_self),
            _right_sibling("y", "x"),
        ),
    )
    deep = And(Not(_is_root("y", "x")), Not(_is_second("y", "x")))
    right_has_left_parent = Forall(
        "y",
        Implies(
            conjunction([deep, ancestor_or_self, _right_sibling("y", "x")]),
            Exists("x", And(Atom("T", ("x", "y")), _left_sibling("x", "y"))),
        ),
    )
    left_has_right_parent = Forall(
        "y",
        Implies(
            conjunction([deep, ancestor_or_self, _left_sibling("y", "x")]),
            Exists("x", And(Atom("T", ("x", "y")), _right_sibling("x", "y"))),
        ),
    )
    return Exists(
        "x",
        conjunction(
            [
                _is_leaf("x", "y"),
                _left_sibling("x", "y"),
                second_is_right,
                right_has_left_parent,
                left_has_right_parent,
            ]
        ),
    )


# ---------------------------------------------------------------------------
# Zig-zag paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZigZag:
    """The order-determined zig-zag path and its parity."""

    path: tuple[int, ...]
    even: bool


def find_zigzag(s: Structure) -> ZigZag:
    """Walk the zig-zag of an ordered dendroid structurally.

    Starting at the root, step to the right (order-larger) child, then
    alternate left/right.  The path is even when its final step enters a
    left child, which happens exactly at even depth.
    """
    if not s.named_orders:
        raise ValueError("find_zigzag needs an ordered dendroid")
    rank = s.order_rank("<")
    children: dict[int, list[int]] = {e: [] for e in s.elements}
    has_parent = set()
    for a, b in s.rel("T"):
        children[a].append(b)
        has_parent.add(b)
    root = min(e for e in s.elements if e not in has_parent)
    path = [root]
    take_right = True
    current = root
    while children[current]:
        kids = sorted(children[current], key=lambda e: rank[e])
        current = kids[1] if take_right else kids[0]
        path.append(current)
        take_right = not take_right
    if len(path) == 1:
        return ZigZag(path=tuple(path), even=True)
    last, parent = path[-1], path[-2]
    kids = sorted(children[parent], key=lambda e: rank[e])
    return ZigZag(path=tuple(path), even=last == kids[0])


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def _permutations_for(
    size: int, depth: int, orders_per_depth: int, seed: int
) -> list[tuple[str, tuple[int, ...]]]:
    if size <= 3:
        import itertools

        return [
            (f"perm{i}", perm)
            for i, perm in enumerate(itertools.permutations(range(size)))
        ]
    rng = random.Random(seed * 1009 + depth)
    named: list[tuple[str, tuple[int, ...]]] = [
        ("level", tuple(range(size))),
        ("reverse", tuple(reversed(range(size)))),
    ]
    for i in range(max(0, orders_per_depth - len(named))):
        perm = list(range(size))
        rng.shuffle(perm)
        named.append((f"seeded{i}", tuple(perm)))
    return named


@dataclass(frozen=True)
class ExperimentRow:
    depth: int
    order_name: str
    holds: bool
    zigzag_even: bool

    def tsv(self) -> str:
        return (
            f"{self.depth}\t{self.order_name}\t"
            f"{int(self.holds)}\t{int(self.zigzag_even)}"
        )


def class_invariance_experiment(
    max_depth: int,
    orders_per_depth: int = 50,
    seed: int = 0,
    depths: Sequence[int] | None = None,
) -> list[ExperimentRow]:
    """Evaluate the even-zig-zag sentence across depths and orders.

    For every depth up to ``max_depth`` (or exactly the ``depths`` given)
    and a spread of linear orders — exhaustive when the domain has at most
    three elements, named plus seeded otherwise — record whether the
    sentence holds and whether the zig-zag is even.  On the dendroid class
    the two columns agree and depend only on the depth's parity: the
    sentence is invariant *on the class* even though it is not invariant
    in general.
    """
    phi = phi_even_zigzag()
    rows: list[ExperimentRow] = []
    for depth in depths if depths is not None else range(1, max_depth + 1):
        plain = make_dendroid(depth)
        for name, perm in _permutations_for(
            plain.domain_size, depth, orders_per_depth, seed
        ):
            ordered = plain.with_named_order("<", perm)
            rows.append(
                ExperimentRow(
                    depth=depth,
                    order_name=name,
                    holds=evaluate(ordered, phi),
                    zigzag_even=find_zigzag(ordered).even,
                )
            )
    return rows


@dataclass(frozen=True)
class SimilarityRow:
    depth0: int
    depth1: int
    rounds: int
    winner: str

    def tsv(self) -> str:
        return f"{self.depth0}\t{self.depth1}\t{self.rounds}\t{self.winner}"


def deep_dendroid_similarity() -> list[SimilarityRow]:
    """Back-and-forth game results contrasting deep and shallow dendroids.

    Deep trees of depths 4 and 5 survive the one-round game; shallow
    trees of depths 1 and 2 are separated with two rounds (a node with a
    non-child descendant exists only at depth 2); and depths 1 versus 4
    are recorded at one round for reference.
    """
    cells = ((4, 5, 1), (1, 2, 2), (1, 4, 1))
    rows = []
    for d0, d1, rounds in cells:
        winner = games.fo_game_winner(make_dendroid(d0), make_dendroid(d1), rounds)
        rows.append(SimilarityRow(depth0=d0, depth1=d1, rounds=rounds, winner=winner))
    return rows
