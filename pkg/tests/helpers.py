"""Shared test utilities: structure families, reference evaluators, corpora.

Everything here is deliberately independent of the package's own algorithms
wherever it serves as an oracle: the mask evaluator recomputes truth tables
bit-parallel from scratch, and the naive game solver explores the raw game
tree without any equivalence-class machinery.
"""
from __future__ import annotations

import itertools
import random

from ordinv.logic import (
    And,
    Atom,
    CountExists,
    Eq,
    Exists,
    FalseFormula,
    Forall,
    Formula,
    Iff,
    Implies,
    Less,
    Not,
    Or,
    TrueFormula,
)
from ordinv.structures import Signature, Structure, atomic_type2

SIG = Signature(relations=(("E", 2), ("P", 1), ("Q", 1)))
SIG_PQ = Signature(relations=(("P", 1), ("Q", 1)))
SIG_E = Signature(relations=(("E", 2),))


def union(components):
    """Disjoint union of tiny components: 'P', 'Q', ('path', n), ('star', k).

    'P' / 'Q' are isolated colored points; ('path', n) is an undirected-ish
    chain 0-1-...-n-1 written as forward E-edges; ('star', k) is a center
    with forward E-edges to k leaves (Gaifman degree k at the center).
    """
    e = set()
    p = set()
    q = set()
    n = 0
    for comp in components:
        if comp == "P":
            p.add((n,))
            n += 1
        elif comp == "Q":
            q.add((n,))
            n += 1
        elif comp[0] == "star":
            _, leaves = comp
            for i in range(leaves):
                e.add((n, n + 1 + i))
            n += leaves + 1
        else:
            _, length = comp
            for i in range(length - 1):
                e.add((n + i, n + i + 1))
            n += length
    return Structure(
        signature=SIG,
        domain_size=n,
        relations={"E": frozenset(e), "P": frozenset(p), "Q": frozenset(q)},
    )


def points(p_count, q_count=0):
    return union(["P"] * p_count + ["Q"] * q_count)


def random_structure(rng, n, sig=SIG):
    """Random structure over `sig` (arity <= 2 relations only)."""
    relations = {}
    for name, arity in sig.relations:
        tuples = set()
        if arity == 1:
            for i in range(n):
                if rng.random() < 0.5:
                    tuples.add((i,))
        else:
            for i in range(n):
                for j in range(n):
                    if rng.random() < 0.3:
                        tuples.add((i, j))
        relations[name] = frozenset(tuples)
    return Structure(signature=sig, domain_size=n, relations=relations)


# --- bit-parallel reference evaluator ---------------------------------------
#
# Truth tables over the assignment grid (x, y) in n x n, one bit per cell at
# index x * n + y.  Quantifiers collapse rows/columns with bitwise tests, so
# this shares no code path with ordinv.evaluator's tree walker.


def _rank_map(s, order_name):
    ranks = s.order_rank(order_name)
    return ranks


def mask_evaluate(s, formula, assignment=None):
    """Evaluate `formula` on `s` via bit-parallel truth tables.

    Only variables x and y are supported.  Order atoms use the structure's
    named orders.  For sentences the table saturates to all-ones or all-zeros;
    with free variables the bit of `assignment` (default x=0, y=0) is read.
    """
    n = s.domain_size
    full = (1 << (n * n)) - 1
    col = [0] * n  # col[j]: all cells with y = j
    row = [0] * n  # row[i]: all cells with x = i
    for i in range(n):
        for j in range(n):
            bit = 1 << (i * n + j)
            row[i] |= bit
            col[j] |= bit

    def table(f) -> int:
        if isinstance(f, TrueFormula):
            return full
        if isinstance(f, FalseFormula):
            return 0
        if isinstance(f, Atom):
            rel = s.rel(f.name)
            m = 0
            for i in range(n):
                for j in range(n):
                    vals = tuple(i if v == "x" else j for v in f.args)
                    if vals in rel:
                        m |= 1 << (i * n + j)
            return m
        if isinstance(f, Less):
            ranks = _rank_map(s, f.order)
            m = 0
            for i in range(n):
                for j in range(n):
                    left = i if f.left == "x" else j
                    right = i if f.right == "x" else j
                    if ranks[left] < ranks[right]:
                        m |= 1 << (i * n + j)
            return m
        if isinstance(f, Eq):
            m = 0
            for i in range(n):
                for j in range(n):
                    left = i if f.left == "x" else j
                    right = i if f.right == "x" else j
                    if left == right:
                        m |= 1 << (i * n + j)
            return m
        if isinstance(f, Not):
            return full ^ table(f.sub)
        if isinstance(f, And):
            return table(f.left) & table(f.right)
        if isinstance(f, Or):
            return table(f.left) | table(f.right)
        if isinstance(f, Implies):
            return (full ^ table(f.left)) | table(f.right)
        if isinstance(f, Iff):
            a, b = table(f.left), table(f.right)
            return full ^ (a ^ b)
        if isinstance(f, (Exists, Forall, CountExists)):
            m = table(f.sub)
            out = 0
            if f.var == "x":
                # collapse over x: for each y-column, test the column's bits
                for j in range(n):
                    bits = m & col[j]
                    if isinstance(f, Exists):
                        ok = bits != 0
                    elif isinstance(f, Forall):
                        ok = bits == col[j]
                    else:
                        ok = bits.bit_count() >= f.count
                    if ok:
                        out |= col[j]
            else:
                for i in range(n):
                    bits = m & row[i]
                    if isinstance(f, Exists):
                        ok = bits != 0
                    elif isinstance(f, Forall):
                        ok = bits == row[i]
                    else:
                        ok = bits.bit_count() >= f.count
                    if ok:
                        out |= row[i]
            return out
        raise TypeError(f"unhandled node {type(f).__name__}")

    m = table(formula)
    if assignment is None:
        assignment = {}
    i = assignment.get("x", 0)
    j = assignment.get("y", 0)
    return bool((m >> (i * n + j)) & 1)


# --- raw game-tree reference solver ------------------------------------------


def naive_fo2(s0, s1, config, rounds, count_bound=None):
    """Raw recursion for the two-pebble (set) game; exponential, tiny inputs only."""
    x0, y0, x1, y1 = config
    if atomic_type2(s0, x0, y0).token() != atomic_type2(s1, x1, y1).token():
        return False
    if rounds == 0:
        return True
    structs = (s0, s1)
    for side in (0, 1):
        for pebble in ("x", "y"):
            if count_bound is None:
                move_sets = [(e,) for e in structs[side].elements]
            else:
                move_sets = []
                for size in range(1, count_bound + 1):
                    move_sets.extend(
                        itertools.combinations(structs[side].elements, size)
                    )
            for pset in move_sets:
                answered = False
                for qset in itertools.combinations(
                    structs[1 - side].elements, len(pset)
                ):
                    all_picks_ok = True
                    for bprime in qset:
                        pick_ok = False
                        for aprime in pset:
                            cfg = list(config)
                            idx = 0 if pebble == "x" else 1
                            cfg[2 * side + idx] = aprime
                            cfg[2 * (1 - side) + idx] = bprime
                            if naive_fo2(s0, s1, tuple(cfg), rounds - 1, count_bound):
                                pick_ok = True
                                break
                        if not pick_ok:
                            all_picks_ok = False
                            break
                    if all_picks_ok:
                        answered = True
                        break
                if not answered:
                    return False
    return True


def naive_winner(s0, s1, rounds, count_bound=None):
    for a in s0.elements:
        for b in s0.elements:
            for c in s1.elements:
                for d in s1.elements:
                    if naive_fo2(s0, s1, (a, b, c, d), rounds, count_bound):
                        return "duplicator"
    return "spoiler"


# --- deterministic sentence corpus --------------------------------------------
#
# Two-variable sentences over {P, Q} and over {E}, mixing order-free,
# order-using-but-invariant, and order-sensitive shapes.  The list is fully
# deterministic (no RNG) so expectations computed once stay valid.

_PQ_CORES = [
    "P(x)",
    "Q(x)",
    "P(x) & Q(x)",
    "P(x) | Q(x)",
    "P(x) -> Q(x)",
    "P(x) <-> !Q(x)",
    "P(x) & !P(y)",
    "P(x) & Q(y)",
    "P(x) | !Q(y)",
    "(P(x) <-> P(y)) & (Q(x) <-> Q(y))",
    "x = y",
    "!(x = y)",
    "x < y",
    "x < y -> (P(x) -> P(y))",
    "x < y & P(x) & Q(y)",
    "(x < y | y < x | x = y)",
    "x < y <-> !(y < x | x = y)",
    "P(x) & x < y",
    "x < y -> !(y < x)",
    "(P(x) & x < y) | (Q(x) & y < x)",
]

_E_CORES = [
    "E(x,y)",
    "E(y,x)",
    "E(x,x)",
    "!E(x,x)",
    "E(x,y) -> E(y,x)",
    "E(x,y) & E(y,x)",
    "E(x,y) & !(x = y)",
    "E(x,y) -> x < y",
    "x < y -> E(x,y)",
    "E(x,y) & y < x",
    "E(x,y) <-> E(y,x)",
    "E(x,y) | E(y,x) | x = y",
    "E(x,y) & x < y",
    "(x < y & E(x,y)) | (y < x & E(y,x))",
    "E(x,x) <-> x < y",
]

_PREFIXES = [
    "forall x. forall y. ({c})",
    "exists x. exists y. ({c})",
    "forall x. exists y. ({c})",
    "exists x. forall y. ({c})",
]

_PQ_EXTRAS = [
    # order-using but invariant on every structure
    "exists x. forall y. (x = y | x < y)",
    "exists x. forall y. !(y < x)",
    "forall x. exists y. (x = y | x < y | y < x)",
    "forall x. !(x < x)",
    "forall x. forall y. (x < y -> !(y < x))",
    # order-sensitive
    "exists x. (P(x) & forall y. (x = y | x < y))",
    "exists x. (Q(x) & forall y. !(y < x))",
    "forall x. (P(x) -> exists y. (x < y & Q(y)))",
    "exists x. (forall y. (y < x -> P(y)) & Q(x))",
    "forall x. forall y. ((P(x) & Q(y)) -> x < y)",
    "exists x. (P(x) & exists y. (x < y & P(y)))",
    "forall x. (exists y. (y < x) -> P(x))",
    # rank three via variable reuse
    "exists x. (P(x) & forall y. (y < x -> exists x. (Q(x) & y < x)))",
    "forall x. exists y. (x < y & forall x. (x < y | x = y | y < x))",
    "exists x. forall y. ((x < y -> P(y)) & (y < x -> Q(y)))",
    # order-free
    "exists x. P(x) & exists x. Q(x)",
    "forall x. (P(x) | Q(x))",
    "!(exists x. (P(x) & Q(x)))",
    "exists x. (P(x) & exists y. (!(x = y) & P(y)))",
    "forall x. exists y. (!(x = y) & (P(y) | Q(y)))",
]

_E_EXTRAS = [
    # invariant
    "forall x. exists y. E(x,y)",
    "forall x. forall y. (E(x,y) -> E(y,x))",
    "forall x. !E(x,x)",
    "exists x. forall y. (E(x,y) | x = y)",
    "forall x. exists y. (E(x,y) | E(y,x))",
    "exists x. exists y. (E(x,y) & E(y,x))",
    # order-sensitive
    "forall x. forall y. (E(x,y) -> x < y)",
    "forall x. forall y. (x < y -> E(x,y))",
    "exists x. exists y. (E(x,y) & y < x)",
    "forall x. (exists y. (x < y) -> exists y. E(x,y))",
    "exists x. (forall y. (x = y | x < y) & exists y. E(x,y))",
    "forall x. forall y. ((E(x,y) & E(y,x)) -> x < y)",
    # rank three via reuse
    "forall x. exists y. (E(x,y) & exists x. E(y,x))",
    "exists x. forall y. (E(x,y) -> exists x. (E(y,x) & !(x = y)))",
    "forall x. exists y. (x < y -> exists x. (E(x,y) & x < y))",
]


def invariance_corpus():
    """Deterministic list of distinct (signature, formula_text); >= 200 entries."""
    raw = []
    for core in _PQ_CORES:
        for prefix in _PREFIXES:
            raw.append((SIG_PQ, prefix.format(c=core)))
    for text in _PQ_EXTRAS:
        raw.append((SIG_PQ, text))
        raw.append((SIG_PQ, f"!({text})"))
    for core in _E_CORES:
        for prefix in _PREFIXES:
            raw.append((SIG_E, prefix.format(c=core)))
    for text in _E_EXTRAS:
        raw.append((SIG_E, text))
        raw.append((SIG_E, f"!({text})"))
    from ordinv.logic import format_formula, parse_formula

    seen = set()
    out = []
    for sig, text in raw:
        key = (sig, format_formula(parse_formula(text)))
        if key not in seen:
            seen.add(key)
            out.append((sig, text))
    return out
