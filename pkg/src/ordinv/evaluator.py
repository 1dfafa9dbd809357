"""Tarskian evaluation and exhaustive/sampled order sweeps."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass

from . import logic
from .logic import (
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
from .structures import Structure


def evaluate(s: Structure, f: Formula, assignment: dict[str, int] | None = None) -> bool:
    """Evaluate a formula on a structure under a variable assignment.

    Raises ValueError for uninterpreted symbols, arity mismatches and unbound
    variables.  Results are memoized per (subformula occurrence, restriction
    of the assignment to its free variables).
    """
    env = dict(assignment or {})
    for var, value in env.items():
        if not 0 <= value < s.domain_size:
            raise ValueError(f"assignment {var}={value} out of range")
    ranks = {name: s.order_rank(name) for name in s.order_names}
    free: dict[int, frozenset[str]] = {}

    def collect(node: Formula) -> frozenset[str]:
        if id(node) not in free:
            free[id(node)] = logic.free_variables(node)
            for child in logic.children(node):
                collect(child)
        return free[id(node)]

    collect(f)
    memo: dict[tuple, bool] = {}

    def term(name: str, env: dict[str, int]) -> int:
        if name in env:
            return env[name]
        if name in s.constants:
            return s.constants[name]
        raise ValueError(f"unbound variable {name!r}")

    def walk(node: Formula, env: dict[str, int]) -> bool:
        key = (id(node), tuple(sorted((v, env[v]) for v in free.get(id(node), ()) if v in env)))
        if key in memo:
            return memo[key]
        out = compute(node, env)
        memo[key] = out
        return out

    def compute(node: Formula, env: dict[str, int]) -> bool:
        if isinstance(node, TrueFormula):
            return True
        if isinstance(node, FalseFormula):
            return False
        if isinstance(node, Atom):
            if not s.signature.has_relation(node.name):
                raise ValueError(f"uninterpreted relation symbol {node.name!r}")
            if s.signature.arity(node.name) != len(node.args):
                raise ValueError(f"arity mismatch for {node.name!r}")
            return tuple(term(a, env) for a in node.args) in s.relations[node.name]
        if isinstance(node, Less):
            if node.order not in ranks:
                raise ValueError(f"uninterpreted order symbol {node.order!r}")
            rank = ranks[node.order]
            return rank[term(node.left, env)] < rank[term(node.right, env)]
        if isinstance(node, Eq):
            return term(node.left, env) == term(node.right, env)
        if isinstance(node, Not):
            return not walk(node.sub, env)
        if isinstance(node, And):
            return walk(node.left, env) and walk(node.right, env)
        if isinstance(node, Or):
            return walk(node.left, env) or walk(node.right, env)
        if isinstance(node, Implies):
            return (not walk(node.left, env)) or walk(node.right, env)
        if isinstance(node, Iff):
            return walk(node.left, env) == walk(node.right, env)
        if isinstance(node, Exists):
            for value in s.elements:
                env2 = dict(env)
                env2[node.var] = value
                if walk(node.sub, env2):
                    return True
            return False
        if isinstance(node, Forall):
            for value in s.elements:
                env2 = dict(env)
                env2[node.var] = value
                if not walk(node.sub, env2):
                    return False
            return True
        if isinstance(node, CountExists):
            hits = 0
            for value in s.elements:
                env2 = dict(env)
                env2[node.var] = value
                if walk(node.sub, env2):
                    hits += 1
                    if hits >= node.count:
                        return True
            return False
        raise TypeError(f"not a formula: {node!r}")

    return walk(f, env)


@dataclass(frozen=True)
class OrderSweep:
    """Result of sweeping order interpretations: constant truth or a witness pair."""

    status: str  # "constant_true" | "constant_false" | "varies"
    true_orders: dict[str, tuple[int, ...]] | None
    false_orders: dict[str, tuple[int, ...]] | None
    combinations_checked: int

    @property
    def varies(self) -> bool:
        return self.status == "varies"


def holds_under_orders(
    s: Structure,
    f: Formula,
    max_interpretations: int = 40320,
    sample_count: int | None = None,
    seed: int = 0,
) -> OrderSweep:
    """Sweep interpretations of the order symbols occurring in ``f``.

    Exhaustive by default, guarded by ``max_interpretations``; when
    ``sample_count`` is given, draws that many random interpretations instead,
    always starting with the identity and reversed orders.  Any named orders
    already present on the structure for swept symbols are overridden.
    """
    symbols = logic.analyze(f).order_symbols_used
    n = s.domain_size
    if not symbols:
        value = evaluate(s, f)
        status = "constant_true" if value else "constant_false"
        return OrderSweep(status, {} if value else None, None if value else {}, 1)

    def combos():
        if sample_count is not None:
            rng = random.Random(seed)
            identity = tuple(range(n))
            yield {sym: identity for sym in symbols}
            yield {sym: identity[::-1] for sym in symbols}
            for _ in range(sample_count):
                combo = {}
                for sym in symbols:
                    perm = list(range(n))
                    rng.shuffle(perm)
                    combo[sym] = tuple(perm)
                yield combo
        else:
            total = math.factorial(n) ** len(symbols)
            if total > max_interpretations:
                raise ValueError(
                    f"{total} order interpretations exceed the cap {max_interpretations}"
                )
            for perms in itertools.product(itertools.permutations(range(n)), repeat=len(symbols)):
                yield dict(zip(symbols, perms))

    true_orders = None
    false_orders = None
    checked = 0
    for combo in combos():
        orders = dict(s.named_orders)
        orders.update(combo)
        s2 = Structure(s.signature, n, s.relations, s.constants, orders)
        checked += 1
        if evaluate(s2, f):
            if true_orders is None:
                true_orders = dict(combo)
        else:
            if false_orders is None:
                false_orders = dict(combo)
        if true_orders is not None and false_orders is not None:
            return OrderSweep("varies", true_orders, false_orders, checked)
    if true_orders is not None:
        return OrderSweep("constant_true", true_orders, None, checked)
    return OrderSweep("constant_false", None, false_orders, checked)
