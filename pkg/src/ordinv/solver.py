"""Normal forms, bounded model search, order-invariance and model shrinking.

The satisfiability engine grounds sentences over a fixed domain {0..n-1}:
vocabulary atoms become propositional variables, the order "<0" is frozen to
the natural order of the domain (sound symmetry breaking: models are closed
under relabeling), and every other designated order gets one variable per
unordered pair plus transitivity constraints.  The DPLL decision order puts
1-type atoms (unary and reflexive) before the binary tables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import logic
from ._sat import CnfBuilder, mk_and, mk_not, mk_or, solve_cnf
from .evaluator import evaluate
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
    conjunction,
)
from .structures import (
    AtomicType2,
    Signature,
    Structure,
    atomic_type1,
    atomic_type2,
    apply_two_type,
    induced_substructure,
)


class SolverError(RuntimeError):
    """Internal inconsistency (a result failed its own re-verification)."""


# ---------------------------------------------------------------------------
# Scott-style normal form


@dataclass(frozen=True)
class NormalForm:
    """Two-sided normal form: for i in {0,1}, forall-forall matrix chi_i and
    forall-exists matrices gammas_i, with the order symbol <i confined to
    side i.  All matrices are quantifier-free over the variables x, y."""

    chis: tuple[Formula, Formula]
    gammas: tuple[tuple[Formula, ...], tuple[Formula, ...]]
    base_signature: Signature
    fresh_signature: Signature
    definitions: tuple[tuple[str, Formula], ...] = ()

    @property
    def m_counts(self) -> tuple[int, int]:
        return (len(self.gammas[0]), len(self.gammas[1]))

    @property
    def total_gamma_count(self) -> int:
        return len(self.gammas[0]) + len(self.gammas[1])

    @property
    def full_signature(self) -> Signature:
        return self.base_signature.extended(self.fresh_signature.relations)

    def sentence(self) -> Formula:
        parts = []
        for i in (0, 1):
            parts.append(Forall("x", Forall("y", self.chis[i])))
            for gamma in self.gammas[i]:
                parts.append(Forall("x", Exists("y", gamma)))
        return conjunction(parts)

    def token_size(self) -> int:
        """Token count of all printed matrices (the |nf| of the size bound)."""
        total = 0
        for f in (*self.chis, *self.gammas[0], *self.gammas[1]):
            total += len(logic._tokenize(logic.format_formula(f))) - 1
        return total

    def size_bound(self) -> int:
        size = self.token_size()
        return 16 * size**3 * 2**size


def _is_quantifier_free(f: Formula) -> bool:
    if isinstance(f, (Exists, Forall, CountExists)):
        return False
    return all(_is_quantifier_free(c) for c in logic.children(f))


def _innermost_quantifier(f: Formula):
    for child in logic.children(f):
        found = _innermost_quantifier(child)
        if found is not None:
            return found
    if isinstance(f, (Exists, Forall)) and _is_quantifier_free(f.sub):
        return f
    return None


def _replace_node(host: Formula, target: Formula, replacement: Formula) -> Formula:
    if host is target:
        return replacement
    if isinstance(host, Not):
        return Not(_replace_node(host.sub, target, replacement))
    if isinstance(host, And):
        return And(_replace_node(host.left, target, replacement), _replace_node(host.right, target, replacement))
    if isinstance(host, Or):
        return Or(_replace_node(host.left, target, replacement), _replace_node(host.right, target, replacement))
    if isinstance(host, Implies):
        return Implies(_replace_node(host.left, target, replacement), _replace_node(host.right, target, replacement))
    if isinstance(host, Iff):
        return Iff(_replace_node(host.left, target, replacement), _replace_node(host.right, target, replacement))
    if isinstance(host, Exists):
        return Exists(host.var, _replace_node(host.sub, target, replacement))
    if isinstance(host, Forall):
        return Forall(host.var, _replace_node(host.sub, target, replacement))
    if isinstance(host, CountExists):
        return CountExists(host.count, host.var, _replace_node(host.sub, target, replacement))
    return host


def _rename_qf_variables(f: Formula, mapping: dict[str, str]) -> Formula:
    def sub(name: str) -> str:
        return mapping.get(name, name)

    if isinstance(f, Atom):
        return Atom(f.name, tuple(sub(a) for a in f.args))
    if isinstance(f, Less):
        return Less(f.order, sub(f.left), sub(f.right))
    if isinstance(f, Eq):
        return Eq(sub(f.left), sub(f.right))
    if isinstance(f, Not):
        return Not(_rename_qf_variables(f.sub, mapping))
    if isinstance(f, And):
        return And(_rename_qf_variables(f.left, mapping), _rename_qf_variables(f.right, mapping))
    if isinstance(f, Or):
        return Or(_rename_qf_variables(f.left, mapping), _rename_qf_variables(f.right, mapping))
    if isinstance(f, Implies):
        return Implies(_rename_qf_variables(f.left, mapping), _rename_qf_variables(f.right, mapping))
    if isinstance(f, Iff):
        return Iff(_rename_qf_variables(f.left, mapping), _rename_qf_variables(f.right, mapping))
    if isinstance(f, (TrueFormula, FalseFormula)):
        return f
    raise ValueError("variable renaming is only defined for quantifier-free formulas")


def invariance_sentence(f: Formula) -> Formula:
    """The sentence 'f holds under <0 but not under <1'."""
    f0 = logic.substitute_symbol(f, "<", "<0")
    f1 = logic.substitute_symbol(f, "<", "<1")
    return And(f0, Not(f1))


def scott_normal_form(f: Formula) -> NormalForm:
    """Normal form of the invariance sentence of ``f``.

    Precondition: ``f`` is a sentence using only the variables x and y, no
    counting quantifiers, and no designated order symbol other than "<".
    Each innermost quantified subformula with a quantifier-free body is
    renamed to a fresh unary predicate read at the other variable; the
    resulting forall-forall and forall-exists conjuncts are collected per
    side, with <0 confined to side 0 and <1 to side 1.
    """
    report = logic.analyze(f)
    if report.free_variables:
        raise ValueError("normal form requires a sentence")
    if report.uses_counting:
        raise ValueError("counting quantifiers are not supported here")
    if not report.uses_only_xy:
        raise ValueError("normal form requires the two-variable fragment")
    if any(sym != "<" for sym in report.order_symbols_used):
        raise ValueError("only the designated order symbol '<' may appear")

    base_symbols = logic.relation_symbols(f)
    if any(arity > 2 for arity in base_symbols.values()):
        raise ValueError("arity above 2 is not supported")
    base_signature = Signature(tuple(base_symbols.items()))

    used_names = set(base_symbols)
    fresh_names: list[str] = []
    counter = itertools.count()

    def fresh_name() -> str:
        while True:
            name = f"aux{next(counter)}"
            if name not in used_names:
                used_names.add(name)
                fresh_names.append(name)
                return name

    definitions: list[tuple[str, Formula]] = []
    chis: list[Formula] = []
    gammas: list[tuple[Formula, ...]] = []

    sides = (
        logic.substitute_symbol(f, "<", "<0"),
        Not(logic.substitute_symbol(f, "<", "<1")),
    )
    for side, host in enumerate(sides):
        chi_parts: list[Formula] = []
        gamma_parts: list[Formula] = []
        while not _is_quantifier_free(host):
            node = _innermost_quantifier(host)
            v = node.var
            w = "y" if v == "x" else "x"
            name = fresh_name()
            definitions.append((name, node))
            host = _replace_node(host, node, Atom(name, (w,)))
            swap = {} if w == "x" else {"x": "y", "y": "x"}
            body = node.sub
            if isinstance(node, Exists):
                gamma_parts.append(_rename_qf_variables(Or(Not(Atom(name, (w,))), body), swap))
                chi_parts.append(_rename_qf_variables(Or(Not(body), Atom(name, (w,))), swap))
            else:
                chi_parts.append(_rename_qf_variables(Or(Not(Atom(name, (w,))), body), swap))
                gamma_parts.append(_rename_qf_variables(Or(Not(body), Atom(name, (w,))), swap))
        chi_parts.append(host)
        chis.append(conjunction(chi_parts))
        gammas.append(tuple(gamma_parts))

    for side in (0, 1):
        wrong = f"<{1 - side}"
        for matrix in (chis[side], *gammas[side]):
            if wrong in logic.analyze(matrix).order_symbols_used:
                raise SolverError("order symbol leaked into the wrong side")

    fresh_signature = Signature(tuple((name, 1) for name in fresh_names))
    return NormalForm(
        chis=(chis[0], chis[1]),
        gammas=(gammas[0], gammas[1]),
        base_signature=base_signature,
        fresh_signature=fresh_signature,
        definitions=tuple(definitions),
    )


def expand_with_definitions(nf: NormalForm, s: Structure) -> Structure:
    """Expand a model of the invariance sentence by the fresh predicates.

    Definitions are evaluated in introduction order, so each may mention
    earlier fresh predicates.
    """
    current = s
    sig = s.signature
    for name, definition in nf.definitions:
        sig = sig.extended(((name, 1),))
        free = sorted(logic.free_variables(definition))
        tuples = set()
        if not free:
            if evaluate(current, definition):
                tuples = {(e,) for e in current.elements}
        else:
            (var,) = free
            for e in current.elements:
                if evaluate(current, definition, {var: e}):
                    tuples.add((e,))
        current = current.with_relations({name: tuples}, extra_signature=sig)
    return current


# ---------------------------------------------------------------------------
# normal-form file format


def render_normal_form(nf: NormalForm) -> str:
    lines = []
    if nf.base_signature.relations:
        lines.append("base " + " ".join(f"{n}/{a}" for n, a in nf.base_signature.relations))
    if nf.fresh_signature.relations:
        lines.append("fresh " + " ".join(f"{n}/{a}" for n, a in nf.fresh_signature.relations))
    for i in (0, 1):
        lines.append(f"chi {i} " + logic.format_formula(nf.chis[i]))
    for i in (0, 1):
        for j, gamma in enumerate(nf.gammas[i]):
            lines.append(f"gamma {i} {j} " + logic.format_formula(gamma))
    for name, definition in nf.definitions:
        lines.append(f"def {name} " + logic.format_formula(definition))
    return "\n".join(lines) + "\n"


def parse_normal_form(text: str) -> NormalForm:
    base: list[tuple[str, int]] = []
    fresh: list[tuple[str, int]] = []
    chis: dict[int, Formula] = {}
    gammas: dict[int, dict[int, Formula]] = {0: {}, 1: {}}
    definitions: list[tuple[str, Formula]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, _, rest = line.partition(" ")
        if kind in ("base", "fresh"):
            for tok in rest.split():
                name, _, arity = tok.partition("/")
                (base if kind == "base" else fresh).append((name, int(arity)))
        elif kind == "chi":
            idx, _, body = rest.partition(" ")
            chis[int(idx)] = logic.parse_formula(body)
        elif kind == "gamma":
            i, _, rest2 = rest.partition(" ")
            j, _, body = rest2.partition(" ")
            gammas[int(i)][int(j)] = logic.parse_formula(body)
        elif kind == "def":
            name, _, body = rest.partition(" ")
            definitions.append((name, logic.parse_formula(body)))
        else:
            raise ValueError(f"line {lineno}: unknown directive {kind!r}")
    if sorted(chis) != [0, 1]:
        raise ValueError("normal form needs chi 0 and chi 1")
    return NormalForm(
        chis=(chis[0], chis[1]),
        gammas=(
            tuple(gammas[0][j] for j in sorted(gammas[0])),
            tuple(gammas[1][j] for j in sorted(gammas[1])),
        ),
        base_signature=Signature(tuple(base)),
        fresh_signature=Signature(tuple(fresh)),
        definitions=tuple(definitions),
    )


# ---------------------------------------------------------------------------
# grounding


class _Grounding:
    def __init__(self, signature: Signature, n: int, free_orders, natural_orders):
        if signature.max_arity > 2:
            raise ValueError("grounding supports arity <= 2 only")
        self.signature = signature
        self.n = n
        self.builder = CnfBuilder()
        self.natural_orders = set(natural_orders)
        self.unary_vars: dict[tuple[str, int], int] = {}
        self.reflexive_vars: dict[tuple[str, int], int] = {}
        self.binary_vars: dict[tuple[str, int, int], int] = {}
        self.order_pair_vars: dict[tuple[str, int, int], int] = {}
        for name in signature.unary_names:
            for e in range(n):
                self.unary_vars[(name, e)] = self.builder.new_var()
        for name in signature.binary_names:
            for e in range(n):
                self.reflexive_vars[(name, e)] = self.builder.new_var()
        for name in signature.binary_names:
            for a in range(n):
                for b in range(n):
                    if a != b:
                        self.binary_vars[(name, a, b)] = self.builder.new_var()
        for sym in sorted(free_orders):
            for a in range(n):
                for b in range(a + 1, n):
                    self.order_pair_vars[(sym, a, b)] = self.builder.new_var()
            for a, b, c in itertools.combinations(range(n), 3):
                vab = self.order_pair_vars[(sym, a, b)]
                vbc = self.order_pair_vars[(sym, b, c)]
                vac = self.order_pair_vars[(sym, a, c)]
                self.builder.add_clause([-vab, -vbc, vac])
                self.builder.add_clause([vab, vbc, -vac])

    def decision_order(self) -> list[int]:
        tier1 = sorted(self.unary_vars.values()) + sorted(self.reflexive_vars.values())
        tier2 = sorted(self.binary_vars.values()) + sorted(self.order_pair_vars.values())
        return tier1 + tier2

    def order_literal(self, sym: str, a: int, b: int):
        """Circuit for the atom a <sym b."""
        if a == b:
            return ("const", False)
        if sym in self.natural_orders:
            return ("const", a < b)
        if a < b:
            return ("lit", self.order_pair_vars[(sym, a, b)])
        return ("lit", -self.order_pair_vars[(sym, b, a)])

    def atom_literal(self, name: str, args: tuple[int, ...]):
        if len(args) == 1:
            return ("lit", self.unary_vars[(name, args[0])])
        a, b = args
        if a == b:
            return ("lit", self.reflexive_vars[(name, a)])
        return ("lit", self.binary_vars[(name, a, b)])

    def ground(self, f: Formula, env: dict[str, int]):
        if isinstance(f, TrueFormula):
            return ("const", True)
        if isinstance(f, FalseFormula):
            return ("const", False)
        if isinstance(f, Atom):
            if not self.signature.has_relation(f.name):
                raise ValueError(f"uninterpreted relation symbol {f.name!r}")
            if self.signature.arity(f.name) != len(f.args):
                raise ValueError(f"arity mismatch for {f.name!r}")
            return self.atom_literal(f.name, tuple(env[a] for a in f.args))
        if isinstance(f, Less):
            return self.order_literal(f.order, env[f.left], env[f.right])
        if isinstance(f, Eq):
            return ("const", env[f.left] == env[f.right])
        if isinstance(f, Not):
            return mk_not(self.ground(f.sub, env))
        if isinstance(f, And):
            return mk_and([self.ground(f.left, env), self.ground(f.right, env)])
        if isinstance(f, Or):
            return mk_or([self.ground(f.left, env), self.ground(f.right, env)])
        if isinstance(f, Implies):
            return mk_or([mk_not(self.ground(f.left, env)), self.ground(f.right, env)])
        if isinstance(f, Iff):
            left = self.ground(f.left, env)
            right = self.ground(f.right, env)
            return mk_or([mk_and([left, right]), mk_and([mk_not(left), mk_not(right)])])
        if isinstance(f, Exists):
            return mk_or([self.ground(f.sub, {**env, f.var: e}) for e in range(self.n)])
        if isinstance(f, Forall):
            return mk_and([self.ground(f.sub, {**env, f.var: e}) for e in range(self.n)])
        if isinstance(f, CountExists):
            raise ValueError("counting quantifiers are not supported in model search")
        raise TypeError(f"not a formula: {f!r}")

    def extract_structure(self, assignment: list[bool], order_symbols) -> Structure:
        n = self.n
        rels: dict[str, set[tuple[int, ...]]] = {name: set() for name in self.signature.relation_names}
        for (name, e), var in self.unary_vars.items():
            if assignment[var - 1]:
                rels[name].add((e,))
        for (name, e), var in self.reflexive_vars.items():
            if assignment[var - 1]:
                rels[name].add((e, e))
        for (name, a, b), var in self.binary_vars.items():
            if assignment[var - 1]:
                rels[name].add((a, b))
        orders: dict[str, tuple[int, ...]] = {}
        for sym in order_symbols:
            if sym in self.natural_orders:
                orders[sym] = tuple(range(n))
                continue
            pos = [0] * n
            for e in range(n):
                before = 0
                for f_ in range(n):
                    if f_ == e:
                        continue
                    a, b = min(e, f_), max(e, f_)
                    f_below = assignment[self.order_pair_vars[(sym, a, b)] - 1] == (f_ == a)
                    if f_below:
                        before += 1
                pos[e] = before
            orders[sym] = tuple(sorted(range(n), key=lambda e: pos[e]))
        return Structure(self.signature, n, rels, {}, orders)


def _search_model(sentence_parts, signature: Signature, order_symbols, n: int) -> Structure | None:
    """Satisfiability of a conjunction of (formula, kind) parts at size n.

    kind "forall2" grounds over all pairs, "forall-exists" over each element
    with a disjunction of witnesses, "sentence" grounds the formula as is.
    The lexicographically first order symbol is frozen to the natural order.
    """
    order_symbols = sorted(order_symbols)
    natural = order_symbols[:1]
    free = order_symbols[1:]
    g = _Grounding(signature, n, free, natural)
    ok = True
    for f, kind in sentence_parts:
        if kind == "forall2":
            for a in range(n):
                for b in range(n):
                    ok = ok and g.builder.assert_circuit(g.ground(f, {"x": a, "y": b}))
        elif kind == "forall-exists":
            for a in range(n):
                circuit = mk_or([g.ground(f, {"x": a, "y": b}) for b in range(n)])
                ok = ok and g.builder.assert_circuit(circuit)
        else:
            ok = ok and g.builder.assert_circuit(g.ground(f, {}))
        if not ok:
            return None
    assignment = solve_cnf(g.builder.num_vars, g.builder.clauses, g.decision_order())
    if assignment is None:
        return None
    return g.extract_structure(assignment, order_symbols)


@dataclass(frozen=True)
class ModelSearch:
    """Result of a bounded model search."""

    structure: Structure | None
    max_size: int
    bound: int | None = None

    @property
    def found(self) -> bool:
        return self.structure is not None


def find_model(nf: NormalForm, max_size: int) -> ModelSearch:
    """Smallest model of the normal form up to max_size; <0 is kept natural."""
    parts = [(nf.chis[0], "forall2"), (nf.chis[1], "forall2")]
    for i in (0, 1):
        for gamma in nf.gammas[i]:
            parts.append((gamma, "forall-exists"))
    for n in range(1, max_size + 1):
        s = _search_model(parts, nf.full_signature, ("<0", "<1"), n)
        if s is not None:
            if not evaluate(s, nf.sentence()):
                raise SolverError("extracted structure fails the normal form")
            return ModelSearch(s, max_size, nf.size_bound())
    return ModelSearch(None, max_size, nf.size_bound())


def find_model_direct(f: Formula, max_size: int) -> ModelSearch:
    """Bounded satisfiability of an arbitrary sentence by direct grounding.

    Independent of the normal-form machinery: quantifiers are expanded over
    the domain.  Counting quantifiers are not supported.
    """
    report = logic.analyze(f)
    if report.free_variables:
        raise ValueError("model search requires a sentence")
    if report.uses_counting:
        raise ValueError("counting quantifiers are not supported in model search")
    symbols = logic.relation_symbols(f)
    signature = Signature(tuple(symbols.items()))
    for n in range(1, max_size + 1):
        s = _search_model([(f, "sentence")], signature, report.order_symbols_used, n)
        if s is not None:
            if not evaluate(s, f):
                raise SolverError("extracted structure fails the sentence")
            return ModelSearch(s, max_size)
    return ModelSearch(None, max_size)


# ---------------------------------------------------------------------------
# invariance and validity


@dataclass(frozen=True)
class NotInvariant:
    """Witness of order dependence: one structure, two orders, two answers."""

    structure: Structure  # carries named orders <0 and <1
    order0: tuple[int, ...]
    order1: tuple[int, ...]

    @property
    def invariant(self) -> bool:
        return False


@dataclass(frozen=True)
class InvariantUpTo:
    max_size: int
    bound: int

    @property
    def invariant(self) -> bool:
        return True


def check_invariance(f: Formula, max_size: int):
    """Search for an order-dependence witness among structures of size <= max_size.

    Returns NotInvariant (re-verified by direct evaluation under both orders)
    or InvariantUpTo.
    """
    nf = scott_normal_form(f)
    search = find_model(nf, max_size)
    if not search.found:
        return InvariantUpTo(max_size, nf.size_bound())
    model = search.structure
    reduct = Structure(
        nf.base_signature,
        model.domain_size,
        {name: model.relations[name] for name in nf.base_signature.relation_names},
        {},
        model.named_orders,
    )
    order0 = model.named_orders["<0"]
    order1 = model.named_orders["<1"]
    plain = reduct.without_orders()
    under0 = evaluate(plain.with_named_order("<", order0), f)
    under1 = evaluate(plain.with_named_order("<", order1), f)
    if not under0 or under1:
        raise SolverError("invariance witness failed re-evaluation")
    return NotInvariant(reduct, order0, order1)


@dataclass(frozen=True)
class ValidityResult:
    valid: bool  # no countermodel of size <= max_size exists
    countermodel: Structure | None
    max_size: int


def validity_via_invariance(f: Formula, max_size: int) -> ValidityResult:
    """Decide finite validity up to max_size by reduction to order-invariance.

    A sentence with a one-element countermodel is rejected outright; otherwise
    the negation is folded into 'not-f implies some element is <-maximal with
    a fresh mark', whose order-invariance is equivalent to validity.
    """
    report = logic.analyze(f)
    if report.free_variables:
        raise ValueError("validity requires a sentence")
    tiny = find_model_direct(Not(f), 1)
    if tiny.found:
        return ValidityResult(False, tiny.structure, max_size)

    used = set(logic.relation_symbols(f))
    mark = "P"
    bump = itertools.count()
    while mark in used:
        mark = f"P{next(bump)}"
    psi = Exists("x", And(Atom(mark, ("x",)), Forall("y", Or(Less("<", "y", "x"), Eq("y", "x")))))
    theta = Implies(Not(f), psi)
    outcome = check_invariance(theta, max_size)
    if isinstance(outcome, InvariantUpTo):
        return ValidityResult(True, None, max_size)
    # theta fails under order1: there not-f holds, so dropping the mark gives
    # a countermodel of f under that order.
    witness = outcome.structure
    base_names = [name for name in witness.signature.relation_names if name != mark]
    base_sig = Signature(tuple((name, witness.signature.arity(name)) for name in base_names))
    counter = Structure(
        base_sig,
        witness.domain_size,
        {name: witness.relations[name] for name in base_names},
        {},
        {"<": outcome.order1} if "<" in report.order_symbols_used else {},
    )
    if evaluate(counter, f):
        raise SolverError("countermodel failed re-evaluation")
    return ValidityResult(False, counter, max_size)


# ---------------------------------------------------------------------------
# model shrinking


@dataclass(frozen=True)
class Repair:
    element: int
    partner: int
    gamma_side: int
    gamma_index: int
    old_type: AtomicType2
    new_type: AtomicType2


@dataclass(frozen=True)
class ShrinkResult:
    structure: Structure
    w0: tuple[int, ...]
    w1: tuple[int, ...]
    w2: tuple[int, ...]
    repairs: tuple[Repair, ...]
    element_map: dict[int, int]
    bound: int


class ShrinkError(RuntimeError):
    pass


def render_shrink_trace(result: ShrinkResult) -> str:
    lines = [
        "W0: " + " ".join(str(e) for e in result.w0),
        "W1: " + " ".join(str(e) for e in result.w1),
        "W2: " + " ".join(str(e) for e in result.w2),
    ]
    for r in result.repairs:
        lines.append(
            f"repair {r.element} {r.partner} {r.gamma_side}.{r.gamma_index} "
            f"{r.old_type.token()} {r.new_type.token()}"
        )
    return "\n".join(lines) + "\n"


def shrink_model(nf: NormalForm, s: Structure) -> ShrinkResult:
    """Shrink a model of the normal form along the small-model construction.

    W0 keeps every realization of rare 1-types (at most 4M occurrences) plus,
    per non-rare type and per order, the M least and M greatest realizations;
    W1 and W2 are greedy witness closures preferring already-kept elements,
    smallest index first.  Elements of W2 whose witnesses were dropped are
    repaired by copying the vocabulary 2-type of the lost witness pair onto a
    same-side extremal partner of the same 1-type; order atoms are never
    rewritten, candidate partners are validated against both chi matrices and
    every previously protected pair, and the final structure is re-verified.
    """
    sentence = nf.sentence()
    if not evaluate(s, sentence):
        raise ValueError("input structure is not a model of the normal form")
    if s.domain_size == 0:
        raise ValueError("empty structure")
    n = s.domain_size
    m_total = nf.total_gamma_count
    bound = nf.size_bound()

    if m_total == 0:
        kept = [0]
        small, remap = induced_substructure(s, kept)
        if not evaluate(small, sentence):
            raise ShrinkError("shrunken structure fails the normal form")
        return ShrinkResult(small, (0,), (), (), (), remap, bound)

    types: dict[tuple, list[int]] = {}
    for e in s.elements:
        types.setdefault(atomic_type1(s, e).bits, []).append(e)

    ranks = {name: s.order_rank(name) for name in ("<0", "<1")}
    w0: set[int] = set()
    extremal: dict[tuple, set[int]] = {}
    for bits, members in types.items():
        if len(members) <= 4 * m_total:
            w0.update(members)
            extremal[bits] = set(members)
        else:
            chosen: set[int] = set()
            for name in ("<0", "<1"):
                ordered = sorted(members, key=lambda e: ranks[name][e])
                chosen.update(ordered[:m_total])
                chosen.update(ordered[-m_total:])
            w0.update(chosen)
            extremal[bits] = chosen

    gamma_list = [(i, j, g) for i in (0, 1) for j, g in enumerate(nf.gammas[i])]

    def holds_gamma(struct: Structure, g: Formula, a: int, b: int) -> bool:
        return evaluate(struct, g, {"x": a, "y": b})

    witness_map: dict[tuple[int, int, int], int] = {}
    protected_pairs: set[tuple[int, int]] = set()

    def close(sources, kept: set[int]) -> set[int]:
        added: set[int] = set()
        for e in sorted(sources):
            for i, j, g in gamma_list:
                pool = sorted(kept | added)
                pick = None
                for w in pool:
                    if holds_gamma(s, g, e, w):
                        pick = w
                        break
                if pick is None:
                    for w in s.elements:
                        if holds_gamma(s, g, e, w):
                            pick = w
                            break
                if pick is None:
                    raise ValueError("input structure is not a model (missing witness)")
                witness_map[(e, i, j)] = pick
                protected_pairs.add((e, pick))
                added.add(pick)
        return added - kept

    w1 = close(w0, set(w0))
    w2 = close(w1, w0 | w1)
    kept = sorted(w0 | w1 | w2)
    kept_set = set(kept)

    # mutable copy of the relations, restricted to the kept elements
    relations: dict[str, set[tuple[int, ...]]] = {
        name: {t for t in s.relations[name] if all(v in kept_set for v in t)}
        for name in s.signature.relation_names
    }

    def current() -> Structure:
        return Structure(s.signature, n, {k: frozenset(v) for k, v in relations.items()}, {}, s.named_orders)

    repairs: list[Repair] = []
    rewritten: dict[int, set[int]] = {}

    for e in sorted(w2):
        for i, j, g in gamma_list:
            snapshot = current()
            if any(w in kept_set and holds_gamma(snapshot, g, e, w) for w in kept):
                continue
            # the witness survives in the unrestricted structure: pairs from e
            # to dropped elements were never rewritten
            lost = None
            for w in s.elements:
                if w not in kept_set and holds_gamma(s, g, e, w):
                    lost = w
                    break
            if lost is None:
                raise ShrinkError("no recoverable witness for a kept element")
            bits = atomic_type1(s, lost).bits
            pool = extremal.get(bits, set())
            side_order = f"<{i}"
            need = {}
            for name in ("<0", "<1"):
                need[name] = "lt" if ranks[name][e] < ranks[name][lost] else "gt"

            def side_ok(p: int, name: str) -> bool:
                cmp = "lt" if ranks[name][e] < ranks[name][p] else "gt"
                return cmp == need[name]

            candidates = [
                p
                for p in sorted(pool)
                if p != e
                and p in kept_set
                and side_ok(p, side_order)
                and (e, p) not in protected_pairs
                and (p, e) not in protected_pairs
                and p not in rewritten.get(e, set())
            ]
            candidates.sort(key=lambda p: (0 if side_ok(p, "<0") and side_ok(p, "<1") else 1, p))

            copied = atomic_type2(s, e, lost)
            success = False
            for p in candidates:
                old_t = atomic_type2(snapshot, e, p)
                new_t = old_t.with_vocab_from(copied)
                saved = {name: set(relations[name]) for name in relations}
                apply_two_type(relations, new_t, e, p)
                trial = current()
                ok = holds_gamma(trial, g, e, p)
                if ok:
                    for a, b in ((e, p), (p, e), (e, e), (p, p)):
                        for side in (0, 1):
                            if not evaluate(trial, nf.chis[side], {"x": a, "y": b}):
                                ok = False
                                break
                        if not ok:
                            break
                if ok:
                    # previously established witnesses of e and p must survive
                    for (u, ii, jj), w in witness_map.items():
                        if u in (e, p) or w in (e, p):
                            if not holds_gamma(trial, nf.gammas[ii][jj], u, w):
                                ok = False
                                break
                if not ok:
                    for name in relations:
                        relations[name] = saved[name]
                    continue
                repairs.append(Repair(e, p, i, j, old_t, new_t))
                witness_map[(e, i, j)] = p
                protected_pairs.add((e, p))
                rewritten.setdefault(e, set()).add(p)
                success = True
                break
            if not success:
                raise ShrinkError(
                    f"no valid repair partner for element {e} on gamma {i}.{j}"
                )

    final_full = current()
    small, remap = induced_substructure(final_full, kept)
    if not evaluate(small, sentence):
        raise ShrinkError("shrunken structure fails the normal form")
    if small.domain_size > min(n, bound):
        raise ShrinkError("shrunken structure exceeds the size bound")
    return ShrinkResult(
        small,
        tuple(sorted(w0)),
        tuple(sorted(w1)),
        tuple(sorted(w2)),
        tuple(repairs),
        remap,
        bound,
    )
