"""First-order formulas with counting quantifiers: AST, parser, analysis.

Concrete syntax::

    exists x. P(x) & forall y. (x < y -> E(x,y))
    exists>=3 x. P(x)

Connective precedence from tightest to loosest: ``!``, ``&``, ``|``, ``->``
(right-associative), ``<->``.  Quantifiers scope as far right as possible.
``t <= u`` is sugar for ``t < u | t = u`` and is expanded during parsing.
Order atoms may use the designated symbols ``<``, ``<0`` and ``<1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .structures import ORDER_NAMES

RESERVED_WORDS = ("exists", "forall", "true", "false")


class Formula:
    """Base class for formula nodes; subclasses are frozen dataclasses."""

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class TrueFormula(Formula):
    pass


@dataclass(frozen=True)
class FalseFormula(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str
    args: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))
        if self.name in ORDER_NAMES:
            raise ValueError("use Less for order atoms")


@dataclass(frozen=True)
class Less(Formula):
    """Order atom ``left <order> right`` for a designated order symbol."""

    order: str
    left: str
    right: str

    def __post_init__(self) -> None:
        if self.order not in ORDER_NAMES:
            raise ValueError(f"unknown order symbol {self.order!r}")


@dataclass(frozen=True)
class Eq(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    sub: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    sub: Formula


@dataclass(frozen=True)
class CountExists(Formula):
    """Counting quantifier: at least ``count`` witnesses."""

    count: int
    var: str
    sub: Formula

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("counting index must be >= 1")


TRUE = TrueFormula()
FALSE = FalseFormula()


def conjunction(parts) -> Formula:
    """Right-nested conjunction of a sequence (TRUE when empty)."""
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


def disjunction(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


# ---------------------------------------------------------------------------
# lexer


_SYMBOLS = ("<->", "->", "<=", ">=", "(", ")", ".", ",", "!", "&", "|", "=")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "#":
            break
        if text.startswith("<->", i):
            tokens.append(("sym", "<->"))
            i += 3
            continue
        if ch == "<":
            nxt = text[i + 1] if i + 1 < n else ""
            after = text[i + 2] if i + 2 < n else ""
            if nxt == "=":
                tokens.append(("sym", "<="))
                i += 2
                continue
            if nxt in ("0", "1") and not after.isalnum() and after != "_":
                tokens.append(("order", "<" + nxt))
                i += 2
                continue
            tokens.append(("order", "<"))
            i += 1
            continue
        matched = False
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(("sym", sym))
                i += len(sym)
                matched = True
                break
        if matched:
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(("int", text[i:j]))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            tokens.append(("name", text[i:j]))
            i = j
            continue
        raise ValueError(f"unexpected character {ch!r} at position {i}")
    tokens.append(("end", ""))
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> tuple[str, str]:
        return self.tokens[self.pos]

    def next(self) -> tuple[str, str]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> str:
        tkind, tvalue = self.next()
        if tkind != kind or (value is not None and tvalue != value):
            want = value if value is not None else kind
            raise ValueError(f"expected {want!r}, got {tvalue!r}")
        return tvalue

    def at_symbol(self, value: str) -> bool:
        kind, tvalue = self.peek()
        return kind == "sym" and tvalue == value

    def parse_formula(self) -> Formula:
        return self.parse_iff()

    def parse_iff(self) -> Formula:
        out = self.parse_implies()
        while self.at_symbol("<->"):
            self.next()
            out = Iff(out, self.parse_implies())
        return out

    def parse_implies(self) -> Formula:
        left = self.parse_or()
        if self.at_symbol("->"):
            self.next()
            return Implies(left, self.parse_implies())
        return left

    def parse_or(self) -> Formula:
        out = self.parse_and()
        while self.at_symbol("|"):
            self.next()
            out = Or(out, self.parse_and())
        return out

    def parse_and(self) -> Formula:
        out = self.parse_unary()
        while self.at_symbol("&"):
            self.next()
            out = And(out, self.parse_unary())
        return out

    def parse_unary(self) -> Formula:
        kind, value = self.peek()
        if kind == "sym" and value == "!":
            self.next()
            return Not(self.parse_unary())
        if kind == "name" and value in ("exists", "forall"):
            return self.parse_quantifier()
        return self.parse_atom()

    def parse_quantifier(self) -> Formula:
        _, word = self.next()
        count = None
        if word == "exists" and self.at_symbol(">="):
            self.next()
            count = int(self.expect("int"))
        var = self.parse_variable()
        self.expect("sym", ".")
        body = self.parse_iff()
        if count is not None:
            return CountExists(count, var, body)
        return Exists(var, body) if word == "exists" else Forall(var, body)

    def parse_variable(self) -> str:
        kind, value = self.next()
        if kind != "name" or value in RESERVED_WORDS:
            raise ValueError(f"expected a variable, got {value!r}")
        return value

    def parse_atom(self) -> Formula:
        kind, value = self.peek()
        if kind == "sym" and value == "(":
            self.next()
            out = self.parse_iff()
            self.expect("sym", ")")
            return out
        if kind == "name" and value == "true":
            self.next()
            return TRUE
        if kind == "name" and value == "false":
            self.next()
            return FALSE
        if kind != "name":
            raise ValueError(f"unexpected token {value!r}")
        name = self.parse_variable()
        kind, value = self.peek()
        if kind == "sym" and value == "(":
            self.next()
            args = [self.parse_variable()]
            while self.at_symbol(","):
                self.next()
                args.append(self.parse_variable())
            self.expect("sym", ")")
            return Atom(name, tuple(args))
        if kind == "order":
            self.next()
            right = self.parse_variable()
            return Less(value, name, right)
        if kind == "sym" and value == "<=":
            self.next()
            right = self.parse_variable()
            return Or(Less("<", name, right), Eq(name, right))
        if kind == "sym" and value == "=":
            self.next()
            right = self.parse_variable()
            return Eq(name, right)
        raise ValueError(f"dangling term {name!r}")


def parse_formula(text: str) -> Formula:
    parser = _Parser(_tokenize(text))
    out = parser.parse_formula()
    parser.expect("end")
    return out


def load_formulas(path) -> list[Formula]:
    """Read a .fml file: one formula per line, '#' comments, blanks skipped."""
    formulas = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            formulas.append(parse_formula(line))
    return formulas


# ---------------------------------------------------------------------------
# printer

_PREC_IFF = 1
_PREC_IMPLIES = 2
_PREC_OR = 3
_PREC_AND = 4
_PREC_NOT = 5
_PREC_ATOM = 6


def format_formula(f: Formula) -> str:
    return _format(f, 0)


def _format(f: Formula, required: int) -> str:
    if isinstance(f, TrueFormula):
        return "true"
    if isinstance(f, FalseFormula):
        return "false"
    if isinstance(f, Atom):
        return f.name + "(" + ",".join(f.args) + ")"
    if isinstance(f, Less):
        text = f"{f.left} {f.order} {f.right}"
        return f"({text})" if required >= _PREC_ATOM else text
    if isinstance(f, Eq):
        text = f"{f.left} = {f.right}"
        return f"({text})" if required >= _PREC_ATOM else text
    if isinstance(f, Not):
        return "!" + _format(f.sub, _PREC_NOT)
    if isinstance(f, And):
        text = _format(f.left, _PREC_AND) + " & " + _format(f.right, _PREC_AND + 1)
        return f"({text})" if required > _PREC_AND else text
    if isinstance(f, Or):
        text = _format(f.left, _PREC_OR) + " | " + _format(f.right, _PREC_OR + 1)
        return f"({text})" if required > _PREC_OR else text
    if isinstance(f, Implies):
        text = _format(f.left, _PREC_IMPLIES + 1) + " -> " + _format(f.right, _PREC_IMPLIES)
        return f"({text})" if required > _PREC_IMPLIES else text
    if isinstance(f, Iff):
        text = _format(f.left, _PREC_IFF) + " <-> " + _format(f.right, _PREC_IFF + 1)
        return f"({text})" if required > _PREC_IFF else text
    if isinstance(f, Exists):
        text = f"exists {f.var}. " + _format(f.sub, 0)
        return f"({text})" if required > 0 else text
    if isinstance(f, Forall):
        text = f"forall {f.var}. " + _format(f.sub, 0)
        return f"({text})" if required > 0 else text
    if isinstance(f, CountExists):
        text = f"exists>={f.count} {f.var}. " + _format(f.sub, 0)
        return f"({text})" if required > 0 else text
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# structural helpers


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Not):
        return (f.sub,)
    if isinstance(f, (And, Or, Implies, Iff)):
        return (f.left, f.right)
    if isinstance(f, (Exists, Forall, CountExists)):
        return (f.sub,)
    return ()


def free_variables(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset(f.args)
    if isinstance(f, (Less, Eq)):
        return frozenset((f.left, f.right))
    if isinstance(f, (Exists, Forall, CountExists)):
        return free_variables(f.sub) - {f.var}
    out: frozenset[str] = frozenset()
    for child in children(f):
        out |= free_variables(child)
    return out


def substitute_symbol(f: Formula, old: str, new: str) -> Formula:
    """Rename a relation or order symbol throughout (arity is preserved).

    Renaming between vocabulary and order symbols is allowed when the arity
    is 2 in both roles.
    """

    def walk(node: Formula) -> Formula:
        if isinstance(node, Atom):
            if node.name != old:
                return node
            if new in ORDER_NAMES:
                if len(node.args) != 2:
                    raise ValueError("order symbols have arity 2")
                return Less(new, node.args[0], node.args[1])
            return Atom(new, node.args)
        if isinstance(node, Less):
            if node.order != old:
                return node
            if new in ORDER_NAMES:
                return Less(new, node.left, node.right)
            return Atom(new, (node.left, node.right))
        if isinstance(node, (TrueFormula, FalseFormula, Eq)):
            return node
        if isinstance(node, Not):
            return Not(walk(node.sub))
        if isinstance(node, And):
            return And(walk(node.left), walk(node.right))
        if isinstance(node, Or):
            return Or(walk(node.left), walk(node.right))
        if isinstance(node, Implies):
            return Implies(walk(node.left), walk(node.right))
        if isinstance(node, Iff):
            return Iff(walk(node.left), walk(node.right))
        if isinstance(node, Exists):
            return Exists(node.var, walk(node.sub))
        if isinstance(node, Forall):
            return Forall(node.var, walk(node.sub))
        if isinstance(node, CountExists):
            return CountExists(node.count, node.var, walk(node.sub))
        raise TypeError(f"not a formula: {node!r}")

    return walk(f)


def relation_symbols(f: Formula) -> dict[str, int]:
    """Vocabulary symbols used, mapped to their arity (orders excluded)."""
    out: dict[str, int] = {}

    def walk(node: Formula) -> None:
        if isinstance(node, Atom):
            arity = len(node.args)
            if out.setdefault(node.name, arity) != arity:
                raise ValueError(f"symbol {node.name!r} used with two arities")
        for child in children(node):
            walk(child)

    walk(f)
    return out


@dataclass(frozen=True)
class FragmentReport:
    uses_only_xy: bool
    uses_counting: bool
    order_symbols_used: tuple[str, ...]
    quantifier_rank: int
    counting_index_max: int
    free_variables: tuple[str, ...]


def analyze(f: Formula) -> FragmentReport:
    """Syntactic fragment facts: variables, counting, orders, rank."""
    variables: set[str] = set()
    orders: set[str] = set()
    state = {"counting": False, "max_index": 0}

    def rank(node: Formula) -> int:
        if isinstance(node, Atom):
            variables.update(node.args)
            return 0
        if isinstance(node, Less):
            variables.update((node.left, node.right))
            orders.add(node.order)
            return 0
        if isinstance(node, Eq):
            variables.update((node.left, node.right))
            return 0
        if isinstance(node, (Exists, Forall)):
            variables.add(node.var)
            return 1 + rank(node.sub)
        if isinstance(node, CountExists):
            variables.add(node.var)
            state["counting"] = True
            state["max_index"] = max(state["max_index"], node.count)
            return 1 + rank(node.sub)
        return max((rank(child) for child in children(node)), default=0)

    depth = rank(f)
    return FragmentReport(
        uses_only_xy=variables <= {"x", "y"},
        uses_counting=state["counting"],
        order_symbols_used=tuple(sorted(orders)),
        quantifier_rank=depth,
        counting_index_max=state["max_index"],
        free_variables=tuple(sorted(free_variables(f))),
    )


class FragmentError(ValueError):
    pass


def require_fragment(f: Formula, fragment: str) -> None:
    """Enforce one of the fragments 'fo', 'fo2', 'c2'."""
    report = analyze(f)
    if fragment == "fo":
        if report.uses_counting:
            raise FragmentError("counting quantifiers are not part of FO")
    elif fragment == "fo2":
        if report.uses_counting:
            raise FragmentError("counting quantifiers are not part of FO2")
        if not report.uses_only_xy:
            raise FragmentError("FO2 formulas may only use the variables x and y")
    elif fragment == "c2":
        if not report.uses_only_xy:
            raise FragmentError("C2 formulas may only use the variables x and y")
    else:
        raise ValueError(f"unknown fragment {fragment!r}")
