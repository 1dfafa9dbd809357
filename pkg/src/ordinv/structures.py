"""Finite relational structures with optional designated linear orders.

Domains are always {0, ..., n-1}.  Relation symbols have arity >= 1.  A
structure may additionally carry up to three *named orders* ("<", "<0", "<1"),
each stored as the increasing enumeration of the whole domain.  Named orders
are deliberately not ordinary relations: they never contribute to the Gaifman
graph, and atomic types keep order information in a separate slot so the
vocabulary part of a type can be manipulated without touching order atoms.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

ORDER_NAMES = ("<", "<0", "<1")

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


def _check_symbol_name(name: str) -> None:
    if name in ORDER_NAMES:
        raise ValueError(f"{name!r} is reserved for named orders")
    if not _NAME_RE.match(name):
        raise ValueError(f"bad symbol name {name!r}")


@dataclass(frozen=True)
class Signature:
    """Relation symbols with arities, plus constant symbols."""

    relations: tuple[tuple[str, int], ...] = ()
    constants: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        rels = tuple(sorted((str(n), int(a)) for n, a in self.relations))
        consts = tuple(sorted(str(c) for c in self.constants))
        object.__setattr__(self, "relations", rels)
        object.__setattr__(self, "constants", consts)
        seen: set[str] = set()
        for name, arity in rels:
            _check_symbol_name(name)
            if arity < 1:
                raise ValueError(f"relation {name!r} must have arity >= 1")
            if name in seen:
                raise ValueError(f"duplicate symbol {name!r}")
            seen.add(name)
        for name in consts:
            _check_symbol_name(name)
            if name in seen:
                raise ValueError(f"duplicate symbol {name!r}")
            seen.add(name)

    def arity(self, name: str) -> int:
        for rel, arity in self.relations:
            if rel == name:
                return arity
        raise ValueError(f"unknown relation {name!r}")

    def has_relation(self, name: str) -> bool:
        return any(rel == name for rel, _ in self.relations)

    @property
    def relation_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.relations)

    @property
    def unary_names(self) -> tuple[str, ...]:
        return tuple(name for name, a in self.relations if a == 1)

    @property
    def binary_names(self) -> tuple[str, ...]:
        return tuple(name for name, a in self.relations if a == 2)

    @property
    def max_arity(self) -> int:
        return max((a for _, a in self.relations), default=0)

    def extended(self, relations=(), constants=()) -> Signature:
        """A signature with extra symbols added (names must be new)."""
        return Signature(self.relations + tuple(relations), self.constants + tuple(constants))


EMPTY_SIGNATURE = Signature()


@dataclass(frozen=True)
class Structure:
    """A finite structure over a :class:`Signature`.

    ``relations`` maps every relation name to a frozenset of tuples,
    ``constants`` maps constant names to elements, and ``named_orders`` maps
    reserved order names to the increasing enumeration of the domain.
    """

    signature: Signature
    domain_size: int
    relations: dict[str, frozenset[tuple[int, ...]]] = field(default_factory=dict)
    constants: dict[str, int] = field(default_factory=dict)
    named_orders: dict[str, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = self.domain_size
        if n < 0:
            raise ValueError("domain size must be >= 0")
        rels: dict[str, frozenset[tuple[int, ...]]] = {}
        for name, arity in self.signature.relations:
            tuples = frozenset(tuple(int(v) for v in t) for t in self.relations.get(name, ()))
            for t in tuples:
                if len(t) != arity:
                    raise ValueError(f"tuple {t} has wrong arity for {name}/{arity}")
                if any(v < 0 or v >= n for v in t):
                    raise ValueError(f"tuple {t} out of range for {name}")
            rels[name] = tuples
        for name in self.relations:
            if not self.signature.has_relation(name):
                raise ValueError(f"relation {name!r} not in signature")
        consts: dict[str, int] = {}
        for name in self.signature.constants:
            if name not in self.constants:
                raise ValueError(f"constant {name!r} has no interpretation")
            value = int(self.constants[name])
            if value < 0 or value >= n:
                raise ValueError(f"constant {name!r} out of range")
            consts[name] = value
        for name in self.constants:
            if name not in self.signature.constants:
                raise ValueError(f"constant {name!r} not in signature")
        orders: dict[str, tuple[int, ...]] = {}
        for name in sorted(self.named_orders):
            if name not in ORDER_NAMES:
                raise ValueError(f"order name must be one of {ORDER_NAMES}, got {name!r}")
            seq = tuple(int(v) for v in self.named_orders[name])
            if sorted(seq) != list(range(n)):
                raise ValueError(f"order {name!r} is not a permutation of the domain")
            orders[name] = seq
        object.__setattr__(self, "relations", rels)
        object.__setattr__(self, "constants", consts)
        object.__setattr__(self, "named_orders", orders)

    @property
    def elements(self) -> range:
        return range(self.domain_size)

    def rel(self, name: str) -> frozenset[tuple[int, ...]]:
        if name not in self.relations:
            raise ValueError(f"unknown relation {name!r}")
        return self.relations[name]

    def has_order(self, name: str) -> bool:
        return name in self.named_orders

    @property
    def order_names(self) -> tuple[str, ...]:
        return tuple(sorted(self.named_orders))

    def order(self, name: str) -> tuple[int, ...]:
        if name not in self.named_orders:
            raise ValueError(f"structure has no named order {name!r}")
        return self.named_orders[name]

    def order_rank(self, name: str) -> list[int]:
        """Position of each element in the named order (indexed by element)."""
        rank = [0] * self.domain_size
        for pos, e in enumerate(self.order(name)):
            rank[e] = pos
        return rank

    def with_named_order(self, name: str, enumeration) -> Structure:
        orders = dict(self.named_orders)
        orders[name] = tuple(enumeration)
        return Structure(self.signature, self.domain_size, self.relations, self.constants, orders)

    def without_orders(self) -> Structure:
        return Structure(self.signature, self.domain_size, self.relations, self.constants, {})

    def with_relations(self, updates: dict[str, object], extra_signature: Signature | None = None) -> Structure:
        """Replace some relation interpretations, optionally widening the signature."""
        sig = self.signature if extra_signature is None else extra_signature
        rels = dict(self.relations)
        rels.update({name: frozenset(map(tuple, tuples)) for name, tuples in updates.items()})
        return Structure(sig, self.domain_size, rels, self.constants, self.named_orders)


@dataclass(frozen=True)
class PointedStructure:
    """A structure with a designated center element."""

    structure: Structure
    center: int

    def __post_init__(self) -> None:
        if not 0 <= self.center < self.structure.domain_size:
            raise ValueError("center out of range")

    def key(self) -> str:
        return canonical_key(self.structure, self.center)


# ---------------------------------------------------------------------------
# file format


def parse_structure(text: str) -> Structure:
    """Parse the line-based structure format.

    Directives: ``signature P/1 E/2``, ``domain 4``, ``rel E 0 1``,
    ``const c 2``, ``order < : 0 2 1 3``.  ``#`` starts a comment.
    """
    relations: list[tuple[str, int]] = []
    domain_size: int | None = None
    rel_tuples: dict[str, set[tuple[int, ...]]] = {}
    constants: dict[str, int] = {}
    orders: dict[str, tuple[int, ...]] = {}

    def fail(lineno: int, msg: str) -> ValueError:
        return ValueError(f"line {lineno}: {msg}")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind = tokens[0]
        if kind == "signature":
            for tok in tokens[1:]:
                if "/" not in tok:
                    raise fail(lineno, f"bad signature entry {tok!r}")
                name, _, arity = tok.partition("/")
                if not arity.isdigit():
                    raise fail(lineno, f"bad arity in {tok!r}")
                relations.append((name, int(arity)))
        elif kind == "domain":
            if len(tokens) != 2 or not tokens[1].isdigit():
                raise fail(lineno, "expected: domain <n>")
            if domain_size is not None:
                raise fail(lineno, "duplicate domain line")
            domain_size = int(tokens[1])
        elif kind == "rel":
            if len(tokens) < 2:
                raise fail(lineno, "expected: rel <name> <elements...>")
            name = tokens[1]
            try:
                tup = tuple(int(t) for t in tokens[2:])
            except ValueError:
                raise fail(lineno, "relation elements must be integers") from None
            rel_tuples.setdefault(name, set()).add(tup)
        elif kind == "const":
            if len(tokens) != 3 or not tokens[2].lstrip("-").isdigit():
                raise fail(lineno, "expected: const <name> <element>")
            if tokens[1] in constants:
                raise fail(lineno, f"duplicate constant {tokens[1]!r}")
            constants[tokens[1]] = int(tokens[2])
        elif kind == "order":
            if len(tokens) < 3 or tokens[2] != ":":
                raise fail(lineno, "expected: order <name> : <elements...>")
            name = tokens[1]
            if name in orders:
                raise fail(lineno, f"duplicate order {name!r}")
            try:
                orders[name] = tuple(int(t) for t in tokens[3:])
            except ValueError:
                raise fail(lineno, "order elements must be integers") from None
        else:
            raise fail(lineno, f"unknown directive {kind!r}")

    if domain_size is None:
        raise ValueError("missing domain line")
    for name in rel_tuples:
        if not any(r == name for r, _ in relations):
            raise ValueError(f"rel line uses {name!r} which is not in the signature")
    sig = Signature(tuple(relations), tuple(constants))
    return Structure(sig, domain_size, {k: frozenset(v) for k, v in rel_tuples.items()}, constants, orders)


def load_structure(path) -> Structure:
    return parse_structure(Path(path).read_text())


def structure_to_text(s: Structure) -> str:
    lines = []
    if s.signature.relations:
        lines.append("signature " + " ".join(f"{n}/{a}" for n, a in s.signature.relations))
    lines.append(f"domain {s.domain_size}")
    for name in s.signature.relation_names:
        for tup in sorted(s.relations[name]):
            lines.append("rel " + name + " " + " ".join(str(v) for v in tup))
    for name in s.signature.constants:
        lines.append(f"const {name} {s.constants[name]}")
    for name in ORDER_NAMES:
        if name in s.named_orders:
            lines.append(f"order {name} : " + " ".join(str(v) for v in s.named_orders[name]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Gaifman graph, distance, balls


def gaifman_adjacency(s: Structure) -> list[set[int]]:
    """Adjacency sets of the Gaifman graph (named orders excluded)."""
    adj: list[set[int]] = [set() for _ in range(s.domain_size)]
    for name in s.signature.relation_names:
        for tup in s.relations[name]:
            distinct = sorted(set(tup))
            for a, b in itertools.combinations(distinct, 2):
                adj[a].add(b)
                adj[b].add(a)
    return adj


def gaifman_edges(s: Structure) -> frozenset[tuple[int, int]]:
    adj = gaifman_adjacency(s)
    return frozenset((a, b) for a in s.elements for b in adj[a] if a < b)


def distance(s: Structure, a: int, b: int, adjacency: list[set[int]] | None = None) -> float:
    """Gaifman distance between two elements; ``math.inf`` when disconnected."""
    if a == b:
        return 0
    adj = gaifman_adjacency(s) if adjacency is None else adjacency
    seen = {a}
    frontier = [a]
    dist = 0
    while frontier:
        dist += 1
        new: list[int] = []
        for v in frontier:
            for w in adj[v]:
                if w == b:
                    return dist
                if w not in seen:
                    seen.add(w)
                    new.append(w)
        frontier = new
    return math.inf


def ball(s: Structure, center: int, radius: int, adjacency: list[set[int]] | None = None) -> list[int]:
    """Sorted list of elements at Gaifman distance <= radius from center."""
    adj = gaifman_adjacency(s) if adjacency is None else adjacency
    seen = {center}
    frontier = [center]
    for _ in range(radius):
        new = []
        for v in frontier:
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    new.append(w)
        if not new:
            break
        frontier = new
    return sorted(seen)


def induced_substructure(s: Structure, keep) -> tuple[Structure, dict[int, int]]:
    """Substructure induced on ``keep`` (ascending), with the old->new map.

    Constants must survive the restriction; named orders are restricted to the
    kept elements.
    """
    kept = sorted(set(keep))
    remap = {old: new for new, old in enumerate(kept)}
    rels = {
        name: frozenset(tuple(remap[v] for v in t) for t in s.relations[name] if all(v in remap for v in t))
        for name in s.signature.relation_names
    }
    for name, value in s.constants.items():
        if value not in remap:
            raise ValueError(f"constant {name!r} not contained in the kept set")
    consts = {name: remap[value] for name, value in s.constants.items()}
    orders = {name: tuple(remap[e] for e in seq if e in remap) for name, seq in s.named_orders.items()}
    return Structure(s.signature, len(kept), rels, consts, orders), remap


# ---------------------------------------------------------------------------
# atomic types


def _require_types_supported(sig: Signature) -> None:
    if sig.max_arity > 2:
        raise ValueError("atomic types are only defined for signatures of arity <= 2")


def type1_slots(sig: Signature) -> tuple[tuple[str, str], ...]:
    """Literal slots of a 1-type: unary atoms P(x) and reflexive atoms R(x,x)."""
    _require_types_supported(sig)
    slots = [(name, "x") for name in sig.unary_names]
    slots += [(name, "xx") for name in sig.binary_names]
    return tuple(slots)


def type2_slots(sig: Signature) -> tuple[tuple[str, str], ...]:
    """Literal slots of a 2-type over the variable pair (x, y)."""
    _require_types_supported(sig)
    slots = []
    for name in sig.unary_names:
        slots += [(name, "x"), (name, "y")]
    for name in sig.binary_names:
        slots += [(name, "xx"), (name, "yy"), (name, "xy"), (name, "yx")]
    return tuple(slots)


_SLOT_RENDER = {"x": "(x)", "y": "(y)", "xx": "(x,x)", "yy": "(y,y)", "xy": "(x,y)", "yx": "(y,x)"}
_SLOT_SWAP = {"x": "y", "y": "x", "xx": "yy", "yy": "xx", "xy": "yx", "yx": "xy"}


@dataclass(frozen=True)
class AtomicType1:
    """Atomic 1-type: a truth value for every :func:`type1_slots` literal."""

    slots: tuple[tuple[str, str], ...]
    bits: tuple[bool, ...]

    def __post_init__(self) -> None:
        if len(self.slots) != len(self.bits):
            raise ValueError("slot/bit length mismatch")

    @classmethod
    def of(cls, s: Structure, e: int) -> AtomicType1:
        slots = type1_slots(s.signature)
        bits = []
        for name, pat in slots:
            member = (e,) if pat == "x" else (e, e)
            bits.append(member in s.relations[name])
        return cls(slots, tuple(bits))

    def token(self) -> str:
        parts = []
        for (name, pat), bit in zip(self.slots, self.bits):
            parts.append(("" if bit else "!") + name + _SLOT_RENDER[pat])
        return ",".join(parts) if parts else "-"


@dataclass(frozen=True)
class AtomicType2:
    """Atomic 2-type: vocabulary literals plus equality and order comparisons.

    The vocabulary part covers both 1-types and the cross literals; order
    information lives exclusively in ``order_cmp`` so it can be preserved
    verbatim when the vocabulary part of a pair is rewritten.
    """

    slots: tuple[tuple[str, str], ...]
    bits: tuple[bool, ...]
    equal: bool
    order_cmp: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if len(self.slots) != len(self.bits):
            raise ValueError("slot/bit length mismatch")
        for _, cmp in self.order_cmp:
            if cmp not in ("lt", "gt", "eq"):
                raise ValueError(f"bad order comparison {cmp!r}")
        if self.equal:
            lookup = dict(zip(self.slots, self.bits))
            for (name, pat), bit in lookup.items():
                if lookup[(name, _SLOT_SWAP[pat])] != bit:
                    raise ValueError("2-type with x=y must have a symmetric vocabulary part")
            if any(cmp != "eq" for _, cmp in self.order_cmp):
                raise ValueError("2-type with x=y must compare 'eq' in every order")

    @classmethod
    def of(cls, s: Structure, a: int, b: int) -> AtomicType2:
        slots = type2_slots(s.signature)
        pick = {"x": (a,), "y": (b,), "xx": (a, a), "yy": (b, b), "xy": (a, b), "yx": (b, a)}
        bits = tuple(pick[pat] in s.relations[name] for name, pat in slots)
        cmps = []
        for name in s.order_names:
            rank = s.order_rank(name)
            cmp = "eq" if a == b else ("lt" if rank[a] < rank[b] else "gt")
            cmps.append((name, cmp))
        return cls(slots, bits, a == b, tuple(cmps))

    def swapped(self) -> AtomicType2:
        """The same pair read in the opposite direction (x and y exchanged)."""
        lookup = dict(zip(self.slots, self.bits))
        bits = tuple(lookup[(name, _SLOT_SWAP[pat])] for name, pat in self.slots)
        flip = {"lt": "gt", "gt": "lt", "eq": "eq"}
        cmps = tuple((name, flip[cmp]) for name, cmp in self.order_cmp)
        return AtomicType2(self.slots, bits, self.equal, cmps)

    def with_vocab_from(self, other: AtomicType2) -> AtomicType2:
        """Copy the vocabulary part of ``other``, keeping equality and orders."""
        if self.slots != other.slots:
            raise ValueError("2-types over different signatures")
        return AtomicType2(self.slots, other.bits, self.equal, self.order_cmp)

    @property
    def vocab(self) -> tuple[tuple[str, str, bool], ...]:
        return tuple((name, pat, bit) for (name, pat), bit in zip(self.slots, self.bits))

    def vocab_token(self) -> str:
        parts = []
        for (name, pat), bit in zip(self.slots, self.bits):
            parts.append(("" if bit else "!") + name + _SLOT_RENDER[pat])
        parts.append("x=y" if self.equal else "x!=y")
        return ",".join(parts)

    def token(self) -> str:
        extra = [f"{name}:{cmp}" for name, cmp in self.order_cmp]
        return ",".join([self.vocab_token()] + extra)


def atomic_type1(s: Structure, e: int) -> AtomicType1:
    return AtomicType1.of(s, e)


def atomic_type2(s: Structure, a: int, b: int) -> AtomicType2:
    return AtomicType2.of(s, a, b)


def apply_two_type(mutable_relations: dict[str, set[tuple[int, ...]]], t: AtomicType2, a: int, b: int) -> None:
    """Impose the vocabulary part of ``t`` on the pair (a, b) in place.

    ``mutable_relations`` maps relation names to mutable sets of tuples; only
    atoms involving a and b are touched, order atoms are untouched by design.
    """
    if a == b and not t.equal:
        raise ValueError("cannot apply an x!=y type to a reflexive pair")
    pick = {"x": (a,), "y": (b,), "xx": (a, a), "yy": (b, b), "xy": (a, b), "yx": (b, a)}
    for (name, pat), bit in zip(t.slots, t.bits):
        tup = pick[pat]
        if bit:
            mutable_relations[name].add(tup)
        else:
            mutable_relations[name].discard(tup)


# ---------------------------------------------------------------------------
# canonical keys and isomorphism


def _encode(s: Structure, center: int | None, relabel: dict[int, int]) -> str:
    parts = [f"n{s.domain_size}"]
    parts.append("c-" if center is None else f"c{relabel[center]}")
    for name in s.signature.relation_names:
        tuples = sorted(tuple(relabel[v] for v in t) for t in s.relations[name])
        parts.append(name + "=" + ";".join(",".join(str(v) for v in t) for t in tuples))
    for name in s.signature.constants:
        parts.append(f"{name}:{relabel[s.constants[name]]}")
    for name in s.order_names:
        parts.append(name + "=" + ",".join(str(relabel[e]) for e in s.named_orders[name]))
    return "|".join(parts)


def _initial_colors(s: Structure, center: int | None) -> dict[int, object]:
    colors: dict[int, object] = {}
    const_names = s.signature.constants
    for e in s.elements:
        flags = tuple(s.constants[c] == e for c in const_names)
        colors[e] = (atomic_type1(s, e).bits, e == center, flags)
    return colors


def _refine_colors(s: Structure, colors: dict[int, object]) -> dict[int, int]:
    binary = [(name, s.relations[name]) for name in s.signature.binary_names]
    # normalize arbitrary color keys to canonical integer ranks first
    ranks = {key: i for i, key in enumerate(sorted(set(colors.values()), key=repr))}
    current = {e: ranks[colors[e]] for e in s.elements}
    while True:
        keys = {}
        for e in s.elements:
            profile = []
            for f in s.elements:
                if f == e:
                    continue
                edge_bits = tuple(((e, f) in r, (f, e) in r) for _, r in binary)
                profile.append((current[f], edge_bits))
            keys[e] = (current[e], tuple(sorted(profile)))
        ranks = {key: i for i, key in enumerate(sorted(set(keys.values())))}
        refined = {e: ranks[keys[e]] for e in s.elements}
        if len(set(refined.values())) == len(set(current.values())):
            return refined
        current = refined


def _canonical_search(s: Structure, center: int | None, colors: dict[int, object], best: list) -> None:
    stable = _refine_colors(s, colors)
    classes: dict[int, list[int]] = {}
    for e, c in stable.items():
        classes.setdefault(c, []).append(e)
    split = [c for c, members in classes.items() if len(members) > 1]
    if not split:
        relabel = {e: stable[e] for e in s.elements}
        enc = _encode(s, center, relabel)
        if best[0] is None or enc < best[0]:
            best[0] = enc
            best[1] = relabel
        return
    target = min(split)
    for e in classes[target]:
        branched: dict[int, object] = {f: (stable[f], f == e) for f in s.elements}
        _canonical_search(s, center, branched, best)


def canonical_key(s: Structure, center: int | None = None) -> str:
    """Canonical string: equal keys iff center/order-preserving isomorphic.

    When the structure carries named orders the relabeling is forced by the
    first order; otherwise a color-refinement + individualization search picks
    the lexicographically least encoding.
    """
    if center is not None and not 0 <= center < s.domain_size:
        raise ValueError("center out of range")
    if s.named_orders:
        first = s.order_names[0]
        relabel = {e: pos for pos, e in enumerate(s.named_orders[first])}
        return _encode(s, center, relabel)
    if s.domain_size == 0:
        return _encode(s, None, {})
    best: list = [None, None]
    _canonical_search(s, center, _initial_colors(s, center), best)
    return best[0]


def find_isomorphism(
    s0: Structure, s1: Structure, center0: int | None = None, center1: int | None = None
) -> dict[int, int] | None:
    """A center/order-preserving isomorphism as a dict, or None.

    Brute-force with 1-type pruning; intended for small structures and for
    validating :func:`canonical_key`.
    """
    if s0.signature != s1.signature or s0.domain_size != s1.domain_size:
        return None
    if s0.order_names != s1.order_names:
        return None
    if (center0 is None) != (center1 is None):
        return None
    n = s0.domain_size

    def check(mapping: dict[int, int]) -> bool:
        for name in s0.signature.relation_names:
            image = frozenset(tuple(mapping[v] for v in t) for t in s0.relations[name])
            if image != s1.relations[name]:
                return False
        for name in s0.signature.constants:
            if mapping[s0.constants[name]] != s1.constants[name]:
                return False
        for name in s0.order_names:
            if tuple(mapping[e] for e in s0.named_orders[name]) != s1.named_orders[name]:
                return False
        if center0 is not None and mapping[center0] != center1:
            return False
        return True

    if s0.named_orders:
        # any order-preserving map is forced by matching ranks in the first order
        first = s0.order_names[0]
        mapping = dict(zip(s0.named_orders[first], s1.named_orders[first]))
        return mapping if check(mapping) else None

    color0 = {e: (atomic_type1(s0, e).bits, e == center0) for e in s0.elements}
    color1 = {e: (atomic_type1(s1, e).bits, e == center1) for e in s1.elements}
    if sorted(color0.values(), key=repr) != sorted(color1.values(), key=repr):
        return None
    binary = s0.signature.binary_names
    order = sorted(s0.elements)
    used: set[int] = set()
    mapping: dict[int, int] = {}

    def locally_consistent(a: int, b: int) -> bool:
        for name in binary:
            r0, r1 = s0.relations[name], s1.relations[name]
            for c, d in mapping.items():
                if ((a, c) in r0) != ((b, d) in r1) or ((c, a) in r0) != ((d, b) in r1):
                    return False
        return True

    def extend(i: int) -> bool:
        if i == n:
            return check(mapping)
        a = order[i]
        for b in s1.elements:
            if b in used or color0[a] != color1[b]:
                continue
            if not locally_consistent(a, b):
                continue
            mapping[a] = b
            used.add(b)
            if extend(i + 1):
                return True
            del mapping[a]
            used.discard(b)
        return False

    return dict(mapping) if extend(0) else None


def is_isomorphic(s0: Structure, s1: Structure, center0: int | None = None, center1: int | None = None) -> bool:
    return find_isomorphism(s0, s1, center0, center1) is not None


# ---------------------------------------------------------------------------
# enumeration of small structures up to isomorphism

_ENUM_CACHE: dict[tuple, tuple[Structure, ...]] = {}

_ENUM_MAX_BITS = 18


def _perm_tables(n: int, rel_count: int) -> list[tuple[tuple[int, ...], list[int]]]:
    tables = []
    for perm in itertools.permutations(range(n)):
        table = [0] * (rel_count * n * n)
        for r in range(rel_count):
            for a in range(n):
                for b in range(n):
                    table[r * n * n + a * n + b] = r * n * n + perm[a] * n + perm[b]
        tables.append((perm, table))
    return tables


def _apply_bit_perm(mask: int, table: list[int]) -> int:
    out = 0
    while mask:
        low = mask & -mask
        out |= 1 << table[low.bit_length() - 1]
        mask ^= low
    return out


def enumerate_structures(sig: Signature, max_size: int, degree_bound: int | None = None):
    """One representative per isomorphism class, sizes 1..max_size.

    Deterministically ordered (ascending size, then a fixed encoding order).
    Only signatures of arity <= 2 are supported, and the labelled search space
    for the binary relations must stay small.
    """
    if sig.max_arity > 2:
        raise ValueError("enumeration supports arity <= 2 only")
    key = (sig, max_size, degree_bound)
    if key in _ENUM_CACHE:
        return _ENUM_CACHE[key]

    unary = sig.unary_names
    binary = sig.binary_names
    consts = sig.constants
    result: list[Structure] = []
    for n in range(1, max_size + 1):
        bits = len(binary) * n * n
        if bits > _ENUM_MAX_BITS:
            raise ValueError(f"binary search space 2^{bits} too large at size {n}")
        tables = _perm_tables(n, len(binary))
        reps: list[tuple[int, list[tuple[int, ...]]]] = []
        visited = bytearray(1 << bits)
        for mask in range(1 << bits):
            if visited[mask]:
                continue
            auts = []
            for perm, table in tables:
                image = _apply_bit_perm(mask, table)
                visited[image] = 1
                if image == mask:
                    auts.append(perm)
            reps.append((mask, auts))

        def mask_relations(mask: int) -> dict[str, frozenset[tuple[int, ...]]]:
            rels: dict[str, frozenset[tuple[int, ...]]] = {}
            for r, name in enumerate(binary):
                tuples = set()
                for a in range(n):
                    for b in range(n):
                        if mask >> (r * n * n + a * n + b) & 1:
                            tuples.add((a, b))
                rels[name] = frozenset(tuples)
            return rels

        for mask, auts in reps:
            binrels = mask_relations(mask)
            if degree_bound is not None:
                probe = Structure(Signature(tuple((b, 2) for b in binary)), n, binrels)
                if any(len(adj) > degree_bound for adj in gaifman_adjacency(probe)):
                    continue
            for umask in range(1 << (len(unary) * n)):
                for ctuple in itertools.product(range(n), repeat=len(consts)):
                    smallest = True
                    for perm in auts:
                        pmask = 0
                        for i in range(len(unary) * n):
                            if umask >> i & 1:
                                p, e = divmod(i, n)
                                pmask |= 1 << (p * n + perm[e])
                        pair = (pmask, tuple(perm[c] for c in ctuple))
                        if pair < (umask, ctuple):
                            smallest = False
                            break
                    if not smallest:
                        continue
                    rels = dict(binrels)
                    for p, name in enumerate(unary):
                        rels[name] = frozenset((e,) for e in range(n) if umask >> (p * n + e) & 1)
                    result.append(
                        Structure(sig, n, rels, dict(zip(consts, ctuple)), {})
                    )

    out = tuple(result)
    _ENUM_CACHE[key] = out
    return out
