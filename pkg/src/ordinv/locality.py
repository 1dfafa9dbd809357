"""Neighbourhood censuses and order construction for bounded-degree structures.

This module provides the machinery to compare two structures by the
multiset of their local neighbourhood shapes, to split those shapes into
"rare" and "frequent" ones, and — when two structures agree on their
census up to a threshold — to build a linear order on each of them such
that the two ordered structures are hard to distinguish with two
variables.  The resulting :class:`OrderedPair` carries the segment
decomposition of both orders, the partial correspondence ``pi`` between
their border regions, and the registry of "pin" elements whose
neighbourhoods realize every possible ordered variant of a frequent
neighbourhood shape.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .structures import (
    Structure,
    ball,
    canonical_key,
    find_isomorphism,
    gaifman_adjacency,
    induced_substructure,
)


class LocalityError(Exception):
    """Raised when a census/order construction cannot be carried out."""


# ---------------------------------------------------------------------------
# Neighbourhoods and environments
# ---------------------------------------------------------------------------


def neighborhood(s: Structure, element: int, radius: int) -> tuple[Structure, int]:
    """Return the induced substructure on the ``radius``-ball, orders stripped.

    The result is a pair ``(sub, center)`` where ``center`` is the image of
    ``element`` in the substructure's renumbered domain.
    """
    dom = sorted(ball(s, element, radius))
    sub, remap = induced_substructure(s, dom)
    return sub.without_orders(), remap[element]


def neighborhood_key(s: Structure, element: int, radius: int) -> str:
    """Canonical key of the ``radius``-neighbourhood of ``element``."""
    sub, center = neighborhood(s, element, radius)
    return canonical_key(sub, center=center)


def environment(s: Structure, element: int, radius: int) -> tuple[Structure, int]:
    """Like :func:`neighborhood` but keeping the restriction of named orders."""
    if not s.order_names:
        raise LocalityError("environment requires a structure with a named order")
    dom = sorted(ball(s, element, radius))
    sub, remap = induced_substructure(s, dom)
    return sub, remap[element]


def environment_key(s: Structure, element: int, radius: int) -> str:
    """Canonical key of the ordered ``radius``-environment of ``element``."""
    sub, center = environment(s, element, radius)
    return canonical_key(sub, center=center)


def _neighbors_of_set(adjacency: Sequence[set[int]], block: set[int]) -> set[int]:
    out: set[int] = set()
    for e in block:
        out.update(adjacency[e])
    return out - block


# ---------------------------------------------------------------------------
# Census
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Census:
    """Counts and occurrence lists of neighbourhood keys in one structure."""

    radius: int
    counts: Mapping[str, int]
    occurrences: Mapping[str, tuple[int, ...]]
    representatives: Mapping[str, tuple[Structure, int]]

    def types(self) -> tuple[str, ...]:
        return tuple(sorted(self.counts))

    def count(self, key: str) -> int:
        return self.counts.get(key, 0)

    def total(self) -> int:
        return sum(self.counts.values())


def census(s: Structure, radius: int) -> Census:
    """Compute the neighbourhood census of ``s`` at the given radius.

    Named orders on ``s`` are ignored: the census is a property of the
    underlying unordered structure.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    plain = s.without_orders()
    counts: dict[str, int] = {}
    occurrences: dict[str, list[int]] = {}
    reps: dict[str, tuple[Structure, int]] = {}
    for e in plain.elements:
        sub, center = neighborhood(plain, e, radius)
        key = canonical_key(sub, center=center)
        counts[key] = counts.get(key, 0) + 1
        occurrences.setdefault(key, []).append(e)
        if key not in reps:
            reps[key] = (sub, center)
    return Census(
        radius=radius,
        counts=counts,
        occurrences={k: tuple(v) for k, v in occurrences.items()},
        representatives=reps,
    )


def render_census(c: Census) -> str:
    lines = [f"type {key} count {c.counts[key]}" for key in c.types()]
    return "\n".join(lines)


def census_equal_up_to(c0: Census, c1: Census, threshold: int) -> bool:
    """True when every key has equal counts, or counts both >= threshold."""
    keys = set(c0.counts) | set(c1.counts)
    for key in keys:
        if min(c0.count(key), threshold) != min(c1.count(key), threshold):
            return False
    return True


def census_differences(c0: Census, c1: Census, threshold: int) -> tuple[str, ...]:
    """Keys where the two censuses differ below the threshold."""
    keys = sorted(set(c0.counts) | set(c1.counts))
    bad = [
        key
        for key in keys
        if min(c0.count(key), threshold) != min(c1.count(key), threshold)
    ]
    return tuple(bad)


# ---------------------------------------------------------------------------
# Frequency classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalityParams:
    """Tuning knobs for the census classification and order construction.

    ``radius`` is the neighbourhood radius (and the number of game rounds
    the construction is good for), ``degree_bound`` the maximum Gaifman
    degree the inputs are allowed to have, ``m`` the base number of
    scattered occurrences requested per frequent type, ``delta`` the
    scattering distance, and ``count_multiplier`` the number of
    interchangeable copies of every pin (needed by the counting game,
    where it also scales ``m``).
    """

    radius: int
    degree_bound: int
    m: int
    delta: int
    count_multiplier: int = 1

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if self.degree_bound < 0:
            raise ValueError("degree_bound must be nonnegative")
        if self.m < 1:
            raise ValueError("m must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.count_multiplier < 1:
            raise ValueError("count_multiplier must be positive")

    @property
    def effective_m(self) -> int:
        return self.m * self.count_multiplier

    def scatter_threshold(self, n_types: int, rare_total: int) -> int:
        """Minimum set size that guarantees ``effective_m`` scattered picks."""
        spread = self.degree_bound**self.delta + 1
        return (rare_total + n_types * self.effective_m) * spread


@dataclass(frozen=True)
class Classification:
    """Outcome of the rare/frequent split for one census."""

    radius: int
    threshold: int
    frequent: tuple[str, ...]
    rare: tuple[str, ...]
    rare_total: int

    def is_frequent(self, key: str) -> bool:
        return key in set(self.frequent)


def classify_frequent(c: Census, params: LocalityParams) -> Classification:
    """Split the occurring neighbourhood types of a census into rare/frequent.

    Types are scanned in order of ascending occurrence count; a type is
    declared rare while its count stays below the scatter threshold
    computed from the rare mass accumulated so far.  The final threshold
    is the least count that certifies a type as frequent.
    """
    if c.radius < 0:
        raise ValueError("census radius must be nonnegative")
    order = sorted(c.counts, key=lambda key: (c.counts[key], key))
    n_types = len(order)
    rare: list[str] = []
    rare_total = 0
    idx = 0
    while idx < len(order):
        key = order[idx]
        if c.counts[key] <= params.scatter_threshold(n_types, rare_total):
            rare.append(key)
            rare_total += c.counts[key]
            idx += 1
        else:
            break
    frequent = order[idx:]
    max_rare = max((c.counts[key] for key in rare), default=0)
    threshold = max(params.scatter_threshold(n_types, rare_total), max_rare + 1)
    for key in rare:
        if c.counts[key] >= threshold:
            raise LocalityError("classification produced an inconsistent threshold")
    for key in frequent:
        if c.counts[key] < threshold:
            raise LocalityError("classification produced an inconsistent threshold")
    return Classification(
        radius=c.radius,
        threshold=threshold,
        frequent=tuple(sorted(frequent)),
        rare=tuple(sorted(rare)),
        rare_total=rare_total,
    )


# ---------------------------------------------------------------------------
# Ordered variants of a neighbourhood
# ---------------------------------------------------------------------------

# Keyed by the canonical key of the unordered pointed ball; the key *set*
# of ordered variants is isomorphism-invariant, so it can be shared between
# distinct copies of the same ball shape.  Realizing permutations cannot:
# they live in the coordinates of one particular copy.
_ORD_CACHE: dict[str, tuple[str, ...]] = {}


def ordered_extensions(sub: Structure, center: int) -> tuple[str, ...]:
    """All canonical keys of ordered variants of a pointed neighbourhood."""
    if sub.order_names:
        raise LocalityError("ordered_extensions expects an order-free neighbourhood")
    base_key = canonical_key(sub, center=center)
    cached = _ORD_CACHE.get(base_key)
    if cached is not None:
        return cached
    keys: set[str] = set()
    for perm in itertools.permutations(sub.elements):
        ordered = sub.with_named_order("<", perm)
        keys.add(canonical_key(ordered, center=center))
    table = tuple(sorted(keys))
    _ORD_CACHE[base_key] = table
    return table


def realize_environment(sub: Structure, center: int, env_key: str) -> tuple[int, ...]:
    """Find an order on ``sub`` whose ordered canonical key is ``env_key``."""
    if sub.order_names:
        raise LocalityError("realize_environment expects an order-free neighbourhood")
    for perm in itertools.permutations(sub.elements):
        ordered = sub.with_named_order("<", perm)
        if canonical_key(ordered, center=center) == env_key:
            return perm
    raise LocalityError("environment key is not realizable over this neighbourhood")


# ---------------------------------------------------------------------------
# Scattering
# ---------------------------------------------------------------------------


def scatter_select(
    s: Structure,
    base: Iterable[int],
    demands: Mapping[str, tuple[tuple[int, ...], int]],
    delta: int,
) -> dict[str, tuple[int, ...]]:
    """Greedily pick, per key, the demanded number of pairwise-distant elements.

    Every picked element must be at distance greater than ``delta`` (in the
    Gaifman graph of ``s``) from ``base`` and from every other picked
    element.  Candidates are scanned in ascending element order, so the
    outcome is deterministic.  Raises :class:`LocalityError` when a demand
    cannot be met.
    """
    adjacency = gaifman_adjacency(s)
    blocked = set(base)

    def too_close(e: int) -> bool:
        seen = {e}
        frontier = {e}
        if e in blocked:
            return True
        for _ in range(delta):
            nxt: set[int] = set()
            for x in frontier:
                nxt.update(adjacency[x])
            nxt -= seen
            if nxt & blocked:
                return True
            seen.update(nxt)
            frontier = nxt
        return False

    picked: dict[str, tuple[int, ...]] = {}
    for key in sorted(demands):
        candidates, needed = demands[key]
        chosen: list[int] = []
        for e in sorted(candidates):
            if len(chosen) >= needed:
                break
            if not too_close(e):
                chosen.append(e)
                blocked.add(e)
        if len(chosen) < needed:
            raise LocalityError(
                f"cannot scatter {needed} occurrences of a type "
                f"(found {len(chosen)}); structure too small for these parameters"
            )
        picked[key] = tuple(chosen)
    return picked


# ---------------------------------------------------------------------------
# Segment maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """One labeled block of the order; elements are stored in order position."""

    label: str
    elements: tuple[int, ...]


@dataclass(frozen=True)
class SegmentMap:
    """The full segment decomposition of one ordered structure.

    ``segments`` follows the global concatenation; ``pins`` holds rows
    ``(side, j, env_key, copy, element)``.
    """

    radius: int
    segments: tuple[Segment, ...]
    pins: tuple[tuple[str, int, str, int, int], ...]

    @cached_property
    def _label_of(self) -> dict[int, str]:
        table: dict[int, str] = {}
        for seg in self.segments:
            for e in seg.elements:
                table[e] = seg.label
        return table

    @cached_property
    def _by_label(self) -> dict[str, tuple[int, ...]]:
        return {seg.label: seg.elements for seg in self.segments}

    @cached_property
    def _pin_table(self) -> dict[tuple[str, int, str, int], int]:
        return {(side, j, key, copy): e for side, j, key, copy, e in self.pins}

    def order(self) -> tuple[int, ...]:
        out: list[int] = []
        for seg in self.segments:
            out.extend(seg.elements)
        return tuple(out)

    def label_of(self, element: int) -> str:
        return self._label_of[element]

    def elements_of(self, label: str) -> tuple[int, ...]:
        return self._by_label.get(label, ())

    def left_block(self, j: int) -> frozenset[int]:
        return frozenset(self.elements_of(f"nl{j}") + self.elements_of(f"ul{j}"))

    def right_block(self, j: int) -> frozenset[int]:
        return frozenset(self.elements_of(f"ur{j}") + self.elements_of(f"nr{j}"))

    def sigma(self, r: int) -> frozenset[int]:
        """Union of the rare block and the first ``r+1`` blocks on each side."""
        out: set[int] = set(self.elements_of("rare"))
        for j in range(0, r + 1):
            out.update(self.left_block(j))
            out.update(self.right_block(j))
        return frozenset(out)

    def pin_element(self, side: str, j: int, env_key: str, copy: int = 0) -> int:
        try:
            return self._pin_table[(side, j, env_key, copy)]
        except KeyError:
            raise LocalityError(
                f"no pin registered for side={side} j={j} copy={copy}"
            ) from None

    def has_pin(self, side: str, j: int, env_key: str, copy: int = 0) -> bool:
        return (side, j, env_key, copy) in self._pin_table


def render_segment_map(seg: SegmentMap) -> str:
    lines: list[str] = []
    for i, segment in enumerate(seg.segments):
        for e in segment.elements:
            lines.append(f"segment {i} {e} {segment.label}")
    for side, j, key, _copy, e in seg.pins:
        lines.append(f"pin {side} {j} {key} {e}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Order construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrderedPair:
    """Two ordered structures with matched borders.

    ``pi`` maps the non-middle region of structure 0 onto the
    corresponding region of structure 1; both segment maps follow the
    same block layout.
    """

    ordered0: Structure
    ordered1: Structure
    segments0: SegmentMap
    segments1: SegmentMap
    pi: Mapping[int, int]
    params: LocalityParams
    threshold: int
    frequent: tuple[str, ...]

    @cached_property
    def pi_inverse(self) -> dict[int, int]:
        return {b: a for a, b in self.pi.items()}

    def structure(self, side: int) -> Structure:
        return self.ordered0 if side == 0 else self.ordered1

    def segment_map(self, side: int) -> SegmentMap:
        return self.segments0 if side == 0 else self.segments1

    def transfer(self, side: int, element: int) -> int:
        """Image of an element of ``side`` under the border correspondence."""
        table = self.pi if side == 0 else self.pi_inverse
        try:
            return table[element]
        except KeyError:
            raise LocalityError(
                f"element {element} of side {side} is outside the matched border"
            ) from None


def _component_order(adjacency: Sequence[set[int]], domain: set[int]) -> list[int]:
    """Order ``domain`` component by component, BFS within each component."""
    remaining = set(domain)
    out: list[int] = []
    comps: list[list[int]] = []
    while remaining:
        start = min(remaining)
        comp = [start]
        seen = {start}
        queue = [start]
        while queue:
            cur = queue.pop(0)
            for nxt in sorted(adjacency[cur]):
                if nxt in domain and nxt not in seen:
                    seen.add(nxt)
                    comp.append(nxt)
                    queue.append(nxt)
        remaining -= seen
        comps.append(comp)
    comps.sort(key=lambda c: (-len(c), c[0]))
    for comp in comps:
        out.extend(comp)
    return out


def _embed_region(
    s0: Structure,
    s1: Structure,
    domain: list[int],
    degree_exact: set[int],
    ball_keys: Mapping[int, str],
    radius: int,
) -> dict[int, int]:
    """Find an injective map preserving induced atomic structure on ``domain``.

    Elements in ``degree_exact`` must keep their exact Gaifman degree, and
    elements appearing in ``ball_keys`` must land on an element with the
    same pointed-ball canonical key.  The search proceeds component by
    component; within a component every element after the anchor extends
    through an already-mapped neighbour, which keeps branching bounded by
    the degree.  Deterministic backtracking.
    """
    from .structures import atomic_type1, atomic_type2

    adj0 = gaifman_adjacency(s0)
    adj1 = gaifman_adjacency(s1)
    dom_set = set(domain)
    key_cache: dict[int, str] = {}

    def target_ball_key(b: int) -> str:
        if b not in key_cache:
            key_cache[b] = neighborhood_key(s1, b, radius)
        return key_cache[b]

    type_tokens0 = {a: atomic_type1(s0, a).token() for a in domain}
    by_type1: dict[str, list[int]] = {}
    for b in s1.elements:
        by_type1.setdefault(atomic_type1(s1, b).token(), []).append(b)

    def element_ok(a: int, b: int) -> bool:
        if a in degree_exact and len(adj1[b]) != len(adj0[a]):
            return False
        if a in ball_keys and target_ball_key(b) != ball_keys[a]:
            return False
        return True

    # Flatten: components in deterministic order, BFS inside each, and for
    # every non-anchor element record one already-ordered neighbour.
    slots: list[tuple[int, int | None]] = []
    remaining = set(domain)
    comps: list[list[int]] = []
    while remaining:
        start = min(remaining)
        comp = [start]
        seen = {start}
        queue = [start]
        while queue:
            cur = queue.pop(0)
            for nxt in sorted(adj0[cur]):
                if nxt in dom_set and nxt not in seen:
                    seen.add(nxt)
                    comp.append(nxt)
                    queue.append(nxt)
        remaining -= seen
        comps.append(comp)
    comps.sort(key=lambda c: (-len(c), c[0]))
    for comp in comps:
        placed: set[int] = set()
        for a in comp:
            parent = None
            for prev in comp:
                if prev in placed and prev in adj0[a]:
                    parent = prev
                    break
            slots.append((a, parent))
            placed.add(a)

    assignment: dict[int, int] = {}
    image_of: dict[int, int] = {}

    def admissible(a: int, b: int) -> bool:
        if b in image_of or type_tokens0[a] != atomic_type1(s1, b).token():
            return False
        if not element_ok(a, b):
            return False
        # No unexpected adjacency: every already-used neighbour of b must
        # be the image of an s0-neighbour of a.
        for w in adj1[b]:
            if w in image_of and image_of[w] not in adj0[a]:
                return False
        # Full induced check against the rest of a's component (cheap: the
        # component is small) and adjacency faithfulness the other way.
        for a2 in adj0[a]:
            if a2 in assignment and assignment[a2] not in adj1[b]:
                return False
        for a2, b2 in assignment.items():
            if a2 in adj0[a] or a2 == a:
                t0 = atomic_type2(s0, a, a2)
                t1 = atomic_type2(s1, b, b2)
                if t0.vocab_token() != t1.vocab_token():
                    return False
        return True

    def solve(idx: int) -> bool:
        if idx == len(slots):
            return True
        a, parent = slots[idx]
        if parent is None:
            options: Iterable[int] = by_type1.get(type_tokens0[a], ())
        else:
            options = sorted(adj1[assignment[parent]])
        for b in options:
            if not admissible(a, b):
                continue
            assignment[a] = b
            image_of[b] = a
            if solve(idx + 1):
                return True
            del image_of[b]
            del assignment[a]
        return False

    if not solve(0):
        raise LocalityError("no embedding of the border region exists")
    return assignment


def _order_pin_ball(
    s: Structure, pin: int, radius: int, env_key: str
) -> tuple[int, ...]:
    """Return the pin's ball elements arranged to realize ``env_key``."""
    dom = sorted(ball(s, pin, radius))
    sub, remap = induced_substructure(s, dom)
    perm = realize_environment(sub.without_orders(), remap[pin], env_key)
    back = {new: old for old, new in remap.items()}
    return tuple(back[x] for x in perm)


def _build_segments(
    s: Structure,
    params: LocalityParams,
    rare_occurrences: list[int],
    pin_assignment: Mapping[tuple[str, int, str, int], int],
) -> SegmentMap:
    """Assemble the segment blocks of the primary structure."""
    k = params.radius
    adjacency = gaifman_adjacency(s)

    rare_dom: set[int] = set()
    for e in rare_occurrences:
        rare_dom.update(ball(s, e, k))

    pin_balls: dict[tuple[str, int, str, int], tuple[int, ...]] = {}
    for slot, pin in pin_assignment.items():
        side, j, env_key, _copy = slot
        pin_balls[slot] = _order_pin_ball(s, pin, k, env_key)

    built: set[int] = set(rare_dom)
    segments: list[Segment] = [Segment("rare", tuple(sorted(rare_dom)))]

    def universal_block(side: str, j: int) -> tuple[int, ...]:
        block: list[int] = []
        slots = sorted(
            (slot for slot in pin_balls if slot[0] == side and slot[1] == j),
            key=lambda slot: (slot[2], slot[3]),
        )
        for slot in slots:
            seq = pin_balls[slot]
            overlap = set(seq) & built
            if overlap:
                raise LocalityError(
                    "pin neighbourhoods collide with already-built segments; "
                    "increase the scattering distance"
                )
            block.extend(seq)
            built.update(seq)
        return tuple(block)

    left_blocks: dict[int, tuple[int, ...]] = {}
    for j in range(0, 2 * k + 1):
        if j == 0:
            nl = sorted(_neighbors_of_set(adjacency, rare_dom) - built)
        else:
            nl = sorted(
                _neighbors_of_set(adjacency, set(left_blocks[j - 1])) - built
            )
        built.update(nl)
        ul = universal_block("L", j) if j <= k else ()
        segments.append(Segment(f"nl{j}", tuple(nl)))
        segments.append(Segment(f"ul{j}", ul))
        left_blocks[j] = tuple(nl) + ul

    middle_placeholder = len(segments)
    segments.append(Segment("middle", ()))

    right_blocks: dict[int, tuple[int, ...]] = {}
    right_segments: list[Segment] = []
    for j in range(0, 2 * k + 1):
        if j == 0:
            nr: list[int] = []
        else:
            nr = sorted(
                _neighbors_of_set(adjacency, set(right_blocks[j - 1])) - built
            )
        built.update(nr)
        ur = universal_block("R", j) if j <= k else ()
        right_segments.append(Segment(f"ur{j}", ur))
        right_segments.append(Segment(f"nr{j}", tuple(nr)))
        right_blocks[j] = ur + tuple(nr)

    # The right side is built outside-in (j = 0 is the rightmost block),
    # so its segments are concatenated in reverse construction order.
    for j in range(2 * k, -1, -1):
        segments.append(right_segments[2 * j])
        segments.append(right_segments[2 * j + 1])

    middle = tuple(sorted(set(s.elements) - built))
    segments[middle_placeholder] = Segment("middle", middle)

    pin_rows = tuple(
        sorted(
            (side, j, env_key, copy, element)
            for (side, j, env_key, copy), element in pin_assignment.items()
        )
    )
    return SegmentMap(radius=k, segments=tuple(segments), pins=pin_rows)


def build_orders(s0: Structure, s1: Structure, params: LocalityParams) -> OrderedPair:
    """Construct matched linear orders on two census-equivalent structures.

    Preconditions: both structures are order-free, respect the degree
    bound, have the same frequent types, and their censuses agree up to
    the classification threshold.  Raises :class:`LocalityError` when a
    precondition or a construction step fails, and verifies the
    environment- and pair-preservation guarantees before returning.
    """
    for name, s in (("first", s0), ("second", s1)):
        if s.order_names:
            raise LocalityError(f"{name} structure must not carry named orders")
        adjacency = gaifman_adjacency(s)
        worst = max((len(v) for v in adjacency), default=0)
        if worst > params.degree_bound:
            raise LocalityError(
                f"{name} structure has degree {worst}, above the bound "
                f"{params.degree_bound}"
            )

    k = params.radius
    c0 = census(s0, k)
    c1 = census(s1, k)
    cls0 = classify_frequent(c0, params)
    cls1 = classify_frequent(c1, params)
    if set(cls0.frequent) != set(cls1.frequent):
        raise LocalityError("the two structures disagree on frequent types")
    threshold = max(cls0.threshold, cls1.threshold)
    if not census_equal_up_to(c0, c1, threshold):
        bad = census_differences(c0, c1, threshold)
        raise LocalityError(
            f"censuses differ below threshold {threshold} on {len(bad)} type(s)"
        )

    if not cls0.frequent:
        return _build_isomorphic_pair(s0, s1, params, threshold)

    rare_occurrences = sorted(
        e for key in cls0.rare for e in c0.occurrences[key]
    )

    variant_keys: dict[str, tuple[str, ...]] = {}
    demands: dict[str, tuple[tuple[int, ...], int]] = {}
    cm = params.count_multiplier
    for key in cls0.frequent:
        sub, center = c0.representatives[key]
        variants = ordered_extensions(sub, center)
        variant_keys[key] = variants
        needed = max(params.effective_m, 2 * (k + 1) * len(variants) * cm)
        demands[key] = (c0.occurrences[key], needed)

    scattered = scatter_select(s0, rare_occurrences, demands, params.delta)

    pin_assignment: dict[tuple[str, int, str, int], int] = {}
    for key in cls0.frequent:
        supply = list(scattered[key])
        for j in range(0, k + 1):
            for side in ("L", "R"):
                for env_key in variant_keys[key]:
                    for copy in range(cm):
                        pin_assignment[(side, j, env_key, copy)] = supply.pop(0)

    segments0 = _build_segments(s0, params, rare_occurrences, pin_assignment)
    order0 = segments0.order()
    if len(order0) != s0.domain_size:
        raise LocalityError("segment construction lost or duplicated elements")
    ordered0 = s0.with_named_order("<", order0)

    for side, j, env_key, copy, pin in segments0.pins:
        if environment_key(ordered0, pin, k) != env_key:
            raise LocalityError("a pin neighbourhood failed to realize its order")

    sigma2k = set()
    for seg in segments0.segments:
        if seg.label != "middle":
            sigma2k.update(seg.elements)
    adj0 = gaifman_adjacency(s0)
    region = sigma2k | _neighbors_of_set(adj0, sigma2k)
    sigma_k = segments0.sigma(k)
    ball_keys = {a: neighborhood_key(s0, a, k) for a in sigma_k}
    domain = _component_order(adj0, region)
    iota = _embed_region(s0, s1, domain, sigma2k, ball_keys, k)
    pi = {a: iota[a] for a in sorted(sigma2k)}

    mapped: set[int] = set(pi.values())
    segments1_list: list[Segment] = []
    for seg in segments0.segments:
        if seg.label == "middle":
            middle1 = tuple(sorted(set(s1.elements) - mapped))
            segments1_list.append(Segment("middle", middle1))
        else:
            segments1_list.append(
                Segment(seg.label, tuple(pi[e] for e in seg.elements))
            )
    pins1 = tuple(
        sorted(
            (side, j, env_key, copy, pi[e])
            for side, j, env_key, copy, e in segments0.pins
        )
    )
    segments1 = SegmentMap(radius=k, segments=tuple(segments1_list), pins=pins1)
    order1 = segments1.order()
    if len(order1) != s1.domain_size:
        raise LocalityError("transferred segments do not cover the second structure")
    ordered1 = s1.with_named_order("<", order1)

    pair = OrderedPair(
        ordered0=ordered0,
        ordered1=ordered1,
        segments0=segments0,
        segments1=segments1,
        pi=pi,
        params=params,
        threshold=threshold,
        frequent=tuple(sorted(cls0.frequent)),
    )

    problems = check_environment_preservation(pair) + check_pair_preservation(pair)
    problems += _check_rare_coverage(pair, c0, c1, cls0)
    if problems:
        raise LocalityError("; ".join(problems[:3]))
    return pair


def _build_isomorphic_pair(
    s0: Structure, s1: Structure, params: LocalityParams, threshold: int
) -> OrderedPair:
    """Degenerate case: no frequent type, so the structures must be isomorphic."""
    iso = find_isomorphism(s0, s1)
    if iso is None:
        raise LocalityError(
            "no frequent types and the structures are not isomorphic"
        )
    order0 = tuple(s0.elements)
    order1 = tuple(iso[e] for e in order0)
    seg0 = SegmentMap(
        radius=params.radius,
        segments=(Segment("rare", order0),),
        pins=(),
    )
    seg1 = SegmentMap(
        radius=params.radius,
        segments=(Segment("rare", order1),),
        pins=(),
    )
    return OrderedPair(
        ordered0=s0.with_named_order("<", order0),
        ordered1=s1.with_named_order("<", order1),
        segments0=seg0,
        segments1=seg1,
        pi=dict(iso),
        params=params,
        threshold=threshold,
        frequent=(),
    )


# ---------------------------------------------------------------------------
# Post-construction checks
# ---------------------------------------------------------------------------


def check_environment_preservation(pair: OrderedPair) -> list[str]:
    """Verify that ``pi`` preserves ordered environments on the inner region."""
    k = pair.params.radius
    problems: list[str] = []
    for a in sorted(pair.segments0.sigma(k)):
        b = pair.pi[a]
        if environment_key(pair.ordered0, a, k) != environment_key(
            pair.ordered1, b, k
        ):
            problems.append(f"environment of element {a} not preserved by pi")
    return problems


def check_pair_preservation(pair: OrderedPair) -> list[str]:
    """Verify that ``pi`` preserves atomic pair types on the inner region."""
    from .structures import atomic_type2

    k = pair.params.radius
    inner = sorted(pair.segments0.sigma(k))
    problems: list[str] = []
    for a in inner:
        for a2 in inner:
            t0 = atomic_type2(pair.ordered0, a, a2)
            t1 = atomic_type2(pair.ordered1, pair.pi[a], pair.pi[a2])
            if t0.token() != t1.token():
                problems.append(f"pair type of ({a}, {a2}) not preserved by pi")
                if len(problems) > 5:
                    return problems
    return problems


def _check_rare_coverage(
    pair: OrderedPair, c0: Census, c1: Census, cls0: Classification
) -> list[str]:
    """The rare occurrences of side 1 must be the image of side 0's."""
    expected = {
        e for key in cls0.rare if key in c1.occurrences for e in c1.occurrences[key]
    }
    image = {
        pair.pi[e]
        for key in cls0.rare
        if key in c0.occurrences
        for e in c0.occurrences[key]
    }
    if expected != image:
        return ["rare occurrences of side 1 are not the image of side 0's"]
    return []


# ---------------------------------------------------------------------------
# Theory-sized constants
# ---------------------------------------------------------------------------


def max_ball_size(radius: int, degree_bound: int) -> int:
    """Largest possible ball size at this radius under a degree bound."""
    if radius < 0 or degree_bound < 0:
        raise ValueError("radius and degree bound must be nonnegative")
    if radius == 0 or degree_bound == 0:
        return 1
    if degree_bound == 1:
        return 2
    if degree_bound == 2:
        return 1 + 2 * radius
    d = degree_bound
    return 1 + d * ((d - 1) ** radius - 1) // (d - 2)


@dataclass(frozen=True)
class TheoryConstants:
    """The exact worst-case constants of the order construction."""

    radius: int
    degree_bound: int
    n_types: int
    count_multiplier: int
    max_ball: int
    m: int
    delta: int
    rare_mass_bound: int
    frequency_threshold: int
    fo_rank_lower_bound: int


def theory_constants(
    radius: int, degree_bound: int, n_types: int, count_multiplier: int = 1
) -> TheoryConstants:
    """Compute the worst-case thresholds for given radius/degree/type counts.

    ``n_types`` is the number of neighbourhood types under consideration;
    the returned ``frequency_threshold`` is a bound valid for every
    structure of that degree, and ``fo_rank_lower_bound`` the matching
    requirement on plain first-order equivalence.
    """
    if n_types < 1:
        raise ValueError("n_types must be positive")
    if count_multiplier < 1:
        raise ValueError("count_multiplier must be positive")
    big_m = max_ball_size(radius, degree_bound)
    m = 2 * (radius + 1) * math.factorial(big_m) * count_multiplier
    delta = 4 * radius
    spread = degree_bound**delta + 1

    def g(s: int) -> int:
        return (s + n_types * m) * spread

    h = 0
    for _ in range(n_types):
        h = h + g(h)
    rare_mass_bound = h
    frequency_threshold = g(h) + 1
    return TheoryConstants(
        radius=radius,
        degree_bound=degree_bound,
        n_types=n_types,
        count_multiplier=count_multiplier,
        max_ball=big_m,
        m=m,
        delta=delta,
        rare_mass_bound=rare_mass_bound,
        frequency_threshold=frequency_threshold,
        fo_rank_lower_bound=frequency_threshold * n_types + 1,
    )


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def render_order_pair(pair: OrderedPair) -> str:
    """Serialize an ordered pair: orders, segments, pins, and pi."""
    lines: list[str] = []
    lines.append(f"threshold {pair.threshold}")
    for key in pair.frequent:
        lines.append(f"frequent {key}")
    for side in (0, 1):
        order = pair.segment_map(side).order()
        lines.append(f"order {side} : " + " ".join(str(e) for e in order))
    for side in (0, 1):
        lines.append(f"segments {side}")
        lines.append(render_segment_map(pair.segment_map(side)))
    for a in sorted(pair.pi):
        lines.append(f"pi {a} {pair.pi[a]}")
    return "\n".join(line for line in lines if line)
