"""Model-comparison games between two structures.

Three exact solvers are provided: the classical back-and-forth game
(:func:`fo_game_winner`), the two-pebble game capturing two-variable
equivalence (:func:`fo2_game_winner`), and its counting extension where
the players exchange sets (:func:`counting_game_winner`).  The pebble
solvers work by iterated label refinement over pebble configurations,
which is exact and fast enough to sweep whole structures.

On top of the solvers, this module implements the duplicator strategy
attached to an order pair built by :func:`ordinv.locality.build_orders`:
single-move responses (:func:`duplicator_move`), set-move responses for
the counting game (:func:`duplicator_set_move`), and the three
invariants the strategy maintains (:func:`check_invariants`).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

from .locality import LocalityError, OrderedPair, environment_key
from .structures import Structure, atomic_type1, atomic_type2, ball

DUPLICATOR = "duplicator"
SPOILER = "spoiler"

_MAX_FO_ROUNDS = 3


class StrategyError(Exception):
    """Raised when the duplicator strategy's preconditions are violated."""


# ---------------------------------------------------------------------------
# Classical back-and-forth game
# ---------------------------------------------------------------------------


def fo_game_winner(s0: Structure, s1: Structure, rounds: int) -> str:
    """Winner of the ``rounds``-round back-and-forth game (fresh pebble each round).

    Exhaustive backward induction over positions; the round count is
    capped at ``3`` because the game tree grows with the product of the
    domain sizes for every additional round.
    """
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    if rounds > _MAX_FO_ROUNDS:
        raise ValueError(f"fo_game_winner supports at most {_MAX_FO_ROUNDS} rounds")

    def consistent(pairs: tuple[tuple[int, int], ...], a: int, b: int) -> bool:
        if atomic_type1(s0, a).token() != atomic_type1(s1, b).token():
            return False
        for a2, b2 in pairs:
            if (a2 == a) != (b2 == b):
                return False
            if atomic_type2(s0, a, a2).token() != atomic_type2(s1, b, b2).token():
                return False
        return True

    @lru_cache(maxsize=None)
    def duplicator_survives(pairs: tuple[tuple[int, int], ...], r: int) -> bool:
        if r == 0:
            return True
        for side in (0, 1):
            moves = s0.elements if side == 0 else s1.elements
            responses = s1.elements if side == 0 else s0.elements
            for e in moves:
                answered = False
                for f in responses:
                    a, b = (e, f) if side == 0 else (f, e)
                    if consistent(pairs, a, b) and duplicator_survives(
                        pairs + ((a, b),), r - 1
                    ):
                        answered = True
                        break
                if not answered:
                    return False
        return True

    return DUPLICATOR if duplicator_survives((), rounds) else SPOILER


# ---------------------------------------------------------------------------
# Two-pebble games via label refinement
# ---------------------------------------------------------------------------


def _aggregate(labels: Sequence[int], count_bound: int | None):
    if count_bound is None:
        return frozenset(labels)
    counts = Counter(labels)
    return tuple(sorted((lab, min(n, count_bound)) for lab, n in counts.items()))


def _refine_labels(
    s0: Structure, s1: Structure, rounds: int, count_bound: int | None
) -> dict[tuple[int, int, int], int]:
    """Label every pebble configuration of both structures, ``rounds`` deep.

    Two configurations get the same final label exactly when the duplicator
    survives ``rounds`` further rounds starting from them, moving one
    pebble per round (with ``count_bound`` set, in the set-exchange variant
    with sets of at most that size).  Labels are interned jointly across
    the two structures so they are directly comparable.
    """
    structs = (s0, s1)
    interned: dict[object, int] = {}

    def intern(value: object) -> int:
        if value not in interned:
            interned[value] = len(interned)
        return interned[value]

    labels: dict[tuple[int, int, int], int] = {}
    for sid in (0, 1):
        s = structs[sid]
        for a in s.elements:
            for b in s.elements:
                labels[(sid, a, b)] = intern(atomic_type2(s, a, b).token())

    for _ in range(rounds):
        interned2: dict[object, int] = {}

        def intern2(value: object) -> int:
            if value not in interned2:
                interned2[value] = len(interned2)
            return interned2[value]

        rows: dict[tuple[int, int], object] = {}
        cols: dict[tuple[int, int], object] = {}
        for sid in (0, 1):
            elems = structs[sid].elements
            for a in elems:
                rows[(sid, a)] = _aggregate(
                    [labels[(sid, a, b)] for b in elems], count_bound
                )
            for b in elems:
                cols[(sid, b)] = _aggregate(
                    [labels[(sid, a, b)] for a in elems], count_bound
                )
        labels = {
            (sid, a, b): intern2((lab, rows[(sid, a)], cols[(sid, b)]))
            for (sid, a, b), lab in labels.items()
        }
    return labels


def fo2_game_winner(s0: Structure, s1: Structure, rounds: int) -> str:
    """Winner of the two-pebble game with duplicator initial placement.

    The duplicator first places both pebble pairs; each round the spoiler
    moves one pebble in one structure and the duplicator mirrors with the
    matching pebble in the other.  The duplicator wins when some initial
    placement survives all rounds with the pebbled pairs' atomic types
    equal throughout.
    """
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    labels = _refine_labels(s0, s1, rounds, None)
    set0 = {labels[(0, a, b)] for a in s0.elements for b in s0.elements}
    set1 = {labels[(1, a, b)] for a in s1.elements for b in s1.elements}
    return DUPLICATOR if set0 & set1 else SPOILER


def counting_game_winner(
    s0: Structure, s1: Structure, rounds: int, count_bound: int | None = None
) -> str:
    """Winner of the two-pebble set game; sets carry up to ``count_bound`` elements.

    Each round the spoiler proposes a set in one structure, the duplicator
    answers with an equal-size set in the other, the spoiler pebbles an
    element of the duplicator's set and the duplicator pebbles an element
    of the spoiler's.  ``count_bound`` defaults to ``rounds``, the
    counting index matching the round count.
    """
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    if count_bound is None:
        count_bound = max(rounds, 1)
    if count_bound < 1:
        raise ValueError("count_bound must be positive")
    labels = _refine_labels(s0, s1, rounds, count_bound)
    set0 = {labels[(0, a, b)] for a in s0.elements for b in s0.elements}
    set1 = {labels[(1, a, b)] for a in s1.elements for b in s1.elements}
    return DUPLICATOR if set0 & set1 else SPOILER


def config_equivalent(
    s0: Structure,
    s1: Structure,
    config: tuple[int, int, int, int],
    rounds: int,
    count_bound: int | None = None,
) -> bool:
    """Whether the duplicator survives ``rounds`` rounds from a configuration.

    ``config`` is ``(x0, y0, x1, y1)``: the positions of the two pebbles
    in each structure.
    """
    x0, y0, x1, y1 = config
    labels = _refine_labels(s0, s1, rounds, count_bound)
    return labels[(0, x0, y0)] == labels[(1, x1, y1)]


# ---------------------------------------------------------------------------
# Machine play on arbitrary pairs (used by the interactive CLI mode)
# ---------------------------------------------------------------------------


def _apply_to_config(
    config: tuple[int, int, int, int], side: int, pebble: str, element: int
) -> tuple[int, int, int, int]:
    x0, y0, x1, y1 = config
    if side == 0:
        return (element, y0, x1, y1) if pebble == "x" else (x0, element, x1, y1)
    return (x0, y0, element, y1) if pebble == "x" else (x0, y0, x1, element)


def best_duplicator_response(
    s0: Structure,
    s1: Structure,
    config: tuple[int, int, int, int],
    side: int,
    pebble: str,
    element: int,
    rounds_left: int,
    count_bound: int | None = None,
) -> int | None:
    """The least response keeping the configurations equivalent, if any."""
    structs = (s0, s1)
    after = _apply_to_config(config, side, pebble, element)
    labels = _refine_labels(s0, s1, rounds_left - 1, count_bound)
    for f in structs[1 - side].elements:
        candidate = _apply_to_config(after, 1 - side, pebble, f)
        if labels[(0, candidate[0], candidate[1])] == labels[
            (1, candidate[2], candidate[3])
        ]:
            return f
    return None


def best_spoiler_move(
    s0: Structure,
    s1: Structure,
    config: tuple[int, int, int, int],
    rounds_left: int,
    count_bound: int | None = None,
) -> tuple[int, str, int] | None:
    """A winning single-element spoiler move ``(side, pebble, element)``.

    Returns ``None`` when every such move lets the duplicator restore an
    equivalent configuration.
    """
    if rounds_left < 1:
        return None
    structs = (s0, s1)
    labels = _refine_labels(s0, s1, rounds_left - 1, count_bound)

    def survives(candidate: tuple[int, int, int, int]) -> bool:
        return labels[(0, candidate[0], candidate[1])] == labels[
            (1, candidate[2], candidate[3])
        ]

    for side in (0, 1):
        for pebble in ("x", "y"):
            for e in structs[side].elements:
                after = _apply_to_config(config, side, pebble, e)
                if not any(
                    survives(_apply_to_config(after, 1 - side, pebble, f))
                    for f in structs[1 - side].elements
                ):
                    return (side, pebble, e)
    return None


def best_spoiler_set_move(
    s0: Structure,
    s1: Structure,
    config: tuple[int, int, int, int],
    rounds_left: int,
    count_bound: int,
) -> tuple[int, str, tuple[int, ...]] | None:
    """A winning spoiler set move ``(side, pebble, elements)`` in the set game.

    A winning set exists exactly when, for some pebble, the capped class
    counts of candidate targets differ between the structures; the move
    proposes the class's elements (capped) on the side where it is more
    numerous.  Returns ``None`` if the configurations are equivalent at
    this depth.
    """
    if rounds_left < 1:
        return None
    labels = _refine_labels(s0, s1, rounds_left - 1, count_bound)
    structs = (s0, s1)
    for pebble in ("x", "y"):
        class_of: list[dict[int, int]] = []
        for sid in (0, 1):
            anchor = config[1 + 2 * sid] if pebble == "x" else config[2 * sid]
            mapping = {}
            for t in structs[sid].elements:
                a, b = (t, anchor) if pebble == "x" else (anchor, t)
                mapping[t] = labels[(sid, a, b)]
            class_of.append(mapping)
        counts0 = Counter(class_of[0].values())
        counts1 = Counter(class_of[1].values())
        for lab in sorted(set(counts0) | set(counts1)):
            c0 = min(counts0.get(lab, 0), count_bound)
            c1 = min(counts1.get(lab, 0), count_bound)
            if c0 == c1:
                continue
            side = 0 if c0 > c1 else 1
            want = max(c0, c1)
            chosen = sorted(t for t, l in class_of[side].items() if l == lab)[:want]
            return (side, pebble, tuple(chosen))
    return None


def best_duplicator_set_response(
    s0: Structure,
    s1: Structure,
    config: tuple[int, int, int, int],
    side: int,
    pebble: str,
    elements: Sequence[int],
    rounds_left: int,
    count_bound: int,
) -> tuple[int, ...]:
    """An equal-size answer set mirroring the classes of the spoiler's set.

    Classes are matched greedily; when a class runs short the response is
    padded with unused elements (a losing but legal answer).
    """
    labels = _refine_labels(s0, s1, rounds_left - 1, count_bound)
    structs = (s0, s1)
    anchor_own = config[1 + 2 * side] if pebble == "x" else config[2 * side]
    anchor_other = (
        config[1 + 2 * (1 - side)] if pebble == "x" else config[2 * (1 - side)]
    )

    def target_label(sid: int, anchor: int, t: int) -> int:
        a, b = (t, anchor) if pebble == "x" else (anchor, t)
        return labels[(sid, a, b)]

    pool: dict[int, list[int]] = {}
    for t in sorted(structs[1 - side].elements):
        pool.setdefault(target_label(1 - side, anchor_other, t), []).append(t)
    response: list[int] = []
    taken: set[int] = set()
    for e in sorted(set(elements)):
        lab = target_label(side, anchor_own, e)
        candidates = [t for t in pool.get(lab, []) if t not in taken]
        if candidates:
            response.append(candidates[0])
            taken.add(candidates[0])
    for t in sorted(structs[1 - side].elements):
        if len(response) >= len(set(elements)):
            break
        if t not in taken:
            response.append(t)
            taken.add(t)
    return tuple(sorted(response))


# ---------------------------------------------------------------------------
# The duplicator strategy on a built order pair
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GameState:
    """Pebble positions in both ordered structures plus remaining rounds."""

    rounds_left: int
    pebbles: tuple[tuple[int, int], tuple[int, int]]

    def pebble(self, side: int, name: str) -> int:
        x, y = self.pebbles[side]
        return x if name == "x" else y

    def config(self) -> tuple[int, int, int, int]:
        return (*self.pebbles[0], *self.pebbles[1])


@dataclass(frozen=True)
class SpoilerMove:
    side: int
    pebble: str
    element: int


@dataclass(frozen=True)
class DuplicatorReply:
    element: int
    case: str


@dataclass(frozen=True)
class InvariantReport:
    """Status of the three strategy invariants at a game state.

    ``border_ok`` — pebbles inside the inner region are matched by the
    border correspondence; ``environment_ok`` — matching pebbles share
    their radius-``r`` environment key; ``types_ok`` — the two pebbled
    pairs have equal atomic types.  ``problems`` carries one line per
    violation.
    """

    rounds_left: int
    border_ok: bool
    environment_ok: bool
    types_ok: bool
    problems: tuple[str, ...]

    def all_ok(self) -> bool:
        return self.border_ok and self.environment_ok and self.types_ok


_ENV_KEY_CACHE: dict[tuple[int, int, int], str] = {}
_ENV_KEY_PINNED: list[Structure] = []


def _env_key(s: Structure, element: int, radius: int) -> str:
    """Environment key with an identity-keyed cache (sweeps revisit elements)."""
    cache_key = (id(s), element, radius)
    hit = _ENV_KEY_CACHE.get(cache_key)
    if hit is None:
        if not any(p is s for p in _ENV_KEY_PINNED):
            _ENV_KEY_PINNED.append(s)
        hit = environment_key(s, element, radius)
        _ENV_KEY_CACHE[cache_key] = hit
    return hit


def initial_state(pair: OrderedPair, rounds: int | None = None) -> GameState:
    """Duplicator's initial placement: all four pebbles on the order minima."""
    k = pair.params.radius
    rounds = k if rounds is None else rounds
    if rounds > k:
        raise StrategyError(
            f"the order pair supports at most {k} rounds, requested {rounds}"
        )
    if rounds < 0:
        raise StrategyError("rounds must be nonnegative")
    m0 = pair.segments0.order()[0]
    m1 = pair.segments1.order()[0]
    return GameState(rounds_left=rounds, pebbles=((m0, m0), (m1, m1)))


def _order_isomorphism(
    pair: OrderedPair, side: int, center_own: int, center_other: int, radius: int
) -> dict[int, int]:
    """The unique order-respecting isomorphism between two pebble environments."""
    s_own = pair.structure(side)
    s_other = pair.structure(1 - side)
    key_own = _env_key(s_own, center_own, radius)
    key_other = _env_key(s_other, center_other, radius)
    if key_own != key_other:
        raise StrategyError(
            f"environment invariant broken at radius {radius}; "
            "cannot build the local isomorphism"
        )
    rank_own = s_own.order_rank("<")
    rank_other = s_other.order_rank("<")
    dom_own = sorted(ball(s_own, center_own, radius), key=lambda e: rank_own[e])
    dom_other = sorted(ball(s_other, center_other, radius), key=lambda e: rank_other[e])
    if len(dom_own) != len(dom_other):
        raise StrategyError("environment domains have different sizes")
    return dict(zip(dom_own, dom_other))


def duplicator_move(
    pair: OrderedPair, state: GameState, move: SpoilerMove, copy: int = 0
) -> DuplicatorReply:
    """The duplicator's response to a single spoiler move.

    Cases, tried strictly in order: tit-for-tat via the border
    correspondence when the move lands in the inner region (``I``);
    mirroring through the unique order-respecting environment isomorphism
    when it lands next to the other pebble (``II``); a universal pin on
    the left (``III``) or tit-for-tat when the other pebble sits in the
    boundary left block (``IV``); and the symmetric right-side cases
    (``V``, ``VI``).  Raises :class:`StrategyError` when an invariant the
    strategy relies on does not hold; it never silently patches over one.
    """
    if state.rounds_left <= 0:
        raise StrategyError("no rounds left in the game")
    if move.pebble not in ("x", "y"):
        raise StrategyError(f"unknown pebble {move.pebble!r}")
    if move.side not in (0, 1):
        raise StrategyError(f"unknown side {move.side!r}")
    i = move.side
    e = move.element
    s_i = pair.structure(i)
    if not 0 <= e < s_i.domain_size:
        raise StrategyError(f"element {e} outside structure {i}")
    seg_i = pair.segment_map(i)
    seg_other = pair.segment_map(1 - i)
    r_after = state.rounds_left - 1
    other_name = "y" if move.pebble == "x" else "x"
    anchor_own = state.pebble(i, other_name)
    anchor_other = state.pebble(1 - i, other_name)
    k = pair.params.radius

    if e in seg_i.sigma(r_after):
        return DuplicatorReply(pair.transfer(i, e), "I")

    if e in ball(s_i, anchor_own, 1):
        psi = _order_isomorphism(pair, i, anchor_own, anchor_other, state.rounds_left)
        if e not in psi:
            raise StrategyError("spoiler move escaped the local environment")
        return DuplicatorReply(psi[e], "II")

    rank = s_i.order_rank("<")
    pin_level = state.rounds_left
    if rank[e] < rank[anchor_own]:
        if anchor_own not in seg_i.left_block(pin_level):
            omega = _env_key(s_i, e, k)
            return DuplicatorReply(
                seg_other.pin_element("L", pin_level, omega, copy), "III"
            )
        return DuplicatorReply(pair.transfer(i, e), "IV")
    if anchor_own not in seg_i.right_block(pin_level):
        omega = _env_key(s_i, e, k)
        return DuplicatorReply(
            seg_other.pin_element("R", pin_level, omega, copy), "V"
        )
    return DuplicatorReply(pair.transfer(i, e), "VI")


def apply_round(state: GameState, move: SpoilerMove, response: int) -> GameState:
    """Advance the state by one full round (spoiler move plus reply)."""
    pebbles = [list(state.pebbles[0]), list(state.pebbles[1])]
    idx = 0 if move.pebble == "x" else 1
    pebbles[move.side][idx] = move.element
    pebbles[1 - move.side][idx] = response
    return GameState(
        rounds_left=state.rounds_left - 1,
        pebbles=(tuple(pebbles[0]), tuple(pebbles[1])),
    )


def check_invariants(pair: OrderedPair, state: GameState) -> InvariantReport:
    """Evaluate the three strategy invariants at the current state."""
    r = state.rounds_left
    border: list[str] = []
    environment: list[str] = []
    types: list[str] = []
    for side in (0, 1):
        sigma = pair.segment_map(side).sigma(r)
        for name in ("x", "y"):
            p = state.pebble(side, name)
            if p in sigma and state.pebble(1 - side, name) != pair.transfer(side, p):
                border.append(
                    f"S{r}: pebble {name} of side {side} lies in the inner region "
                    "but its partner is not the correspondence image"
                )
    for name in ("x", "y"):
        e0 = state.pebble(0, name)
        e1 = state.pebble(1, name)
        if _env_key(pair.ordered0, e0, r) != _env_key(pair.ordered1, e1, r):
            environment.append(
                f"E{r}: pebble {name} environments differ at radius {r} "
                f"({e0} vs {e1})"
            )
    t0 = atomic_type2(pair.ordered0, *state.pebbles[0]).token()
    t1 = atomic_type2(pair.ordered1, *state.pebbles[1]).token()
    if t0 != t1:
        types.append(f"R{r}: pebble pairs have different atomic types ({t0} vs {t1})")
    return InvariantReport(
        rounds_left=r,
        border_ok=not border,
        environment_ok=not environment,
        types_ok=not types,
        problems=tuple(border + environment + types),
    )


# ---------------------------------------------------------------------------
# Set moves (counting game) on a built order pair
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SetMoveOutcome:
    """Duplicator's answer to a set move, element by element."""

    mapping: Mapping[int, int]
    cases: Mapping[int, str]

    def response_set(self) -> tuple[int, ...]:
        return tuple(sorted(self.mapping.values()))

    def pick_for(self, spoiler_choice: int) -> int:
        """The element the duplicator pebbles when the spoiler picks this one."""
        for e, f in self.mapping.items():
            if f == spoiler_choice:
                return e
        raise StrategyError("spoiler picked outside the duplicator's set")


def duplicator_set_move(
    pair: OrderedPair,
    state: GameState,
    side: int,
    pebble: str,
    elements: Iterable[int],
) -> SetMoveOutcome:
    """Respond to a counting-game set move with an equal-size set.

    Every element is answered along :func:`duplicator_move`; moves landing
    on a universal pin consume distinct copies of it, which is what the
    construction's ``count_multiplier`` provides.  Raises
    :class:`StrategyError` when the demanded multiplicity exceeds the
    multiplier or two responses collide.
    """
    chosen = sorted(set(elements))
    if not chosen:
        raise StrategyError("spoiler set must be nonempty")
    cm = pair.params.count_multiplier
    if len(chosen) > cm:
        raise StrategyError(
            f"set move of size {len(chosen)} exceeds the count multiplier {cm}"
        )
    pin_usage: dict[tuple[str, int, str], int] = {}
    mapping: dict[int, int] = {}
    cases: dict[int, str] = {}
    for e in chosen:
        probe = duplicator_move(pair, state, SpoilerMove(side, pebble, e), copy=0)
        if probe.case in ("III", "V"):
            pin_side = "L" if probe.case == "III" else "R"
            omega = _env_key(pair.structure(side), e, pair.params.radius)
            slot = (pin_side, state.rounds_left, omega)
            copy = pin_usage.get(slot, 0)
            pin_usage[slot] = copy + 1
            reply = duplicator_move(
                pair, state, SpoilerMove(side, pebble, e), copy=copy
            )
        else:
            reply = probe
        mapping[e] = reply.element
        cases[e] = reply.case
    values = list(mapping.values())
    if len(set(values)) != len(values):
        raise StrategyError("duplicator set responses collided")
    return SetMoveOutcome(mapping=mapping, cases=cases)


# ---------------------------------------------------------------------------
# Scripted play with transcripts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlayResult:
    winner: str
    transcript: tuple[str, ...]
    final_state: GameState
    cases: tuple[str, ...]


def play_strategy_game(
    pair: OrderedPair,
    moves: Iterable[SpoilerMove],
    rounds: int | None = None,
    verify: bool = True,
) -> PlayResult:
    """Play scripted spoiler moves against the strategy duplicator.

    Produces a transcript (one line per action) and the winner.  With
    ``verify`` the three invariants are checked after every round and any
    violation ends the game in the spoiler's favor.
    """
    state = initial_state(pair, rounds)
    lines = [
        f"init 0 {state.pebbles[0][0]} {state.pebbles[0][1]}",
        f"init 1 {state.pebbles[1][0]} {state.pebbles[1][1]}",
    ]
    cases: list[str] = []
    round_no = 0
    for move in moves:
        if state.rounds_left == 0:
            break
        round_no += 1
        lines.append(
            f"round {round_no} spoiler {move.side} {move.pebble} {move.element}"
        )
        try:
            reply = duplicator_move(pair, state, move)
        except (StrategyError, LocalityError) as exc:
            lines.append(f"duplicator resigns: {exc}")
            lines.append(f"winner {SPOILER}")
            return PlayResult(SPOILER, tuple(lines), state, tuple(cases))
        lines.append(f"duplicator {reply.element}")
        cases.append(reply.case)
        state = apply_round(state, move, reply.element)
        if verify:
            report = check_invariants(pair, state)
            if not report.all_ok():
                lines.append(f"invariant broken: {report.problems[0]}")
                lines.append(f"winner {SPOILER}")
                return PlayResult(SPOILER, tuple(lines), state, tuple(cases))
    lines.append(f"winner {DUPLICATOR}")
    return PlayResult(DUPLICATOR, tuple(lines), state, tuple(cases))


@dataclass(frozen=True)
class SetRound:
    """One scripted counting-game round: the set move plus the spoiler's pick.

    ``pick_index`` selects the spoiler's choice from the duplicator's
    sorted response set.
    """

    side: int
    pebble: str
    elements: tuple[int, ...]
    pick_index: int = 0


def play_counting_game(
    pair: OrderedPair,
    rounds_script: Iterable[SetRound],
    rounds: int | None = None,
    verify: bool = True,
) -> PlayResult:
    """Play scripted counting-game set rounds against the strategy duplicator."""
    state = initial_state(pair, rounds)
    lines = [
        f"init 0 {state.pebbles[0][0]} {state.pebbles[0][1]}",
        f"init 1 {state.pebbles[1][0]} {state.pebbles[1][1]}",
    ]
    cases: list[str] = []
    round_no = 0
    for step in rounds_script:
        if state.rounds_left == 0:
            break
        round_no += 1
        elems = ",".join(str(e) for e in sorted(set(step.elements)))
        lines.append(f"round {round_no} spoiler {step.side} {step.pebble} {elems}")
        try:
            outcome = duplicator_set_move(
                pair, state, step.side, step.pebble, step.elements
            )
        except (StrategyError, LocalityError) as exc:
            lines.append(f"duplicator resigns: {exc}")
            lines.append(f"winner {SPOILER}")
            return PlayResult(SPOILER, tuple(lines), state, tuple(cases))
        response = outcome.response_set()
        lines.append("duplicator " + ",".join(str(e) for e in response))
        spoiler_choice = response[step.pick_index % len(response)]
        duplicator_choice = outcome.pick_for(spoiler_choice)
        lines.append(f"spoiler picks {spoiler_choice}")
        lines.append(f"duplicator picks {duplicator_choice}")
        cases.append(outcome.cases[duplicator_choice])
        move = SpoilerMove(step.side, step.pebble, duplicator_choice)
        state = apply_round(state, move, spoiler_choice)
        if verify:
            report = check_invariants(pair, state)
            if not report.all_ok():
                lines.append(f"invariant broken: {report.problems[0]}")
                lines.append(f"winner {SPOILER}")
                return PlayResult(SPOILER, tuple(lines), state, tuple(cases))
    lines.append(f"winner {DUPLICATOR}")
    return PlayResult(DUPLICATOR, tuple(lines), state, tuple(cases))


# ---------------------------------------------------------------------------
# Interactive play against the exact solver
# ---------------------------------------------------------------------------


def play_solver_game(
    s0: Structure,
    s1: Structure,
    rounds: int,
    human_role: str,
    ask: Callable[[str], str],
    tell: Callable[[str], None],
    count_bound: int | None = None,
) -> PlayResult:
    """Interactive two-pebble game; the machine plays the exact solution.

    ``ask`` requests one line of input with a prompt (re-prompted on
    invalid input) and ``tell`` emits one message.  The human plays
    ``human_role``; the machine plays the other role using label
    refinement, so it never misses a forced win.  Pass ``count_bound``
    for capped-count mirroring (set moves themselves stay single-element
    in interactive mode).
    """
    if human_role not in (SPOILER, DUPLICATOR):
        raise ValueError(f"unknown role {human_role!r}")
    structs = (s0, s1)
    lines: list[str] = []

    def emit(line: str) -> None:
        lines.append(line)
        tell(line)

    def ask_int(prompt: str, valid: Sequence[int]) -> int:
        while True:
            raw = ask(prompt).strip()
            try:
                value = int(raw)
            except ValueError:
                tell(f"not an element: {raw!r}")
                continue
            if value in valid:
                return value
            tell(f"element {value} is not available here")

    def ask_choice(prompt: str, valid: Sequence[str]) -> str:
        while True:
            raw = ask(prompt).strip()
            if raw in valid:
                return raw
            tell(f"expected one of {', '.join(valid)}")

    labels_full = _refine_labels(s0, s1, rounds, count_bound)
    best_init: tuple[int, int, int, int] | None = None
    for a in s0.elements:
        for b in s0.elements:
            label = labels_full[(0, a, b)]
            for c in s1.elements:
                for d in s1.elements:
                    if label == labels_full[(1, c, d)]:
                        best_init = (a, b, c, d)
                        break
                if best_init:
                    break
            if best_init:
                break
        if best_init:
            break

    if human_role == DUPLICATOR:
        x0 = ask_int("initial pebble x in structure 0: ", s0.elements)
        y0 = ask_int("initial pebble y in structure 0: ", s0.elements)
        x1 = ask_int("initial pebble x in structure 1: ", s1.elements)
        y1 = ask_int("initial pebble y in structure 1: ", s1.elements)
        config = (x0, y0, x1, y1)
    else:
        config = best_init if best_init else (
            s0.elements[0],
            s0.elements[0],
            s1.elements[0],
            s1.elements[0],
        )
    emit(f"init 0 {config[0]} {config[1]}")
    emit(f"init 1 {config[2]} {config[3]}")

    state = GameState(rounds, ((config[0], config[1]), (config[2], config[3])))
    cases: tuple[str, ...] = ()

    def types_match() -> tuple[bool, str, str]:
        t0 = atomic_type2(s0, *state.pebbles[0]).token()
        t1 = atomic_type2(s1, *state.pebbles[1]).token()
        return t0 == t1, t0, t1

    for round_no in range(1, rounds + 1):
        ok, t0, t1 = types_match()
        if not ok:
            emit(f"R_{state.rounds_left} violated: {t0} differs from {t1}")
            emit(f"winner {SPOILER}")
            return PlayResult(SPOILER, tuple(lines), state, cases)
        config = state.config()
        if human_role == SPOILER:
            side = int(ask_choice("spoiler: structure (0/1): ", ("0", "1")))
            pebble = ask_choice("spoiler: pebble (x/y): ", ("x", "y"))
            element = ask_int("spoiler: element: ", structs[side].elements)
        else:
            found = best_spoiler_move(s0, s1, config, state.rounds_left, count_bound)
            side, pebble, element = (
                found if found else (0, "x", structs[0].elements[0])
            )
        emit(f"round {round_no} spoiler {side} {pebble} {element}")
        if human_role == DUPLICATOR:
            response = ask_int("duplicator: element: ", structs[1 - side].elements)
        else:
            answer = best_duplicator_response(
                s0, s1, config, side, pebble, element, state.rounds_left, count_bound
            )
            response = answer if answer is not None else structs[1 - side].elements[0]
        emit(f"duplicator {response}")
        state = apply_round(state, SpoilerMove(side, pebble, element), response)
    ok, t0, t1 = types_match()
    if not ok:
        emit(f"R_0 violated: {t0} differs from {t1}")
        emit(f"winner {SPOILER}")
        return PlayResult(SPOILER, tuple(lines), state, cases)
    emit(f"winner {DUPLICATOR}")
    return PlayResult(DUPLICATOR, tuple(lines), state, cases)
