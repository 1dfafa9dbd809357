"""Tests for game solvers, duplicator strategies, and game transcripts."""
from __future__ import annotations

import random

import pytest

from ordinv import games
from ordinv.locality import LocalityParams, build_orders

from helpers import naive_winner, points, random_structure, union


class TestFoGame:
    def test_identical_structures(self):
        a = points(3, 1)
        assert games.fo_game_winner(a, a, 3) == "duplicator"

    def test_counting_needs_rank(self):
        # rank 1 cannot tell 4 points from 5
        assert games.fo_game_winner(points(4), points(5), 1) == "duplicator"
        # rank 2 tells 1 point from 2
        assert games.fo_game_winner(points(1), points(2), 2) == "spoiler"
        assert games.fo_game_winner(points(1), points(2), 1) == "duplicator"

    def test_color_detected_in_one_round(self):
        assert games.fo_game_winner(points(2), points(1, 1), 1) == "spoiler"

    def test_round_cap(self):
        with pytest.raises(ValueError):
            games.fo_game_winner(points(1), points(2), 4)

    def test_zero_rounds(self):
        assert games.fo_game_winner(points(1), points(9), 0) == "duplicator"


class TestFo2Game:
    def test_two_pebbles_cannot_count_to_three(self):
        assert games.fo2_game_winner(points(2), points(3), 3) == "duplicator"

    def test_one_round_separation(self):
        assert games.fo2_game_winner(points(1), points(2), 1) == "spoiler"

    def test_ordered_chains(self):
        # a middle element (something below, something above) exists only in
        # the 3-chain; two rounds suffice, one does not
        two = points(2).with_named_order("<", (0, 1))
        three = points(3).with_named_order("<", (0, 1, 2))
        assert games.fo2_game_winner(two, three, 2) == "spoiler"
        assert games.fo2_game_winner(two, three, 1) == "duplicator"

    def test_cross_validation_against_raw_recursion(self):
        rng = random.Random(7)
        for trial in range(30):
            s0 = random_structure(rng, rng.randint(1, 3))
            s1 = random_structure(rng, rng.randint(1, 3))
            rounds = rng.randint(0, 2)
            assert games.fo2_game_winner(s0, s1, rounds) == naive_winner(
                s0, s1, rounds
            ), (trial, rounds)


class TestCountingGame:
    def test_index_two_counts_to_two(self):
        # some element has two distinct others: true with 3 points, not 2
        assert games.counting_game_winner(points(2), points(3), 2, 2) == "spoiler"

    def test_capped_views_agree(self):
        assert games.counting_game_winner(points(3), points(4), 3, 2) == "duplicator"

    def test_default_bound_is_round_count(self):
        # with the default (index = rounds = 3) the 3-vs-4 control flips
        assert games.counting_game_winner(points(3), points(4), 3) == "spoiler"

    def test_singleton_sets_degenerate_to_fo2(self):
        rng = random.Random(9)
        for qa, qb in ((1, 2), (2, 3), (2, 2)):
            w_fo2 = games.fo2_game_winner(points(qa), points(qb), 2)
            w_c2 = games.counting_game_winner(points(qa), points(qb), 2, 1)
            assert w_c2 == w_fo2
        for _ in range(10):
            s0 = random_structure(rng, rng.randint(1, 3))
            s1 = random_structure(rng, rng.randint(1, 3))
            rounds = rng.randint(0, 2)
            assert games.counting_game_winner(
                s0, s1, rounds, 1
            ) == games.fo2_game_winner(s0, s1, rounds)

    def test_cross_validation_against_raw_recursion(self):
        rng = random.Random(8)
        for trial in range(15):
            s0 = random_structure(rng, rng.randint(1, 3))
            s1 = random_structure(rng, rng.randint(1, 3))
            rounds = rng.randint(0, 2)
            cb = rng.randint(1, 2)
            assert games.counting_game_winner(s0, s1, rounds, cb) == naive_winner(
                s0, s1, rounds, cb
            ), (trial, rounds, cb)


class TestMachinePlay:
    def test_best_spoiler_move_wins_when_solver_says_spoiler(self):
        s0, s1 = points(1), points(2)
        assert games.fo2_game_winner(s0, s1, 1) == "spoiler"
        config = (0, 0, 0, 0)
        move = games.best_spoiler_move(s0, s1, config, 1)
        assert move is not None
        side, pebble, element = move
        # no duplicator response keeps the configs equivalent
        assert (
            games.best_duplicator_response(s0, s1, config, side, pebble, element, 0)
            is None
        )

    def test_best_spoiler_move_absent_when_duplicator_wins(self):
        s0, s1 = points(2), points(3)
        config = (0, 0, 0, 0)
        assert games.best_spoiler_move(s0, s1, config, 2) is None

    def test_duplicator_response_preserves_equivalence(self):
        s0, s1 = points(2, 1), points(2, 1)
        config = (0, 0, 0, 0)
        reply = games.best_duplicator_response(s0, s1, config, 0, "x", 2, 1)
        assert reply is not None
        new_config = (2, 0, reply, 0)
        assert games.config_equivalent(s0, s1, new_config, 1)

    def test_set_moves_exact_on_counting_types(self):
        s0, s1 = points(2), points(3)
        config = (0, 0, 0, 0)
        move = games.best_spoiler_set_move(s0, s1, config, 1, 2)
        assert move is not None
        side, pebble, elements = move
        assert len(elements) <= 2
        # and on equal structures no winning set move exists
        assert games.best_spoiler_set_move(s0, s0, (0, 0, 0, 0), 1, 2) is None


@pytest.fixture(scope="module")
def pair():
    params = LocalityParams(radius=1, degree_bound=2, m=1, delta=1)
    s0 = union([("path", 2)] * 30 + ["P"] * 3)
    s1 = union([("path", 2)] * 31 + ["P"] * 3)
    return build_orders(s0, s1, params)


@pytest.fixture(scope="module")
def counting_pair():
    params = LocalityParams(radius=1, degree_bound=2, m=1, delta=1, count_multiplier=2)
    s0 = union([("path", 2)] * 40 + ["P"] * 3)
    s1 = union([("path", 2)] * 41 + ["P"] * 3)
    return build_orders(s0, s1, params)


class TestStrategy:

    def test_initial_state_on_minima(self, pair):
        state = games.initial_state(pair)
        assert state.rounds_left == 1
        order0 = pair.structure(0).order("<")
        order1 = pair.structure(1).order("<")
        assert state.pebbles[0] == (order0[0], order0[0])
        assert state.pebbles[1] == (order1[0], order1[0])
        report = games.check_invariants(pair, state)
        assert report.all_ok(), report.problems

    def test_rounds_above_radius_rejected(self, pair):
        with pytest.raises(games.StrategyError):
            games.initial_state(pair, rounds=2)

    def test_exhaustive_sweep_preserves_invariants(self, pair):
        state0 = games.initial_state(pair)
        cases = {}
        for side in (0, 1):
            for pebble in ("x", "y"):
                for e in pair.structure(side).elements:
                    move = games.SpoilerMove(side, pebble, e)
                    reply = games.duplicator_move(pair, state0, move)
                    nxt = games.apply_round(state0, move, reply.element)
                    report = games.check_invariants(pair, nxt)
                    assert report.all_ok(), (move, reply.case, report.problems)
                    cases[reply.case] = cases.get(reply.case, 0) + 1
        # at one round only the transfer cases and pins can fire
        assert set(cases) <= {"I", "III", "IV", "V", "VI"}
        assert sum(cases.values()) == 2 * 2 * (
            pair.structure(0).domain_size + pair.structure(1).domain_size
        ) // 2

    def test_scripted_game_is_deterministic(self, pair):
        moves = [games.SpoilerMove(0, "x", 10)]
        res1 = games.play_strategy_game(pair, moves)
        res2 = games.play_strategy_game(pair, moves)
        assert res1.winner == "duplicator"
        assert res1.transcript == res2.transcript
        assert res1.transcript[0].startswith("init 0 ")
        assert res1.transcript[-1] == "winner duplicator"
        assert any(line.startswith("round 1 spoiler 0 x 10") for line in res1.transcript)

    def test_solver_agrees_with_strategy(self, pair):
        assert games.fo2_game_winner(pair.ordered0, pair.ordered1, 1) == "duplicator"


class TestSetStrategy:
    def test_set_move_mirrors_classes(self, counting_pair):
        state = games.initial_state(counting_pair)
        elements = list(counting_pair.structure(0).elements)[:2]
        outcome = games.duplicator_set_move(counting_pair, state, 0, "x", elements)
        assert sorted(outcome.mapping) == sorted(elements)
        assert len(outcome.response_set()) == len(set(outcome.response_set()))
        for choice in outcome.response_set():
            e = outcome.pick_for(choice)
            assert e in elements

    def test_set_size_cap(self, counting_pair):
        state = games.initial_state(counting_pair)
        elements = list(counting_pair.structure(0).elements)[:3]
        with pytest.raises(games.StrategyError):
            games.duplicator_set_move(counting_pair, state, 0, "x", elements)

    def test_play_counting_game(self, counting_pair):
        script = [games.SetRound(0, "x", (0, 2), pick_index=0)]
        res = games.play_counting_game(counting_pair, script)
        assert res.winner == "duplicator"
        assert any("spoiler picks" in line for line in res.transcript)
        assert any("duplicator picks" in line for line in res.transcript)


class TestInteractiveGame:
    def test_scripted_human_spoiler_loses_on_isomorphic(self):
        inputs = iter(["0", "x", "1", "0", "y", "2"])
        outputs = []
        res = games.play_solver_game(
            points(2, 1),
            points(2, 1),
            2,
            "spoiler",
            ask=lambda prompt: next(inputs),
            tell=outputs.append,
        )
        assert res.winner == "duplicator"
        assert any(line.startswith("winner") for line in res.transcript)

    def test_machine_spoiler_beats_human_duplicator(self):
        # human duplicator answers arbitrarily on 1-vs-2 points; spoiler wins
        inputs = iter(["0", "0", "0", "0", "0", "0"])
        res = games.play_solver_game(
            points(1),
            points(2),
            1,
            "duplicator",
            ask=lambda prompt: next(inputs),
            tell=lambda line: None,
        )
        assert res.winner == "spoiler"

    def test_invalid_input_reprompts(self):
        inputs = iter(["9", "-1", "0", "x", "1", "not-a-number", "0", "y", "0"])
        res = games.play_solver_game(
            points(2, 1),
            points(2, 1),
            2,
            "spoiler",
            ask=lambda prompt: next(inputs),
            tell=lambda line: None,
        )
        assert res.winner == "duplicator"
