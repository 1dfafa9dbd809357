"""End-to-end tests of the command-line interface via main(argv)."""
from __future__ import annotations

import json

import pytest

from ordinv import dendroid as dn
from ordinv.cli import main
from ordinv.logic import parse_formula
from ordinv.solver import render_normal_form, scott_normal_form
from ordinv.structures import structure_to_text

from helpers import points, union

MIN_IS_P = "exists x. (P(x) & forall y. (x = y | x < y))"


@pytest.fixture()
def files(tmp_path):
    """Write the structure/formula files the commands need."""
    paths = {}

    def save(name, text):
        p = tmp_path / name
        p.write_text(text)
        paths[name] = str(p)
        return str(p)

    save("pq.struct", structure_to_text(points(2, 1)))
    ordered = points(2, 1).with_named_order("<", (2, 0, 1))
    save("ordered.struct", structure_to_text(ordered))
    save(
        "family0.struct",
        structure_to_text(union([("path", 2)] * 30 + ["P"] * 3)),
    )
    save(
        "family1.struct",
        structure_to_text(union([("path", 2)] * 31 + ["P"] * 3)),
    )
    save("two.struct", structure_to_text(points(2)))
    save("three.struct", structure_to_text(points(3)))
    nf = scott_normal_form(parse_formula(MIN_IS_P))
    save("min_is_p.nf", render_normal_form(nf))
    dend = dn.make_dendroid(2).with_named_order("<", tuple(range(7)))
    save("dendroid.struct", structure_to_text(dend))
    return paths


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParse:
    def test_reports_fragment_facts(self, capsys):
        code, out, _ = run(capsys, "parse", "exists x. exists y. (E(x,y) & x < y)")
        assert code == 0
        assert "rank 2" in out
        assert "two-variable 1" in out

    def test_rejects_garbage(self, capsys):
        code, _, err = run(capsys, "parse", "P(x) &")
        assert code == 2
        assert err

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "--format", "json", "parse", "P(x)")
        assert code == 0
        payload = json.loads(out)
        assert payload["rank"] == 0

    def test_format_after_subcommand(self, capsys):
        _, before, _ = run(capsys, "--format", "json", "parse", "P(x)")
        _, after, _ = run(capsys, "parse", "P(x)", "--format", "json")
        assert before == after


class TestEval:
    def test_true_and_false_exit_codes(self, capsys, files):
        code, out, _ = run(capsys, "eval", files["pq.struct"], "exists x. Q(x)")
        assert code == 0 and "true" in out
        code, out, _ = run(capsys, "eval", files["pq.struct"], "forall x. Q(x)")
        assert code == 1 and "false" in out

    def test_assignment(self, capsys, files):
        code, out, _ = run(
            capsys, "eval", files["pq.struct"], "P(x)", "--assign", "x=0"
        )
        assert code == 0

    def test_missing_order_is_usage_error(self, capsys, files):
        code, _, err = run(
            capsys, "eval", files["pq.struct"], "exists x. exists y. x < y"
        )
        assert code == 2
        assert "order" in err

    def test_order_evaluates_when_present(self, capsys, files):
        code, _, _ = run(
            capsys, "eval", files["ordered.struct"], "exists x. exists y. x < y"
        )
        assert code == 0

    def test_uninterpreted_symbol_is_usage_error(self, capsys, files):
        code, _, err = run(capsys, "eval", files["pq.struct"], "exists x. R(x)")
        assert code == 2


class TestInvariance:
    def test_witness_found(self, capsys, files):
        code, out, _ = run(capsys, "invariance", MIN_IS_P, "--max-size", "3")
        assert code == 1
        assert "not order-invariant" in out
        assert "order <0 :" in out and "order <1 :" in out

    def test_invariant_sentence(self, capsys):
        code, out, _ = run(
            capsys,
            "invariance",
            "exists x. forall y. (x = y | x < y)",
            "--max-size",
            "3",
        )
        assert code == 0
        assert "invariant" in out

    def test_brute_force_route_agrees(self, capsys):
        code, _, _ = run(
            capsys, "invariance", MIN_IS_P, "--max-size", "2", "--brute-force"
        )
        assert code == 1


class TestValidityNfSat:
    def test_validity(self, capsys):
        code, out, _ = run(
            capsys, "validity", "forall x. (P(x) | !P(x))", "--max-size", "3"
        )
        assert code == 0 and "valid" in out
        code, out, _ = run(capsys, "validity", "forall x. P(x)", "--max-size", "3")
        assert code == 1
        assert "countermodel" in out

    def test_nf_renders(self, capsys):
        code, out, _ = run(capsys, "nf", MIN_IS_P)
        assert code == 0
        assert out.startswith("base ")
        assert "chi 0" in out and "chi 1" in out

    def test_sat_formula(self, capsys):
        code, out, _ = run(capsys, "sat", "exists x. P(x)", "--max-size", "3")
        assert code == 0
        assert "domain 1" in out

    def test_sat_unsat(self, capsys):
        code, out, _ = run(
            capsys, "sat", "(exists x. P(x)) & (forall x. !P(x))", "--max-size", "3"
        )
        assert code == 1
        assert "unsatisfiable" in out

    def test_sat_normal_form_file(self, capsys, files):
        code, out, _ = run(capsys, "sat", files["min_is_p.nf"], "--max-size", "3")
        assert code == 0

    def test_shrink(self, capsys, files, tmp_path):
        nf = scott_normal_form(parse_formula(MIN_IS_P))
        from ordinv.solver import expand_with_definitions
        from ordinv.structures import Signature, Structure

        sig = Signature(relations=(("P", 1),))
        big = Structure(
            signature=sig, domain_size=25, relations={"P": frozenset({(0,)})}
        )
        big = big.with_named_order("<0", tuple(range(25)))
        big = big.with_named_order("<1", tuple(range(24, -1, -1)))
        model = tmp_path / "model.struct"
        model.write_text(structure_to_text(expand_with_definitions(nf, big)))
        code, out, _ = run(capsys, "shrink", files["min_is_p.nf"], str(model))
        assert code == 0
        assert "W0:" in out
        assert "domain" in out


class TestLocalityCommands:
    def test_census(self, capsys, files):
        code, out, _ = run(capsys, "census", files["family0.struct"], "-k", "1")
        assert code == 0
        assert out.count("type ") == 3

    def test_census_deterministic(self, capsys, files):
        _, first, _ = run(capsys, "census", files["family0.struct"], "-k", "1")
        _, second, _ = run(capsys, "census", files["family0.struct"], "-k", "1")
        assert first == second

    def test_classify_scaled(self, capsys, files):
        code, out, _ = run(
            capsys,
            "classify",
            files["family0.struct"],
            "-k",
            "1",
            "--scaled",
            "m=1,delta=1",
        )
        assert code == 0
        assert "threshold" in out
        assert "frequent" in out

    def test_classify_exact_mode_runs(self, capsys, files):
        code, out, _ = run(capsys, "classify", files["family0.struct"], "-k", "1")
        assert code == 0
        # exact-mode constants dwarf a 63-element family: everything is rare
        assert "frequent" not in out or "rare" in out

    def test_build_orders(self, capsys, files):
        code, out, _ = run(
            capsys,
            "build-orders",
            files["family0.struct"],
            files["family1.struct"],
            "-k",
            "1",
            "--scaled",
            "m=1,delta=1",
        )
        assert code == 0
        assert "order 0 :" in out and "order 1 :" in out
        assert "threshold" in out and "pi " in out

    def test_build_orders_failure_is_exit_one(self, capsys, files):
        code, _, err = run(
            capsys,
            "build-orders",
            files["family0.struct"],
            files["two.struct"],
            "-k",
            "1",
            "--scaled",
            "m=1,delta=1",
        )
        assert code == 1
        assert err

    def test_scaled_requires_both_parameters(self, capsys, files):
        code, _, err = run(
            capsys,
            "classify",
            files["family0.struct"],
            "-k",
            "1",
            "--scaled",
            "m=2",
        )
        assert code == 2


class TestGameCommand:
    def test_fo2_duplicator(self, capsys, files):
        code, out, _ = run(
            capsys, "game", "fo2", files["two.struct"], files["three.struct"],
            "-k", "2",
        )
        assert code == 0
        assert "winner duplicator" in out

    def test_c2_spoiler_exit_one(self, capsys, files):
        code, out, _ = run(
            capsys, "game", "c2", files["three.struct"], files["two.struct"],
            "-k", "3",
        )
        assert code == 1
        assert "winner spoiler" in out

    def test_fo_round_cap_exit_three(self, capsys, files):
        code, _, err = run(
            capsys, "game", "fo", files["two.struct"], files["three.struct"],
            "-k", "5",
        )
        assert code == 3

    def test_human_fo_rejected(self, capsys, files):
        code, _, _ = run(
            capsys, "game", "fo", files["two.struct"], files["three.struct"],
            "-k", "1", "--human", "spoiler",
        )
        assert code == 2


class TestDendroidCommand:
    def test_emit_is_a_dendroid(self, capsys, tmp_path):
        code, out, _ = run(capsys, "dendroid", "emit", "--depth", "2", "--order", "level")
        assert code == 0
        from ordinv.structures import parse_structure

        s = parse_structure(out)
        assert dn.is_dendroid(s)
        assert s.order("<") == tuple(range(7))

    def test_emit_seeded_depends_on_seed_position_agnostically(self, capsys):
        _, up_front, _ = run(
            capsys, "--seed", "9", "dendroid", "emit", "--depth", "2", "--order", "seeded"
        )
        _, after, _ = run(
            capsys, "dendroid", "emit", "--depth", "2", "--order", "seeded", "--seed", "9"
        )
        assert up_front == after
        _, other, _ = run(
            capsys, "dendroid", "emit", "--depth", "2", "--order", "seeded", "--seed", "10"
        )
        assert other != after

    def test_experiment(self, capsys):
        code, out, _ = run(
            capsys, "dendroid", "experiment", "--depths", "1..2", "--orders", "4"
        )
        assert code == 0
        lines = [line for line in out.splitlines() if line and not line.startswith("depth\t")]
        assert len(lines) == 6 + 4  # exhaustive at depth 1, budget at depth 2

    def test_experiment_depth_list(self, capsys):
        code, out, _ = run(
            capsys, "dendroid", "experiment", "--depths", "2", "--orders", "3"
        )
        assert code == 0
        assert all(line.startswith("2\t") for line in out.splitlines()[1:] if line)

    def test_bad_depths(self, capsys):
        code, _, err = run(capsys, "dendroid", "experiment", "--depths", "x..y")
        assert code == 2

    def test_similarity(self, capsys):
        code, out, _ = run(capsys, "dendroid", "similarity")
        assert code == 0
        assert "duplicator" in out and "spoiler" in out


class TestUsage:
    def test_unknown_command(self, capsys):
        code, _, _ = run(capsys, "frobnicate")
        assert code == 2

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "census", "/nonexistent/file.struct", "-k", "1")
        assert code == 2
