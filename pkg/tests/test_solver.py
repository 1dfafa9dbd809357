"""Tests for normal forms, bounded model search, invariance, and shrinking."""
from __future__ import annotations

import pytest

from ordinv.evaluator import evaluate
from ordinv.logic import And, Not, analyze, parse_formula
from ordinv.solver import (
    InvariantUpTo,
    NotInvariant,
    check_invariance,
    expand_with_definitions,
    find_model,
    find_model_direct,
    invariance_sentence,
    parse_normal_form,
    render_normal_form,
    render_shrink_trace,
    scott_normal_form,
    shrink_model,
    validity_via_invariance,
)
from ordinv.structures import Signature, Structure

from helpers import points

MIN_IS_P = "exists x. (P(x) & forall y. (x = y | x < y))"
MIN_EXISTS = "exists x. forall y. (x = y | x < y)"


class TestInvarianceSentence:
    def test_shape_and_order_split(self):
        f = parse_formula(MIN_IS_P)
        inv = invariance_sentence(f)
        assert isinstance(inv, And)
        assert isinstance(inv.right, Not)
        assert analyze(inv.left).order_symbols_used == ("<0",)
        assert analyze(inv.right).order_symbols_used == ("<1",)

    def test_order_free_formula_is_unchanged_twice(self):
        f = parse_formula("exists x. P(x)")
        inv = invariance_sentence(f)
        assert inv == And(f, Not(f))


class TestScottNormalForm:
    def test_matrices_are_quantifier_free_two_variable(self):
        nf = scott_normal_form(parse_formula(MIN_IS_P))
        for side in (0, 1):
            side_syms = {f"<{side}"}
            for m in (nf.chis[side], *nf.gammas[side]):
                rep = analyze(m)
                assert rep.quantifier_rank == 0
                assert rep.uses_only_xy
                assert set(rep.order_symbols_used) <= side_syms

    def test_fresh_predicates_are_definitional(self):
        f = parse_formula(MIN_IS_P)
        nf = scott_normal_form(f)
        assert nf.definitions
        base = points(2, 1).with_named_order("<0", (0, 1, 2)).with_named_order(
            "<1", (2, 1, 0)
        )
        expanded = expand_with_definitions(nf, base)
        for name, definition in nf.definitions:
            marked = {e for (e,) in expanded.rel(name)}
            want = {
                e
                for e in expanded.elements
                if evaluate(expanded, definition, {"x": e})
            }
            assert marked == want, name

    def test_expansion_direction(self):
        # a structure satisfying the invariance sentence expands to a model
        # of the normal form on the same domain
        f = parse_formula(MIN_IS_P)
        inv = invariance_sentence(f)
        nf = scott_normal_form(f)
        s = points(2, 1).with_named_order("<0", (0, 1, 2)).with_named_order(
            "<1", (2, 1, 0)
        )
        assert evaluate(s, inv)
        expanded = expand_with_definitions(nf, s)
        assert evaluate(expanded, nf.sentence())

    def test_projection_direction(self):
        # any model of the normal form projects to a model of the invariance
        # sentence once the fresh marks are dropped
        f = parse_formula(MIN_IS_P)
        inv = invariance_sentence(f)
        nf = scott_normal_form(f)
        search = find_model(nf, 3)
        assert search.found
        model = search.structure
        reduct = Structure(
            nf.base_signature,
            model.domain_size,
            {n: model.relations[n] for n in nf.base_signature.relation_names},
            {},
            model.named_orders,
        )
        assert evaluate(reduct, inv)

    def test_rejections(self):
        with pytest.raises(ValueError):
            scott_normal_form(parse_formula("P(x)"))  # free variable
        with pytest.raises(ValueError):
            scott_normal_form(parse_formula("exists>=2 x. P(x)"))  # counting
        with pytest.raises(ValueError):
            scott_normal_form(parse_formula("exists z. P(z)"))  # third variable
        with pytest.raises(ValueError):
            scott_normal_form(parse_formula("exists x. exists y. x <0 y"))

    def test_render_parse_roundtrip(self):
        nf = scott_normal_form(parse_formula(MIN_IS_P))
        text = render_normal_form(nf)
        again = parse_normal_form(text)
        assert again.chis == nf.chis
        assert again.gammas == nf.gammas
        assert again.base_signature == nf.base_signature
        assert again.fresh_signature == nf.fresh_signature
        assert again.definitions == nf.definitions

    def test_size_bound_formula(self):
        nf = scott_normal_form(parse_formula(MIN_IS_P))
        t = nf.token_size()
        assert nf.size_bound() == 16 * t**3 * 2**t


class TestModelSearch:
    def test_minimal_sizes(self):
        two = find_model_direct(parse_formula("exists x. exists y. !(x = y)"), 4)
        assert two.found and two.structure.domain_size == 2
        three = find_model_direct(
            parse_formula(
                "exists x. exists y. exists z. (!(x = y) & !(y = z) & !(x = z))"
            ),
            4,
        )
        assert three.found and three.structure.domain_size == 3

    def test_unsatisfiable(self):
        search = find_model_direct(
            parse_formula("(exists x. P(x)) & (forall x. !P(x))"), 3
        )
        assert not search.found
        assert search.max_size == 3

    def test_order_symbols_are_searched(self):
        f = parse_formula("exists x. exists y. (x < y & x <1 y & y <0 x)")
        search = find_model_direct(f, 3)
        assert search.found
        s = search.structure
        assert set(s.order_names) == {"<", "<0", "<1"}
        assert evaluate(s, f)

    def test_found_model_verifies(self):
        f = parse_formula("forall x. exists y. E(x,y)")
        search = find_model_direct(f, 3)
        assert search.found
        assert evaluate(search.structure, f)

    def test_find_model_on_normal_form(self):
        nf = scott_normal_form(parse_formula(MIN_IS_P))
        search = find_model(nf, 3)
        assert search.found
        assert search.bound == nf.size_bound()
        assert evaluate(search.structure, nf.sentence())


class TestCheckInvariance:
    def test_not_invariant_with_honest_witness(self):
        f = parse_formula(MIN_IS_P)
        outcome = check_invariance(f, 3)
        assert isinstance(outcome, NotInvariant)
        assert not outcome.invariant
        assert outcome.structure.domain_size == 2
        plain = outcome.structure.without_orders()
        assert evaluate(plain.with_named_order("<", outcome.order0), f)
        assert not evaluate(plain.with_named_order("<", outcome.order1), f)

    def test_invariant_order_sentence(self):
        outcome = check_invariance(parse_formula(MIN_EXISTS), 3)
        assert isinstance(outcome, InvariantUpTo)
        assert outcome.invariant
        assert outcome.max_size == 3
        assert outcome.bound > 0

    def test_order_free_sentence_is_invariant(self):
        outcome = check_invariance(parse_formula("exists x. P(x)"), 3)
        assert outcome.invariant


class TestValidity:
    def test_tautology(self):
        res = validity_via_invariance(parse_formula("forall x. (P(x) | !P(x))"), 3)
        assert res.valid and res.countermodel is None

    def test_minimum_exists_is_valid(self):
        res = validity_via_invariance(parse_formula(MIN_EXISTS), 3)
        assert res.valid

    def test_invalid_with_countermodel(self):
        f = parse_formula("forall x. P(x)")
        res = validity_via_invariance(f, 3)
        assert not res.valid
        assert res.countermodel is not None
        assert not evaluate(res.countermodel, f)

    def test_invalid_order_sentence(self):
        f = parse_formula("forall x. forall y. (x < y -> E(x,y))")
        res = validity_via_invariance(f, 3)
        assert not res.valid
        assert not evaluate(res.countermodel, f)

    def test_requires_sentence(self):
        with pytest.raises(ValueError):
            validity_via_invariance(parse_formula("P(x)"), 3)


def _big_min_is_p_model(nf, size):
    """A size-`size` model of the MIN_IS_P invariance normal form: the <0
    minimum is the unique P element, the <1 minimum is not."""
    sig = Signature(relations=(("P", 1),))
    s = Structure(
        signature=sig,
        domain_size=size,
        relations={"P": frozenset({(0,)})},
    )
    s = s.with_named_order("<0", tuple(range(size)))
    s = s.with_named_order("<1", tuple(range(size - 1, -1, -1)))
    return expand_with_definitions(nf, s)


class TestShrink:
    def test_shrink_and_reverify(self):
        nf = scott_normal_form(parse_formula(MIN_IS_P))
        big = _big_min_is_p_model(nf, 40)
        assert evaluate(big, nf.sentence())
        result = shrink_model(nf, big)
        small = result.structure
        assert evaluate(small, nf.sentence())
        assert small.domain_size <= min(40, result.bound)
        assert result.bound == nf.size_bound()
        # the three stages partition the kept part: W0, new witnesses, theirs
        kept = set(result.w0) | set(result.w1) | set(result.w2)
        assert set(result.element_map) == kept
        assert sorted(result.element_map.values()) == list(small.elements)

    def test_repairs_preserve_order_atoms(self):
        nf = scott_normal_form(parse_formula(MIN_IS_P))
        big = _big_min_is_p_model(nf, 60)
        result = shrink_model(nf, big)
        for repair in result.repairs:
            assert repair.old_type.order_cmp == repair.new_type.order_cmp

    def test_rejects_non_model(self):
        nf = scott_normal_form(parse_formula(MIN_IS_P))
        sig = Signature(relations=(("P", 1),))
        bad = Structure(signature=sig, domain_size=3, relations={"P": frozenset()})
        bad = bad.with_named_order("<0", (0, 1, 2)).with_named_order("<1", (0, 1, 2))
        bad = expand_with_definitions(nf, bad)
        with pytest.raises(ValueError):
            shrink_model(nf, bad)

    def test_trace_renders(self):
        nf = scott_normal_form(parse_formula(MIN_IS_P))
        big = _big_min_is_p_model(nf, 30)
        result = shrink_model(nf, big)
        trace = render_shrink_trace(result)
        assert trace.startswith("W0:")
        assert "W1:" in trace and "W2:" in trace
