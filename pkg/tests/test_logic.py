"""Parser, formatter, CNF conversion, and evidence-database tests."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlncla.errors import MLNSyntaxError, MLNValidationError
from mlncla.logic import (
    And, Atom, Constant, DomainMap, EvidenceAtom, EvidenceDatabase, Iff,
    Implies, Not, Or, PlusVariable, Variable, WeightedFormula, atoms_of,
    canonical_key, eval_ast, extract_domains, format_ast, format_db,
    format_formula, format_mln, free_variables, parse_db, parse_formula,
    parse_mln, to_clauses,
)

from conftest import CUTLERY_DB, CUTLERY_MLN, random_model


class TestParseMln:
    def test_declarations_and_domains(self, cutlery_model):
        m = cutlery_model
        assert {d.name for d in m.decls} == {"SharpEdge", "Heavy", "Affordance"}
        assert m.decl_map["Affordance"].arg_domains == ("obj", "affordance")
        assert m.domains.constants("affordance") == ("Cutting", "Lifting")
        assert m.domains.constants("obj") == ("O1", "O2")

    def test_weights(self, cutlery_model):
        assert [f.weight for f in cutlery_model.formulas] == [1.3, 2.8, -4.5]

    def test_negative_weight_is_not_a_declaration(self):
        m = parse_mln("P(d)\n-0.5 P(x)\n")
        assert m.formulas[0].weight == -0.5

    def test_constants_register_in_domains(self):
        m = parse_mln("P(d)\n1.0 P(A) ^ P(B)\n")
        assert set(m.domains.constants("d")) == {"A", "B"}

    def test_hard_formula_trailing_period(self):
        m = parse_mln("P(d)\nQ(d)\nP(x) => Q(x).\n")
        assert m.formulas[0].weight is None
        assert m.formulas[0].is_hard

    def test_plus_variable(self):
        m = parse_mln("size = {S, L}\nSize(obj, size)\n0.7 Size(x, +s)\n")
        ast = m.formulas[0].ast
        assert ast.args[1] == PlusVariable("s")

    def test_comments_and_blank_lines(self):
        m = parse_mln("// header\nP(d)\n\n1.0 P(x)  // trailing\n")
        assert len(m.formulas) == 1

    def test_syntax_error_carries_location(self):
        with pytest.raises(MLNSyntaxError) as ei:
            parse_mln("P(d)\n1.0 P(x) =>\n")
        assert ei.value.line == 2
        assert ei.value.column is not None

    def test_unknown_predicate_rejected(self):
        with pytest.raises(MLNValidationError):
            parse_mln("P(d)\n1.0 Q(x)\n")

    def test_arity_mismatch_rejected(self):
        with pytest.raises(MLNValidationError):
            parse_mln("P(d)\n1.0 P(x, y)\n")

    def test_duplicate_declaration_rejected(self):
        with pytest.raises(MLNValidationError):
            parse_mln("P(d)\nP(d, d)\n")


class TestPrecedence:
    def test_iff_binds_loosest(self):
        ast = parse_formula("P(x) => Q(x) <=> R(x)")
        assert isinstance(ast, Iff)
        assert isinstance(ast.left, Implies)

    def test_implies_right_associative(self):
        ast = parse_formula("P(x) => Q(x) => R(x)")
        assert isinstance(ast, Implies)
        assert isinstance(ast.right, Implies)

    def test_and_binds_tighter_than_or(self):
        ast = parse_formula("P(x) v Q(x) ^ R(x)")
        assert isinstance(ast, Or)
        assert isinstance(ast.right, And)

    def test_negation_tightest(self):
        ast = parse_formula("!P(x) ^ Q(x)")
        assert isinstance(ast, And)
        assert isinstance(ast.left, Not)

    def test_parentheses_override(self):
        ast = parse_formula("P(x) ^ (Q(x) v R(x))")
        assert isinstance(ast, And)
        assert isinstance(ast.right, Or)


class TestParseDb:
    def test_atoms(self, cutlery_model, cutlery_db):
        assert len(cutlery_db) == 4
        neg = [a for a in cutlery_db.atoms if not a.value]
        assert neg == [EvidenceAtom("Affordance", ("O2", "Lifting"), False)]

    def test_dedup(self, cutlery_model):
        db = parse_db("SharpEdge(O1)\nSharpEdge(O1)\n", cutlery_model.decls)
        assert len(db.dedup()) == 1

    def test_unknown_predicate(self, cutlery_model):
        with pytest.raises(MLNValidationError):
            parse_db("Bogus(O1)\n", cutlery_model.decls)

    def test_arity_check(self, cutlery_model):
        with pytest.raises(MLNValidationError):
            parse_db("SharpEdge(O1, O2)\n", cutlery_model.decls)

    def test_extract_domains(self, cutlery_model):
        db = parse_db("SharpEdge(O9)\nAffordance(O9, Pushing)\n",
                      cutlery_model.decls)
        doms = extract_domains(db, cutlery_model.decls)
        assert doms.has_constant("obj", "O9")
        assert doms.has_constant("affordance", "Pushing")


def truth_tables_equal(ast, clauses):
    """Brute-force check that a CNF clause list matches the source formula."""
    atoms = sorted(set(atoms_of(ast)), key=str)
    for bits in itertools.product([False, True], repeat=len(atoms)):
        truth = dict(zip(atoms, bits))
        direct = eval_ast(ast, truth)
        cnf = all(
            any(truth[atom] == positive for atom, positive in clause)
            for clause in clauses)
        if direct != cnf:
            return False
    return True


class TestToClauses:
    def test_implication(self):
        ast = parse_formula("P(x) => Q(x)")
        (clause,) = to_clauses(ast)
        assert clause == frozenset({(Atom("P", (Variable("x"),)), False),
                                    (Atom("Q", (Variable("x"),)), True)})

    def test_iff_two_clauses(self):
        assert len(to_clauses(parse_formula("P(x) <=> Q(x)"))) == 2

    def test_tautology_dropped(self):
        assert to_clauses(parse_formula("P(x) v !P(x)")) == []

    @settings(max_examples=150, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_truth_table_equivalence(self, seed):
        rng = np.random.default_rng(seed)
        model = random_model(rng, n_formulas=1)
        ast = model.formulas[0].ast
        assert truth_tables_equal(ast, to_clauses(ast))


class TestCanonicalKey:
    def test_variable_renaming_invariance(self):
        a = parse_formula("Near(u, w) => Near(w, u)")
        b = parse_formula("Near(x, y) => Near(y, x)")
        assert canonical_key(a) == canonical_key(b)

    def test_distinct_formulas_distinct_keys(self):
        a = parse_formula("P(x) => Q(x)")
        b = parse_formula("Q(x) => P(x)")
        assert canonical_key(a) != canonical_key(b)

    def test_logical_equivalents_share_key(self):
        a = parse_formula("P(x) => Q(x)")
        b = parse_formula("!P(x) v Q(x)")
        assert canonical_key(a) == canonical_key(b)


class TestFormatting:
    def test_format_parse_round_trip_fixture(self):
        m1 = parse_mln(CUTLERY_MLN)
        m2 = parse_mln(format_mln(m1))
        assert [f.ast for f in m1.formulas] == [f.ast for f in m2.formulas]
        assert m1.decls == m2.decls
        assert m1.domains == m2.domains

    def test_db_round_trip(self, cutlery_model, cutlery_db):
        again = parse_db(format_db(cutlery_db), cutlery_model.decls)
        assert again.atoms == cutlery_db.atoms

    def test_minimal_parentheses(self):
        text = "P(x) ^ (Q(x) v R(x))"
        assert format_ast(parse_formula(text)) == text

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_round_trip_fuzz(self, seed):
        rng = np.random.default_rng(seed)
        model = random_model(rng, n_formulas=3, max_depth=4)
        again = parse_mln(format_mln(model))
        assert [f.ast for f in again.formulas] == [f.ast for f in model.formulas]
        assert [f.weight for f in again.formulas] == [f.weight for f in model.formulas]
        assert again.decls == model.decls
        assert again.domains == model.domains


class TestFreeVariables:
    def test_first_occurrence_order(self):
        ast = parse_formula("Near(b, a) ^ Near(a, c)")
        assert free_variables(ast) == ["b", "a", "c"]
