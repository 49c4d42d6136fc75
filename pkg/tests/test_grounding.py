"""Plus-variable expansion and grounding tests."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlncla.errors import GroundingCapError
from mlncla.grounding import (
    count_true_groundings, expand_model, expand_plus, ground,
    clause_satisfaction,
)
from mlncla.logic import (
    Atom, Constant, Variable, WeightedFormula, eval_ast, free_variables,
    infer_variable_domains, parse_formula, parse_mln, substitute, to_clauses,
)

from conftest import random_model, random_world_db


PLUS_MLN = """\
size = {Small, Medium, Large}
act = {Push, Throw}
Size(obj, size)
Aff(obj, act)
0.0 Size(o, +s) => Aff(o, +a)
"""


class TestExpandPlus:
    def test_cartesian_count(self):
        m = parse_mln(PLUS_MLN)
        templates = expand_plus(m.formulas[0], m.domains, m.decls)
        assert len(templates) == 6  # 3 sizes x 2 actions
        bindings = {t.plus_binding for t in templates}
        assert (("a", "Push"), ("s", "Large")) in bindings

    def test_binding_substituted(self):
        m = parse_mln(PLUS_MLN)
        t = expand_plus(m.formulas[0], m.domains, m.decls)[0]
        assert not any(
            isinstance(a, Atom) and any(arg.name in ("s", "a") for arg in a.args)
            for a in [t.ast.left, t.ast.right])

    def test_no_plus_is_singleton(self, cutlery_model):
        for wf in cutlery_model.formulas:
            assert len(expand_plus(wf, cutlery_model.domains,
                                   cutlery_model.decls)) == 1

    def test_empty_domain_empty_expansion(self):
        m = parse_mln("size = {}\nSize(obj, size)\n0.5 Size(o, +s)\n")
        assert expand_plus(m.formulas[0], m.domains, m.decls) == []


class TestExpandModel:
    def test_canonical_merge_sums_weights(self):
        m = parse_mln("P(d)\n1.5 P(x) => P(y)\n0.25 !P(u) v P(w)\n")
        templates = expand_model(m.formulas, m.domains, m.decls)
        assert len(templates) == 1
        assert templates[0].weight == pytest.approx(1.75)

    def test_sorted_by_key(self, cutlery_model):
        templates = expand_model(cutlery_model.formulas, cutlery_model.domains,
                                 cutlery_model.decls)
        keys = [t.key() for t in templates]
        assert keys == sorted(keys)


def oracle_clause_count(model):
    """Independent ground-clause count: CNF once per formula, then ground
    each clause over every substitution, dropping ground tautologies."""
    total = 0
    decl_map = model.decl_map
    for wf in model.formulas:
        var_domains = infer_variable_domains(wf.ast, decl_map)
        vs = free_variables(wf.ast)
        pools = [model.domains.constants(var_domains[v]) for v in vs]
        clauses = to_clauses(wf.ast)
        for combo in itertools.product(*pools):
            binding = dict(zip(vs, combo))
            for clause in clauses:
                lits = {(substitute(atom, binding), positive)
                        for atom, positive in clause}
                ground_atoms = {a for a, _ in lits}
                if len(ground_atoms) == len(lits):  # no tautology
                    total += 1
    return total


class TestGround:
    def test_cutlery_clause_count(self, cutlery_model):
        # By hand: 2 (f1) + 2 (f2) + 8 (f3: 2x2x2 substitutions x 2 CNF
        # clauses, minus the 8 tautologies where x == y).
        templates = expand_model(cutlery_model.formulas, cutlery_model.domains,
                                 cutlery_model.decls)
        net = ground(cutlery_model, templates)
        assert net.n_clauses == 12
        assert net.n_clauses == oracle_clause_count(cutlery_model)
        assert net.n_atoms == 2 + 2 + 4  # SharpEdge, Heavy, Affordance

    def test_weight_split_over_cnf_clauses(self, cutlery_model):
        templates = expand_model(cutlery_model.formulas, cutlery_model.domains,
                                 cutlery_model.decls)
        net = ground(cutlery_model, templates)
        iff = [t for t in templates if "<=>" in str(t.ast) or
               len(to_clauses(t.ast)) == 2][0]
        tidx = net.templates.index(iff)
        coefs = net.clause_coef[net.clause_template == tidx]
        assert np.allclose(coefs, 0.5)

    def test_cap_enforced(self, cutlery_model):
        templates = expand_model(cutlery_model.formulas, cutlery_model.domains,
                                 cutlery_model.decls)
        with pytest.raises(GroundingCapError) as ei:
            ground(cutlery_model, templates, cap=5)
        assert ei.value.cap == 5

    def test_cap_env_var(self, cutlery_model, monkeypatch):
        monkeypatch.setenv("MLNCLA_GROUNDING_CAP", "5")
        templates = expand_model(cutlery_model.formulas, cutlery_model.domains,
                                 cutlery_model.decls)
        with pytest.raises(GroundingCapError):
            ground(cutlery_model, templates)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_clause_count_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        model = random_model(rng, n_consts=2, n_formulas=2)
        templates = expand_model(model.formulas, model.domains, model.decls)
        net = ground(model, templates)
        # expand_model may merge canonical duplicates, so compare against the
        # oracle run on the already-expanded templates
        merged = type(model)(model.decls,
                             [WeightedFormula(t.weight, t.ast) for t in templates],
                             model.domains)
        assert net.n_clauses == oracle_clause_count(merged)


def naive_true_groundings(net, template_idx, world):
    """Recount satisfied ground clauses of one template in pure Python."""
    count = 0
    start = net.clause_start
    for ci in np.nonzero(net.clause_template == template_idx)[0]:
        count += any(bool(world[net.lit_atom[j]]) == (net.lit_sign[j] == 1)
                     for j in range(start[ci], start[ci + 1]))
    return count


class TestCountTrueGroundings:
    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_matches_naive_recount(self, seed):
        rng = np.random.default_rng(seed)
        model = random_model(rng, n_consts=2, n_formulas=2)
        templates = expand_model(model.formulas, model.domains, model.decls)
        net = ground(model, templates)
        world = rng.random(net.n_atoms) < 0.5
        for tidx in range(net.n_templates):
            assert (count_true_groundings(tidx, world, net)
                    == naive_true_groundings(net, tidx, world))

    def test_index_out_of_range(self, cutlery_model):
        templates = expand_model(cutlery_model.formulas, cutlery_model.domains,
                                 cutlery_model.decls)
        net = ground(cutlery_model, templates)
        with pytest.raises(IndexError):
            count_true_groundings(net.n_templates, np.zeros(net.n_atoms, bool), net)


class TestDeterminism:
    def test_decl_order_does_not_change_atom_numbering(self, cutlery_model):
        m1 = cutlery_model
        m2 = type(m1)(list(reversed(m1.decls)), m1.formulas, m1.domains)
        t1 = expand_model(m1.formulas, m1.domains, m1.decls)
        t2 = expand_model(m2.formulas, m2.domains, m2.decls)
        n1, n2 = ground(m1, t1), ground(m2, t2)
        assert [a.text() for a in n1.atoms] == [a.text() for a in n2.atoms]
        assert np.array_equal(n1.lit_atom, n2.lit_atom)
