"""Exact and Gibbs inference tests, backed by a hand-rolled enumerator."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlncla.errors import InferenceError, MLNValidationError
from mlncla.grounding import expand_model, ground
from mlncla.inference import (
    GibbsParams, evidence_assignment, exact_marginals, gibbs_marginals, query,
)
from mlncla.logic import EvidenceDatabase, parse_db, parse_mln

from conftest import random_model


def brute_force_marginals(net, evidence):
    """Reference enumerator: python loops over worlds and clauses, no numpy
    vectorization shared with the implementation under test."""
    free = [a.id for a in net.atoms if a.id not in evidence]
    weights, worlds = [], []
    for bits in itertools.product([False, True], repeat=len(free)):
        world = dict(evidence)
        world.update(zip(free, bits))
        score = 0.0
        for cid in range(net.n_clauses):
            sat = any(
                world[int(net.lit_atom[k])] == (net.lit_sign[k] == 1)
                for k in range(net.clause_start[cid], net.clause_start[cid + 1]))
            if sat:
                score += float(net.clause_weight[cid])
        weights.append(math.exp(score))
        worlds.append(world)
    z = sum(weights)
    return {
        (a.predicate, a.args):
            sum(w for w, world in zip(weights, worlds) if world[a.id]) / z
        for a in net.atoms
    }


def ground_for(text):
    model = parse_mln(text)
    templates = expand_model(model.formulas, model.domains, model.decls)
    return model, ground(model, templates)


class TestExactMarginals:
    def test_zero_weights_are_uniform(self):
        _, net = ground_for("t = {A, B}\nP(t)\nQ(t)\n0.0 P(x) => Q(x)\n")
        res = exact_marginals(net, {})
        assert all(p == pytest.approx(0.5) for p in res.marginals.values())

    def test_single_atom_logistic(self):
        # one unit clause of weight w: P(true) = e^w / (1 + e^w)
        w = 0.73
        _, net = ground_for(f"t = {{A}}\nP(t)\n{w} P(x)\n")
        res = exact_marginals(net, {})
        assert res.probability("P", "A") == pytest.approx(
            math.exp(w) / (1 + math.exp(w)), abs=1e-12)

    def test_cutlery_against_brute_force(self, cutlery_model, cutlery_db):
        templates = expand_model(cutlery_model.formulas, cutlery_model.domains,
                                 cutlery_model.decls)
        net = ground(cutlery_model, templates)
        evidence = evidence_assignment(net, cutlery_db,
                                       frozenset(["Affordance"]))
        res = exact_marginals(net, evidence)
        expected = brute_force_marginals(net, evidence)
        for key, p in res.marginals.items():
            assert p == pytest.approx(expected[key], abs=1e-10)

    def test_evidence_is_clamped(self, cutlery_model, cutlery_db):
        templates = expand_model(cutlery_model.formulas, cutlery_model.domains,
                                 cutlery_model.decls)
        net = ground(cutlery_model, templates)
        evidence = evidence_assignment(net, cutlery_db,
                                       frozenset(["Affordance"]))
        res = exact_marginals(net, evidence)
        assert res.probability("SharpEdge", "O1") == 1.0
        assert res.probability("Heavy", "O1") == 0.0  # closed world
        assert res.probability("Affordance", "O2", "Lifting") == 0.0

    def test_weight_negation_symmetry(self):
        # flipping the sign of a unit clause mirrors the marginal around 0.5
        _, pos = ground_for("t = {A}\nP(t)\n1.1 P(x)\n")
        _, neg = ground_for("t = {A}\nP(t)\n-1.1 P(x)\n")
        p = exact_marginals(pos, {}).probability("P", "A")
        q = exact_marginals(neg, {}).probability("P", "A")
        assert p + q == pytest.approx(1.0, abs=1e-12)

    def test_free_atom_limit(self):
        _, net = ground_for("t = {A, B, C}\nP(t)\nQ(t)\n0.2 P(x) ^ Q(y)\n")
        with pytest.raises(InferenceError):
            exact_marginals(net, {}, max_free=3)

    @settings(max_examples=80, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        model = random_model(rng, n_preds=2, n_consts=2, n_formulas=2)
        templates = expand_model(model.formulas, model.domains, model.decls)
        net = ground(model, templates)
        expected = brute_force_marginals(net, {})
        res = exact_marginals(net, {})
        for key, p in res.marginals.items():
            assert p == pytest.approx(expected[key], abs=1e-10)


class TestGibbs:
    def test_matches_exact_on_small_net(self, cutlery_model, cutlery_db):
        templates = expand_model(cutlery_model.formulas, cutlery_model.domains,
                                 cutlery_model.decls)
        net = ground(cutlery_model, templates)
        evidence = evidence_assignment(net, cutlery_db,
                                       frozenset(["Affordance"]))
        exact = exact_marginals(net, evidence)
        approx = gibbs_marginals(net, evidence,
                                 GibbsParams(seed=7, burn_in=2000, samples=30000))
        for key, p in exact.marginals.items():
            assert approx.marginals[key] == pytest.approx(p, abs=0.02)

    def test_deterministic_for_fixed_seed(self, cutlery_model):
        templates = expand_model(cutlery_model.formulas, cutlery_model.domains,
                                 cutlery_model.decls)
        net = ground(cutlery_model, templates)
        params = GibbsParams(seed=3, burn_in=100, samples=500)
        a = gibbs_marginals(net, {}, params)
        b = gibbs_marginals(net, {}, params)
        assert a.marginals == b.marginals

    def test_seed_changes_samples(self, cutlery_model):
        templates = expand_model(cutlery_model.formulas, cutlery_model.domains,
                                 cutlery_model.decls)
        net = ground(cutlery_model, templates)
        a = gibbs_marginals(net, {}, GibbsParams(seed=3, burn_in=10, samples=200))
        b = gibbs_marginals(net, {}, GibbsParams(seed=4, burn_in=10, samples=200))
        assert a.marginals != b.marginals

    def test_sample_budget_split_across_chains(self, cutlery_model):
        templates = expand_model(cutlery_model.formulas, cutlery_model.domains,
                                 cutlery_model.decls)
        net = ground(cutlery_model, templates)
        res = gibbs_marginals(net, {}, GibbsParams(seed=0, chains=3,
                                                   burn_in=10, samples=100))
        assert res.samples == 100

    def test_param_validation(self):
        with pytest.raises(MLNValidationError):
            GibbsParams(seed=0, chains=0)
        with pytest.raises(MLNValidationError):
            GibbsParams(seed=0, samples=0)


class TestQuery:
    def test_returns_only_query_predicate(self, cutlery_model, cutlery_db):
        res = query(cutlery_model, cutlery_db, "Affordance",
                    GibbsParams(seed=0), method="exact")
        assert set(k[0] for k in res.marginals) == {"Affordance"}
        assert len(res.marginals) == 4

    def test_db_constants_extend_domains(self, cutlery_model):
        db = parse_db("SharpEdge(O3)\n", cutlery_model.decls)
        res = query(cutlery_model, db, "Affordance",
                    GibbsParams(seed=0), method="exact")
        assert ("Affordance", ("O3", "Cutting")) in res.marginals

    def test_auto_prefers_exact_on_small_networks(self, cutlery_model, cutlery_db):
        res = query(cutlery_model, cutlery_db, "Affordance", GibbsParams(seed=0))
        assert res.method == "exact"

    def test_unknown_predicate(self, cutlery_model, cutlery_db):
        with pytest.raises(MLNValidationError):
            query(cutlery_model, cutlery_db, "Bogus", GibbsParams(seed=0))

    def test_evidence_shifts_marginal(self, cutlery_model):
        empty = EvidenceDatabase([])
        sharp = parse_db("SharpEdge(O1)\n", cutlery_model.decls)
        params = GibbsParams(seed=0)
        base = query(cutlery_model, empty, "Affordance", params,
                     method="exact").probability("Affordance", "O1", "Cutting")
        cued = query(cutlery_model, sharp, "Affordance", params,
                     method="exact").probability("Affordance", "O1", "Cutting")
        assert cued > base  # weight 1.3 rule fires
