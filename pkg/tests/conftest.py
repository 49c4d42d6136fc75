"""Shared fixtures and random-model generators for the test suite."""

import numpy as np
import pytest

from mlncla.logic import (
    And, Atom, Constant, DomainMap, EvidenceAtom, EvidenceDatabase, Iff,
    Implies, MLNModel, Not, Or, PredicateDecl, Variable, WeightedFormula,
    parse_db, parse_mln,
)

# A small affordance-flavoured model used throughout: three soft formulas
# over two object constants.  The equivalence formula ties affordances of
# different objects together, which exercises multi-variable grounding.
CUTLERY_MLN = """\
affordance = {Cutting, Lifting}
obj = {O1, O2}

SharpEdge(obj)
Heavy(obj)
Affordance(obj, affordance)

1.3 SharpEdge(x) => Affordance(x, Cutting)
2.8 Heavy(x) => !Affordance(x, Lifting)
-4.5 Affordance(x, a) <=> Affordance(y, a)
"""

CUTLERY_DB = """\
SharpEdge(O1)
Heavy(O2)
Affordance(O1, Cutting)
!Affordance(O2, Lifting)
"""


@pytest.fixture
def cutlery_model():
    return parse_mln(CUTLERY_MLN)


@pytest.fixture
def cutlery_db(cutlery_model):
    return parse_db(CUTLERY_DB, cutlery_model.decls)


def random_model(rng: np.random.Generator, n_preds=3, n_consts=3,
                 n_formulas=3, max_arity=2, max_depth=3) -> MLNModel:
    """Draw a small random soft-formula model (no plus variables)."""
    domains = DomainMap({"thing": [f"C{i}" for i in range(n_consts)]})
    decls = [PredicateDecl(f"P{i}", tuple(["thing"] * (1 + int(rng.integers(max_arity)))))
             for i in range(n_preds)]
    variables = [Variable("x"), Variable("y")]

    def rand_atom():
        d = decls[rng.integers(len(decls))]
        args = tuple(variables[rng.integers(len(variables))]
                     for _ in d.arg_domains)
        return Atom(d.name, args)

    def rand_ast(depth):
        if depth <= 0 or rng.random() < 0.3:
            return rand_atom()
        kind = rng.integers(5)
        if kind == 0:
            return Not(rand_ast(depth - 1))
        left, right = rand_ast(depth - 1), rand_ast(depth - 1)
        op = (And, Or, Implies, Iff)[kind - 1]
        return op(left, right)

    formulas = [WeightedFormula(round(float(rng.normal()), 3), rand_ast(max_depth))
                for _ in range(n_formulas)]
    return MLNModel(decls, formulas, domains)


def random_world_db(rng: np.random.Generator, model: MLNModel,
                    p_true=0.5) -> EvidenceDatabase:
    """A complete random evidence database over the model's ground atoms."""
    import itertools
    atoms = []
    for d in sorted(model.decls, key=lambda d: d.name):
        pools = [model.domains.constants(dom) for dom in d.arg_domains]
        for combo in itertools.product(*pools):
            atoms.append(EvidenceAtom(d.name, combo, bool(rng.random() < p_true)))
    return EvidenceDatabase(atoms)
