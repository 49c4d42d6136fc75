"""Plus-variable expansion and grounding of an MLN into a propositional network."""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import GroundingCapError, MLNValidationError
from .logic import (
    Atom, Constant, DomainMap, FormulaAst, MLNModel, PredicateDecl, Variable,
    WeightedFormula, canonical_key, format_ast, free_variables,
    infer_variable_domains, plus_variables, substitute, to_clauses,
)

__all__ = [
    "FormulaTemplate", "GroundAtom", "GroundNetwork",
    "expand_plus", "expand_model", "ground", "count_true_groundings",
    "default_grounding_cap", "DEFAULT_GROUNDING_CAP",
]

DEFAULT_GROUNDING_CAP = 5_000_000
_CAP_ENV_VAR = "MLNCLA_GROUNDING_CAP"


def default_grounding_cap() -> int:
    """Configured clause cap; the MLNCLA_GROUNDING_CAP env var overrides."""
    value = os.environ.get(_CAP_ENV_VAR)
    return int(value) if value else DEFAULT_GROUNDING_CAP


@dataclass(frozen=True)
class FormulaTemplate:
    """A weighted formula with all plus-variables bound to constants."""
    origin: int
    plus_binding: tuple[tuple[str, str], ...]  # (plus-var, constant), sorted
    weight: float
    ast: FormulaAst

    def key(self) -> str:
        return canonical_key(self.ast)


@dataclass(frozen=True)
class GroundAtom:
    predicate: str
    args: tuple[str, ...]
    id: int

    def text(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"


def expand_plus(wf: WeightedFormula, domains: DomainMap,
                decls: list[PredicateDecl], origin: int = 0) -> list[FormulaTemplate]:
    """One template per element of the Cartesian product of the plus-variable
    domains. Formulas without plus-variables yield a singleton. An empty
    plus-domain yields an empty list."""
    if wf.is_hard:
        raise MLNValidationError(
            f"hard formula cannot be expanded for learning/inference: "
            f"{format_ast(wf.ast)}")
    decl_map = {d.name: d for d in decls}
    var_domains = infer_variable_domains(wf.ast, decl_map)
    pvars = plus_variables(wf.ast)
    if not pvars:
        return [FormulaTemplate(origin, (), wf.weight, wf.ast)]
    choices = [domains.constants(var_domains[v]) for v in pvars]
    templates = []
    for combo in itertools.product(*choices):
        binding = dict(zip(pvars, combo))
        templates.append(FormulaTemplate(
            origin,
            tuple(sorted(binding.items())),
            wf.weight,
            substitute(wf.ast, binding),
        ))
    return templates


def expand_model(formulas: list[WeightedFormula], domains: DomainMap,
                 decls: list[PredicateDecl]) -> list[FormulaTemplate]:
    """Expand every formula, merge canonical duplicates by summing weights,
    and return templates in canonical-key order.

    Weight summing makes re-expansion of a plus-template idempotent against
    formulas that already carry its trained expansions: the duplicate from
    the template contributes its (typically zero) prior weight.
    """
    by_key: dict[str, FormulaTemplate] = {}
    for idx, wf in enumerate(formulas):
        for tmpl in expand_plus(wf, domains, decls, origin=idx):
            key = tmpl.key()
            prev = by_key.get(key)
            if prev is None:
                by_key[key] = tmpl
            else:
                by_key[key] = FormulaTemplate(
                    prev.origin, prev.plus_binding, prev.weight + tmpl.weight,
                    prev.ast)
    return [by_key[k] for k in sorted(by_key)]


@dataclass
class GroundNetwork:
    """Grounded clauses over densely numbered ground atoms.

    Clause storage is flat for the numeric kernels:
    ``lit_atom``/``lit_sign`` hold all literals, ``clause_start`` is the CSR
    offset array (length n_clauses+1). ``clause_weight`` already includes the
    1/k split of a template weight over its k CNF clauses.
    """
    atoms: list[GroundAtom]
    atom_index: dict[tuple[str, tuple[str, ...]], int]
    templates: list[FormulaTemplate]
    clause_template: np.ndarray   # int32, per clause
    clause_coef: np.ndarray       # float64, per clause: 1/k
    clause_weight: np.ndarray     # float64, per clause: weight * coef
    clause_start: np.ndarray      # int64, CSR offsets
    lit_atom: np.ndarray          # int32
    lit_sign: np.ndarray          # int8, 1 = positive literal
    adj_start: np.ndarray         # int64, CSR offsets per atom
    adj_clause: np.ndarray        # int32, clause ids adjacent to each atom
    adj_sign: np.ndarray          # int8, sign of this atom's literal there

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def n_clauses(self) -> int:
        return len(self.clause_template)

    @property
    def n_templates(self) -> int:
        return len(self.templates)

    def template_weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.templates], dtype=np.float64)

    def with_weights(self, weights: np.ndarray) -> "GroundNetwork":
        """Same structure, new per-template weights."""
        templates = [
            FormulaTemplate(t.origin, t.plus_binding, float(w), t.ast)
            for t, w in zip(self.templates, weights)
        ]
        return GroundNetwork(
            self.atoms, self.atom_index, templates,
            self.clause_template, self.clause_coef,
            weights[self.clause_template] * self.clause_coef,
            self.clause_start, self.lit_atom, self.lit_sign,
            self.adj_start, self.adj_clause, self.adj_sign,
        )


def _enumerate_atoms(decls: list[PredicateDecl],
                     domains: DomainMap) -> tuple[list[GroundAtom], dict]:
    # closed world: every atom constructible from the declared domains exists;
    # ids sorted by predicate name so the numbering is independent of
    # declaration order
    atoms: list[GroundAtom] = []
    index: dict[tuple[str, tuple[str, ...]], int] = {}
    for decl in sorted(decls, key=lambda d: d.name):
        pools = [domains.constants(d) for d in decl.arg_domains]
        for combo in itertools.product(*pools):
            gid = len(atoms)
            atoms.append(GroundAtom(decl.name, combo, gid))
            index[(decl.name, combo)] = gid
    return atoms, index


def ground(model: MLNModel, templates: list[FormulaTemplate],
           cap: Optional[int] = None) -> GroundNetwork:
    """Ground each template over all substitutions of its free variables.

    Tautological ground clauses are dropped. Atom ids are stable for
    identical input ordering. Exceeding the clause cap raises
    :class:`GroundingCapError` naming the offending formula.
    """
    if cap is None:
        cap = default_grounding_cap()
    decl_map = model.decl_map
    atoms, atom_index = _enumerate_atoms(model.decls, model.domains)

    clause_template: list[int] = []
    clause_coef: list[float] = []
    clause_weight: list[float] = []
    clause_lits: list[list[tuple[int, int]]] = []

    for tidx, tmpl in enumerate(templates):
        clauses = to_clauses(tmpl.ast)
        if not clauses:
            continue
        coef = 1.0 / len(clauses)
        var_domains = infer_variable_domains(tmpl.ast, decl_map)
        variables = free_variables(tmpl.ast)
        pools = [model.domains.constants(var_domains[v]) for v in variables]
        n_subst = 1
        for pool in pools:
            n_subst *= len(pool)
        estimated = len(clause_template) + n_subst * len(clauses)
        if estimated > cap:
            raise GroundingCapError(format_ast(tmpl.ast), estimated, cap)
        for combo in itertools.product(*pools):
            binding = dict(zip(variables, combo))
            for clause in clauses:
                lits: dict[int, int] = {}
                tautology = False
                for atom, positive in clause:
                    args = tuple(
                        binding[t.name] if isinstance(t, Variable) else t.name
                        for t in atom.args
                    )
                    aid = atom_index[(atom.predicate, args)]
                    sign = 1 if positive else 0
                    if lits.get(aid, sign) != sign:
                        tautology = True
                        break
                    lits[aid] = sign
                if tautology:
                    continue
                clause_template.append(tidx)
                clause_coef.append(coef)
                clause_weight.append(tmpl.weight * coef)
                clause_lits.append(sorted(lits.items()))

    n_clauses = len(clause_template)
    clause_start = np.zeros(n_clauses + 1, dtype=np.int64)
    for i, lits in enumerate(clause_lits):
        clause_start[i + 1] = clause_start[i] + len(lits)
    lit_atom = np.empty(clause_start[-1], dtype=np.int32)
    lit_sign = np.empty(clause_start[-1], dtype=np.int8)
    pos = 0
    for lits in clause_lits:
        for aid, sign in lits:
            lit_atom[pos] = aid
            lit_sign[pos] = sign
            pos += 1

    # atom -> (clause, sign) adjacency, CSR by atom id
    n_atoms = len(atoms)
    counts = np.bincount(lit_atom, minlength=n_atoms) if len(lit_atom) else \
        np.zeros(n_atoms, dtype=np.int64)
    adj_start = np.zeros(n_atoms + 1, dtype=np.int64)
    np.cumsum(counts, out=adj_start[1:])
    adj_clause = np.empty(adj_start[-1], dtype=np.int32)
    adj_sign = np.empty(adj_start[-1], dtype=np.int8)
    cursor = adj_start[:-1].copy()
    for cid in range(n_clauses):
        for k in range(clause_start[cid], clause_start[cid + 1]):
            aid = lit_atom[k]
            adj_clause[cursor[aid]] = cid
            adj_sign[cursor[aid]] = lit_sign[k]
            cursor[aid] += 1

    return GroundNetwork(
        atoms=atoms,
        atom_index=atom_index,
        templates=list(templates),
        clause_template=np.asarray(clause_template, dtype=np.int32),
        clause_coef=np.asarray(clause_coef, dtype=np.float64),
        clause_weight=np.asarray(clause_weight, dtype=np.float64),
        clause_start=clause_start,
        lit_atom=lit_atom,
        lit_sign=lit_sign,
        adj_start=adj_start,
        adj_clause=adj_clause,
        adj_sign=adj_sign,
    )


def clause_satisfaction(net: GroundNetwork, world: np.ndarray) -> np.ndarray:
    """Boolean satisfaction of every ground clause under a complete world."""
    if net.n_clauses == 0:
        return np.zeros(0, dtype=bool)
    lit_true = world[net.lit_atom] == (net.lit_sign == 1)
    # per-clause OR via reduceat over the CSR layout
    sat = np.logical_or.reduceat(lit_true, net.clause_start[:-1])
    return sat


def clause_true_literal_counts(net: GroundNetwork, world: np.ndarray) -> np.ndarray:
    """Number of satisfied literals per clause under a complete world."""
    if net.n_clauses == 0:
        return np.zeros(0, dtype=np.int64)
    lit_true = (world[net.lit_atom] == (net.lit_sign == 1)).astype(np.int64)
    return np.add.reduceat(lit_true, net.clause_start[:-1])


def count_true_groundings(template_idx: int, world: np.ndarray,
                          net: GroundNetwork) -> int:
    """Number of ground clauses of a template satisfied by a complete world."""
    if not 0 <= template_idx < net.n_templates:
        raise IndexError(f"template index {template_idx} out of range")
    sat = clause_satisfaction(net, world)
    return int(np.sum(sat[net.clause_template == template_idx]))
