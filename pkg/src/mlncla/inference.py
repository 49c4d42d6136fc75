"""Marginal inference: exact enumeration as oracle, Gibbs sampling at scale."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .errors import InferenceError, MLNValidationError
from .grounding import GroundNetwork, expand_model, ground
from .logic import EvidenceDatabase, MLNModel, extract_domains

__all__ = [
    "GibbsParams", "QueryResult",
    "exact_marginals", "gibbs_marginals", "query",
    "evidence_assignment",
]

DEFAULT_EXACT_LIMIT = 20


@dataclass(frozen=True)
class GibbsParams:
    seed: int  # required explicitly: determinism is part of the contract
    chains: int = 3
    burn_in: int = 5000
    samples: int = 50000  # total post-burn-in sweeps, split across chains

    def __post_init__(self):
        if self.chains < 1 or self.burn_in < 0 or self.samples < 1:
            raise MLNValidationError("Gibbs parameters must be positive")


@dataclass
class QueryResult:
    """Marginal probability per ground atom plus sampler diagnostics."""
    marginals: dict[tuple[str, tuple[str, ...]], float]
    method: str
    samples: int = 0
    burn_in: int = 0
    seed: Optional[int] = None

    def probability(self, predicate: str, *args: str) -> float:
        return self.marginals[(predicate, tuple(args))]


def evidence_assignment(net: GroundNetwork, db: EvidenceDatabase,
                        query_predicates: frozenset[str] = frozenset()) -> dict[int, bool]:
    """Partial assignment from evidence under the closed-world rule.

    Atoms of non-query predicates absent from the database are false.
    Query-predicate atoms are clamped only when listed explicitly.
    """
    listed: dict[int, bool] = {}
    for atom in db.atoms:
        aid = net.atom_index.get((atom.predicate, atom.args))
        if aid is not None:
            listed[aid] = atom.value
    assignment: dict[int, bool] = {}
    for ga in net.atoms:
        if ga.id in listed:
            assignment[ga.id] = listed[ga.id]
        elif ga.predicate not in query_predicates:
            assignment[ga.id] = False
    return assignment


def _partition(net: GroundNetwork, evidence: dict[int, bool]):
    world = np.zeros(net.n_atoms, dtype=bool)
    clamped = np.zeros(net.n_atoms, dtype=bool)
    for aid, val in evidence.items():
        if not 0 <= aid < net.n_atoms:
            raise InferenceError(f"evidence atom id {aid} out of range")
        world[aid] = val
        clamped[aid] = True
    free = np.flatnonzero(~clamped)
    return world, clamped, free


def exact_marginals(net: GroundNetwork, evidence: dict[int, bool],
                    max_free: int = DEFAULT_EXACT_LIMIT) -> QueryResult:
    """Marginals by brute-force summation over all completions of the
    evidence. Refuses when more than ``max_free`` atoms are free."""
    world, clamped, free = _partition(net, evidence)
    n_free = len(free)
    if n_free > max_free:
        raise InferenceError(
            f"{n_free} free atoms exceed the exact-enumeration limit {max_free}")

    marg: dict[tuple[str, tuple[str, ...]], float] = {}

    if n_free == 0:
        for ga in net.atoms:
            marg[(ga.predicate, ga.args)] = 1.0 if world[ga.id] else 0.0
        return QueryResult(marg, method="exact")

    # energy of each completion; free atoms enumerated via bit patterns
    n_worlds = 1 << n_free
    energies = np.zeros(n_worlds, dtype=np.float64)
    bit_of = {aid: i for i, aid in enumerate(free)}
    patterns = np.arange(n_worlds, dtype=np.int64)
    free_bits = ((patterns[:, None] >> np.arange(n_free)) & 1).astype(bool)

    for cid in range(net.n_clauses):
        w = net.clause_weight[cid]
        if w == 0.0:
            continue
        sat_fixed = False
        free_lits: list[tuple[int, bool]] = []
        for k in range(net.clause_start[cid], net.clause_start[cid + 1]):
            aid = int(net.lit_atom[k])
            positive = net.lit_sign[k] == 1
            if clamped[aid]:
                if world[aid] == positive:
                    sat_fixed = True
                    break
            else:
                free_lits.append((bit_of[aid], positive))
        if sat_fixed:
            energies += w  # constant over all completions
            continue
        if not free_lits:
            continue  # falsified by evidence
        sat = np.zeros(n_worlds, dtype=bool)
        for bit, positive in free_lits:
            sat |= free_bits[:, bit] == positive
        energies += w * sat

    energies -= energies.max()
    weights = np.exp(energies)
    z = weights.sum()
    for ga in net.atoms:
        if clamped[ga.id]:
            marg[(ga.predicate, ga.args)] = 1.0 if world[ga.id] else 0.0
        else:
            bit = bit_of[ga.id]
            marg[(ga.predicate, ga.args)] = float(
                weights[free_bits[:, bit]].sum() / z)
    return QueryResult(marg, method="exact")


@njit(cache=True)
def _gibbs_chain(clause_weight, clause_start, lit_atom, lit_sign,
                 adj_start, adj_clause, adj_sign,
                 free_atoms, init_world, burn_in, n_samples, seed):
    np.random.seed(seed)
    n_atoms = len(init_world)
    world = init_world.copy()
    n_free = len(free_atoms)
    counts = np.zeros(n_atoms, dtype=np.int64)

    # true-literal count per clause
    n_clauses = len(clause_weight)
    n_true = np.zeros(n_clauses, dtype=np.int64)
    for c in range(n_clauses):
        for k in range(clause_start[c], clause_start[c + 1]):
            if world[lit_atom[k]] == (lit_sign[k] == 1):
                n_true[c] += 1

    for sweep in range(burn_in + n_samples):
        for i in range(n_free):
            a = free_atoms[i]
            cur = world[a]
            delta = 0.0
            for k in range(adj_start[a], adj_start[a + 1]):
                c = adj_clause[k]
                pos = adj_sign[k] == 1
                cur_lit = 1 if cur == pos else 0
                base = n_true[c] - cur_lit
                sat1 = base + (1 if pos else 0) > 0
                sat0 = base + (0 if pos else 1) > 0
                if sat1 != sat0:
                    delta += clause_weight[c] if sat1 else -clause_weight[c]
            p1 = 1.0 / (1.0 + np.exp(-delta))
            new = np.random.random() < p1
            if new != cur:
                world[a] = new
                for k in range(adj_start[a], adj_start[a + 1]):
                    c = adj_clause[k]
                    pos = adj_sign[k] == 1
                    if new == pos:
                        n_true[c] += 1
                    else:
                        n_true[c] -= 1
        if sweep >= burn_in:
            for i in range(n_free):
                a = free_atoms[i]
                if world[a]:
                    counts[a] += 1
    return counts


@njit(cache=True)
def _gibbs_chain_clause_counts(clause_weight, clause_start, lit_atom, lit_sign,
                               adj_start, adj_clause, adj_sign,
                               free_atoms, init_world, burn_in, n_samples, seed):
    """Like _gibbs_chain but also counts per-clause satisfaction per sweep."""
    np.random.seed(seed)
    world = init_world.copy()
    n_free = len(free_atoms)
    n_clauses = len(clause_weight)
    sat_counts = np.zeros(n_clauses, dtype=np.int64)

    n_true = np.zeros(n_clauses, dtype=np.int64)
    for c in range(n_clauses):
        for k in range(clause_start[c], clause_start[c + 1]):
            if world[lit_atom[k]] == (lit_sign[k] == 1):
                n_true[c] += 1

    for sweep in range(burn_in + n_samples):
        for i in range(n_free):
            a = free_atoms[i]
            cur = world[a]
            delta = 0.0
            for k in range(adj_start[a], adj_start[a + 1]):
                c = adj_clause[k]
                pos = adj_sign[k] == 1
                cur_lit = 1 if cur == pos else 0
                base = n_true[c] - cur_lit
                sat1 = base + (1 if pos else 0) > 0
                sat0 = base + (0 if pos else 1) > 0
                if sat1 != sat0:
                    delta += clause_weight[c] if sat1 else -clause_weight[c]
            p1 = 1.0 / (1.0 + np.exp(-delta))
            new = np.random.random() < p1
            if new != cur:
                world[a] = new
                for k in range(adj_start[a], adj_start[a + 1]):
                    c = adj_clause[k]
                    pos = adj_sign[k] == 1
                    if new == pos:
                        n_true[c] += 1
                    else:
                        n_true[c] -= 1
        if sweep >= burn_in:
            for c in range(n_clauses):
                if n_true[c] > 0:
                    sat_counts[c] += 1
    return sat_counts


def expected_clause_satisfaction(net: GroundNetwork, evidence: dict[int, bool],
                                 params: GibbsParams) -> np.ndarray:
    """Per-clause satisfaction frequency under the conditional distribution,
    estimated with a single seeded Gibbs chain."""
    world, clamped, free = _partition(net, evidence)
    if len(free) == 0:
        from .grounding import clause_satisfaction
        return clause_satisfaction(net, world).astype(np.float64)
    rng = np.random.default_rng(params.seed)
    init = world.copy()
    init[free] = rng.random(len(free)) < 0.5
    chain_seed = int(rng.integers(0, 2**31 - 1))
    counts = _gibbs_chain_clause_counts(
        net.clause_weight, net.clause_start, net.lit_atom, net.lit_sign,
        net.adj_start, net.adj_clause, net.adj_sign,
        free.astype(np.int64), init, params.burn_in, params.samples, chain_seed)
    return counts / params.samples


def gibbs_marginals(net: GroundNetwork, evidence: dict[int, bool],
                    params: GibbsParams) -> QueryResult:
    """Empirical marginal frequencies over post-burn-in Gibbs sweeps,
    deterministic for a fixed seed and chain count."""
    world, clamped, free = _partition(net, evidence)
    marg: dict[tuple[str, tuple[str, ...]], float] = {}
    if len(free) == 0:
        for ga in net.atoms:
            marg[(ga.predicate, ga.args)] = 1.0 if world[ga.id] else 0.0
        return QueryResult(marg, method="gibbs", samples=0,
                           burn_in=params.burn_in, seed=params.seed)

    per_chain = [params.samples // params.chains] * params.chains
    for i in range(params.samples % params.chains):
        per_chain[i] += 1

    total_counts = np.zeros(net.n_atoms, dtype=np.int64)
    rng = np.random.default_rng(params.seed)
    for chain, n_samples in enumerate(per_chain):
        init = world.copy()
        init[free] = rng.random(len(free)) < 0.5
        chain_seed = int(rng.integers(0, 2**31 - 1))
        total_counts += _gibbs_chain(
            net.clause_weight, net.clause_start, net.lit_atom, net.lit_sign,
            net.adj_start, net.adj_clause, net.adj_sign,
            free.astype(np.int64), init, params.burn_in, n_samples, chain_seed)

    freq = total_counts / params.samples
    for ga in net.atoms:
        if clamped[ga.id]:
            marg[(ga.predicate, ga.args)] = 1.0 if world[ga.id] else 0.0
        else:
            marg[(ga.predicate, ga.args)] = float(freq[ga.id])
    return QueryResult(marg, method="gibbs", samples=params.samples,
                       burn_in=params.burn_in, seed=params.seed)


def query(model: MLNModel, db: EvidenceDatabase, query_predicate: str,
          params: GibbsParams, method: str = "auto",
          exact_limit: int = DEFAULT_EXACT_LIMIT,
          cap: Optional[int] = None) -> QueryResult:
    """Marginals of every grounding of ``query_predicate`` given evidence.

    The model is grounded over its domains plus the constants appearing in
    the database. Non-query predicates follow the closed-world rule.
    """
    if query_predicate not in model.decl_map:
        raise MLNValidationError(f"unknown query predicate {query_predicate!r}")
    domains = model.domains.union(extract_domains(db, model.decls))
    full = MLNModel(model.decls, model.formulas, domains)
    templates = expand_model(full.formulas, domains, full.decls)
    net = ground(full, templates, cap=cap)
    evidence = evidence_assignment(net, db, frozenset([query_predicate]))

    n_free = net.n_atoms - len(evidence)
    if method == "exact" or (method == "auto" and n_free <= exact_limit):
        result = exact_marginals(net, evidence, max_free=max(exact_limit, n_free))
    elif method in ("gibbs", "auto"):
        result = gibbs_marginals(net, evidence, params)
    else:
        raise MLNValidationError(f"unknown inference method {method!r}")

    marg = {
        key: p for key, p in result.marginals.items() if key[0] == query_predicate
    }
    return QueryResult(marg, result.method, result.samples,
                       result.burn_in, result.seed)
