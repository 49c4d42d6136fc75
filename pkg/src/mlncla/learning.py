"""Weight learning: generative pseudo-likelihood ascent and discriminative
voted-perceptron updates, both with warm starts, plus formula evidence counts."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .errors import LearningError, MLNValidationError
from .grounding import (
    FormulaTemplate, GroundNetwork, clause_true_literal_counts, expand_model,
    ground,
)
from .inference import GibbsParams, expected_clause_satisfaction
from .logic import (
    EvidenceDatabase, MLNModel, WeightedFormula, extract_domains,
    predicates_of,
)

__all__ = [
    "LearnOptions", "LearnedWeights",
    "count_formula_evidence", "pseudo_log_likelihood",
    "learn_generative", "learn_discriminative",
    "closed_world_completion",
]


@dataclass(frozen=True)
class LearnOptions:
    method: str = "generative"  # generative | discriminative
    max_iters: int = 500
    step_size: float = 1.0
    tol: float = 1e-4           # convergence: max-abs gradient
    l2_sigma: float = 10.0      # L2 prior std deviation
    seed: int = 0
    query_predicates: tuple[str, ...] = ()   # discriminative only
    # discriminative expectation sampler
    samples_per_round: int = 2000
    burn_in_per_round: int = 100
    learning_rate: float = 0.01

    def __post_init__(self):
        if self.tol <= 0:
            raise MLNValidationError("tolerance must be > 0")
        if self.l2_sigma <= 0:
            raise MLNValidationError("l2_sigma must be > 0")


@dataclass
class LearnedWeights:
    templates: list[FormulaTemplate]
    weights: np.ndarray      # per template
    z: np.ndarray            # per template, evidence counts
    objective: float
    iterations: int

    def to_formulas(self) -> list[WeightedFormula]:
        return [WeightedFormula(float(w), t.ast)
                for t, w in zip(self.templates, self.weights)]

    def weight_by_key(self) -> dict[str, float]:
        return {t.key(): float(w) for t, w in zip(self.templates, self.weights)}


def count_formula_evidence(f: WeightedFormula, db: EvidenceDatabase) -> int:
    """Number of evidence atoms whose predicate occurs in the formula.

    The database must already be deduplicated; both positive and negative
    evidence atoms count as evidence seen.
    """
    preds = predicates_of(f.ast)
    return sum(1 for a in db.atoms if a.predicate in preds)


def closed_world_completion(net: GroundNetwork, db: EvidenceDatabase) -> np.ndarray:
    """Complete truth assignment: an atom is true iff listed positively."""
    world = np.zeros(net.n_atoms, dtype=bool)
    for atom in db.atoms:
        aid = net.atom_index.get((atom.predicate, atom.args))
        if aid is not None:
            world[aid] = atom.value
    return world


def pseudo_log_likelihood(net: GroundNetwork, world: np.ndarray,
                          weights: np.ndarray,
                          l2_sigma: Optional[float] = None
                          ) -> tuple[float, np.ndarray]:
    """Pseudo-log-likelihood of a complete world and its gradient in the
    per-template weights. With ``l2_sigma`` a Gaussian prior term is added."""
    n_templates = net.n_templates
    grad = np.zeros(n_templates, dtype=np.float64)

    if net.n_clauses == 0:
        # every conditional is uniform
        pll = -net.n_atoms * np.log(2.0)
    else:
        clause_w = weights[net.clause_template] * net.clause_coef
        n_true = clause_true_literal_counts(net, world)

        lit_clause = np.repeat(
            np.arange(net.n_clauses), np.diff(net.clause_start))
        lit_pos = net.lit_sign == 1
        lit_cur = (world[net.lit_atom] == lit_pos).astype(np.int64)
        base = n_true[lit_clause] - lit_cur
        sat1 = (base + lit_pos) > 0
        sat0 = (base + ~lit_pos) > 0
        sat_cur = n_true[lit_clause] > 0

        contrib = clause_w[lit_clause] * (sat1.astype(np.float64) - sat0)
        delta = np.bincount(net.lit_atom, weights=contrib,
                            minlength=net.n_atoms)

        s = np.where(world, 1.0, -1.0)
        pll = float(-np.logaddexp(0.0, -s * delta).sum())
        # atoms touching no clause contribute the uniform log 1/2 -- they do:
        # delta = 0 there, and -logaddexp(0, 0) = -log 2. Nothing extra needed.

        p1 = 1.0 / (1.0 + np.exp(-delta))
        p1_lit = p1[net.lit_atom]
        term = (sat_cur.astype(np.float64)
                - p1_lit * sat1 - (1.0 - p1_lit) * sat0)
        grad = np.bincount(net.clause_template[lit_clause],
                           weights=net.clause_coef[lit_clause] * term,
                           minlength=n_templates)

    if l2_sigma is not None:
        pll -= float(np.sum(weights ** 2)) / (2.0 * l2_sigma ** 2)
        grad = grad - weights / l2_sigma ** 2
    return pll, grad


def _initial_weights(templates: list[FormulaTemplate],
                     warm_start: Union[None, str, dict[str, float]]
                     ) -> np.ndarray:
    if warm_start is None:
        return np.zeros(len(templates), dtype=np.float64)
    if warm_start == "model":
        return np.array([t.weight for t in templates], dtype=np.float64)
    if isinstance(warm_start, dict):
        return np.array([warm_start.get(t.key(), 0.0) for t in templates],
                        dtype=np.float64)
    raise MLNValidationError(f"bad warm_start: {warm_start!r}")


def _prepare(model: MLNModel, db: EvidenceDatabase):
    domains = model.domains.union(extract_domains(db, model.decls))
    full = MLNModel(model.decls, model.formulas, domains)
    templates = expand_model(full.formulas, domains, full.decls)
    net = ground(full, templates)
    deduped = db.dedup()
    world = closed_world_completion(net, deduped)
    z = np.array(
        [count_formula_evidence(WeightedFormula(t.weight, t.ast), deduped)
         for t in templates],
        dtype=np.int64)
    return net, world, z


def _ascend(net: GroundNetwork, world: np.ndarray, w0: np.ndarray,
            opts: LearnOptions) -> tuple[np.ndarray, float, int]:
    """Fixed-step gradient ascent with backtracking halving."""
    w = w0.copy()
    obj, grad = pseudo_log_likelihood(net, world, w, opts.l2_sigma)
    if not np.isfinite(obj):
        raise LearningError("non-finite objective at the starting point")
    step = opts.step_size
    iterations = 0
    for _ in range(opts.max_iters):
        if np.max(np.abs(grad), initial=0.0) < opts.tol:
            break
        iterations += 1
        accepted = False
        for _ in range(60):
            w_new = w + step * grad
            obj_new, grad_new = pseudo_log_likelihood(
                net, world, w_new, opts.l2_sigma)
            if np.isfinite(obj_new) and obj_new >= obj:
                w, obj, grad = w_new, obj_new, grad_new
                step = min(step * 1.2, 1e3)
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if not np.isfinite(obj_new):
                raise LearningError("diverging step size: objective non-finite")
            break  # no ascent direction progress at machine precision
    return w, obj, iterations


def learn_generative(model: MLNModel, db: EvidenceDatabase,
                     warm_start: Union[None, str, dict[str, float]] = None,
                     opts: Optional[LearnOptions] = None) -> LearnedWeights:
    """Maximize pseudo-log-likelihood with an L2 prior by gradient ascent.

    ``warm_start`` is either None (zeros), ``"model"`` (the formula weights
    as written), or a canonical-key -> weight mapping.
    """
    if not db.atoms:
        raise MLNValidationError("learn_generative requires a nonempty database")
    opts = opts or LearnOptions()
    net, world, z = _prepare(model, db)
    w0 = _initial_weights(net.templates, warm_start)
    w, obj, iterations = _ascend(net, world, w0, opts)
    return LearnedWeights(net.templates, w, z, obj, iterations)


def _feature_counts(net: GroundNetwork, sat: np.ndarray) -> np.ndarray:
    """Per-template feature value: sum of clause coefficients over satisfied
    clauses (the 1/k split makes the feature the mean clause satisfaction)."""
    if net.n_clauses == 0:
        return np.zeros(net.n_templates, dtype=np.float64)
    return np.bincount(net.clause_template,
                       weights=net.clause_coef * sat,
                       minlength=net.n_templates)


def learn_discriminative(model: MLNModel, db: EvidenceDatabase,
                         query_predicates: tuple[str, ...],
                         warm_start: Union[None, str, dict[str, float]] = None,
                         opts: Optional[LearnOptions] = None) -> LearnedWeights:
    """Voted-perceptron training of the query predicates' conditional model.

    Each round updates w += lr * (n(observed) - E[n | evidence]) with the
    expectation estimated by a seeded Gibbs chain; the returned weights are
    the average over rounds.
    """
    if not query_predicates:
        raise MLNValidationError("discriminative learning needs query predicates")
    if not db.atoms:
        raise MLNValidationError("learn_discriminative requires a nonempty database")
    opts = opts or LearnOptions()
    net, world, z = _prepare(model, db)

    from .grounding import clause_satisfaction
    n_obs = _feature_counts(net, clause_satisfaction(net, world).astype(np.float64))

    # evidence for the expectation: clamp everything except query atoms
    evidence: dict[int, bool] = {}
    qset = set(query_predicates)
    for ga in net.atoms:
        if ga.predicate not in qset:
            evidence[ga.id] = bool(world[ga.id])
        else:
            # query atoms listed in the db stay free during training
            pass

    w = _initial_weights(net.templates, warm_start)
    w_sum = np.zeros_like(w)
    rng = np.random.default_rng(opts.seed)
    rounds = max(1, opts.max_iters)
    for _ in range(rounds):
        params = GibbsParams(seed=int(rng.integers(0, 2**31 - 1)), chains=1,
                             burn_in=opts.burn_in_per_round,
                             samples=opts.samples_per_round)
        freq = expected_clause_satisfaction(net.with_weights(w), evidence, params)
        expected = _feature_counts(net, freq)
        w = w + opts.learning_rate * (n_obs - expected)
        if not np.all(np.isfinite(w)):
            raise LearningError("diverging discriminative update")
        w_sum += w
    w_avg = w_sum / rounds
    return LearnedWeights(net.templates, w_avg, z, float("nan"), rounds)
