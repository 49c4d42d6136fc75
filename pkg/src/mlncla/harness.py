"""Experiment runner: synthetic affordance dataset, AUC evaluation,
constant-stream and formula-stream experiments, batch baselines, CSV output."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import MLNValidationError
from .inference import GibbsParams, query
from .knowledge import (
    KnowledgeList, UpdateStrategy, build_knowledge_list, cla_step, kl_to_mln,
)
from .learning import LearnOptions, learn_discriminative, learn_generative
from .logic import (
    EvidenceAtom, EvidenceDatabase, MLNModel, parse_mln,
)

__all__ = [
    "ExperimentConfig", "StepReport",
    "auc_roc", "generate_synthetic_dataset", "affordance_model_text",
    "run_constants_experiment", "run_formulas_experiment", "emit_results",
    "evaluate_model",
]


def auc_roc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Area under the ROC curve: the probability that a random positive
    outscores a random negative, ties counted half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise MLNValidationError("scores and labels must have equal length")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise MLNValidationError("AUC needs both classes present")
    ranks = rankdata(scores)
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


# --- synthetic dataset -----------------------------------------------------

_CATEGORIES = ("Animal", "Tool", "Container", "Furniture",
               "Vehicle", "Instrument", "Utensil", "Clothing")
_ATTRIBUTES = ("Metallic", "Wooden", "Soft", "Round",
               "Sharp", "Flat", "Fragile", "Elongated")
_WEIGHTS = ("W1", "W2", "W3", "W4")  # ascending mass classes
_SIZES = ("Small", "Medium", "Large")
_AFFORDANCES = ("Grasp", "Lift", "Throw", "Push", "SitOn", "Cut", "Ride")


def affordance_model_text() -> str:
    """Five-formula affordance model with per-constant (+) weights."""
    return "\n".join([
        "IsA(object, category)",
        "HasVisualAttribute(object, attribute)",
        "HasWeight(object, weight)",
        "HasSize(object, size)",
        "HasAffordance(object, affordance)",
        f"category = {{{', '.join(_CATEGORIES)}}}",
        f"attribute = {{{', '.join(_ATTRIBUTES)}}}",
        f"weight = {{{', '.join(_WEIGHTS)}}}",
        f"size = {{{', '.join(_SIZES)}}}",
        f"affordance = {{{', '.join(_AFFORDANCES)}}}",
        "0.0 IsA(obj,+category) => HasAffordance(obj,+affordance)",
        "0.0 HasVisualAttribute(obj,+attribute) => HasAffordance(obj,+affordance)",
        "0.0 HasWeight(obj,+weight) => HasAffordance(obj,+affordance)",
        "0.0 HasSize(obj,+size) => HasAffordance(obj,+affordance)",
        "0.0 IsA(obj,+category) => IsA(obj,+category2)",
        "",
    ])


def hidden_affordance_rules(category: str, attributes: frozenset[str],
                            weight: str, size: str) -> set[str]:
    """Ground-truth rule table tying object properties to affordances."""
    out = set()
    if size != "Large":
        out.add("Grasp")
    if weight in ("W1", "W2"):
        out.add("Lift")
    if weight == "W1" and size != "Large":
        out.add("Throw")
    if size in ("Medium", "Large") and weight != "W4":
        out.add("Push")
    if category == "Furniture" or ("Flat" in attributes and size == "Large"):
        out.add("SitOn")
    if "Sharp" in attributes:
        out.add("Cut")
    if category in ("Vehicle", "Animal") and size == "Large":
        out.add("Ride")
    return out


_CATEGORY_PROFILE = {
    # category -> (likely attributes, likely weights, likely sizes)
    "Animal": (("Soft", "Round"), ("W2", "W3", "W4"), ("Small", "Medium", "Large")),
    "Tool": (("Metallic", "Sharp", "Elongated"), ("W1", "W2"), ("Small", "Medium")),
    "Container": (("Round", "Fragile"), ("W1", "W2"), ("Small", "Medium")),
    "Furniture": (("Wooden", "Flat"), ("W3", "W4"), ("Medium", "Large")),
    "Vehicle": (("Metallic",), ("W4",), ("Large",)),
    "Instrument": (("Wooden", "Elongated"), ("W1", "W2"), ("Small", "Medium")),
    "Utensil": (("Metallic", "Sharp"), ("W1",), ("Small",)),
    "Clothing": (("Soft", "Flat"), ("W1",), ("Small", "Medium")),
}


@dataclass(frozen=True)
class _ObjectProfile:
    name: str
    category: str
    attributes: frozenset[str]
    weight: str
    size: str

    def affordances(self) -> set[str]:
        return hidden_affordance_rules(self.category, self.attributes,
                                       self.weight, self.size)


def _sample_objects(rng: np.random.Generator, names: list[str]) -> list[_ObjectProfile]:
    objects = []
    for name in names:
        category = _CATEGORIES[rng.integers(len(_CATEGORIES))]
        attrs, weights, sizes = _CATEGORY_PROFILE[category]
        n_attr = int(rng.integers(1, 3))
        chosen = set(rng.choice(attrs, size=min(n_attr, len(attrs)),
                                replace=False).tolist())
        # occasionally mix in an off-profile attribute for variety
        if rng.random() < 0.3:
            chosen.add(_ATTRIBUTES[rng.integers(len(_ATTRIBUTES))])
        objects.append(_ObjectProfile(
            name, category, frozenset(chosen),
            weights[rng.integers(len(weights))],
            sizes[rng.integers(len(sizes))]))
    return objects


def _profile_db(objects: list[_ObjectProfile]) -> EvidenceDatabase:
    atoms = []
    for obj in objects:
        atoms.append(EvidenceAtom("IsA", (obj.name, obj.category), True))
        for attr in sorted(obj.attributes):
            atoms.append(EvidenceAtom("HasVisualAttribute", (obj.name, attr), True))
        atoms.append(EvidenceAtom("HasWeight", (obj.name, obj.weight), True))
        atoms.append(EvidenceAtom("HasSize", (obj.name, obj.size), True))
        for aff in sorted(obj.affordances()):
            atoms.append(EvidenceAtom("HasAffordance", (obj.name, aff), True))
    return EvidenceDatabase(atoms)


def generate_synthetic_dataset(seed: int, n_train_objects: int = 40,
                               n_test_objects: int = 22
                               ) -> tuple[MLNModel, EvidenceDatabase, EvidenceDatabase]:
    """Deterministic affordance dataset: disjoint train/test object sets whose
    affordances follow the hidden rule table."""
    if n_train_objects < 2 or n_test_objects < 2:
        raise MLNValidationError("need at least 2 train and 2 test objects")
    rng = np.random.default_rng(seed)
    train_names = [f"Obj{i + 1:02d}" for i in range(n_train_objects)]
    test_names = [f"TestObj{i + 1:02d}" for i in range(n_test_objects)]
    train = _sample_objects(rng, train_names)
    test = _sample_objects(rng, test_names)
    model = parse_mln(affordance_model_text())
    return model, _profile_db(train), _profile_db(test)


# --- evaluation ------------------------------------------------------------

def _split_labels(test_db: EvidenceDatabase, query_predicate: str
                  ) -> tuple[EvidenceDatabase, set[tuple[str, ...]]]:
    """Remove query-predicate atoms from the evidence; they are the labels."""
    evidence = [a for a in test_db.atoms if a.predicate != query_predicate]
    positives = {a.args for a in test_db.atoms
                 if a.predicate == query_predicate and a.value}
    return EvidenceDatabase(evidence), positives


def evaluate_model(model: MLNModel, test_db: EvidenceDatabase,
                   query_predicate: str, gibbs: GibbsParams,
                   object_domain: str = "object",
                   known_predicates: Optional[set[str]] = None,
                   method: str = "auto") -> tuple[float, dict]:
    """AUC of the query-predicate marginals against closed-world labels.

    The grounding is restricted to the test constants of ``object_domain`` so
    training objects do not inflate the network. With ``known_predicates``
    the evidence is first restricted to those predicates (formula-stream
    evaluation)."""
    evidence, positives = _split_labels(test_db, query_predicate)
    if known_predicates is not None:
        evidence = EvidenceDatabase(
            [a for a in evidence.atoms if a.predicate in known_predicates])

    from .logic import extract_domains
    test_objects = {a.args[i]
                    for a in test_db.atoms
                    if a.predicate in model.decl_map
                    for i, dom in enumerate(model.decl_map[a.predicate].arg_domains)
                    if dom == object_domain}
    domains = model.domains.union(extract_domains(evidence, model.decls))
    eval_domains = domains.replace(object_domain, test_objects)
    eval_model = MLNModel(model.decls, model.formulas, eval_domains)

    result = query(eval_model, evidence, query_predicate, gibbs, method=method)
    scores, labels, marginals = [], [], {}
    for (pred, args), p in sorted(result.marginals.items()):
        scores.append(p)
        labels.append(1 if args in positives else 0)
        marginals[args] = p
    return auc_roc(scores, labels), marginals


# --- experiment configuration ----------------------------------------------

def _noop_structure_hook(kl, model, db):
    return None  # fall through to weight learning


@dataclass
class ExperimentConfig:
    model: MLNModel
    train_db: EvidenceDatabase
    test_db: EvidenceDatabase
    seed: int = 0
    runs: int = 20
    steps: int = 8
    strategies: tuple[UpdateStrategy, ...] = (
        UpdateStrategy.NAIVE, UpdateStrategy.CONSERVATIVE, UpdateStrategy.BALANCED)
    query_predicate: str = "HasAffordance"
    object_domain: str = "object"
    learn_opts: LearnOptions = field(default_factory=LearnOptions)
    discr_opts: LearnOptions = field(default_factory=lambda: LearnOptions(
        method="discriminative", max_iters=30,
        query_predicates=("HasAffordance",)))
    gibbs: GibbsParams = field(default_factory=lambda: GibbsParams(
        seed=0, chains=3, burn_in=1000, samples=10000))
    include_baselines: bool = True
    structure_hook: Callable = _noop_structure_hook

    def __post_init__(self):
        if self.runs < 1:
            raise MLNValidationError("runs must be >= 1")
        if self.steps < 1:
            raise MLNValidationError("steps must be >= 1")


@dataclass
class StepReport:
    run: int
    step: int              # 0 for batch baselines (flat reference lines)
    strategy: str
    auc: Optional[float]
    evaluable: bool = True
    known_predicates: tuple[str, ...] = ()
    marginals: dict = field(default_factory=dict)


def _objects_of(db: EvidenceDatabase, model: MLNModel, object_domain: str) -> list[str]:
    decl_map = model.decl_map
    seen: list[str] = []
    seen_set: set[str] = set()
    for a in db.atoms:
        for i, dom in enumerate(decl_map[a.predicate].arg_domains):
            if dom == object_domain and a.args[i] not in seen_set:
                seen_set.add(a.args[i])
                seen.append(a.args[i])
    return seen


def _atoms_for_objects(db: EvidenceDatabase, model: MLNModel,
                       object_domain: str, objects: set[str]) -> EvidenceDatabase:
    decl_map = model.decl_map
    out = []
    for a in db.atoms:
        obj_args = [a.args[i]
                    for i, dom in enumerate(decl_map[a.predicate].arg_domains)
                    if dom == object_domain]
        if obj_args and all(o in objects for o in obj_args):
            out.append(a)
    return EvidenceDatabase(out)


def _baseline_reports(cfg: ExperimentConfig) -> list[StepReport]:
    reports = []
    gen = learn_generative(cfg.model, cfg.train_db, warm_start="model",
                           opts=cfg.learn_opts)
    gen_model = MLNModel(cfg.model.decls, gen.to_formulas(), cfg.model.domains)
    auc_gen, marg_gen = evaluate_model(
        gen_model, cfg.test_db, cfg.query_predicate, cfg.gibbs,
        cfg.object_domain)
    disc = learn_discriminative(cfg.model, cfg.train_db,
                                cfg.discr_opts.query_predicates or
                                (cfg.query_predicate,),
                                warm_start="model", opts=cfg.discr_opts)
    disc_model = MLNModel(cfg.model.decls, disc.to_formulas(), cfg.model.domains)
    auc_disc, marg_disc = evaluate_model(
        disc_model, cfg.test_db, cfg.query_predicate, cfg.gibbs,
        cfg.object_domain)
    for step in range(1, cfg.steps + 1):
        reports.append(StepReport(0, step, "generative", auc_gen,
                                  marginals=marg_gen))
        reports.append(StepReport(0, step, "discriminative", auc_disc,
                                  marginals=marg_disc))
    return reports


def run_constants_experiment(cfg: ExperimentConfig) -> list[StepReport]:
    """Stream batches of new object constants; the formula set never changes.

    Per run the object order is shuffled; each strategy sees the same order.
    The full test set is evaluated after every step.
    """
    objects = _objects_of(cfg.train_db, cfg.model, cfg.object_domain)
    if len(objects) < cfg.steps:
        raise MLNValidationError(
            f"{len(objects)} training objects cannot fill {cfg.steps} steps")
    reports: list[StepReport] = []
    if cfg.include_baselines:
        reports.extend(_baseline_reports(cfg))

    for run in range(1, cfg.runs + 1):
        rng = np.random.default_rng((cfg.seed, run))
        order = list(objects)
        rng.shuffle(order)
        batches = [set(b.tolist()) for b in np.array_split(np.array(order),
                                                           cfg.steps)]
        for strategy in cfg.strategies:
            kl = build_knowledge_list(cfg.model, EvidenceDatabase([]))
            for step, batch in enumerate(batches, start=1):
                batch_db = _atoms_for_objects(cfg.train_db, cfg.model,
                                              cfg.object_domain, batch)
                kl = cla_step(kl, db=batch_db, strategy=strategy,
                              learn_opts=cfg.learn_opts,
                              structure_hook=cfg.structure_hook)
                auc, marginals = evaluate_model(
                    kl_to_mln(kl), cfg.test_db, cfg.query_predicate,
                    cfg.gibbs, cfg.object_domain)
                reports.append(StepReport(run, step, strategy.value, auc,
                                          marginals=marginals))
    return reports


def run_formulas_experiment(cfg: ExperimentConfig) -> list[StepReport]:
    """Introduce one formula (with its declarations and matching evidence)
    per step; evaluation is restricted to predicates known at that step, so
    results are only comparable within a step."""
    n_formulas = len(cfg.model.formulas)
    if cfg.steps != n_formulas:
        raise MLNValidationError(
            f"formula experiment needs steps == number of formulas "
            f"({n_formulas}), got {cfg.steps}")
    from .logic import predicates_of

    reports: list[StepReport] = []
    if cfg.include_baselines:
        reports.extend(_baseline_reports(cfg))

    for run in range(1, cfg.runs + 1):
        rng = np.random.default_rng((cfg.seed, run))
        order = list(range(n_formulas))
        rng.shuffle(order)
        for strategy in cfg.strategies:
            kl = KnowledgeList([], cfg.model.domains.copy(), [], 0)
            given_preds: set[str] = set()
            for step, fidx in enumerate(order, start=1):
                wf = cfg.model.formulas[fidx]
                preds = predicates_of(wf.ast)
                new_preds = preds - given_preds
                decls = [d for d in cfg.model.decls if d.name in preds]
                step_model = MLNModel(
                    decls, [wf],
                    cfg.model.domains.restrict(
                        {dom for d in decls for dom in d.arg_domains}))
                step_db = EvidenceDatabase(
                    [a for a in cfg.train_db.atoms if a.predicate in new_preds])
                kl = cla_step(kl, model=step_model, db=step_db,
                              strategy=strategy, learn_opts=cfg.learn_opts,
                              structure_hook=cfg.structure_hook)
                given_preds |= preds
                if cfg.query_predicate in given_preds:
                    auc, marginals = evaluate_model(
                        kl_to_mln(kl), cfg.test_db, cfg.query_predicate,
                        cfg.gibbs, cfg.object_domain,
                        known_predicates=set(given_preds))
                    reports.append(StepReport(
                        run, step, strategy.value, auc, evaluable=True,
                        known_predicates=tuple(sorted(given_preds)),
                        marginals=marginals))
                else:
                    reports.append(StepReport(
                        run, step, strategy.value, None, evaluable=False,
                        known_predicates=tuple(sorted(given_preds))))
    return reports


# --- result emission -------------------------------------------------------

def emit_results(reports: list[StepReport], out_dir: str) -> dict[str, str]:
    """Write per-run, aggregated, and marginal-trajectory CSVs; returns the
    written paths. Deterministic for identical report lists."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "per_run": os.path.join(out_dir, "per_run.csv"),
        "aggregate": os.path.join(out_dir, "aggregate.csv"),
        "trajectories": os.path.join(out_dir, "trajectories.csv"),
    }

    with open(paths["per_run"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "step", "strategy", "auc"])
        for r in reports:
            writer.writerow([r.run, r.step, r.strategy,
                             "" if r.auc is None else repr(r.auc)])

    groups: dict[tuple[int, str], list[float]] = {}
    for r in reports:
        if r.auc is not None:
            groups.setdefault((r.step, r.strategy), []).append(r.auc)
    with open(paths["aggregate"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "strategy", "mean_auc", "stderr", "n_runs"])
        for (step, strategy) in sorted(groups):
            vals = np.array(groups[(step, strategy)])
            stderr = (float(vals.std(ddof=1) / np.sqrt(len(vals)))
                      if len(vals) > 1 else 0.0)
            writer.writerow([step, strategy, repr(float(vals.mean())),
                             repr(stderr), len(vals)])

    traj: dict[tuple[tuple, str, int], list[float]] = {}
    for r in reports:
        for args, p in r.marginals.items():
            traj.setdefault((tuple(args), r.strategy, r.step), []).append(p)
    with open(paths["trajectories"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["object", "affordance", "strategy", "step",
                         "mean_marginal"])
        for (args, strategy, step) in sorted(traj):
            vals = traj[(args, strategy, step)]
            obj = args[0]
            aff = args[1] if len(args) > 1 else ""
            writer.writerow([obj, aff, strategy, step,
                             repr(float(np.mean(vals)))])
    return paths
