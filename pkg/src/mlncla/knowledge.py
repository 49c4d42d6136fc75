"""Knowledge lists, knowledge categories, domain-signature clustering,
the three knowledge-updating strategies, and the cumulative learning step.

A knowledge list stores predicate declarations, a domain-to-constants map and
a set of knowledge categories. Each category clusters (formula, weight,
evidence count) triplets whose formulas range over the same set of domains;
categories whose domain sets are subsets of one another are merged, so after
normalization no category's domain set is contained in another's.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .errors import (
    KnowledgeListError, MLNValidationError, SerializationError,
    StructureLearningUnsupported,
)
from .learning import LearnOptions, count_formula_evidence, learn_discriminative, learn_generative
from .logic import (
    Atom, DomainMap, EvidenceDatabase, FormulaAst, MLNModel, PredicateDecl,
    Variable, WeightedFormula, canonical_key, extract_domains, format_ast,
    format_formula, parse_formula, predicates_of,
)

__all__ = [
    "KnowledgeTriplet", "KnowledgeCategory", "KnowledgeList",
    "UpdateStrategy", "Strategy",
    "domain_signature", "build_knowledge_list",
    "merge_triplet", "merge_category_into", "normalize",
    "category_to_mln", "kl_to_mln", "cla_step",
    "serialize", "deserialize",
]

SERIALIZATION_FORMAT = "mlncla-knowledge-list"
SERIALIZATION_VERSION = 1


@dataclass(frozen=True)
class KnowledgeTriplet:
    """(formula, weight, evidence count): the unit of stored knowledge."""
    formula: WeightedFormula
    z: int

    def __post_init__(self):
        if self.z < 0:
            raise KnowledgeListError("evidence count must be >= 0")

    @property
    def weight(self) -> Optional[float]:
        return self.formula.weight

    def key(self) -> str:
        return canonical_key(self.formula.ast)


@dataclass(frozen=True)
class KnowledgeCategory:
    index: int
    triplets: tuple[KnowledgeTriplet, ...]
    domain_set: frozenset[str]

    def triplet_map(self) -> dict[str, KnowledgeTriplet]:
        return {t.key(): t for t in self.triplets}


@dataclass
class KnowledgeList:
    decls: list[PredicateDecl]
    domains: DomainMap
    categories: list[KnowledgeCategory]
    next_index: int = 0

    @property
    def decl_map(self) -> dict[str, PredicateDecl]:
        return {d.name: d for d in self.decls}

    def copy(self) -> "KnowledgeList":
        return KnowledgeList(list(self.decls), self.domains.copy(),
                             list(self.categories), self.next_index)

    def triplet_keys(self) -> set[str]:
        return {t.key() for c in self.categories for t in c.triplets}

    def find_triplet(self, key: str) -> Optional[KnowledgeTriplet]:
        for c in self.categories:
            for t in c.triplets:
                if t.key() == key:
                    return t
        return None


class UpdateStrategy(enum.Enum):
    """Built-in conflict resolution rules for same-formula triplet merges."""
    NAIVE = "naive"
    CONSERVATIVE = "conservative"
    BALANCED = "balanced"


# a strategy is a built-in rule or a pure function of the two triplets
Strategy = Union[UpdateStrategy, Callable[[KnowledgeTriplet, KnowledgeTriplet],
                                          tuple[float, int]]]


def _apply_strategy(old: KnowledgeTriplet, new: KnowledgeTriplet,
                    s: Strategy) -> tuple[float, int]:
    w1, z1 = old.weight, old.z
    w2, z2 = new.weight, new.z
    if s is UpdateStrategy.NAIVE:
        return w2, z2
    if s is UpdateStrategy.CONSERVATIVE:
        return (w2, z2) if z2 > z1 else (w1, z1)
    if s is UpdateStrategy.BALANCED:
        if z1 == 0 and z2 == 0:
            return (w1 + w2) / 2, 0
        return (z1 * w1 + z2 * w2) / (z1 + z2), z1 + z2
    if callable(s):
        return s(old, new)
    raise KnowledgeListError(f"unknown strategy {s!r}")


def merge_triplet(old: KnowledgeTriplet, new: KnowledgeTriplet,
                  s: Strategy) -> KnowledgeTriplet:
    """Resolve a same-formula conflict between an old and a new triplet."""
    if old.key() != new.key():
        raise KnowledgeListError(
            f"cannot merge triplets of different formulas: "
            f"{format_ast(old.formula.ast)} vs {format_ast(new.formula.ast)}")
    w, z = _apply_strategy(old, new, s)
    return KnowledgeTriplet(WeightedFormula(w, old.formula.ast), z)


def domain_signature(ast: FormulaAst, decls: list[PredicateDecl]) -> frozenset[str]:
    """Union of the argument domains of every predicate occurring in the
    formula."""
    decl_map = {d.name: d for d in decls}
    domains: set[str] = set()
    for pred in predicates_of(ast):
        decl = decl_map.get(pred)
        if decl is None:
            raise MLNValidationError(f"undeclared predicate {pred!r}")
        domains.update(decl.arg_domains)
    return frozenset(domains)


_Orient = Callable[[KnowledgeTriplet, KnowledgeTriplet],
                   tuple[KnowledgeTriplet, KnowledgeTriplet]]


def merge_category_into(target: KnowledgeCategory, src: KnowledgeCategory,
                        s: Strategy,
                        orient: Optional[_Orient] = None) -> KnowledgeCategory:
    """Merge ``src`` (whose domain set must be contained in ``target``'s)
    into ``target``. Same-formula conflicts go through :func:`merge_triplet`;
    by default the target triplet plays the "old" role."""
    if not src.domain_set <= target.domain_set:
        raise KnowledgeListError(
            f"category {src.index} domains {sorted(src.domain_set)} are not a "
            f"subset of category {target.index} domains {sorted(target.domain_set)}")
    if orient is None:
        orient = lambda tgt, sc: (tgt, sc)
    merged = list(target.triplets)
    index_of = {t.key(): i for i, t in enumerate(merged)}
    for t in src.triplets:
        key = t.key()
        if key in index_of:
            i = index_of[key]
            old, new = orient(merged[i], t)
            merged[i] = merge_triplet(old, new, s)
        else:
            index_of[key] = len(merged)
            merged.append(t)
    return KnowledgeCategory(target.index, tuple(merged), target.domain_set)


def normalize(kl: KnowledgeList, s: Strategy) -> KnowledgeList:
    """Repeatedly merge any category whose domain set is contained in (or
    equal to) another's, until no such pair remains. Merge order: ascending
    by domain-set size, ties by lowest index; the superset category is the
    target; for equal sets the lower index survives."""
    cats = list(kl.categories)
    changed = True
    while changed:
        changed = False
        cats.sort(key=lambda c: (len(c.domain_set), c.index))
        for i, src in enumerate(cats):
            target = None
            for cand in cats:
                if cand is src:
                    continue
                if src.domain_set < cand.domain_set or (
                        src.domain_set == cand.domain_set
                        and cand.index < src.index):
                    if target is None or (len(cand.domain_set), cand.index) < \
                            (len(target.domain_set), target.index):
                        target = cand
            if target is not None:
                merged = merge_category_into(target, src, s)
                cats = [merged if c is target else c
                        for c in cats if c is not src]
                changed = True
                break
    out = kl.copy()
    out.categories = sorted(cats, key=lambda c: c.index)
    return out


def build_knowledge_list(model: MLNModel,
                         db: Optional[EvidenceDatabase] = None) -> KnowledgeList:
    """Cluster a model's formulas into categories by domain signature; the
    evidence database (if any) supplies domain constants and evidence counts."""
    db = (db or EvidenceDatabase([])).dedup()
    domains = model.domains.union(extract_domains(db, model.decls))
    by_sig: dict[frozenset[str], list[KnowledgeTriplet]] = {}
    sig_order: list[frozenset[str]] = []
    seen_keys: set[str] = set()
    for wf in model.formulas:
        key = canonical_key(wf.ast)
        if key in seen_keys:
            raise KnowledgeListError(
                f"duplicate formula in model: {format_ast(wf.ast)}")
        seen_keys.add(key)
        sig = domain_signature(wf.ast, model.decls)
        if sig not in by_sig:
            by_sig[sig] = []
            sig_order.append(sig)
        by_sig[sig].append(
            KnowledgeTriplet(wf, count_formula_evidence(wf, db)))
    categories = [
        KnowledgeCategory(i, tuple(by_sig[sig]), sig)
        for i, sig in enumerate(sig_order)
    ]
    kl = KnowledgeList(list(model.decls), domains, categories, len(categories))
    return normalize(kl, UpdateStrategy.NAIVE)  # no conflicts possible here


def category_to_mln(kl: KnowledgeList, index: int) -> MLNModel:
    """Standalone MLN of one category: its formulas at their current weights,
    declarations and domains restricted to the category's domain set."""
    cat = next((c for c in kl.categories if c.index == index), None)
    if cat is None:
        raise KnowledgeListError(f"no category with index {index}")
    decls = [d for d in kl.decls if set(d.arg_domains) <= cat.domain_set]
    domains = kl.domains.restrict(cat.domain_set)
    formulas = [t.formula for t in cat.triplets]
    return MLNModel(decls, formulas, domains)


def kl_to_mln(kl: KnowledgeList) -> MLNModel:
    """Whole knowledge base as a single MLN (categories in index order)."""
    formulas = [t.formula
                for c in sorted(kl.categories, key=lambda c: c.index)
                for t in c.triplets]
    return MLNModel(list(kl.decls), formulas, kl.domains.copy())


def _merge_lists(old: KnowledgeList, new: KnowledgeList,
                 s: Strategy) -> KnowledgeList:
    """Merge a newly learned knowledge list into an existing one; same-formula
    conflicts are resolved with the strategy, oriented old <- new."""
    result = old.copy()
    known_names = {d.name for d in result.decls}
    for d in new.decls:
        if d.name not in known_names:
            result.decls.append(d)
            known_names.add(d.name)
    result.domains = result.domains.union(new.domains)

    for ncat in new.categories:
        supersets = [c for c in result.categories
                     if ncat.domain_set <= c.domain_set]
        if supersets:
            target = min(supersets, key=lambda c: (len(c.domain_set), c.index))
            merged = merge_category_into(target, ncat, s)
            result.categories = [merged if c is target else c
                                 for c in result.categories]
            continue
        fresh = KnowledgeCategory(result.next_index, ncat.triplets,
                                  ncat.domain_set)
        result.next_index += 1
        absorbed = [c for c in result.categories
                    if c.domain_set < fresh.domain_set]
        absorbed_ids = {id(c) for c in absorbed}
        for c in absorbed:
            # conflicts here pit an old kl triplet (src) against a new one
            fresh = merge_category_into(
                fresh, c, s, orient=lambda tgt, sc: (sc, tgt))
        result.categories = [c for c in result.categories
                             if id(c) not in absorbed_ids]
        result.categories.append(fresh)

    return normalize(result, s)


def _unit_formula(decl: PredicateDecl) -> WeightedFormula:
    args = tuple(Variable(f"x{i}") for i in range(len(decl.arg_domains)))
    return WeightedFormula(0.0, Atom(decl.name, args))


def cla_step(kl: KnowledgeList,
             model: Optional[MLNModel] = None,
             db: Optional[EvidenceDatabase] = None,
             strategy: Strategy = UpdateStrategy.BALANCED,
             learn_opts: Optional[LearnOptions] = None,
             structure_hook: Optional[Callable] = None,
             min_known_fraction: float = 1.0) -> KnowledgeList:
    """One cumulative learning step.

    Incoming information (a model, an evidence database, or both) is first
    classified as known or unknown against the list. If the known fraction
    reaches ``min_known_fraction`` the structure-learning hook fires (the
    default hook raises; a hook returning None falls through to weight
    learning). Otherwise the categories affected by the new information are
    converted to a single training MLN, its weights are trained on the new
    evidence with warm starts, and the trained knowledge is merged back
    under the given strategy. The step is atomic: on any error the input
    list is left untouched.
    """
    if model is None and db is None:
        raise MLNValidationError("cla_step needs a model, a database, or both")
    learn_opts = learn_opts or LearnOptions()
    db = (db or EvidenceDatabase([])).dedup()

    known_decls = kl.decl_map
    incoming_decls = list(model.decls) if model is not None else []
    for d in incoming_decls:
        prev = known_decls.get(d.name)
        if prev is not None and prev.arg_domains != d.arg_domains:
            raise MLNValidationError(
                f"predicate {d.name!r} redeclared with different domains")
    new_decls = [d for d in incoming_decls if d.name not in known_decls]
    all_decls = kl.decls + new_decls
    all_decl_map = {d.name: d for d in all_decls}
    for atom in db.atoms:
        if atom.predicate not in all_decl_map:
            raise MLNValidationError(
                f"evidence predicate {atom.predicate!r} is not declared")

    # --- classify incoming elements against the list ----------------------
    known = 0
    total = 0
    known_constants = kl.domains.all_constants()
    known_domains = set(kl.domains.domains()) | {
        dom for d in kl.decls for dom in d.arg_domains}
    kl_keys = kl.triplet_keys()

    preds = {a.predicate for a in db.atoms} | {d.name for d in incoming_decls}
    for p in sorted(preds):
        total += 1
        known += p in known_decls
    doms = {dom for p in preds for dom in all_decl_map[p].arg_domains}
    if model is not None:
        doms |= set(model.domains.domains())
    for dom in sorted(doms):
        total += 1
        known += dom in known_domains
    constants = {c for a in db.atoms for c in a.args}
    if model is not None:
        constants |= model.domains.all_constants()
    for c in sorted(constants):
        total += 1
        known += c in known_constants
    formula_keys = ([canonical_key(f.ast) for f in model.formulas]
                    if model is not None else [])
    for key in formula_keys:
        total += 1
        known += key in kl_keys

    if total > 0 and known / total >= min_known_fraction:
        if structure_hook is None:
            raise StructureLearningUnsupported(
                "all incoming information is already known; structure learning "
                "is delegated to an external hook and none is installed")
        hooked = structure_hook(kl, model, db)
        if hooked is not None:
            return hooked

    # --- select affected categories and assemble the training model -------
    domains_all = kl.domains.copy()
    if model is not None:
        domains_all = domains_all.union(model.domains)
    domains_all = domains_all.union(extract_domains(db, all_decls))

    incoming_sigs: set[str] = set()
    if model is not None:
        for f in model.formulas:
            incoming_sigs |= domain_signature(f.ast, all_decls)
    for a in db.atoms:
        incoming_sigs |= set(all_decl_map[a.predicate].arg_domains)
    for d in new_decls:
        incoming_sigs |= set(d.arg_domains)

    affected = [c for c in kl.categories if c.domain_set & incoming_sigs]

    training: dict[str, WeightedFormula] = {}
    if db.atoms:
        for c in affected:
            for t in c.triplets:
                training[t.key()] = t.formula
    if model is not None:
        for f in model.formulas:
            key = canonical_key(f.ast)
            if key not in kl_keys and key not in training:
                training[key] = f
    used_preds = {p for f in training.values() for p in predicates_of(f.ast)}
    used_preds |= {p for c in kl.categories for t in c.triplets
                   for p in predicates_of(t.formula.ast)}
    for d in new_decls:
        if d.name not in used_preds:
            wf = _unit_formula(d)
            training.setdefault(canonical_key(wf.ast), wf)

    training_formulas = list(training.values())

    if db.atoms and training_formulas:
        training_decls = [d for d in all_decls
                          if d.name in {p for f in training_formulas
                                        for p in predicates_of(f.ast)}
                          or any(a.predicate == d.name for a in db.atoms)]
        training_model = MLNModel(training_decls, training_formulas, domains_all)
        if learn_opts.method == "discriminative":
            lw = learn_discriminative(training_model, db,
                                      learn_opts.query_predicates,
                                      warm_start="model", opts=learn_opts)
        else:
            lw = learn_generative(training_model, db,
                                  warm_start="model", opts=learn_opts)
        trained_formulas = lw.to_formulas()
    else:
        trained_formulas = training_formulas

    new_model = MLNModel(all_decls, trained_formulas, domains_all)
    new_part = build_knowledge_list(new_model, db)
    return _merge_lists(kl, new_part, strategy)


# --- serialization ---------------------------------------------------------

def serialize(kl: KnowledgeList) -> str:
    """Versioned JSON rendering; lossless including indices, full-precision
    weights, evidence counts and domain maps."""
    obj = {
        "format": SERIALIZATION_FORMAT,
        "version": SERIALIZATION_VERSION,
        "decls": [{"name": d.name, "domains": list(d.arg_domains)}
                  for d in kl.decls],
        "domains": {dom: list(consts) for dom, consts in kl.domains.items()},
        "next_index": kl.next_index,
        "categories": [
            {
                "index": c.index,
                "domains": sorted(c.domain_set),
                "triplets": [
                    {"formula_text": format_ast(t.formula.ast),
                     "weight": t.formula.weight,
                     "z": t.z}
                    for t in c.triplets
                ],
            }
            for c in sorted(kl.categories, key=lambda c: c.index)
        ],
    }
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def deserialize(text: str) -> KnowledgeList:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SerializationError(f"corrupt knowledge-list file: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("format") != SERIALIZATION_FORMAT:
        raise SerializationError("not a knowledge-list file")
    if obj.get("version") != SERIALIZATION_VERSION:
        raise SerializationError(
            f"unsupported knowledge-list version {obj.get('version')!r}")
    try:
        decls = [PredicateDecl(d["name"], tuple(d["domains"]))
                 for d in obj["decls"]]
        domains = DomainMap(obj["domains"])
        categories = []
        for c in obj["categories"]:
            triplets = tuple(
                KnowledgeTriplet(
                    WeightedFormula(t["weight"],
                                    parse_formula(t["formula_text"])),
                    int(t["z"]))
                for t in c["triplets"]
            )
            categories.append(KnowledgeCategory(
                int(c["index"]), triplets, frozenset(c["domains"])))
        return KnowledgeList(decls, domains, categories,
                             int(obj["next_index"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"malformed knowledge-list file: {exc}") from exc
