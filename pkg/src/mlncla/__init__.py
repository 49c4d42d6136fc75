"""mlncla: a Markov Logic Network engine with a cumulative learning layer.

The package is organized bottom-up:

* :mod:`mlncla.logic` -- FOL data model, .mln/.db parsers, CNF.
* :mod:`mlncla.grounding` -- plus-variable expansion and grounding.
* :mod:`mlncla.inference` -- exact enumeration and Gibbs marginals.
* :mod:`mlncla.learning` -- pseudo-likelihood and discriminative training.
* :mod:`mlncla.knowledge` -- knowledge lists, categories, update strategies,
  and the cumulative learning step.
* :mod:`mlncla.harness` -- synthetic dataset, AUC, stream experiments.
"""

from .errors import (
    GroundingCapError, InferenceError, KnowledgeListError, LearningError,
    MLNError, MLNSyntaxError, MLNValidationError, SerializationError,
    StructureLearningUnsupported,
)
from .logic import (
    DomainMap, EvidenceAtom, EvidenceDatabase, MLNModel, PredicateDecl,
    WeightedFormula, extract_domains, format_db, format_formula, format_mln,
    parse_db, parse_formula, parse_mln, to_clauses,
)
from .grounding import (
    FormulaTemplate, GroundAtom, GroundNetwork, count_true_groundings,
    expand_model, expand_plus, ground,
)
from .inference import GibbsParams, QueryResult, exact_marginals, gibbs_marginals, query
from .learning import (
    LearnOptions, LearnedWeights, count_formula_evidence, learn_discriminative,
    learn_generative, pseudo_log_likelihood,
)
from .knowledge import (
    KnowledgeCategory, KnowledgeList, KnowledgeTriplet, UpdateStrategy,
    build_knowledge_list, category_to_mln, cla_step, deserialize,
    domain_signature, kl_to_mln, merge_category_into, merge_triplet, normalize,
    serialize,
)
from .harness import (
    ExperimentConfig, StepReport, auc_roc, emit_results,
    generate_synthetic_dataset, run_constants_experiment,
    run_formulas_experiment,
)

__version__ = "0.1.0"
