"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 grounding-cap (resource) error.
The MLNCLA_GROUNDING_CAP environment variable overrides the clause cap.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness, knowledge
from .errors import GroundingCapError, MLNError
from .inference import GibbsParams, query
from .knowledge import UpdateStrategy, build_knowledge_list, cla_step, deserialize, serialize
from .learning import LearnOptions, learn_discriminative, learn_generative
from .logic import (
    EvidenceDatabase, MLNModel, format_db, format_mln, parse_db, parse_mln,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _load_model(path: str) -> MLNModel:
    return parse_mln(_read(path))


def _load_db(path: str, model: MLNModel) -> EvidenceDatabase:
    return parse_db(_read(path), model.decls)


def _strategy(name: str) -> UpdateStrategy:
    return UpdateStrategy(name)


def _cmd_learn(args) -> int:
    model = _load_model(args.mln)
    db = _load_db(args.db, model)
    opts = LearnOptions(method=args.method, seed=args.seed,
                        max_iters=args.max_iters,
                        query_predicates=tuple(args.query or ()))
    if args.method == "discriminative":
        lw = learn_discriminative(model, db, tuple(args.query or ()),
                                  warm_start="model", opts=opts)
    else:
        lw = learn_generative(model, db, warm_start="model", opts=opts)
    trained = MLNModel(model.decls, lw.to_formulas(), model.domains)
    _write(args.out, format_mln(trained))
    sidecar = {t.key(): int(z) for t, z in zip(lw.templates, lw.z)}
    _write(args.out + ".z.json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out} ({len(lw.templates)} weights)")
    return EXIT_OK


def _cmd_infer(args) -> int:
    model = _load_model(args.mln)
    db = _load_db(args.db, model)
    params = GibbsParams(seed=args.seed, chains=args.chains,
                         burn_in=args.burn_in, samples=args.samples)
    result = query(model, db, args.query, params, method=args.method)
    for (pred, atom_args), p in sorted(result.marginals.items()):
        print(f"{pred}({','.join(atom_args)})\t{p:.6f}")
    return EXIT_OK


def _cmd_cla_step(args) -> int:
    kl = deserialize(_read(args.kl))
    model = _load_model(args.mln) if args.mln else None
    decls = (model.decls if model else []) + kl.decls
    db = parse_db(_read(args.db), decls) if args.db else None
    opts = LearnOptions(seed=args.seed, max_iters=args.max_iters)
    hook = (lambda kl_, m_, d_: None) if args.allow_known else None
    out = cla_step(kl, model=model, db=db, strategy=_strategy(args.strategy),
                   learn_opts=opts, structure_hook=hook,
                   min_known_fraction=args.min_known_fraction)
    _write(args.out, serialize(out))
    print(f"wrote {args.out} ({len(out.categories)} categories)")
    return EXIT_OK


def _cmd_init_kl(args) -> int:
    model = _load_model(args.mln)
    db = _load_db(args.db, model) if args.db else None
    kl = build_knowledge_list(model, db)
    _write(args.out, serialize(kl))
    print(f"wrote {args.out} ({len(kl.categories)} categories)")
    return EXIT_OK


def _cmd_gen_data(args) -> int:
    model, train, test = harness.generate_synthetic_dataset(
        args.seed, args.train_objects, args.test_objects)
    os.makedirs(args.out_dir, exist_ok=True)
    _write(os.path.join(args.out_dir, "model.mln"), format_mln(model))
    _write(os.path.join(args.out_dir, "train.db"), format_db(train))
    _write(os.path.join(args.out_dir, "test.db"), format_db(test))
    print(f"wrote model.mln, train.db, test.db to {args.out_dir}")
    return EXIT_OK


def _experiment_config(args) -> harness.ExperimentConfig:
    if args.data_dir:
        model = _load_model(os.path.join(args.data_dir, "model.mln"))
        train = parse_db(_read(os.path.join(args.data_dir, "train.db")),
                         model.decls)
        test = parse_db(_read(os.path.join(args.data_dir, "test.db")),
                        model.decls)
    else:
        model, train, test = harness.generate_synthetic_dataset(
            args.seed, args.train_objects, args.test_objects)
    return harness.ExperimentConfig(
        model=model, train_db=train, test_db=test, seed=args.seed,
        runs=args.runs, steps=args.steps,
        learn_opts=LearnOptions(max_iters=args.max_iters),
        gibbs=GibbsParams(seed=args.seed, chains=3,
                          burn_in=args.burn_in, samples=args.samples),
    )


def _cmd_experiment(args) -> int:
    cfg = _experiment_config(args)
    if args.kind == "constants":
        reports = harness.run_constants_experiment(cfg)
    else:
        if args.steps != len(cfg.model.formulas):
            cfg.steps = len(cfg.model.formulas)
        reports = harness.run_formulas_experiment(cfg)
    paths = harness.emit_results(reports, args.out_dir)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlncla",
        description="Markov Logic Network engine with cumulative learning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="train formula weights on evidence")
    p.add_argument("--mln", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--method", choices=["generative", "discriminative"],
                   default="generative")
    p.add_argument("--query", action="append",
                   help="query predicate (discriminative; repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_learn)

    p = sub.add_parser("infer", help="marginal probabilities of a predicate")
    p.add_argument("--mln", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--method", choices=["auto", "exact", "gibbs"],
                   default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chains", type=int, default=3)
    p.add_argument("--burn-in", type=int, default=5000)
    p.add_argument("--samples", type=int, default=50000)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("cla-step", help="one cumulative learning step")
    p.add_argument("--kl", required=True)
    p.add_argument("--db")
    p.add_argument("--mln")
    p.add_argument("--strategy", required=True,
                   choices=[s.value for s in UpdateStrategy])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--min-known-fraction", type=float, default=1.0)
    p.add_argument("--allow-known", action="store_true",
                   help="no-op structure hook: fully known input still "
                        "triggers weight learning")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_cla_step)

    p = sub.add_parser("init-kl", help="build a knowledge list from a model")
    p.add_argument("--mln", required=True)
    p.add_argument("--db")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_init_kl)

    p = sub.add_parser("gen-data", help="emit the synthetic affordance dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-objects", type=int, default=40)
    p.add_argument("--test-objects", type=int, default=22)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("experiment", help="run a full learning experiment")
    p.add_argument("kind", choices=["constants", "formulas"])
    p.add_argument("--data-dir", help="directory with model.mln/train.db/test.db "
                                      "(default: generate synthetic data)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--train-objects", type=int, default=40)
    p.add_argument("--test-objects", type=int, default=22)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GroundingCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (MLNError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
