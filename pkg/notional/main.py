import argparse
import sys
from pathlib import Path
from typing import List, Optional

from notional.config import RunConfig, settings
from notional.core.exceptions import EXIT_OK, handle_exception
from notional.core.logging_config import setup_logging
from notional.core.timing import stage_timer
from notional.services import pipeline
from notional.services.pipeline import pipeline_service


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--corpus", type=Path, help="directory of CoNLL-2012 files")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, default=settings.SEED)
    common.add_argument("--test-frac", type=float, default=settings.TEST_FRACTION)
    common.add_argument("--folds", type=int, default=settings.FOLDS)
    common.add_argument("--grid", type=Path, help="grid search specification (JSON)")
    common.add_argument("--lexicons", type=Path, help="lexicon directory (else NOTIONAL_LEXICON_DIR)")
    common.add_argument("--genre-map", type=Path, help="prefix<TAB>genre file")
    common.add_argument("--exclusions", type=Path, help="doc_id<TAB>span pairs to drop")
    common.add_argument("--n-jobs", type=int, default=settings.N_JOBS)
    common.add_argument("--min-class-count", type=int, default=settings.MIN_VERB_CLASS_COUNT,
                        help="verb classes rarer than this collapse to OTHER")
    common.add_argument("--extra-features", nargs="*", default=[],
                        help="optional features appended to the core set")
    common.add_argument("--no-header-meta", action="store_true",
                        help="leave timestamp and version out of artifact headers")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="notional",
        description="Notional agreement pipeline: extract, featurize, split, train, evaluate, analyze",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    common = _common_options()

    commands.add_parser("extract", parents=[common], help="write agreement pairs")

    featurize = commands.add_parser("featurize", parents=[common], help="write feature rows")
    featurize.add_argument("--pairs", type=Path, help="pairs file (default: OUT/pairs.tsv)")
    featurize.add_argument("--count-all-pairs", action="store_true",
                           help="count verb classes over every pair, not just the training split")

    split = commands.add_parser("split", parents=[common], help="stratified train/test split")
    split.add_argument("--features", type=Path, help="features file (default: OUT/features.tsv)")

    train = commands.add_parser("train", parents=[common], help="grid search and fit")
    train.add_argument("--train", type=Path, help="training rows (default: OUT/train.tsv)")

    evaluate = commands.add_parser("evaluate", parents=[common], help="score the model on test rows")
    evaluate.add_argument("--model", type=Path, help="model file (default: OUT/model.json)")
    evaluate.add_argument("--test", type=Path, help="test rows (default: OUT/test.tsv)")
    evaluate.add_argument("--features", type=Path, help="all feature rows, for the corpus baseline")

    importances = commands.add_parser("importances", parents=[common], help="Gini importances")
    importances.add_argument("--model", type=Path, help="model file (default: OUT/model.json)")

    predict = commands.add_parser("predict", parents=[common], help="label feature rows")
    predict.add_argument("--model", type=Path, help="model file (default: OUT/model.json)")
    predict.add_argument("--features", type=Path, help="features file (default: OUT/features.tsv)")

    analyze = commands.add_parser("analyze", parents=[common], help="descriptive tables")
    analyze.add_argument("--table", required=True, choices=pipeline.TABLES)
    analyze.add_argument("--features", type=Path, help="features file (default: OUT/features.tsv)")

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        corpus=args.corpus,
        lexicons=args.lexicons,
        genre_map=args.genre_map,
        exclusions=args.exclusions,
        seed=args.seed,
        test_fraction=args.test_frac,
        folds=args.folds,
        grid=args.grid,
        out=args.out,
        header_meta=not args.no_header_meta,
        n_jobs=args.n_jobs,
        min_verb_class_count=args.min_class_count,
        extra_features=args.extra_features,
        count_all_pairs=getattr(args, "count_all_pairs", False),
    )


def _or_default(value: Optional[Path], config: RunConfig, name: str) -> Path:
    return value if value is not None else config.out / name


def run(args: argparse.Namespace) -> None:
    config = config_from_args(args)
    command = args.command

    if command == "extract":
        summary = pipeline_service.extract(config)
        print(f"{summary.pairs} pairs, {summary.notional} notional ({summary.rate:.2f}%) -> {summary.path}")
    elif command == "featurize":
        pipeline_service.featurize(config, _or_default(args.pairs, config, pipeline.PAIRS_FILE))
    elif command == "split":
        pipeline_service.split(config, _or_default(args.features, config, pipeline.FEATURES_FILE))
    elif command == "train":
        pipeline_service.train(config, _or_default(args.train, config, pipeline.TRAIN_FILE))
    elif command == "evaluate":
        report = pipeline_service.evaluate(
            config,
            _or_default(args.model, config, pipeline.MODEL_FILE),
            _or_default(args.test, config, pipeline.TEST_FILE),
            args.features,
        )
        print(pipeline.format_report(report), end="")
    elif command == "importances":
        report = pipeline_service.importances(config, _or_default(args.model, config, pipeline.MODEL_FILE))
        for entry in sorted(report.grouped, key=lambda e: -e.mean):
            print(f"{entry.feature}\t{entry.mean:.4f}\t{entry.std:.4f}")
    elif command == "predict":
        pipeline_service.predict(
            config,
            _or_default(args.model, config, pipeline.MODEL_FILE),
            _or_default(args.features, config, pipeline.FEATURES_FILE),
        )
    elif command == "analyze":
        pipeline_service.analyze(
            config, _or_default(args.features, config, pipeline.FEATURES_FILE), args.table
        )


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    args = build_parser().parse_args(argv)
    logger = setup_logging()
    logger.info(f"{settings.PROJECT_NAME} {settings.VERSION} - command: {args.command}")
    try:
        with stage_timer(args.command):
            run(args)
    except Exception as exc:
        return handle_exception(exc, args.command)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
