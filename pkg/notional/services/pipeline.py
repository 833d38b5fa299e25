"""
Pipeline stages behind the command line: each stage reads the previous
stage's TSV artifacts and writes its own under the output directory
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

from joblib import Parallel, delayed
from pydantic import BaseModel

from notional.config import RunConfig, settings
from notional.core.artifacts import header_line, header_meta, read_tsv, write_json, write_tsv
from notional.core.exceptions import ConfigurationError
from notional.schemas.analysis import BinProfile, ContingencyTable, ResidualTable
from notional.schemas.corpus import Document
from notional.schemas.model import EvalReport, ImportanceReport
from notional.schemas.pairs import (
    EXTRA_FEATURES,
    PAIR_COLUMNS,
    AgreementLabel,
    AgreementPair,
    feature_columns,
)
from notional.services import analysis, ensemble, extraction
from notional.services.corpus_ingest import read_corpus
from notional.services.lexicons import lexicon_service

logger = logging.getLogger(__name__)

PAIRS_FILE = "pairs.tsv"
FEATURES_FILE = "features.tsv"
TRAIN_FILE = "train.tsv"
TEST_FILE = "test.tsv"
MODEL_FILE = "model.json"
CV_FILE = "cv.tsv"
EVAL_FILE = "eval.json"
EVAL_TEXT_FILE = "eval.txt"
IMPORTANCE_FILE = "importances.json"
IMPORTANCE_TABLE_FILE = "importances.tsv"
PREDICTIONS_FILE = "predictions.tsv"

TABLES = ("genre", "pos", "entity", "deprel", "distance", "position")
CONTINGENCY_COLUMNS = ["category", "notional", "strict", "total", "pct_notional"]
RESIDUAL_COLUMNS = ["category", "agreement", "observed", "expected", "residual"]
BIN_COLUMNS = ["bin", "lower", "upper", "n", "notional", "fraction", "mass_width"]


class ExtractSummary(BaseModel):
    documents: int
    pairs: int
    notional: int
    path: Path

    @property
    def rate(self) -> float:
        return 100.0 * self.notional / self.pairs if self.pairs else 0.0


class PipelineService:
    """Runs one stage per call and records the seed in every artifact"""

    def _meta(self, config: RunConfig) -> Dict:
        return header_meta(config.seed, with_timestamp=config.header_meta)

    def _output(self, config: RunConfig, name: str) -> Path:
        config.out.mkdir(parents=True, exist_ok=True)
        return config.out / name

    def _documents(self, config: RunConfig) -> List[Document]:
        if config.corpus is None:
            raise ConfigurationError("--corpus is required")
        genre_map = lexicon_service.load_genre_map(config.genre_map, config.lexicon_dir)
        return read_corpus(config.corpus, genre_map, config.n_jobs)

    def _training_pairs(
        self, config: RunConfig, pairs_path: Path, pairs: List[AgreementPair]
    ) -> List[AgreementPair]:
        """Pairs that `split` will put in train.tsv for the same seed and test fraction"""
        if not pairs:
            return []
        frame = read_tsv(pairs_path, required=("genre", "label"))
        held_out = ensemble.stratified_test_mask(frame, config.test_fraction, config.seed)
        kept = [pair for pair, held in zip(pairs, held_out) if not held]
        logger.info(f"Counting verb classes over {len(kept)} training pairs")
        return kept

    def _extra_features(self, config: RunConfig) -> List[str]:
        extra = config.extra_features or settings.EXTRA_FEATURES
        unknown = [name for name in extra if name not in EXTRA_FEATURES]
        if unknown:
            raise ConfigurationError(f"Unknown extra features: {unknown}; choose from {EXTRA_FEATURES}")
        return extra

    # Stages

    def extract(self, config: RunConfig) -> ExtractSummary:
        lexicons = lexicon_service.load(config.lexicon_dir, config.min_verb_class_count)
        documents = self._documents(config)
        exclusions = extraction.load_exclusions(config.exclusions)

        per_document = Parallel(n_jobs=config.n_jobs)(
            delayed(extraction.extract_pairs)(doc, exclusions, lexicons.head_rules) for doc in documents
        )
        pairs = extraction.attestation_filter(p for batch in per_document for p in batch)
        if not pairs:
            logger.warning("No agreement pairs extracted")

        path = write_tsv(
            self._output(config, PAIRS_FILE),
            PAIR_COLUMNS,
            (extraction.pair_cells(p) for p in pairs),
            meta=self._meta(config),
        )
        summary = ExtractSummary(
            documents=len(documents),
            pairs=len(pairs),
            notional=sum(1 for p in pairs if p.label is AgreementLabel.NOTIONAL),
            path=path,
        )
        logger.info(
            f"Extracted {summary.pairs} pairs from {summary.documents} documents, "
            f"{summary.notional} notional ({summary.rate:.2f}%)"
        )
        return summary

    def featurize(self, config: RunConfig, pairs_path: Path) -> Path:
        lexicons = lexicon_service.load(config.lexicon_dir, config.min_verb_class_count)
        documents = {doc.doc_id: doc for doc in self._documents(config)}
        pairs = extraction.pairs_from_file(pairs_path, documents)
        counted = pairs if config.count_all_pairs else self._training_pairs(config, pairs_path, pairs)
        counts = extraction.verb_class_counts(counted, documents, lexicons)
        columns = feature_columns(self._extra_features(config))
        vectors = [
            extraction.featurize(pair, documents[pair.doc_id], lexicons, counts) for pair in pairs
        ]
        logger.info(f"Featurized {len(vectors)} pairs into {len(columns) - 3} features")
        return write_tsv(
            self._output(config, FEATURES_FILE),
            columns,
            (vector.cells(columns) for vector in vectors),
            meta=self._meta(config),
        )

    def split(self, config: RunConfig, features_path: Path) -> List[Path]:
        frame = read_tsv(features_path, required=("genre", "label"))
        train, test = ensemble.stratified_split(frame, config.test_fraction, config.seed)
        meta = self._meta(config)
        return [
            write_tsv(self._output(config, name), list(part.columns), part.itertuples(index=False), meta=meta)
            for name, part in ((TRAIN_FILE, train), (TEST_FILE, test))
        ]

    def train(self, config: RunConfig, train_path: Path) -> List[Path]:
        data = ensemble.dataset_from_frame(read_tsv(train_path, required=("label",)))
        grid = ensemble.load_grid(config.grid)
        result = ensemble.grid_search(data, grid, config.folds, config.seed, config.n_jobs)
        logger.info(
            f"Best cell: {result.best.n_trees} trees, depth {result.best.max_depth}, "
            f"{result.best.max_features.value}"
        )
        meta = self._meta(config)
        # timestamps stay out of the model file
        model_meta = {key: value for key, value in meta.items() if key != "created"}
        model_path = ensemble.save_forest(result.forest, self._output(config, MODEL_FILE), model_meta)

        columns = ["n_trees", "max_depth", "max_features"]
        columns += [f"fold_{k + 1}" for k in range(config.folds)] + ["mean_accuracy"]
        rows = [
            [row.n_trees, "none" if row.max_depth is None else row.max_depth, row.max_features.value]
            + [f"{score:.4f}" for score in row.fold_accuracies]
            + [f"{row.mean_accuracy:.4f}"]
            for row in result.table
        ]
        cv_path = write_tsv(self._output(config, CV_FILE), columns, rows, meta=meta)
        return [model_path, cv_path]

    def evaluate(
        self,
        config: RunConfig,
        model_path: Path,
        test_path: Path,
        corpus_features: Optional[Path] = None,
    ) -> EvalReport:
        forest = ensemble.load_forest(model_path)
        test = ensemble.dataset_from_frame(read_tsv(test_path, required=("label",)), forest.encoding)
        corpus_counts = None
        if corpus_features is not None:
            labels = read_tsv(corpus_features, required=("label",))["label"]
            corpus_counts = (
                int((labels == AgreementLabel.STRICT.value).sum()),
                int((labels == AgreementLabel.NOTIONAL.value).sum()),
            )
        report = ensemble.evaluate(forest, test, corpus_counts)
        write_json(self._output(config, EVAL_FILE), report.model_dump(), "Evaluation report", self._meta(config))
        text = format_report(report)
        self._output(config, EVAL_TEXT_FILE).write_text(
            header_line(self._meta(config)) + "\n" + text, encoding="utf-8"
        )
        logger.info(f"Accuracy {report.accuracy:.4f} on {report.n} rows")
        return report

    def importances(self, config: RunConfig, model_path: Path) -> ImportanceReport:
        report = ensemble.importances(ensemble.load_forest(model_path))
        meta = self._meta(config)
        write_json(self._output(config, IMPORTANCE_FILE), report.model_dump(), "Gini importances", meta)
        ranked = sorted(report.grouped, key=lambda e: -e.mean)
        write_tsv(
            self._output(config, IMPORTANCE_TABLE_FILE),
            ["feature", "mean", "std"],
            ([e.feature, f"{e.mean:.4f}", f"{e.std:.4f}"] for e in ranked),
            meta=meta,
        )
        return report

    def predict(self, config: RunConfig, model_path: Path, features_path: Path) -> Path:
        forest = ensemble.load_forest(model_path)
        predictions = ensemble.predict_rows(forest, read_tsv(features_path))
        return write_tsv(
            self._output(config, PREDICTIONS_FILE),
            list(predictions.columns),
            ([doc, label, f"{p:.4f}"] for doc, label, p in predictions.itertuples(index=False)),
            meta=self._meta(config),
        )

    def analyze(self, config: RunConfig, features_path: Path, table: str) -> List[Path]:
        if table not in TABLES:
            raise ConfigurationError(f"Unknown table '{table}'; choose from {', '.join(TABLES)}")
        frame = read_tsv(features_path, required=("label",))
        meta = self._meta(config)
        written: List[Path] = []

        if table == "genre":
            written.append(self._write_contingency(config, analysis.contingency(frame, "genre"), "genre.tsv", meta))
        elif table == "pos":
            pos = analysis.contingency(frame, "n_parent_pos", settings.POS_TABLE_MIN_COUNT)
            written.append(self._write_contingency(config, pos, "pos.tsv", meta))
        elif table == "entity":
            written += self._write_associations(config, analysis.contingency(frame, "t_entity"), "entity", meta)
        elif table == "deprel":
            for column in ("n_func", "t_func"):
                written += self._write_associations(
                    config, analysis.contingency(frame, column), f"deprel_{column}", meta
                )
        else:
            var = "log_distance" if table == "distance" else "anaphor_position_pct"
            profile = analysis.bin_profile(frame, var, settings.N_BINS)
            written.append(self._write_profile(config, profile, f"{table}.tsv", meta))
        return written

    # Writers

    def _write_contingency(self, config: RunConfig, table: ContingencyTable, name: str, meta: Dict) -> Path:
        rows = [
            [r.category, r.notional, r.strict, r.total, f"{r.pct_notional:.2f}"]
            for r in table.rows + table.subtotals + [table.total]
        ]
        return write_tsv(self._output(config, name), CONTINGENCY_COLUMNS, rows, meta=meta)

    def _write_associations(self, config: RunConfig, table: ContingencyTable, stem: str, meta: Dict) -> List[Path]:
        result: ResidualTable = analysis.residuals(table)
        logger.info(f"{table.by}: chi2 = {result.chi2:.2f}, dof = {result.dof}, p = {result.p_value:.4g}")
        rows = [
            [c.category, c.agreement, c.observed, f"{c.expected:.4f}", f"{c.residual:.4f}"]
            for c in result.cells
        ]
        residual_meta = {**meta, "chi2": f"{result.chi2:.4f}", "dof": result.dof, "p": f"{result.p_value:.4g}"}
        return [
            self._write_contingency(config, table, f"{stem}.tsv", meta),
            write_tsv(self._output(config, f"{stem}_residuals.tsv"), RESIDUAL_COLUMNS, rows, meta=residual_meta),
        ]

    def _write_profile(self, config: RunConfig, profile: BinProfile, name: str, meta: Dict) -> Path:
        rows = [
            [
                index,
                f"{profile.edges[index]:.4f}",
                f"{profile.edges[index + 1]:.4f}",
                profile.counts[index],
                profile.notional[index],
                "" if profile.fractions[index] is None else f"{profile.fractions[index]:.4f}",
                f"{profile.mass_widths[index]:.4f}",
            ]
            for index in range(len(profile.counts))
        ]
        return write_tsv(self._output(config, name), BIN_COLUMNS, rows, meta=meta)


def format_report(report: EvalReport) -> str:
    (ss, sn), (ns, nn) = report.confusion
    lines = [
        f"Accuracy:          {report.accuracy:.4f} ({ss + nn}/{report.n})",
        f"Majority baseline: {report.majority_baseline:.4f} (test set)",
    ]
    if report.corpus_baseline is not None:
        lines.append(f"Corpus baseline:   {report.corpus_baseline:.4f} (all pairs)")
    lines += [
        "",
        "                 predicted strict  predicted notional",
        f"actual strict    {ss:>16}  {sn:>18}",
        f"actual notional  {ns:>16}  {nn:>18}",
        "",
        f"strict   precision {report.strict.precision:.4f}  recall {report.strict.recall:.4f}",
        f"notional precision {report.notional.precision:.4f}  recall {report.notional.recall:.4f}",
    ]
    if report.type_iii_total is not None:
        lines.append(f"Type III errors:   {report.type_iii_errors}/{report.type_iii_total}")
    return "\n".join(lines) + "\n"


pipeline_service = PipelineService()
