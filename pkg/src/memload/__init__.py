"""Syntactic memory-load measures from UD treebanks and a random-intercept
REML mixed model relating them across languages."""

from .conllu import ConlluError, SentenceRecord, TokenRow, parse_document, sentence_text
from .dataset import CorpusManifest, Dataset, assemble, read_csv, sample_language, write_csv
from .depgraph import DepGraph, GraphError, build_graph, head_positions, validate
from .formula import FormulaError, ModelSpec, parse_formula
from .lmm import (
    DesignData,
    LmmFit,
    build_design,
    fit_reml,
    fit_statistics,
    predict,
    profiled_reml_criterion,
    summarize,
)
from .metrics import (
    FeatureRow,
    IntervenerMode,
    MetricConfig,
    dependency_length,
    feature_interference,
    feature_misbinding,
    featurize,
    intervener_complexity,
    memory_load,
    sentence_length,
)

__version__ = "0.1.0"
