"""Sentence-level measures: dependency length, intervener complexity,
feature interference, feature misbinding and their memory-load sum."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .conllu import SentenceRecord
from .depgraph import DepGraph, build_graph, head_positions

FEATURE_COLUMNS = (
    "memory_load",
    "dependency_length",
    "intervener_complexity",
    "sentence_length",
)


class IntervenerMode(str, Enum):
    HEADS_ONLY = "heads_only"
    ALL_NODES = "all_nodes"


@dataclass(frozen=True)
class MetricConfig:
    nominal_deprels: frozenset[str] = field(
        default_factory=lambda: frozenset({"nsubj", "obj", "iobj", "obl", "dobj", "pobj"})
    )
    clausal_upos: frozenset[str] = field(default_factory=lambda: frozenset({"VERB", "AUX"}))
    intervener_mode: IntervenerMode = IntervenerMode.HEADS_ONLY

    def __post_init__(self):
        object.__setattr__(self, "nominal_deprels", frozenset(self.nominal_deprels))
        object.__setattr__(self, "clausal_upos", frozenset(self.clausal_upos))
        object.__setattr__(self, "intervener_mode", IntervenerMode(self.intervener_mode))
        if not self.nominal_deprels or not self.clausal_upos:
            raise ValueError("nominal_deprels and clausal_upos must be non-empty")

    def as_dict(self) -> dict:
        return {
            "nominal_deprels": sorted(self.nominal_deprels),
            "clausal_upos": sorted(self.clausal_upos),
            "intervener_mode": self.intervener_mode.value,
        }


DEFAULT_CONFIG = MetricConfig()


@dataclass(frozen=True)
class FeatureRow:
    language: str
    sent_id: str
    memory_load: int
    dependency_length: int
    intervener_complexity: int
    sentence_length: int


def dependency_length(graph: DepGraph) -> int:
    return sum(abs(h - d) for h, d in graph.arcs)


def intervener_complexity(graph: DepGraph, cfg: MetricConfig = DEFAULT_CONFIG) -> int:
    """Tokens strictly between head and dependent, summed over arcs.

    ``heads_only`` counts only interveners that govern something;
    ``all_nodes`` counts every intervening token.
    """
    if cfg.intervener_mode is IntervenerMode.ALL_NODES:
        return sum(abs(h - d) - 1 for h, d in graph.arcs)
    # prefix counts of head positions make each arc O(1)
    is_head = [0] * (graph.n + 1)
    for h in head_positions(graph):
        is_head[h] = 1
    prefix = [0]
    for flag in is_head[1:]:
        prefix.append(prefix[-1] + flag)
    total = 0
    for h, d in graph.arcs:
        lo, hi = min(h, d), max(h, d)
        total += prefix[hi - 1] - prefix[lo]
    return total


def _excess(counts: Counter) -> int:
    return sum(c - 1 for c in counts.values() if c > 1)


def feature_interference(graph: DepGraph) -> int:
    return _excess(Counter(graph.deprel)) + _excess(Counter(graph.upos))


def _base_label(deprel: str) -> str:
    return deprel.split(":", 1)[0]


def feature_misbinding(graph: DepGraph, cfg: MetricConfig = DEFAULT_CONFIG) -> int:
    """Nominal dependents whose governor is neither the root nor clausal.

    Subtyped relations (``nsubj:pass``, ``obl:tmod``) match on their base label.
    """
    count = 0
    for h, d in graph.arcs:
        if _base_label(graph.deprel[d - 1]) not in cfg.nominal_deprels:
            continue
        if h != graph.root and graph.upos[h - 1] not in cfg.clausal_upos:
            count += 1
    return count


def memory_load(graph: DepGraph, cfg: MetricConfig = DEFAULT_CONFIG) -> int:
    return feature_interference(graph) + feature_misbinding(graph, cfg)


def sentence_length(graph: DepGraph) -> int:
    return graph.n


def featurize_graph(graph: DepGraph, language: str, sent_id: str,
                    cfg: MetricConfig = DEFAULT_CONFIG) -> FeatureRow:
    return FeatureRow(
        language=language,
        sent_id=sent_id,
        memory_load=memory_load(graph, cfg),
        dependency_length=dependency_length(graph),
        intervener_complexity=intervener_complexity(graph, cfg),
        sentence_length=sentence_length(graph),
    )


def featurize(record: SentenceRecord, cfg: MetricConfig = DEFAULT_CONFIG) -> FeatureRow:
    return featurize_graph(build_graph(record), record.language, record.sent_id, cfg)
