# %% [markdown]
# # Sentence measures from a CoNLL-U tree
#
# Parse a tiny treebank, build the dependency graph of each sentence and
# compute the four sentence-level measures.

# %%
from pathlib import Path

from memload import build_graph, head_positions, parse_document
from memload.metrics import (
    MetricConfig,
    dependency_length,
    feature_interference,
    feature_misbinding,
    featurize,
    intervener_complexity,
)

HERE = Path(__file__).resolve().parent
corpus = HERE.parent / "tests" / "data" / "corpus" / "en" / "en_fixture-ud-test.conllu"
records = parse_document(corpus.read_bytes(), "en", source=corpus.name)
print(f"{len(records)} sentences")

# %% [markdown]
# "dogs in the park barked": the arc barked -> dogs spans "park", which
# governs "in" and "the", so it counts as one intervening head.

# %%
dogs = next(r for r in records if r.sent_id == "en-2")
g = build_graph(dogs)
print("arcs:", g.arcs)
print("heads:", sorted(head_positions(g)))
print("dependency length:", dependency_length(g))
print("intervener complexity (heads only):", intervener_complexity(g))
print("intervener complexity (all nodes):",
      intervener_complexity(g, MetricConfig(intervener_mode="all_nodes")))
print("interference:", feature_interference(g), "misbinding:", feature_misbinding(g))

# %%
for rec in records:
    row = featurize(rec)
    print(f"{row.sent_id:6} ML={row.memory_load:3} DL={row.dependency_length:3} "
          f"IC={row.intervener_complexity:3} SL={row.sentence_length:3}  {rec.metadata.get('text', '')}")
