# %% [markdown]
# # End to end: treebanks to report files
#
# Sample sentences per language, featurize, fit
# `memory_load ~ dependency_length + intervener_complexity + sentence_length + (1|language)`
# and write the plot-ready report tables.  The bundled fixture corpus is
# tiny; point `MANIFEST` at a real UD manifest for a meaningful fit.

# %%
import tempfile
from pathlib import Path

from memload.dataset import CorpusManifest, assemble, write_csv
from memload.formula import parse_formula
from memload.lmm import build_design, fit_reml
from memload.report import language_distributions, text_summary, write_report

HERE = Path(__file__).resolve().parent
MANIFEST = HERE.parent / "tests" / "data" / "corpus" / "manifest.yaml"

manifest = CorpusManifest.load(MANIFEST, per_language_target=500, seed=2024)
data = assemble(manifest)
print(len(data), "rows;", data.provenance["counts"])

# %%
spec = parse_formula("memory_load ~ sentence_length + (1|language)")
fit = fit_reml(build_design(data, spec))
print(text_summary(fit))

# %%
for s in language_distributions(data):
    print(f"{s.language}: n={s.n} median={s.median} IQR=[{s.q1}, {s.q3}]")

# %%
out = Path(tempfile.mkdtemp(prefix="memload-"))
write_csv(data, out / "features.csv")
for path in write_report(data, fit, out):
    print(path.name, path.stat().st_size, "bytes")
