"""Plot-ready tables: per-language distributions, observed vs predicted
means, and marginal-effect lines for each fixed term.

Every float is written with 6 significant digits so files are stable
across runs and platforms.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .formula import ModelSpec
from .lmm import INTERCEPT, LmmFit, build_design, fit_to_dict, predict, summarize


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    return "0" if x == 0 else f"{x:.6g}"


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


@dataclass
class LanguageSummary:
    language: str
    n: int
    mean: float
    sd: float
    min: float
    q1: float
    median: float
    q3: float
    max: float
    observed_mean: float
    predicted_mean: float = float("nan")


VIOLIN_COLUMNS = ("language", "n", "mean", "sd", "min", "q1", "median", "q3", "max")


def _by_language(dataset: Dataset, values: np.ndarray) -> dict[str, np.ndarray]:
    langs = dataset.column("language")
    return {lang: values[langs == lang] for lang in sorted(set(langs))}


def language_distributions(dataset: Dataset, column: str = "memory_load") -> list[LanguageSummary]:
    """Five-number summaries per language, sorted by language code.

    Quantiles use linear interpolation between order statistics
    (numpy's default ``linear`` method); ``sd`` is the sample SD (ddof=1, 0 for n=1).
    """
    if not len(dataset):
        raise ValueError("empty dataset")
    out = []
    for lang, v in _by_language(dataset, dataset.column(column)).items():
        q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75], method="linear")
        sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
        out.append(LanguageSummary(lang, int(v.size), float(v.mean()), sd, float(v.min()),
                                   float(q1), float(med), float(q3), float(v.max()), float(v.mean())))
    return out


def _spec(fit: LmmFit) -> ModelSpec:
    return ModelSpec(fit.response, tuple(fit.terms[1:]), fit.group_name)


def check_schema(dataset: Dataset, fit: LmmFit) -> None:
    missing = [c for c in (fit.response, fit.group_name, *fit.terms[1:]) if c not in dataset.columns]
    if missing:
        raise ValueError(f"fit refers to columns absent from the features table: {missing}")


def observed_vs_predicted(dataset: Dataset, fit: LmmFit) -> list[tuple[str, float, float, float]]:
    """(language, observed mean, mean conditional prediction, absolute gap) per language."""
    check_schema(dataset, fit)
    d = build_design(dataset, _spec(fit))
    pred = predict(fit, d, conditional=True)
    obs = _by_language(dataset, d.y)
    prd = _by_language(dataset, pred)
    return [(lang, float(obs[lang].mean()), float(prd[lang].mean()),
             abs(float(obs[lang].mean()) - float(prd[lang].mean()))) for lang in obs]


def marginal_effect_lines(dataset: Dataset, fit: LmmFit, term: str,
                          grid_size: int = 50) -> list[tuple[float, float, float, float]]:
    """Fitted line for one term with the others held at their means.

    The band is ``y_hat -/+ 1.96 * SE(beta_term) * |x - mean(x)|``, which
    ignores covariance with the intercept and the other slopes.
    """
    if term not in fit.terms or term == INTERCEPT:
        raise KeyError(f"{term!r} is not a fixed term of the fit; terms: {list(fit.terms[1:])}")
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    j = fit.terms.index(term)
    means = [1.0] + [float(np.mean(dataset.column(t))) for t in fit.terms[1:]]
    base = sum(b * m for k, (b, m) in enumerate(zip(fit.beta, means)) if k != j)
    x = dataset.column(term)
    grid = np.linspace(x.min(), x.max(), grid_size)
    y_hat = base + fit.beta[j] * grid
    half = 1.96 * fit.se[j] * np.abs(grid - means[j])
    return [(float(g), float(y), float(y - h), float(y + h)) for g, y, h in zip(grid, y_hat, half)]


def summary_csv(fit: LmmFit) -> str:
    s = summarize(fit)
    rows = [(r.term, r.estimate, r.se, r.z, r.p, r.ci_low, r.ci_high) for r in s.rows]
    rows.append(("sigma2_b", s.sigma2_b, "", "", "", "", ""))
    rows.append(("sigma2_e", s.sigma2_e, "", "", "", "", ""))
    rows.append(("reml_criterion", s.reml_criterion, "", "", "", "", ""))
    return to_csv(("term", "estimate", "se", "z", "p", "ci_low", "ci_high"), rows)


def fit_json(fit: LmmFit) -> str:
    return json.dumps(fit_to_dict(fit), indent=2, sort_keys=False) + "\n"


def write_fit(fit: LmmFit, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "fit.json", out / "summary.csv"]
    paths[0].write_bytes(fit_json(fit).encode("utf-8"))
    paths[1].write_bytes(summary_csv(fit).encode("utf-8"))
    return paths


def write_report(dataset: Dataset, fit: LmmFit, out_dir: str | Path, grid_size: int = 50) -> list[Path]:
    """Write fit.json, summary.csv, violin.csv, obs_vs_pred.csv and marginal_<term>.csv."""
    check_schema(dataset, fit)
    out = Path(out_dir)
    paths = write_fit(fit, out)

    violin = [[getattr(s, c) for c in VIOLIN_COLUMNS] for s in language_distributions(dataset, fit.response)]
    files = {
        "violin.csv": to_csv(VIOLIN_COLUMNS, violin),
        "obs_vs_pred.csv": to_csv(("language", "observed_mean", "predicted_mean", "abs_gap"),
                                  observed_vs_predicted(dataset, fit)),
    }
    for term in fit.terms[1:]:
        files[f"marginal_{term}.csv"] = to_csv(("x", "y_hat", "y_lo", "y_hi"),
                                               marginal_effect_lines(dataset, fit, term, grid_size))
    for name, text in files.items():
        path = out / name
        path.write_bytes(text.encode("utf-8"))
        paths.append(path)
    return paths


def text_summary(fit: LmmFit) -> str:
    s = summarize(fit)
    lines = [f"Mixed model (REML): {fit.formula}",
             f"N = {fit.n_obs}, groups = {fit.n_groups}",
             f"{'term':<24}{'coef':>12}{'se':>12}{'z':>10}{'p':>12}"]
    for r in s.rows:
        lines.append(f"{r.term:<24}{r.estimate:>12.6g}{r.se:>12.6g}{r.z:>10.4g}{r.p:>12.4g}")
    lines.append(f"Group Var (sigma2_b) = {fit.sigma2_b:.6g}")
    lines.append(f"Residual var (sigma2_e) = {fit.sigma2_e:.6g}")
    for kind in ("conditional", "marginal"):
        st = fit.stats.get(kind)
        if st:
            lines.append(f"{kind:<12} R2 = {st['r2']:.4%}  MSE = {st['mse']:.4f}  MAE = {st['mae']:.4f}")
    if fit.boundary:
        lines.append(f"note: variance ratio at the {fit.boundary} boundary")
    return "\n".join(lines)
