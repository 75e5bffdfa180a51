"""Command-line pipeline: extract, featurize, fit, report, print-config.

Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from . import dataset as ds
from .conllu import ConlluError, sentence_text
from .depgraph import GraphError
from .formula import FormulaError, parse_formula
from .lmm import LmmError, build_design, fit_from_dict, fit_reml
from .metrics import DEFAULT_CONFIG, MetricConfig
from .report import text_summary, write_fit, write_report

log = logging.getLogger("memload")

DEFAULT_FORMULA = (
    "memory_load ~ dependency_length + intervener_complexity + sentence_length + (1|language)"
)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    manifest: Optional[Path] = None
    per_language_target: int = 500
    seed: Optional[int] = None
    metrics: MetricConfig = field(default_factory=lambda: DEFAULT_CONFIG)
    formula: str = DEFAULT_FORMULA
    strict: bool = False
    out: Path = Path("out")

    def to_yaml(self) -> str:
        doc = {
            "manifest": None if self.manifest is None else str(self.manifest),
            "per_language_target": self.per_language_target,
            "seed": self.seed,
            "formula": self.formula,
            "strict": self.strict,
            "out": str(self.out),
            "metrics": self.metrics.as_dict(),
        }
        return yaml.safe_dump(doc, sort_keys=False)


def load_config(path: Optional[str]) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    try:
        doc = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise UsageError(f"{p}: invalid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"{p}: expected a mapping at top level")
    known = {"manifest", "per_language_target", "seed", "formula", "strict", "out", "metrics"}
    unknown = set(doc) - known
    if unknown:
        raise UsageError(f"{p}: unknown keys {sorted(unknown)}")
    base = p.parent
    if doc.get("manifest") is not None:
        cfg.manifest = base / doc["manifest"]
    if doc.get("out") is not None:
        cfg.out = base / doc["out"]
    for key in ("per_language_target", "seed"):
        if doc.get(key) is not None:
            if not isinstance(doc[key], int) or isinstance(doc[key], bool):
                raise UsageError(f"{p}: {key} must be an integer")
            setattr(cfg, key, doc[key])
    if "formula" in doc:
        cfg.formula = str(doc["formula"])
    if "strict" in doc:
        cfg.strict = bool(doc["strict"])
    if doc.get("metrics"):
        m = dict(DEFAULT_CONFIG.as_dict(), **doc["metrics"])
        try:
            cfg.metrics = MetricConfig(**m)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"{p}: bad metrics section: {exc}") from None
    return cfg


def resolve(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "manifest", None):
        cfg.manifest = Path(args.manifest)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.per_lang is not None:
        cfg.per_language_target = args.per_lang
    if args.strict:
        cfg.strict = True
    if args.formula is not None:
        cfg.formula = args.formula
    if args.out is not None:
        cfg.out = Path(args.out)
    return cfg


def _manifest(cfg: RunConfig) -> ds.CorpusManifest:
    if cfg.manifest is None:
        raise UsageError("no manifest given (set 'manifest' in the config or pass --manifest)")
    if cfg.seed is None:
        raise UsageError("a seed is required (set 'seed' in the config or pass --seed)")
    try:
        return ds.CorpusManifest.load(cfg.manifest, cfg.per_language_target, cfg.seed)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None
    except ds.DatasetError as exc:
        raise UsageError(str(exc)) from None


def cmd_extract(cfg: RunConfig) -> Path:
    manifest = _manifest(cfg)
    samples = ds.collect_samples(manifest, strict=cfg.strict)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("language", "sent_id", "text"))
    for s in samples:
        for rec in s.records:
            w.writerow((rec.language, rec.sent_id, sentence_text(rec)))
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "corpus.csv"
    path.write_bytes(buf.getvalue().encode("utf-8"))
    log.info("wrote %d sentences to %s", sum(len(s.records) for s in samples), path)
    return path


def cmd_featurize(cfg: RunConfig) -> Path:
    manifest = _manifest(cfg)
    data = ds.assemble(manifest, cfg.metrics, strict=cfg.strict)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "features.csv"
    ds.write_csv(data, path)
    prov = data.provenance
    sidecar = cfg.out / "featurize.log"
    sidecar.write_bytes((json.dumps(prov, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    n_skip = len(prov["skips"])
    if n_skip:
        log.warning("skipped %d sentence(s); details in %s", n_skip, sidecar)
    log.info("wrote %d rows to %s", len(data), path)
    return path


def _features_path(arg: Optional[str], cfg: RunConfig) -> Path:
    path = Path(arg) if arg else cfg.out / "features.csv"
    if not path.is_file():
        raise UsageError(f"features file not found: {path}")
    return path


def cmd_fit(features: Path, formula: str, out: Path) -> list[Path]:
    try:
        spec = parse_formula(formula)
    except FormulaError as exc:
        raise UsageError(f"formula error: {exc}") from None
    data = ds.read_csv(features)
    try:
        design = build_design(data, spec)
    except LmmError as exc:
        raise UsageError(str(exc)) from None
    fit = fit_reml(design)
    paths = write_fit(fit, out)
    print(text_summary(fit))
    return paths


def cmd_report(features: Path, fit_path: Path, out: Path) -> list[Path]:
    if not fit_path.is_file():
        raise UsageError(f"fit file not found: {fit_path}")
    try:
        fit = fit_from_dict(json.loads(fit_path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, LmmError) as exc:
        raise UsageError(f"{fit_path}: {exc}") from None
    data = ds.read_csv(features)
    paths = write_report(data, fit, out)
    print(text_summary(fit))
    return paths


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--seed", type=int, help="sampling seed (required for extract/featurize)")
    common.add_argument("--per-lang", type=int, help="sentences sampled per language")
    common.add_argument("--strict", action="store_true", help="abort on the first malformed sentence")
    common.add_argument("--formula", help="model formula, e.g. 'y ~ x + (1|g)'")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="memload", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("extract", "featurize"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--manifest", help="YAML manifest mapping languages to .conllu globs")
    p = sub.add_parser("fit", parents=[common])
    p.add_argument("features", nargs="?", help="features CSV (default: <out>/features.csv)")
    p = sub.add_parser("report", parents=[common])
    p.add_argument("features", nargs="?", help="features CSV (default: <out>/features.csv)")
    p.add_argument("fit", nargs="?", help="fit.json (default: <out>/fit.json)")
    sub.add_parser("print-config", parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve(args)
        if args.command == "print-config":
            sys.stdout.write(cfg.to_yaml())
        elif args.command == "extract":
            cmd_extract(cfg)
        elif args.command == "featurize":
            cmd_featurize(cfg)
        elif args.command == "fit":
            cmd_fit(_features_path(args.features, cfg), cfg.formula, cfg.out)
        elif args.command == "report":
            fit_path = Path(args.fit) if args.fit else cfg.out / "fit.json"
            cmd_report(_features_path(args.features, cfg), fit_path, cfg.out)
    except UsageError as exc:
        print(f"memload: error: {exc}", file=sys.stderr)
        return 2
    except (ConlluError, GraphError, ds.DatasetError, LmmError, ValueError, OSError) as exc:
        print(f"memload: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
