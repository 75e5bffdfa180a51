"""Per-language sampling, featurization and the analysis table on disk.

Randomness is pinned: every draw comes from numpy's PCG64 bit generator.
A language's sample uses the sub-seed

    int.from_bytes(blake2b(f"{seed}:{language}", digest_size=8), "little")

and the final row shuffle uses ``seed`` itself, so results do not depend
on the order in which languages are listed or processed.
"""

from __future__ import annotations

import csv
import glob
import hashlib
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, TypeVar

import numpy as np
import yaml

from .conllu import Block, ConlluError, SentenceRecord, parse_block, split_blocks
from .depgraph import GraphError, build_graph, validate
from .metrics import DEFAULT_CONFIG, FEATURE_COLUMNS, FeatureRow, MetricConfig, featurize_graph

logger = logging.getLogger(__name__)

CSV_HEADER = ("language", "sent_id") + FEATURE_COLUMNS
T = TypeVar("T")


class DatasetError(ValueError):
    pass


@dataclass
class CorpusManifest:
    entries: list[tuple[str, list[Path]]]
    per_language_target: int = 500
    seed: int = 0
    base: Path = Path(".")

    def __post_init__(self):
        langs = [lang for lang, _ in self.entries]
        if len(set(langs)) != len(langs):
            raise DatasetError("language codes in a manifest must be unique")
        if self.per_language_target < 0:
            raise DatasetError("per_language_target must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise DatasetError("seed must be a 64-bit unsigned integer")

    @classmethod
    def load(cls, path: str | Path, per_language_target: int = 500, seed: int = 0) -> "CorpusManifest":
        """Read a YAML manifest mapping language codes to glob patterns.

        Patterns are resolved relative to the manifest's directory::

            languages:
              en: ["en/*.conllu"]
              fr: ["fr/train.conllu", "fr/dev.conllu"]
        """
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"manifest not found: {path}")
        doc = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        languages = doc.get("languages") if isinstance(doc, dict) else None
        if not isinstance(languages, dict) or not languages:
            raise DatasetError(f"{path}: expected a non-empty 'languages' mapping")
        base = path.parent
        entries = []
        for lang, patterns in languages.items():
            if isinstance(patterns, str):
                patterns = [patterns]
            files: set[Path] = set()
            for pat in patterns:
                hits = glob.glob(str(base / pat), recursive=True)
                if not hits:
                    raise DatasetError(f"{path}: pattern {pat!r} for {lang} matches no file")
                files.update(Path(h) for h in hits)
            entries.append((str(lang), sorted(files)))
        return cls(entries, per_language_target, seed, base)


@dataclass
class Dataset:
    rows: list[FeatureRow]
    provenance: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        if name not in CSV_HEADER:
            raise KeyError(f"unknown column {name!r}; available: {', '.join(CSV_HEADER)}")
        values = [getattr(r, name) for r in self.rows]
        if name in ("language", "sent_id"):
            return np.array(values, dtype=object)
        return np.array(values, dtype=float)

    @property
    def columns(self) -> tuple[str, ...]:
        return CSV_HEADER


def language_seed(seed: int, language: str) -> int:
    digest = hashlib.blake2b(f"{seed}:{language}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample_language(
    records: Sequence[T],
    k: int,
    seed: int,
    language: str = "?",
    warnings: Optional[list[str]] = None,
) -> list[T]:
    """Draw k items uniformly without replacement, returned in input order.

    Works on parsed records or on raw blocks.  When fewer than k exist all
    are returned and a shortfall warning is appended to ``warnings``.
    """
    if not records:
        raise DatasetError(f"no sentences available for language {language!r}")
    if k <= 0:
        return []
    if len(records) <= k:
        if len(records) < k:
            msg = f"{language}: only {len(records)} sentences available, target {k}"
            logger.warning(msg)
            if warnings is not None:
                warnings.append(msg)
        return list(records)
    chosen = np.sort(rng_for(seed).permutation(len(records))[:k])
    return [records[i] for i in chosen]


@dataclass
class Skip:
    language: str
    where: str
    reason: str


@dataclass
class LanguageSample:
    language: str
    available: int
    sampled: int
    records: list[SentenceRecord]
    skips: list[Skip]
    warnings: list[str]


def _has_words(block: Block) -> bool:
    return any(line and not line.startswith("#") for line in block.text.split("\n"))


def _source_name(path: Path, base: Path) -> str:
    try:
        return path.resolve().relative_to(base.resolve()).as_posix()
    except ValueError:
        return path.as_posix()


def _check_graph(record: SentenceRecord, strict: bool):
    graph = build_graph(record)
    report = validate(graph)
    if strict and not report.ok or report.cycles or report.self_loops:
        raise GraphError(f"{record.sent_id}: " + "; ".join(report.findings))
    return graph


def sample_blocks(
    language: str, files: Sequence[Path], k: int, seed: int,
    base: Path = Path("."), strict: bool = False,
) -> LanguageSample:
    """Pool every sentence block of a language, sample, then parse the picks.

    Sentences that fail to parse or form an invalid tree are skipped (or
    raise in strict mode), so the parsed sample can fall short of k.
    """
    blocks: list[Block] = []
    warnings: list[str] = []
    skips: list[Skip] = []
    for path in files:
        source = _source_name(Path(path), base)
        data = Path(path).read_bytes()
        try:
            blocks.extend(b for b in split_blocks(data, source) if _has_words(b))
        except ConlluError as exc:
            if strict:
                raise
            skips.append(Skip(language, f"{exc.source}:{exc.line}", exc.reason))
    picked = sample_language(blocks, k, language_seed(seed, language), language, warnings)

    records = []
    seen: set[str] = set()
    for block in picked:
        try:
            record = parse_block(block, language)
            _check_graph(record, strict)
        except (ConlluError, GraphError) as exc:
            if strict:
                raise
            logger.warning("%s: skipping %s:%d: %s", language, block.source, block.line, exc)
            skips.append(Skip(language, f"{block.source}:{block.line}", str(exc)))
            continue
        if record.sent_id in seen:
            record.sent_id = f"{block.source}:{block.index}:{record.sent_id}"
        seen.add(record.sent_id)
        records.append(record)
    return LanguageSample(language, len(blocks), len(picked), records, skips, warnings)


def collect_samples(manifest: CorpusManifest, strict: bool = False,
                    max_workers: Optional[int] = None) -> list[LanguageSample]:
    """Sample every language; output is in sorted language order."""
    entries = sorted(manifest.entries)

    def work(entry):
        lang, files = entry
        return sample_blocks(lang, files, manifest.per_language_target, manifest.seed,
                             manifest.base, strict)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(work, entries))


def config_digest(cfg: MetricConfig, per_language_target: int) -> str:
    blob = json.dumps({"metrics": cfg.as_dict(), "per_language_target": per_language_target},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def assemble(manifest: CorpusManifest, cfg: MetricConfig = DEFAULT_CONFIG,
             strict: bool = False, max_workers: Optional[int] = None) -> Dataset:
    """Sample, featurize and shuffle the whole corpus into one table."""
    samples = collect_samples(manifest, strict, max_workers)
    rows: list[FeatureRow] = []
    counts = {}
    for s in samples:
        for rec in s.records:
            rows.append(featurize_graph(build_graph(rec), rec.language, rec.sent_id, cfg))
        counts[s.language] = {
            "available": s.available,
            "sampled": s.sampled,
            "rows": len(s.records),
            "skipped": len(s.skips),
        }
    order = rng_for(manifest.seed).permutation(len(rows))
    rows = [rows[i] for i in order]
    provenance = {
        "seed": manifest.seed,
        "per_language_target": manifest.per_language_target,
        "counts": counts,
        "config_digest": config_digest(cfg, manifest.per_language_target),
        "warnings": [w for s in samples for w in s.warnings],
        "skips": [asdict(k) for s in samples for k in s.skips],
    }
    return Dataset(rows, provenance)


def dumps_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in dataset.rows:
        writer.writerow([getattr(r, c) for c in CSV_HEADER])
    return buf.getvalue()


def write_csv(dataset: Dataset, path: str | Path) -> None:
    Path(path).write_bytes(dumps_csv(dataset).encode("utf-8"))


def read_csv(path: str | Path) -> Dataset:
    path = Path(path)
    text = path.read_bytes().decode("utf-8")
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise DatasetError(f"{path}:1: expected header {','.join(CSV_HEADER)}")
    rows = []
    for lineno, fields in enumerate(reader, start=2):
        if len(fields) != len(CSV_HEADER):
            raise DatasetError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields, got {len(fields)}")
        lang, sid, *nums = fields
        try:
            values = [int(v) for v in nums]
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: non-integer feature value in {nums}") from None
        if any(v < 0 for v in values):
            raise DatasetError(f"{path}:{lineno}: negative feature value")
        rows.append(FeatureRow(lang, sid, *values))
    return Dataset(rows, {"source": str(path)})
