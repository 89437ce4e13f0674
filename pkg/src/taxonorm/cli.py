"""Command-line pipeline: dictionaries -> index -> candidates -> pairs ->
reranked predictions -> evaluation report.

Configuration comes from an optional JSON file plus flags; flags win.
Every stage writes its artifacts under --outdir and records them (with
sha256 digests) in the run manifest. run-all simply chains the stage
functions, so composing subcommands by hand produces identical files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Any

from . import bm25, corpus, evaluation, pairs, rerank, taxdump
from .errors import TaxonormError
from .manifest import RunManifest, file_digest
from .normalize import Normalizer, load_acronym_map

DEFAULTS: dict[str, Any] = {
    "names": None,
    "nodes": None,
    "ranks": ",".join(taxdump.DEFAULT_RANKS),
    "name_classes": None,
    "corpus": None,
    "format": "standoff-tsv",
    "acronyms": None,
    "ascii_mode": "transliterate",
    "seed": 13,
    "split": "test",
    "k": 10,
    "k1": 1.2,
    "k2": 100.0,
    "b": 0.75,
    "scorer": "passthrough",
    "outdir": "run",
    "pairs_out": None,
    "scores_in": None,
    "report_out": None,
    "min_accuracy": None,
    "unlabeled": False,
    "query_text": None,
}

EXIT_BELOW_FLOOR = 3


def resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    """defaults <- config file <- explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise TaxonormError(f"cannot read config {args.config}: {exc}") from None
        unknown = sorted(set(loaded) - set(cfg))
        if unknown:
            raise TaxonormError(f"unknown config keys: {unknown}")
        cfg.update(loaded)
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


class StagePaths:
    """Canonical artifact locations inside the run directory."""

    def __init__(self, cfg: dict[str, Any]):
        self.outdir = Path(cfg["outdir"])
        self.split = cfg["split"]
        self._pairs_out = cfg.get("pairs_out")
        self._report_out = cfg.get("report_out")

    def dictionary(self, rank: str) -> Path:
        return self.outdir / f"dict_{rank.replace(' ', '_')}.tsv"

    @property
    def index(self) -> Path:
        return self.outdir / "index.tsv"

    @property
    def split_manifest(self) -> Path:
        return self.outdir / "split.tsv"

    @property
    def mentions(self) -> Path:
        return self.outdir / f"mentions_{self.split}.tsv"

    @property
    def candidates(self) -> Path:
        return self.outdir / f"candidates_{self.split}.tsv"

    @property
    def pairs(self) -> Path:
        return Path(self._pairs_out) if self._pairs_out else self.outdir / f"pairs_{self.split}.jsonl"

    @property
    def ungeneratable(self) -> Path:
        return self.outdir / f"ungeneratable_{self.split}.tsv"

    @property
    def predictions(self) -> Path:
        return self.outdir / f"predictions_{self.split}.tsv"

    @property
    def report_base(self) -> Path:
        return Path(self._report_out) if self._report_out else self.outdir / f"report_{self.split}"

    @property
    def report_text(self) -> Path:
        return self.report_base.with_suffix(".txt")

    @property
    def report_jsonl(self) -> Path:
        return self.report_base.with_suffix(".jsonl")


def _ranks(cfg: dict[str, Any]) -> tuple[str, ...]:
    return tuple(r.strip() for r in str(cfg["ranks"]).split(",") if r.strip())


def _params(cfg: dict[str, Any]) -> bm25.Bm25Params:
    return bm25.Bm25Params(k1=float(cfg["k1"]), k2=float(cfg["k2"]), b=float(cfg["b"]))


def _normalizer(cfg: dict[str, Any], with_acronyms: bool) -> Normalizer:
    acronyms = None
    if with_acronyms and cfg.get("acronyms"):
        with open(cfg["acronyms"], encoding="utf-8") as handle:
            acronyms = load_acronym_map(handle)
    return Normalizer(acronyms=acronyms, ascii_mode=cfg["ascii_mode"])


def _require(cfg: dict[str, Any], *keys: str) -> None:
    missing = [key for key in keys if not cfg.get(key)]
    if missing:
        raise TaxonormError(f"missing required option(s): {', '.join('--' + k.replace('_', '-') for k in missing)}")


def _manifest(cfg: dict[str, Any]) -> RunManifest:
    snapshot = dict(cfg)
    if cfg.get("acronyms"):
        snapshot["acronyms_sha256"] = file_digest(cfg["acronyms"])
    return RunManifest.load_or_create(Path(cfg["outdir"]), snapshot)


def _load_dictionaries(cfg: dict[str, Any], paths: StagePaths) -> dict[str, taxdump.RankDictionary]:
    dictionaries = {}
    for rank in _ranks(cfg):
        path = paths.dictionary(rank)
        if not path.exists():
            raise TaxonormError(f"dictionary file {path} not found; run build-dict first")
        with path.open(encoding="utf-8") as handle:
            dictionaries[rank] = taxdump.read_dictionary(handle, rank)
    return dictionaries


# --- stages -----------------------------------------------------------------

def stage_build_dict(cfg: dict[str, Any]) -> None:
    _require(cfg, "names", "nodes")
    paths = StagePaths(cfg)
    paths.outdir.mkdir(parents=True, exist_ok=True)
    with open(cfg["names"], "rb") as handle:
        names = taxdump.parse_names(handle)
    with open(cfg["nodes"], "rb") as handle:
        nodes = taxdump.parse_nodes(handle)
    classes = None
    if cfg.get("name_classes"):
        classes = [c.strip() for c in str(cfg["name_classes"]).split(",") if c.strip()]
    dictionaries = taxdump.build_dictionaries(
        names, nodes, _normalizer(cfg, with_acronyms=False), ranks=_ranks(cfg),
        name_classes=classes,
    )
    outputs = {}
    for rank, dictionary in dictionaries.items():
        path = paths.dictionary(rank)
        with path.open("w", encoding="utf-8") as handle:
            taxdump.write_dictionary(dictionary, handle)
        outputs[f"dict_{rank}"] = path
        print(f"build-dict: {rank}: {len(dictionary)} concepts -> {path}")
    _manifest(cfg).record_stage("build-dict", outputs)


def stage_build_index(cfg: dict[str, Any]) -> None:
    paths = StagePaths(cfg)
    dictionaries = _load_dictionaries(cfg, paths)
    entries = []
    skipped = 0
    for rank in _ranks(cfg):
        for tax_id in sorted(dictionaries[rank].entries):
            entry = dictionaries[rank].entries[tax_id]
            if entry.tokens:
                entries.append(entry)
            else:
                skipped += 1
    if skipped:
        print(f"build-index: skipped {skipped} concepts whose names normalize to nothing")
    index = bm25.build_index(entries)
    with paths.index.open("w", encoding="utf-8") as handle:
        bm25.save_index(index, handle)
    print(f"build-index: {index.doc_count} concepts -> {paths.index}")
    _manifest(cfg).record_stage("build-index", {"index": paths.index})


def _load_corpus(cfg: dict[str, Any]) -> tuple[list[str], list[corpus.MentionAnnotation]]:
    """Returns (document ids in deterministic order, all mentions)."""
    source = Path(cfg["corpus"])
    fmt = cfg["format"]
    if fmt == "brat-ann":
        if not source.is_dir():
            raise TaxonormError("brat-ann corpus must be a directory of .ann files")
        mentions: list[corpus.MentionAnnotation] = []
        doc_ids = []
        for path in sorted(source.glob("*.ann")):
            doc_ids.append(path.stem)
            with path.open(encoding="utf-8") as handle:
                mentions.extend(corpus.load_annotations(handle, fmt, doc_id=path.stem))
        return doc_ids, mentions
    with source.open(encoding="utf-8") as handle:
        mentions = corpus.load_annotations(handle, fmt)
    doc_ids = list(dict.fromkeys(m.doc_id for m in mentions))
    return doc_ids, mentions


def stage_generate(cfg: dict[str, Any]) -> None:
    _require(cfg, "corpus")
    paths = StagePaths(cfg)
    paths.outdir.mkdir(parents=True, exist_ok=True)
    doc_ids, all_mentions = _load_corpus(cfg)
    split = corpus.split_documents(doc_ids, int(cfg["seed"]))
    with paths.split_manifest.open("w", encoding="utf-8") as handle:
        corpus.write_split_manifest(doc_ids, split, handle)

    if cfg["split"] == "all":
        selected = set(doc_ids)
    else:
        selected = getattr(split, cfg["split"])
    normalizer = _normalizer(cfg, with_acronyms=True)
    deduped = corpus.dedup_mentions(
        [m for m in all_mentions if m.doc_id in selected], normalizer)
    with paths.mentions.open("w", encoding="utf-8") as handle:
        pairs.write_mentions(deduped, handle)

    if not paths.index.exists():
        raise TaxonormError(f"index file {paths.index} not found; run build-index first")
    with paths.index.open(encoding="utf-8") as handle:
        index = bm25.load_index(handle)
    params = _params(cfg)
    k = int(cfg["k"])
    candidates = {}
    for surface, gold_id in deduped:
        qid = pairs.query_key(surface, gold_id)
        candidates[qid] = bm25.top_k(index, params, surface.split(), k)
    with paths.candidates.open("w", encoding="utf-8") as handle:
        pairs.write_candidates(candidates, handle)
    print(f"generate: {len(deduped)} mentions, k={k} -> {paths.candidates}")
    _manifest(cfg).record_stage("generate", {
        "split": paths.split_manifest,
        "mentions": paths.mentions,
        "candidates": paths.candidates,
    }, extra={"documents": len(doc_ids), "mentions": len(deduped)})


def stage_make_pairs(cfg: dict[str, Any]) -> None:
    paths = StagePaths(cfg)
    dictionaries = _load_dictionaries(cfg, paths)
    with paths.index.open(encoding="utf-8") as handle:
        index = bm25.load_index(handle)
    with paths.mentions.open(encoding="utf-8") as handle:
        mentions = pairs.read_mentions(handle)
    built, ungeneratable = pairs.make_pairs(
        mentions, dictionaries, index, _params(cfg), int(cfg["k"]))
    with paths.pairs.open("w", encoding="utf-8") as handle:
        pairs.export_pairs(built, handle, include_labels=not cfg["unlabeled"])
    with paths.ungeneratable.open("w", encoding="utf-8") as handle:
        pairs.write_ungeneratable(ungeneratable, handle)
    print(f"make-pairs: {len(built)} pairs, {len(ungeneratable)} ungeneratable "
          f"log entries -> {paths.pairs}")
    _manifest(cfg).record_stage("make-pairs", {
        "pairs": paths.pairs,
        "ungeneratable": paths.ungeneratable,
    }, extra={"pair_count": len(built)})


def _restore_generator_fields(loaded: list[pairs.ScoredPair],
                              candidate_lists: dict[str, list[tuple[int, float]]]) -> list[pairs.ScoredPair]:
    """Reattach BM25 rank/score from the candidates artifact."""
    by_key = {}
    for qid, clist in candidate_lists.items():
        for rank, (tax_id, value) in enumerate(clist, start=1):
            by_key[(qid, tax_id)] = (rank, value)
    restored = []
    for pair in loaded:
        found = by_key.get(pair.key())
        if found is None:
            raise TaxonormError(f"pair {pair.key()} is absent from the candidates file")
        restored.append(dataclasses.replace(pair, bm25_rank=found[0], bm25_score=found[1]))
    return restored


def stage_rerank(cfg: dict[str, Any]) -> None:
    paths = StagePaths(cfg)
    with paths.pairs.open(encoding="utf-8") as handle:
        loaded = pairs.load_pairs(handle)
    kind = cfg["scorer"]
    if kind == "passthrough":
        with paths.candidates.open(encoding="utf-8") as handle:
            loaded = _restore_generator_fields(loaded, pairs.read_candidates(handle))
        scorer = rerank.PassthroughScorer()
    elif kind == "oracle-stub":
        scorer = rerank.OracleStubScorer()
    elif kind == "external":
        _require(cfg, "scores_in")
        with open(cfg["scores_in"], encoding="utf-8") as handle:
            scorer = rerank.ExternalScorer.from_file(handle, loaded)
    else:
        raise TaxonormError(f"unknown scorer {kind!r}, expected one of {rerank.SCORER_KINDS}")
    selections = rerank.rerank_all(loaded, scorer)
    with paths.predictions.open("w", encoding="utf-8") as handle:
        rerank.write_predictions(selections, handle)
    print(f"rerank: scorer={kind}, {len(selections)} selections -> {paths.predictions}")
    _manifest(cfg).record_stage("rerank", {"predictions": paths.predictions},
                                extra={"scorer": kind})


def stage_evaluate(cfg: dict[str, Any]) -> int:
    paths = StagePaths(cfg)
    with paths.mentions.open(encoding="utf-8") as handle:
        mentions = pairs.read_mentions(handle)
    with paths.candidates.open(encoding="utf-8") as handle:
        candidates = pairs.read_candidates(handle)
    with paths.predictions.open(encoding="utf-8") as handle:
        predictions = rerank.read_predictions(handle)
    corpus_id = f"{Path(cfg['corpus']).name}:{cfg['split']}" if cfg.get("corpus") else cfg["split"]
    report = evaluation.evaluate(mentions, candidates, predictions, corpus=corpus_id)

    concept_text: dict[int, str] = {}
    for dictionary in _load_dictionaries(cfg, paths).values():
        for tax_id, entry in dictionary.entries.items():
            concept_text.setdefault(tax_id, entry.concept_text)
    mismatches = evaluation.lexical_mismatches(report, concept_text)

    text = evaluation.format_report(report)
    if mismatches:
        text += "\nlexical mismatches (wrong id sharing tokens with the query)\n"
        for row in mismatches:
            text += f"{row.query:<40} {row.gold_id:>10} {row.predicted_id:>10} {' '.join(row.shared_tokens)}\n"
    paths.report_text.write_text(text, encoding="utf-8")
    with paths.report_jsonl.open("w", encoding="utf-8") as handle:
        evaluation.write_report_jsonl(report, handle)
        for row in mismatches:
            handle.write(json.dumps({
                "type": "lexical_mismatch",
                "query": row.query,
                "gold_id": row.gold_id,
                "predicted_id": row.predicted_id,
                "shared_tokens": list(row.shared_tokens),
            }, ensure_ascii=False) + "\n")
    print(f"evaluate: accuracy={report.accuracy:.4f} "
          f"({report.correct_at_1}/{report.generatable_mentions} generatable, "
          f"{report.total_mentions} total) -> {paths.report_text}")
    _manifest(cfg).record_stage("evaluate", {
        "report_text": paths.report_text,
        "report_jsonl": paths.report_jsonl,
    }, extra={"accuracy": report.accuracy, "recall_at_k": report.recall_at_k})

    floor = cfg.get("min_accuracy")
    if floor is not None and report.accuracy < float(floor):
        print(f"evaluate: accuracy {report.accuracy:.4f} below floor {float(floor):.4f}",
              file=sys.stderr)
        return EXIT_BELOW_FLOOR
    return 0


def stage_query(cfg: dict[str, Any]) -> None:
    """Ad-hoc retrieval against a built index; prints tax_id<TAB>score lines."""
    paths = StagePaths(cfg)
    if not cfg.get("query_text"):
        raise TaxonormError("query needs at least one mention string")
    if not paths.index.exists():
        raise TaxonormError(f"index file {paths.index} not found; run build-index first")
    with paths.index.open(encoding="utf-8") as handle:
        index = bm25.load_index(handle)
    normalizer = _normalizer(cfg, with_acronyms=True)
    for text in cfg["query_text"]:
        tokens = normalizer.tokenize(text)
        result = bm25.top_k(index, _params(cfg), tokens, int(cfg["k"]))
        print(f"# query: {result.query}")
        for tax_id, value in result.candidates:
            print(f"{tax_id}\t{value:.6f}")


def stage_run_all(cfg: dict[str, Any]) -> int:
    stage_build_dict(cfg)
    stage_build_index(cfg)
    stage_generate(cfg)
    stage_make_pairs(cfg)
    stage_rerank(cfg)
    return stage_evaluate(cfg)


# --- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--names", help="path to names.dmp")
    common.add_argument("--nodes", help="path to nodes.dmp")
    common.add_argument("--ranks", help="comma-separated ranks to build dictionaries for")
    common.add_argument("--name-classes", dest="name_classes",
                        help="comma-separated name classes to include (default: all)")
    common.add_argument("--corpus", help="annotation file (standoff-tsv) or directory (brat-ann)")
    common.add_argument("--format", choices=corpus.ANNOTATION_FORMATS, help="annotation format")
    common.add_argument("--acronyms", help="acronym map file (short<TAB>long)")
    common.add_argument("--ascii-mode", dest="ascii_mode", choices=("transliterate", "drop"))
    common.add_argument("--seed", type=int, help="document split seed")
    common.add_argument("--split", choices=("train", "dev", "test", "all"),
                        help="which subset to process (default test)")
    common.add_argument("--k", type=int, help="candidates per query")
    common.add_argument("--k1", type=float, help="BM25 k1")
    common.add_argument("--k2", type=float, help="BM25 k2")
    common.add_argument("--b", type=float, help="BM25 b")
    common.add_argument("--scorer", choices=rerank.SCORER_KINDS)
    common.add_argument("--outdir", help="run directory for artifacts and manifest")
    common.add_argument("--pairs-out", dest="pairs_out", help="pairs JSONL destination")
    common.add_argument("--scores-in", dest="scores_in", help="scores JSONL from an external scorer")
    common.add_argument("--report-out", dest="report_out",
                        help="report base path (.txt and .jsonl are appended)")
    common.add_argument("--min-accuracy", dest="min_accuracy", type=float,
                        help="exit nonzero when filtered accuracy falls below this")
    common.add_argument("--unlabeled", action="store_const", const=True,
                        help="export pairs without the label column")

    parser = argparse.ArgumentParser(
        prog="taxonorm",
        description="Species mention normalization against the NCBI taxonomy.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler, help_text in [
        ("build-dict", stage_build_dict, "parse the taxonomy dump into rank dictionaries"),
        ("build-index", stage_build_index, "build the BM25 index over the dictionaries"),
        ("generate", stage_generate, "split the corpus and retrieve top-k candidates"),
        ("make-pairs", stage_make_pairs, "construct labeled query/candidate pairs"),
        ("rerank", stage_rerank, "score pairs and select one identifier per query"),
        ("evaluate", stage_evaluate, "compute filtered accuracy and recall@k"),
        ("query", stage_query, "run ad-hoc queries against the index"),
        ("run-all", stage_run_all, "run every stage in order"),
    ]:
        sp = sub.add_parser(name, parents=[common], help=help_text)
        if name == "query":
            sp.add_argument("query_text", nargs="+", help="mention text to retrieve for")
        sp.set_defaults(handler=handler)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        result = args.handler(cfg)
    except TaxonormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return int(result or 0)


if __name__ == "__main__":
    sys.exit(main())
