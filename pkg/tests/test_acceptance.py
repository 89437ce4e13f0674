"""Release gate: one test per acceptance criterion.

Each criterion prints its own PASS/FAIL line (visible with `pytest -s`,
or in captured output otherwise). The BM25 oracle here is an independent
transcription of the scoring formula; it shares no code with the engine.
"""

import io
import math
import random
import time
from collections import Counter
from contextlib import contextmanager
from pathlib import Path

from taxonorm import cli
from taxonorm.bm25 import Bm25Params, build_index, top_k
from taxonorm.corpus import MentionAnnotation, dedup_mentions, load_annotations, split_documents
from taxonorm.evaluation import evaluate
from taxonorm.normalize import normalize
from taxonorm.pairs import make_pairs, query_key
from taxonorm.rerank import OracleStubScorer, PassthroughScorer, rerank_all
from taxonorm.taxdump import (
    ConceptEntry,
    RankDictionary,
    build_dictionaries,
    parse_names,
    parse_nodes,
    read_dictionary,
    write_dictionary,
)
from helpers import DATA, NIDULANS_CANDIDATES, NIDULANS_GOLD


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"FAIL: {name}")
        raise
    print(f"PASS: {name}")


# --- criterion 1: BM25 oracle equivalence --------------------------------------

def oracle_top_k(docs, doc_ids, query, params, k):
    n = len(docs)
    avgdl = sum(len(d) for d in docs) / n
    ranked = []
    for doc, tax_id in zip(docs, doc_ids):
        tf = Counter(doc)
        total = 0.0
        for term, qf in Counter(query).items():
            f = tf.get(term, 0)
            if f == 0:
                continue
            df = sum(1 for d in docs if term in d)
            idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
            big_k = params.k1 * (1.0 - params.b + params.b * len(doc) / avgdl)
            total += (idf
                      * (params.k1 + 1.0) * f / (big_k + f)
                      * (params.k2 + 1.0) * qf / (params.k2 + qf))
        if total > 0.0:
            ranked.append((tax_id, total))
    ranked.sort(key=lambda pair: (-pair[1], pair[0]))
    return ranked[:k]


def test_bm25_oracle_equivalence_on_randomized_instances():
    with criterion("BM25 oracle equivalence (1000 randomized instances, N <= 200, < 1 min)"):
        rng = random.Random(20260811)
        started = time.perf_counter()
        instances = 0
        while instances < 1000:
            n = rng.randint(1, 200)
            vocab = [f"t{i}" for i in range(rng.randint(3, 40))]
            docs = [[rng.choice(vocab) for _ in range(rng.randint(1, 10))] for _ in range(n)]
            doc_ids = rng.sample(range(1, 1_000_000), n)
            index = build_index([
                ConceptEntry(tax_id, " ".join(doc), tuple(doc))
                for tax_id, doc in zip(doc_ids, docs)
            ])
            if rng.random() < 0.5:
                params = Bm25Params()
            else:
                params = Bm25Params(
                    k1=rng.uniform(0.0, 2.5),
                    k2=rng.choice([0.0, 1.0, 10.0, 100.0, 1000.0]),
                    b=rng.uniform(0.0, 1.0),
                )
            query = [rng.choice(vocab + ["oov1", "oov2"])
                     for _ in range(rng.randint(1, 6))]
            k = rng.randint(1, 15)
            got = top_k(index, params, query, k).candidates
            want = oracle_top_k(docs, doc_ids, query, params, k)
            assert [t for t, _ in got] == [t for t, _ in want]
            for (_, got_score), (_, want_score) in zip(got, want):
                assert abs(got_score - want_score) <= 1e-9
            instances += 1
        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, f"oracle sweep took {elapsed:.1f}s"


# --- criterion 2: taxdump parsing ------------------------------------------------

EXPECTED_DICTIONARIES = {
    "species": {
        7: "azorhizobium caulinodans azotirhizobium caulinodans",
        162425: "aspergillus nidulans aspergillus nidulellus emericella nidulans",
        41734: ("aspergillus latus aspergillus nidulans var latus "
                "aspergillus sp ajc 2016b emericella nidulans var lata"),
        1810908: ("aspergillus delacroixii aspergillus delacroxii "
                  "aspergillus nidulans var echinulatus aspergillus spinulosporus "
                  "emericella echinulata emericella nidulans var echinulata"),
        463277: "synechococcus nidulans",
        1898863: "mecopus nidulans",
        38812: "phyllotopsis nidulans",
        523898: "nassella nidulans",
        202207: "aphanothece nidulans",
        591996: "olgaea nidulans",
        245251: "oxalis nidulans",
        9606: "homo sapiens human",
        10090: "mus musculus mouse",
        562: "escherichia coli",
    },
    "genus": {
        6: "azorhizobium azorhizobium dreyfus et al 1988",
        5052: "aspergillus",
    },
    "strain": {438753: "azorhizobium caulinodans ors 571"},
    "family": {1131492: "aspergillaceae"},
    "order": {5042: "eurotiales"},
    "phylum": {4890: "ascomycota sac fungi"},
}


def test_taxdump_parses_to_expected_dictionaries_and_round_trips():
    with criterion("taxdump parsing: miniature dump -> exact dictionaries, bitwise round-trip"):
        with (DATA / "names.dmp").open("rb") as handle:
            names = parse_names(handle)
        with (DATA / "nodes.dmp").open("rb") as handle:
            nodes = parse_nodes(handle)
        assert len({rank for _, rank in nodes.values()}) >= 3
        assert len(nodes) >= 10
        dictionaries = build_dictionaries(names, nodes, normalize)
        got = {
            rank: {tax_id: entry.concept_text for tax_id, entry in dictionary.entries.items()}
            for rank, dictionary in dictionaries.items()
        }
        assert got == EXPECTED_DICTIONARIES
        assert got["species"][7] == "azorhizobium caulinodans azotirhizobium caulinodans"
        for dictionary in dictionaries.values():
            first = io.StringIO()
            write_dictionary(dictionary, first)
            reloaded = read_dictionary(io.StringIO(first.getvalue()), dictionary.rank)
            assert reloaded == dictionary
            second = io.StringIO()
            write_dictionary(reloaded, second)
            assert second.getvalue() == first.getvalue()


# --- criterion 3: ten-candidate example shape -------------------------------------

NIDULANS_LABELS = {
    162425: 1, 41734: 0, 1810908: 0, 463277: 0, 1898863: 0,
    38812: 0, 523898: 0, 202207: 0, 591996: 0, 245251: 0,
}


def test_nidulans_example_candidates_and_labels(nidulans_index, nidulans_dictionaries):
    with criterion("candidate example: k=10 retrieval contains 162425, labels match"):
        retrieved = top_k(nidulans_index, Bm25Params(), ["aspergillus", "nidulans"], 10)
        assert 162425 in {tax_id for tax_id, _ in retrieved.candidates}
        pairs, ungeneratable = make_pairs(
            [("aspergillus nidulans", NIDULANS_GOLD)],
            nidulans_dictionaries, nidulans_index, Bm25Params(), k=10)
        assert ungeneratable == []
        assert {p.cand_id: p.label for p in pairs} == NIDULANS_LABELS


# --- criterion 4: evaluation filter ----------------------------------------------

def test_evaluation_filter_and_oracle_stub():
    with criterion("evaluation filter: 10/7/5 -> accuracy 5/7, recall 0.7; oracle-stub -> 1.0"):
        mentions = [(f"species {i}", 100 + i) for i in range(10)]
        candidates = {}
        predictions = {}
        for i, (surface, gold) in enumerate(mentions):
            qid = query_key(surface, gold)
            if i < 7:
                candidates[qid] = [(gold, 2.0), (999, 1.0)]
                predictions[qid] = (gold, 1.0) if i < 5 else (999, 0.9)
            else:
                candidates[qid] = [(999, 1.0)]
                predictions[qid] = (999, 0.9)
        report = evaluate(mentions, candidates, predictions, corpus="synthetic")
        assert report.total_mentions == 10
        assert report.generatable_mentions == 7
        assert report.correct_at_1 == 5
        assert abs(report.accuracy - 5 / 7) < 1e-12
        assert abs(report.recall_at_k - 0.7) < 1e-12

        # oracle-stub is perfect on arbitrary corpora once the filter applies
        rng = random.Random(77)
        vocab = sorted({t for text in NIDULANS_CANDIDATES.values() for t in text.split()})
        entries = [ConceptEntry.from_text(t, text) for t, text in NIDULANS_CANDIDATES.items()]
        index = build_index(entries)
        dictionaries = {"species": RankDictionary("species", {e.tax_id: e for e in entries})}
        for _ in range(20):
            mentions = list(dict.fromkeys(
                (" ".join(rng.sample(vocab, rng.randint(1, 3))),
                 rng.choice(sorted(NIDULANS_CANDIDATES)))
                for _ in range(rng.randint(2, 12))
            ))
            pairs, _ = make_pairs(mentions, dictionaries, index, Bm25Params(), k=10)
            if not pairs:
                continue
            grouped = {}
            for pair in pairs:
                grouped.setdefault(pair.query_id, []).append((pair.cand_id, pair.bm25_score))
            selections = rerank_all(pairs, OracleStubScorer())
            report = evaluate(mentions, grouped, selections, corpus="random")
            if report.generatable_mentions:
                assert report.accuracy == 1.0


# --- criterion 5: split and dedup --------------------------------------------------

def test_split_shapes_and_dedup_idempotence():
    with criterion("split/dedup: 100 -> (80,10,10), 800 -> (640,80,80), dedup idempotent"):
        linnaeus = split_documents([f"d{i}" for i in range(100)], seed=1)
        assert (len(linnaeus.train), len(linnaeus.dev), len(linnaeus.test)) == (80, 10, 10)
        s800 = split_documents([f"d{i}" for i in range(800)], seed=1)
        assert (len(s800.train), len(s800.dev), len(s800.test)) == (640, 80, 80)

        rng = random.Random(5)
        raw = [
            MentionAnnotation(f"doc{rng.randint(0, 3)}", 0, 5,
                              rng.choice(["mouse", "Mouse", "human", "rat "]),
                              rng.choice([9606, 10090]))
            for _ in range(40)
        ]
        once = dedup_mentions(raw, normalize)
        again = dedup_mentions(
            [MentionAnnotation("d", 0, max(1, len(s)), s, g) for s, g in once], normalize)
        assert again == once


# --- criterion 6: determinism -------------------------------------------------------

def test_run_all_is_reproducible(tmp_path):
    with criterion("determinism: run-all twice -> byte-identical predictions and reports"):
        def run(outdir: Path):
            args = [
                "run-all",
                "--names", str(DATA / "names.dmp"),
                "--nodes", str(DATA / "nodes.dmp"),
                "--corpus", str(DATA / "corpus.tsv"),
                "--acronyms", str(DATA / "acronyms.tsv"),
                "--split", "all",
                "--seed", "13",
                "--outdir", str(outdir),
            ]
            assert cli.main(args) == 0

        first, second = tmp_path / "a", tmp_path / "b"
        run(first)
        run(second)
        for name in ["predictions_all.tsv", "report_all.txt", "report_all.jsonl"]:
            assert (first / name).read_bytes() == (second / name).read_bytes(), name


# --- criterion 7: full-scale numbers note -----------------------------------------

def test_passthrough_is_exactly_bm25_rank_one(dictionaries):
    note = ("full-scale note: published accuracies (e.g. LINNAEUS 59.58+-13.56 "
            "retrieval-only -> 88.56+-5.12 reranked) need the full corpora, the "
            "2020-03-11 dump and GPU fine-tuning; at desk scale the property suite "
            "stands in, and passthrough must equal rank-1-of-BM25")
    with criterion(note):
        entries = []
        for dictionary in dictionaries.values():
            for tax_id in sorted(dictionary.entries):
                entry = dictionary.entries[tax_id]
                if entry.tokens:
                    entries.append(entry)
        index = build_index(sorted(entries, key=lambda e: e.tax_id))
        with (DATA / "corpus.tsv").open(encoding="utf-8") as handle:
            raw = load_annotations(handle)
        mentions = dedup_mentions(raw, normalize)
        pairs, _ = make_pairs(mentions, dictionaries, index, Bm25Params(), k=10)
        selections = rerank_all(pairs, PassthroughScorer())
        rank_one = {}
        for pair in pairs:
            if pair.bm25_rank == 1:
                rank_one[pair.query_id] = pair.cand_id
        assert selections.keys() == rank_one.keys()
        for qid, (tax_id, _) in selections.items():
            assert tax_id == rank_one[qid], qid
