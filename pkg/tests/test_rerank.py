import dataclasses
import io
import random

import pytest
from hypothesis import given, strategies as st

from taxonorm.bm25 import Bm25Params
from taxonorm.errors import TaxonormError
from taxonorm.pairs import ScoredPair, make_pairs, write_scores
from taxonorm.rerank import (
    ExternalScorer,
    OracleStubScorer,
    PassthroughScorer,
    group_by_query,
    read_predictions,
    rerank_all,
    select,
    write_predictions,
)
from helpers import NIDULANS_GOLD

PARAMS = Bm25Params()


def pair(qid, cand_id, label=0, rank=None, bm25=None, score=None, query="q"):
    return ScoredPair(qid, query, None, cand_id, f"text {cand_id}", label,
                      bm25_rank=rank, bm25_score=bm25, score=score)


def nidulans_pairs(nidulans_index, nidulans_dictionaries, k=10):
    pairs, _ = make_pairs([("aspergillus nidulans", NIDULANS_GOLD)],
                          nidulans_dictionaries, nidulans_index, PARAMS, k=k)
    return pairs


def test_oracle_stub_on_nidulans_example_selects_the_gold(nidulans_index, nidulans_dictionaries):
    scored = OracleStubScorer().score_batch(nidulans_pairs(nidulans_index, nidulans_dictionaries))
    assert select(scored) == (NIDULANS_GOLD, 1.0)


def test_single_pair_wins_regardless_of_score():
    assert select([pair("q", 77, score=0.0)]) == (77, 0.0)


def test_empty_batch_is_the_no_candidates_outcome():
    assert select([]) is None


def test_unscored_pair_is_an_error():
    with pytest.raises(TaxonormError):
        select([pair("q", 7)])


def test_select_matches_linear_scan_oracle():
    rng = random.Random(11)
    for _ in range(25):
        scores = rng.sample(range(1000), 10)
        batch = [pair("q", cand_id, rank=i + 1, score=s / 1000.0)
                 for i, (cand_id, s) in enumerate(zip(rng.sample(range(1, 5000), 10), scores))]
        best = None
        for p in batch:  # independent max scan
            if best is None or p.score > best.score:
                best = p
        assert select(batch) == (best.cand_id, best.score)


def test_tie_breaks_prefer_generator_rank_then_tax_id():
    batch = [pair("q", 900, rank=1, score=0.5), pair("q", 5, rank=2, score=0.5)]
    assert select(batch) == (900, 0.5)
    no_rank = [pair("q", 900, score=0.5), pair("q", 5, score=0.5)]
    assert select(no_rank) == (5, 0.5)


def test_selection_ignores_input_ordering():
    batch = [pair("q", cand, rank=r, score=s)
             for cand, r, s in [(10, 1, 0.3), (20, 2, 0.9), (30, 3, 0.9)]]
    shuffled = [batch[2], batch[0], batch[1]]
    assert select(batch) == select(shuffled) == (20, 0.9)


def test_passthrough_reproduces_bm25_rank_one(nidulans_index, nidulans_dictionaries):
    pairs = nidulans_pairs(nidulans_index, nidulans_dictionaries)
    selections = rerank_all(pairs, PassthroughScorer())
    qid = pairs[0].query_id
    assert selections[qid][0] == pairs[0].cand_id  # rank-1 candidate
    assert selections[qid][1] == 1.0  # min-max top


def test_passthrough_requires_generator_scores():
    with pytest.raises(TaxonormError, match="BM25"):
        PassthroughScorer().score_batch([pair("q", 7, rank=1)])


def test_passthrough_constant_scores_map_to_one():
    batch = [pair("q", 7, rank=1, bm25=2.0), pair("q", 9, rank=2, bm25=2.0)]
    scored = PassthroughScorer().score_batch(batch)
    assert [p.score for p in scored] == [1.0, 1.0]
    assert select(scored) == (7, 1.0)  # tie falls to generator rank


def test_oracle_stub_requires_labels():
    batch = [dataclasses.replace(pair("q", 7), label=None)]
    with pytest.raises(TaxonormError):
        OracleStubScorer().score_batch(batch)


def test_oracle_stub_is_perfect_when_gold_is_retrieved(nidulans_index, nidulans_dictionaries):
    mentions = [("aspergillus nidulans", NIDULANS_GOLD), ("phyllotopsis nidulans", 38812)]
    pairs, _ = make_pairs(mentions, nidulans_dictionaries, nidulans_index, PARAMS, k=10)
    selections = rerank_all(pairs, OracleStubScorer())
    golds = {p.query_id: p.query_gold_id for p in pairs}
    assert all(selections[qid][0] == golds[qid] for qid in selections)


def test_external_scorer_round_trips_saved_scores(nidulans_index, nidulans_dictionaries):
    pairs = nidulans_pairs(nidulans_index, nidulans_dictionaries)
    rng = random.Random(23)
    scored = [dataclasses.replace(p, score=rng.random()) for p in pairs]
    saved = io.StringIO()
    write_scores(scored, saved)
    scorer = ExternalScorer.from_file(io.StringIO(saved.getvalue()), pairs)
    selections = rerank_all(pairs, scorer)
    # independent groupwise argmax over the saved scores
    expected = {}
    for p in scored:
        if p.query_id not in expected or p.score > expected[p.query_id][1]:
            expected[p.query_id] = (p.cand_id, p.score)
    assert selections == expected


def test_external_scorer_rejects_incomplete_files(nidulans_index, nidulans_dictionaries):
    pairs = nidulans_pairs(nidulans_index, nidulans_dictionaries)
    scored = [dataclasses.replace(p, score=0.5) for p in pairs[:-1]]
    saved = io.StringIO()
    write_scores(scored, saved)
    with pytest.raises(TaxonormError):
        ExternalScorer.from_file(io.StringIO(saved.getvalue()), pairs)


def test_rerank_all_groups_by_query(nidulans_index, nidulans_dictionaries):
    mentions = [("aspergillus nidulans", NIDULANS_GOLD), ("olgaea nidulans", 591996)]
    pairs, _ = make_pairs(mentions, nidulans_dictionaries, nidulans_index, PARAMS, k=5)
    groups = group_by_query(pairs)
    assert len(groups) == 2
    assert all(len(batch) == 5 for batch in groups.values())
    selections = rerank_all(pairs, PassthroughScorer())
    assert set(selections) == set(groups)


def test_rerank_all_reports_the_offending_query():
    class Boom:
        def score_batch(self, batch):
            raise RuntimeError("kaput")

    with pytest.raises(TaxonormError, match="q1"):
        rerank_all([pair("q1", 7, rank=1)], Boom())


@given(st.lists(st.tuples(st.integers(1, 500), st.integers(0, 1024)),
                min_size=1, max_size=10, unique_by=lambda t: t[0]),
       st.sampled_from([lambda s: 0.2 + 0.5 * s, lambda s: s ** 3, lambda s: s / 2]))
def test_argmax_is_invariant_under_monotone_transforms(cands, transform):
    # scores on a 1/1024 grid keep the transforms injective in float64
    batch = [pair("q", cand_id, rank=i + 1, score=s / 1024.0)
             for i, (cand_id, s) in enumerate(cands)]
    transformed = [dataclasses.replace(p, score=transform(p.score)) for p in batch]
    assert select(batch)[0] == select(transformed)[0]


def test_predictions_file_round_trip():
    selections = {"qa": (162425, 1.0), "qb": (7, 0.25)}
    out = io.StringIO()
    write_predictions(selections, out)
    assert out.getvalue() == "qa\t162425\t1.000000\nqb\t7\t0.250000\n"
    assert read_predictions(io.StringIO(out.getvalue())) == selections
