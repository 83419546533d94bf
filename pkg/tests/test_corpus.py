import json
import random

import pytest
from hypothesis import given, strategies as st

from gen import realistic_corpus
from todsumkit.corpus import (
    CorpusError, CorpusValidationError, Dialogue, Prediction, Utterance, corpus_stats, load_corpus,
    load_predictions, save_corpus, save_predictions,
)
from todsumkit.state import DialogueState, StateTuple


def _rec(**over):
    rec = {"id": "d1", "turns": [{"speaker": "user", "text": "hi"}],
           "state": [{"domain": "hotel", "intent": "find_hotel", "slot": "price", "value": "inexpensive"}],
           "summary": "The user looks for a cheap hotel."}
    rec.update(over)
    return rec


def _write(tmp_path, *recs, raw=None):
    p = tmp_path / "c.jsonl"
    p.write_text(raw if raw is not None else "".join(json.dumps(r) + "\n" for r in recs), encoding="utf-8")
    return p


def test_load_canonicalizes_and_derives_domains(tmp_path, ontology):
    [d] = load_corpus(_write(tmp_path, _rec()), ontology)
    assert d.state == DialogueState.of(StateTuple("hotel", "find_hotel", "price", "cheap"))
    assert d.domains == {"hotel"}


def test_empty_file(tmp_path, ontology):
    assert load_corpus(_write(tmp_path, raw=""), ontology) == []


def test_order_preserved(tmp_path, ontology):
    recs = [_rec(id=f"d{k}") for k in (3, 1, 2)]
    assert [d.id for d in load_corpus(_write(tmp_path, *recs), ontology)] == ["d3", "d1", "d2"]


def test_unknown_slot_named(tmp_path, ontology):
    bad = _rec(state=[{"domain": "hotel", "intent": "find_hotel", "slot": "colour", "value": "red"}])
    with pytest.raises(CorpusValidationError, match="colour") as err:
        load_corpus(_write(tmp_path, bad), ontology)
    assert err.value.line == 1 and err.value.violations[0].field == "state.slot"


@pytest.mark.parametrize("rec,needle", [
    (_rec(turns=[{"speaker": "bot", "text": "hi"}]), "speaker"),
    (_rec(turns=[]), "no turns"),
    (_rec(domains=["taxi"]), "declared"),
    (_rec(state=[{"domain": "hotel", "intent": "find_hotel", "slot": "price", "value": "free"}]), "free"),
])
def test_validation_errors(tmp_path, ontology, rec, needle):
    with pytest.raises(CorpusValidationError, match=needle):
        load_corpus(_write(tmp_path, rec), ontology)


def test_parse_error_has_line(tmp_path, ontology):
    with pytest.raises(CorpusError) as err:
        load_corpus(_write(tmp_path, raw=json.dumps(_rec()) + "\n{broken\n"), ontology)
    assert err.value.line == 2


def test_duplicate_ids(tmp_path, ontology):
    with pytest.raises(CorpusValidationError, match="duplicate"):
        load_corpus(_write(tmp_path, _rec(), _rec()), ontology)


@given(st.integers(0, 2**32 - 1))
def test_save_load_round_trip(tmp_path_factory, ontology, seed):
    corpus = realistic_corpus(seed, 5, ontology)
    p = tmp_path_factory.mktemp("rt") / "c.jsonl"
    save_corpus(corpus, p)
    assert load_corpus(p, ontology) == corpus
    first = p.read_bytes()
    save_corpus(load_corpus(p, ontology), p)
    assert p.read_bytes() == first


def test_predictions_round_trip(tmp_path):
    preds = [Prediction("a", "sum"), Prediction("b", None, DialogueState.of(StateTuple("taxi", "book_taxi", "leave_at", "10:00"))),
             Prediction("c", output="x <|endoftext|> y")]
    p = tmp_path / "p.jsonl"
    save_predictions(preds, p)
    assert load_predictions(p) == preds


def test_stats_fixture_hand_means(data_dir, ontology):
    s = corpus_stats(load_corpus(data_dir / "stats20.jsonl", ontology))
    assert (s.size, s.avg_turns, s.avg_dialogue_len, s.avg_summary_len) == (20, 3.5, 21.0, 7.0)
    assert s.avg_domains_per_dialogue == 1.5 and s.avg_slots_per_dialogue == 1.5


def test_slot_count_variants():
    st_ = DialogueState.of(StateTuple("hotel", "find_hotel", "area", "north"),
                           StateTuple("restaurant", "find_restaurant", "area", "north"))
    s = corpus_stats([Dialogue("x", (Utterance("user", "hi"),), st_, "s")])
    assert s.avg_slots_per_dialogue == 2 and s.avg_slot_names_per_dialogue == 1


@given(st.integers(0, 2**32 - 1))
def test_stats_permutation_invariant(ontology, seed):
    corpus = realistic_corpus(seed, 8, ontology)
    shuffled = corpus[:]
    random.Random(seed).shuffle(shuffled)
    assert corpus_stats(corpus) == corpus_stats(shuffled)


def test_stats_empty_raises():
    with pytest.raises(ValueError):
        corpus_stats([])
