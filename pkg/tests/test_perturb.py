import random
import warnings

import pytest
from hypothesis import given, strategies as st

from gen import random_closed_state, random_state, realistic_corpus
from todsumkit.corpus import Dialogue, Utterance
from todsumkit.perturb import (
    NoiseSpec, derive_seed, inject_noise, inject_noise_detailed, make_da_splits, make_rng, tuple_accuracy,
)
from todsumkit.state import DialogueState, StateTuple

seeds = st.integers(0, 2**32 - 1)
mixes = st.tuples(*[st.integers(0, 3)] * 3).filter(any)


def test_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(1.5)
    with pytest.raises(ValueError):
        NoiseSpec(0.5, (0, 0, 0))
    with pytest.raises(ValueError):
        NoiseSpec(0.5, (1, -1, 1))


def test_accuracy_definition():
    a, b, c = (StateTuple("hotel", "find_hotel", "area", v) for v in ("north", "south", "east"))
    gold = DialogueState.of(a, b)
    assert tuple_accuracy(DialogueState.of(a, b, c), gold) == 2 / 3
    assert tuple_accuracy(DialogueState.of(a), gold) == 0.5
    assert tuple_accuracy(DialogueState(), DialogueState()) == 1.0


def test_empty_state_unchanged(ontology):
    r = inject_noise_detailed(DialogueState(), NoiseSpec(0.3), ontology)
    assert r.state == DialogueState() and r.edits == ()


@given(seeds, st.sampled_from([0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0]), mixes)
def test_calibrated_within_one_over_n(ontology, seed, target, mix):
    gold = random_state(random.Random(seed), ontology, max_domains=3, max_slots=5)
    r = inject_noise_detailed(gold, NoiseSpec(target, mix, seed), ontology)
    assert abs(r.accuracy - target) <= 1 / len(gold) or (target == 0.0 and mix[0] == mix[1] == 0)
    assert r.accuracy == tuple_accuracy(r.state, gold)


@given(seeds)
def test_same_seed_same_output(ontology, seed):
    gold = random_closed_state(random.Random(seed), ontology)
    spec = NoiseSpec(0.5, (1, 1, 1), seed)
    assert inject_noise(gold, spec, ontology) == inject_noise(gold, spec, ontology)


def test_mix_restricts_operations(ontology):
    gold = random_state(random.Random(1), ontology, max_domains=3, max_slots=5)
    assert set(inject_noise_detailed(gold, NoiseSpec(0.3, (1, 0, 0)), ontology).edits) == {"delete"}
    r = inject_noise_detailed(gold, NoiseSpec(0.3, (0, 0, 1)), ontology)
    assert set(r.edits) == {"insert"} and gold.tuples <= r.state.tuples


def test_derived_seed_depends_on_key_not_order():
    a = make_rng(derive_seed(5, "dlg001")).integers(1 << 30)
    b = make_rng(derive_seed(5, "dlg001")).integers(1 << 30)
    c = make_rng(derive_seed(5, "dlg002")).integers(1 << 30)
    assert a == b != c


def _corpus(n_hotel, n_taxi, n_multi):
    def d(i, *doms):
        return Dialogue(i, (Utterance("user", "hi"),), DialogueState(), "s", frozenset(doms))
    return ([d(f"h{k}", "hotel") for k in range(n_hotel)] + [d(f"t{k}", "taxi") for k in range(n_taxi)]
            + [d(f"m{k}", "hotel", "taxi") for k in range(n_multi)])


def test_split_sizes_round_half_up():
    # 25 hotel dialogues * 0.10 = 2.5 -> 3 few-shot; 15 * 0.10 = 1.5 -> 2
    s = make_da_splits(_corpus(25, 7, 4), "hotel", 0.10, seed=1)
    assert len(s.fewshot) == 3 and len(s.test) == 22
    assert set(s.train) == {f"t{k}" for k in range(7)} | set(s.fewshot)
    assert not {i for i in s.train + s.test if i.startswith("m")}
    assert len(make_da_splits(_corpus(15, 1, 0), "hotel", 0.10).fewshot) == 2


def test_split_partitions_disjoint_and_seeded():
    c = _corpus(40, 10, 3)
    a = make_da_splits(c, "hotel", 0.25, seed=3)
    assert a == make_da_splits(c, "hotel", 0.25, seed=3)
    assert not set(a.test) & set(a.train)
    assert a.fewshot != make_da_splits(c, "hotel", 0.25, seed=4).fewshot


def test_split_with_test_ids():
    c = _corpus(20, 10, 0)
    test_ids = {f"h{k}" for k in range(5)} | {"t0"}
    s = make_da_splits(c, "hotel", 0.5, seed=0, test_ids=test_ids)
    assert set(s.test) == {f"h{k}" for k in range(5)}
    assert len(s.fewshot) == 8 and not set(s.fewshot) & test_ids
    assert "t0" not in s.train


def test_split_oversized_fewshot_warns():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        s = make_da_splits(_corpus(3, 1, 0), "hotel", 2.0)
    assert len(s.fewshot) == 3 and w


def test_split_unknown_domain():
    with pytest.raises(ValueError):
        make_da_splits(_corpus(3, 1, 0), "train")


def test_realistic_fixture_noise_is_calibrated(ontology):
    for d in realistic_corpus(11, 30, ontology):
        r = inject_noise_detailed(d.state, NoiseSpec(0.5, (1, 1, 1), 11), ontology, make_rng(derive_seed(11, d.id)))
        assert abs(r.accuracy - 0.5) <= 1 / len(d.state)
