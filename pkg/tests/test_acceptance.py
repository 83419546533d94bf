"""Acceptance criteria. Each test prints one PASS/FAIL line and asserts the criterion."""
import json
import os
import random
import subprocess
import sys
import time
from pathlib import Path

import jsonschema
import pytest

from gen import random_closed_state, random_state
from oracles import brute_lcs, clipped_ngrams
from todsumkit.baselines import greedy_oracle
from todsumkit.cli import main
from todsumkit.corpus import Dialogue, Utterance
from todsumkit.extract import extract_tuples, render_reference_summary
from todsumkit.factual import classify_errors, factual_prf
from todsumkit.ontology import bundled_ontology_path
from todsumkit.perturb import NoiseSpec, inject_noise_detailed
from todsumkit.rouge import rouge_l, rouge_n, tokenize
from todsumkit.state import DialogueState, StateTuple, serialize_state

DATA = Path(__file__).resolve().parent / "data"


@pytest.fixture
def report(capsys):
    def _report(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return _report


def test_c1_factual_identities(ontology, report):
    rng = random.Random(1)
    t0 = time.perf_counter()
    failures = 0
    n_pairs = 1000
    empty = DialogueState()
    for _ in range(n_pairs):
        h, t = random_closed_state(rng, ontology), random_closed_state(rng, ontology)
        ht, th = factual_prf(h, t), factual_prf(t, h)
        ok = (ht.precision, ht.recall, ht.f1) == (th.recall, th.precision, th.f1)
        ok &= factual_prf(empty, empty).f1 == 1.0
        ok &= factual_prf(t, t).f1 == 1.0 or not t
        for extra in list(t.tuples - h.tuples)[:2]:
            grown = factual_prf(DialogueState(h.tuples | {extra}), t)
            ok &= grown.recall >= ht.recall and grown.n_match == ht.n_match + 1
        failures += not ok
    dt = time.perf_counter() - t0
    report(1, failures == 0 and dt < 5, f"{n_pairs} pairs, {failures} identity failures, {dt:.2f}s (< 5s)")


def test_c2_worked_example(report):
    S = StateTuple
    tgt = DialogueState.of(*(S("hotel", "book_hotel", s, v) for s, v in
                             [("area", "north"), ("price", "cheap"), ("stars", "4"), ("day", "monday")]))
    hyp = DialogueState.of(*(S("hotel", "book_hotel", s, v) for s, v in
                             [("area", "north"), ("price", "cheap"), ("stars", "3")]))
    s = factual_prf(hyp, tgt)
    # exact values 2/3, 1/2, 4/7; 0.6667 and 0.5714 are their 4-digit roundings
    ok = (abs(s.precision - 2 / 3) <= 1e-9 and abs(s.recall - 0.5) <= 1e-9 and abs(s.f1 - 4 / 7) <= 1e-9
          and (round(s.precision, 4), round(s.f1, 4)) == (0.6667, 0.5714) and s.n_match == 2)
    report(2, ok, f"P={s.precision:.10f} R={s.recall:.10f} F1={s.f1:.10f}")


def test_c3_rouge_oracles(report):
    rng = random.Random(3)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(200):
        h = rng.choices("abcdef", k=rng.randint(0, 10))
        r = rng.choices("abcdef", k=rng.randint(0, 10))
        sl = rouge_l(h, r)
        if (h or r) and (sl.overlap, sl.hyp_count, sl.ref_count) != (brute_lcs(h, r), len(h), len(r)):
            bad += 1
        for n in (1, 2):
            m, nh, nr = clipped_ngrams(h, r, n)
            sn = rouge_n(h, r, n)
            if (nh or nr) and (sn.overlap, sn.hyp_count, sn.ref_count) != (m, nh, nr):
                bad += 1
            if nh and nr and sn.precision != m / nh:
                bad += 1
    dt = time.perf_counter() - t0
    report(3, bad == 0 and dt < 10, f"200 token-list pairs, {bad} mismatches, {dt:.2f}s (< 10s)")


def test_c4_closed_loop(ontology, report):
    rng = random.Random(4)
    t0 = time.perf_counter()
    hits = 0
    for _ in range(500):
        s = random_state(rng, ontology, max_domains=3, max_slots=5)
        hits += extract_tuples(render_reference_summary(s, ontology), ontology).tuples == s
    dt = time.perf_counter() - t0
    report(4, hits / 500 >= 0.99 and dt < 10, f"{hits}/500 exact recoveries ({hits / 5:.1f}%, need >= 99%), {dt:.2f}s (< 10s)")


def test_c5_noise_calibration(ontology, report):
    worst = 0.0
    misses = 0
    identical = True
    for target in (0.3, 0.5, 0.7, 0.9):
        for seed in range(100):
            gold = random_state(random.Random(seed), ontology, max_domains=3, max_slots=5)
            spec = NoiseSpec(target, (1, 1, 1), seed)
            a = inject_noise_detailed(gold, spec, ontology)
            b = inject_noise_detailed(gold, spec, ontology)
            identical &= serialize_state(a.state).encode() == serialize_state(b.state).encode()
            gap = abs(a.accuracy - target) * len(gold)
            worst = max(worst, gap)
            misses += gap > 1
    report(5, misses == 0 and identical,
           f"400 runs, {misses} outside 1/n, worst |acc - target| = {worst:.3f}/n, seeds reproducible: {identical}")


def test_c6_greedy_oracle(report):
    words = "the user hotel cheap north book a taxi at 10:00 please thanks train to london day".split()
    rng = random.Random(6)
    bad = 0
    slowest = 0.0
    for k in range(100):
        turns = tuple(Utterance("user", " ".join(rng.choices(words, k=rng.randint(1, 10))))
                      for _ in range(rng.randint(1, 8)))
        ref = " ".join(rng.choices(words, k=rng.randint(3, 15)))
        t0 = time.perf_counter()
        out = greedy_oracle(Dialogue(f"g{k}", turns), ref)
        slowest = max(slowest, time.perf_counter() - t0)
        best_single = max(rouge_n(tokenize(u.text), tokenize(ref), 2).f for u in turns)
        bad += out.score < best_single
    report(6, bad == 0 and slowest < 1, f"100 dialogues, {bad} below best single utterance, slowest run {slowest * 1000:.1f}ms (< 1s)")


def test_c7_error_accounting(ontology, report):
    rng = random.Random(7)
    bad = 0
    for _ in range(500):
        h, t = random_closed_state(rng, ontology), random_closed_state(rng, ontology)
        e = classify_errors(h, t)
        extra, missing = len(h.tuples - t.tuples), len(t.tuples - h.tuples)
        hyp_side = e.domain_error + e.intent_error + e.slot_value_error + e.slot_redundancy
        gold_side = e.slot_value_error + e.slot_missing
        bad += (hyp_side, gold_side) != (extra, missing)
    gold = DialogueState.of(StateTuple("hotel", "book_hotel", "stars", "4"), StateTuple("hotel", "book_hotel", "day", "monday"))
    hyp = extract_tuples("The user books a 3-star hotel on monday.", ontology).tuples
    fig = classify_errors(hyp, gold)
    ok_fig = fig.slot_value_error == 1 and fig.total == 1
    report(7, bad == 0 and ok_fig, f"500 pairs, {bad} accounting mismatches; 3-star vs 4-star -> {fig.counts}")


def test_c8_corpus_stats(tmp_path, report):
    todsum = os.environ.get("TODSUM_CORPUS")
    out = tmp_path / "stats.json"
    if todsum and Path(todsum).exists():
        rc = main(["stats", "--corpus", todsum, "--no-validate", "--out", str(out)])
        s = json.loads(out.read_text())
        paper = {"avg_dialogue_len": 186.9, "avg_turns": 14.1, "avg_summary_len": 45.4}
        within = {k: abs(s[k] - v) / v <= 0.05 for k, v in paper.items()}
        ok = rc == 0 and s["size"] == 9906 and all(within.values())
        report(8, ok, f"TODSum: size={s['size']} (9906) " + ", ".join(f"{k}={s[k]:.2f} vs {v}" for k, v in paper.items()))
    else:
        rc = main(["stats", "--corpus", str(DATA / "stats20.jsonl"), "--out", str(out)])
        s = json.loads(out.read_text())
        # dialogue i: 2 + i%4 turns of 6 tokens, summary 5 + i%5 tokens, i = 0..19
        want = {"size": 20, "avg_turns": 70 / 20, "avg_dialogue_len": 6 * 70 / 20, "avg_summary_len": 140 / 20}
        ok = rc == 0 and all(s[k] == v for k, v in want.items())
        report(8, ok, "no TODSUM_CORPUS; 20-dialogue fixture: " + ", ".join(f"{k}={s[k]} (want {v})" for k, v in want.items()))


def test_c9_end_to_end(tmp_path, report):
    gold = DATA / "fixture50.jsonl"
    cmd = [sys.executable, "-m", "todsumkit"]
    t0 = time.perf_counter()
    base = subprocess.Popen(cmd + ["baseline", "--corpus", str(gold), "--method", "oracle"], stdout=subprocess.PIPE)
    ev = subprocess.run(cmd + ["evaluate", "--gold", str(gold), "--pred", "-"], stdin=base.stdout, capture_output=True)
    base.stdout.close()
    base.wait()
    dt = time.perf_counter() - t0
    rep = json.loads(ev.stdout)
    schema = json.loads((bundled_ontology_path().parent / "report.schema.json").read_text(encoding="utf-8"))
    errors = [e.message for e in jsonschema.Draft202012Validator(schema).iter_errors(rep)]
    conv = rep["config"]["conventions"]
    echoed = (set(conv) >= {"rouge", "factual", "state_accuracy", "extraction"}
              and rep["config"]["tokenizer"]["stemming"] is False
              and len(rep["config"]["ontology"]["sha256"]) == 64)
    ok = base.returncode == 0 and ev.returncode == 0 and not errors and echoed and dt < 30 and rep["n_samples"] == 50
    report(9, ok, f"pipeline {dt:.2f}s (< 30s), schema errors: {len(errors)}, conventions echoed: {echoed}")
