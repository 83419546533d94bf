"""``todsum`` command line: evaluation, ROUGE, extraction, codec, baselines, noise, splits, stats.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import tempfile
import warnings
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from math import fsum
from pathlib import Path

from . import __version__
from .baselines import greedy_oracle, lead_k
from .corpus import (
    CorpusError, Dialogue, Prediction, corpus_stats, dialogue_from_json, iter_jsonl,
    load_corpus, load_predictions, save_corpus, save_predictions,
)
from .extract import extract_tuples
from .factual import aggregate_report, classify_errors, factual_prf
from .ontology import OntologyError, bundled_ontology_path, load_ontology
from .perturb import PRNG, NoiseSpec, derive_seed, inject_noise_detailed, make_da_splits, make_rng
from .rouge import Tokenizer, rouge_all
from .state import (
    DialogueState, StateParseError, decode_joint_output, encode_joint_target, parse_state,
    serialize_state, state_match_accuracy,
)

SCHEMA_VERSION = "1.0"
ROUGE_KEYS = ("rouge-1", "rouge-2", "rouge-l")

CONVENTIONS = {
    "rouge": {
        "level": "sentence-level; each summary is one token sequence",
        "counts": "clipped n-gram multiset intersection",
        "rouge_l": "longest common subsequence, no summary-level union",
        "f": "harmonic mean of P and R (beta = 1)",
        "stemming": False,
        "stopwords_removed": False,
        "no_units_on_either_side": "1.0 if token lists are identical else 0.0",
        "corpus_mean": "unweighted mean of per-sample scores",
    },
    "factual": {
        "unit": "(domain, intent, slot, value) tuple, exact match on all four fields",
        "both_empty": 1.0,
        "one_side_empty": 0.0,
        "micro": "pooled match/hyp/tgt counts",
        "macro": "mean of per-sample P/R/F1",
        "error_cascade": "domain_error > intent_error > slot_value_error > slot_redundancy; leftover gold = slot_missing",
        "slot_value_pairing": "one-to-one in sorted order per (domain, intent, slot)",
    },
    "state_accuracy": "joint set match: exact equality of predicted and gold tuple sets",
    "extraction": "rule-based, ontology-driven; undecidable intents excluded",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@lru_cache(maxsize=4)
def _ontology(path: str):
    return load_ontology(path)


def _ontology_path(args) -> str:
    return str(Path(args.ontology).resolve()) if args.ontology else str(bundled_ontology_path())


def _tokenizer(args) -> Tokenizer:
    return Tokenizer(
        lowercase=not args.keep_case,
        strip_punctuation=not args.keep_punctuation,
        fold_digit_words=args.fold_digit_words,
    )


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", encoding="utf-8", newline="\n")


def _write_json(obj, path: str | None) -> None:
    fh = _open_out(path)
    try:
        fh.write(json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=True) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def _write_jsonl(records, path: str | None) -> None:
    fh = _open_out(path)
    try:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":"), sort_keys=True) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def _pair(gold: list[Dialogue], preds: list[Prediction]) -> list[tuple[Dialogue, Prediction]]:
    """Pair predictions with gold by id, in gold order. Coverage must be exact."""
    by_id: dict[str, Prediction] = {}
    dups = []
    for p in preds:
        if p.id in by_id:
            dups.append(p.id)
        by_id[p.id] = p
    if dups:
        raise CorpusError(f"duplicate prediction ids: {', '.join(sorted(set(dups)))}")
    gold_ids = {d.id for d in gold}
    extra = sorted(set(by_id) - gold_ids)
    if extra:
        raise CorpusError(f"prediction ids not in gold: {', '.join(extra)}")
    missing = [d.id for d in gold if d.id not in by_id]
    if missing:
        raise CorpusError(f"gold ids without a prediction: {', '.join(missing)}")
    return [(d, by_id[d.id]) for d in gold]


# ---- per-sample evaluation (runs in worker processes) ----

def _eval_one(job):
    gold_rec, pred, channel, ontology_path, tokenizer = job
    ontology = _ontology(ontology_path)
    gold = dialogue_from_json(gold_rec)
    sample = {"id": gold.id}
    malformed = missing_sentinel = False
    if channel == "joint":
        dec = decode_joint_output(pred.output, ontology)
        summary, hyp_state = dec.summary, dec.state
        malformed, missing_sentinel = dec.malformed_state, dec.missing_sentinel
    elif channel == "pred-file":
        summary, hyp_state = pred.summary, pred.state
    else:
        summary = pred.summary
        ext = extract_tuples(summary, ontology)
        hyp_state = ext.tuples
        sample["unattached"] = len(ext.unattached_values)
        sample["ambiguous"] = len(ext.ambiguous)
    rouge = rouge_all(summary, gold.summary, tokenizer)
    fs = factual_prf(hyp_state, gold.state)
    errs = classify_errors(hyp_state, gold.state)
    sample.update({
        "rouge": {k: rouge[k].as_dict() for k in ROUGE_KEYS},
        "factual": {"p": fs.precision, "r": fs.recall, "f1": fs.f1,
                    "n_hyp": fs.n_hyp, "n_tgt": fs.n_tgt, "n_match": fs.n_match},
        "errors": errs.counts,
        "state_match": hyp_state == gold.state,
        "hyp_state": hyp_state.to_json(),
    })
    if channel == "joint":
        sample["malformed_state"] = malformed
        sample["missing_sentinel"] = missing_sentinel
    return sample, fs, errs


def _run_jobs(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves input order, so results never depend on scheduling
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def _check_inputs(pairs, channel: str) -> None:
    for d, p in pairs:
        if not d.summary:
            raise CorpusError(f"gold dialogue {d.id!r} has no summary")
        if channel == "joint" and p.output is None:
            raise CorpusError(f"prediction {p.id!r} has no 'output' (needed by --state-channel joint)")
        if channel != "joint" and p.summary is None:
            raise CorpusError(f"prediction {p.id!r} has no 'summary'")
        if channel == "pred-file" and p.state is None:
            raise CorpusError(f"prediction {p.id!r} has no 'state' (needed by --state-channel pred-file)")


def _rouge_means(samples) -> dict:
    n = len(samples)
    return {
        k: {m: fsum(s["rouge"][k][m] for s in samples) / n for m in ("p", "r", "f")}
        for k in ROUGE_KEYS
    }


def run_evaluate(gold_path, pred_path, ontology_path, channel="extract", tokenizer=Tokenizer(), workers=1,
                 pred_label=None):
    """Full evaluation report plus per-sample records."""
    ontology = _ontology(ontology_path)
    gold = load_corpus(gold_path, ontology)
    preds = load_predictions(pred_path)
    if channel == "pred-file":
        # predicted states go through the same normalization as gold values
        preds = [Prediction(p.id, p.summary, _normalize_state(p.state, ontology), p.output) for p in preds]
    pairs = _pair(gold, preds)
    if not pairs:
        raise CorpusError("gold corpus is empty")
    _check_inputs(pairs, channel)
    jobs = [(d.to_json(), p, channel, ontology_path, tokenizer) for d, p in pairs]
    results = _run_jobs(_eval_one, jobs, workers)
    samples = [r[0] for r in results]
    fact = aggregate_report([(r[1], r[2]) for r in results])
    report = {
        "schema_version": SCHEMA_VERSION,
        "n_samples": len(samples),
        "rouge": _rouge_means(samples),
        "factual": {
            "micro": {"p": fact.micro.precision, "r": fact.micro.recall, "f1": fact.micro.f1},
            "macro": {"p": fact.macro.precision, "r": fact.macro.recall, "f1": fact.macro.f1},
            "n_hyp": fact.n_hyp,
            "n_tgt": fact.n_tgt,
            "n_match": fact.n_match,
        },
        "errors_per_sample": fact.errors_per_sample,
        "error_totals": fact.error_totals,
        "state_accuracy": state_match_accuracy(
            [DialogueState.from_json(s["hyp_state"]) for s in samples], [d.state for d, _ in pairs]
        ),
        "config": {
            "tool": f"todsumkit {__version__}",
            "state_channel": channel,
            "tokenizer": tokenizer.config(),
            "ontology": {"path": ontology_path, "sha256": _sha256(ontology_path)},
            "gold": {"path": str(Path(gold_path).resolve()), "sha256": _sha256(gold_path)},
            "predictions": {"path": pred_label or str(Path(pred_path).resolve()), "sha256": _sha256(pred_path)},
            "conventions": CONVENTIONS,
        },
    }
    if channel == "joint":
        report["malformed_states"] = sum(s["malformed_state"] for s in samples)
        report["missing_sentinels"] = sum(s["missing_sentinel"] for s in samples)
    return report, samples


def _normalize_state(state: DialogueState | None, ontology) -> DialogueState | None:
    if state is None:
        return None
    # reuse the parser's normalization by round-tripping through the string form
    return parse_state(serialize_state(state), ontology)


# ---- subcommands ----

def cmd_evaluate(args) -> int:
    report, samples = run_evaluate(
        args.gold, args.pred, _ontology_path(args), args.state_channel, _tokenizer(args), args.workers,
        pred_label=getattr(args, "pred_label", None),
    )
    _write_json(report, args.out)
    if args.per_sample:
        _write_jsonl(samples, args.per_sample)
    return 0


def cmd_rouge(args) -> int:
    ontology = _ontology(_ontology_path(args))
    tok = _tokenizer(args)
    pairs = _pair(load_corpus(args.gold, ontology), load_predictions(args.pred))
    if not pairs:
        raise CorpusError("gold corpus is empty")
    samples = []
    for d, p in pairs:
        if not d.summary or p.summary is None:
            raise CorpusError(f"sample {d.id!r} lacks a gold or predicted summary")
        r = rouge_all(p.summary, d.summary, tok)
        samples.append({"id": d.id, "rouge": {k: r[k].as_dict() for k in ROUGE_KEYS}})
    report = {
        "schema_version": SCHEMA_VERSION,
        "n_samples": len(samples),
        "rouge": _rouge_means(samples),
        "config": {"tokenizer": tok.config(), "conventions": {"rouge": CONVENTIONS["rouge"]}},
    }
    _write_json(report, args.out)
    if args.per_sample:
        _write_jsonl(samples, args.per_sample)
    return 0


def cmd_extract(args) -> int:
    ontology = _ontology(_ontology_path(args))
    out = []
    for lineno, rec in iter_jsonl(args.input):
        if not isinstance(rec, dict) or not isinstance(rec.get("id"), str) or not isinstance(rec.get("summary"), str):
            raise CorpusError("record needs string 'id' and 'summary'", lineno, args.input)
        out.append({"id": rec["id"], **extract_tuples(rec["summary"], ontology).to_json()})
    _write_jsonl(out, args.out)
    return 0


def cmd_codec(args) -> int:
    ontology = _ontology(_ontology_path(args))
    out = []
    for lineno, rec in iter_jsonl(args.input):
        if not isinstance(rec, dict):
            raise CorpusError("record must be a JSON object", lineno, args.input)
        rid = rec.get("id")
        if args.direction == "encode":
            if not isinstance(rec.get("state"), list):
                raise CorpusError("record needs a 'state' array", lineno, args.input)
            state = DialogueState.from_json(rec["state"])
            summary = rec.get("summary")
            text = encode_joint_target(state, summary) if args.joint else serialize_state(state)
            out.append({"id": rid, "text": text})
        else:
            text = rec.get("text", rec.get("output"))
            if not isinstance(text, str):
                raise CorpusError("record needs a string 'text' (or 'output')", lineno, args.input)
            if args.joint:
                dec = decode_joint_output(text, ontology)
                out.append({"id": rid, "state": dec.state.to_json(), "summary": dec.summary,
                            "missing_sentinel": dec.missing_sentinel, "malformed_state": dec.malformed_state,
                            "error": dec.error})
            else:
                try:
                    state = parse_state(text, ontology)
                except StateParseError as exc:
                    raise CorpusError(f"state parse error at offset {exc.offset}: {exc}", lineno, args.input) from None
                out.append({"id": rid, "state": state.to_json()})
    _write_jsonl(out, args.out)
    return 0


def _baseline_one(job):
    rec, method, tokenizer = job
    d = dialogue_from_json(rec)
    if method == "lead3":
        return Prediction(d.id, lead_k(d, 3).text)
    if not d.summary:
        raise CorpusError(f"dialogue {d.id!r} has no summary; the oracle needs a reference")
    return Prediction(d.id, greedy_oracle(d, d.summary, tokenizer).text)


def cmd_baseline(args) -> int:
    ontology = _ontology(_ontology_path(args))
    corpus = load_corpus(args.corpus, ontology)
    jobs = [(d.to_json(), args.method, _tokenizer(args)) for d in corpus]
    preds = _run_jobs(_baseline_one, jobs, args.workers)
    if args.out and args.out != "-":
        save_predictions(preds, args.out)
    else:
        _write_jsonl(({"id": p.id, "summary": p.summary} for p in preds), None)
    return 0


def _parse_mix(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--mix wants three comma-separated numbers, got {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"--mix wants exactly three weights d,r,i, got {text!r}")
    return parts


def cmd_noise(args) -> int:
    ontology = _ontology(_ontology_path(args))
    corpus = load_corpus(args.corpus, ontology)
    # delete, replace, insert: same order as the --mix flag
    spec = NoiseSpec(args.accuracy, args.mix, args.seed)
    noisy, realized = [], {}
    for d in corpus:
        res = inject_noise_detailed(d.state, spec, ontology, make_rng(derive_seed(args.seed, d.id)))
        noisy.append(Dialogue(d.id, d.turns, res.state, d.summary, d.domains))
        realized[d.id] = {"accuracy": res.accuracy, "n_gold": len(d.state), "edits": list(res.edits)}
    save_corpus(noisy, args.out)
    accs = [v["accuracy"] for v in realized.values()]
    meta = {
        "schema_version": SCHEMA_VERSION,
        "target_accuracy": args.accuracy,
        "operation_mix": {"delete": spec.operation_mix[0], "replace": spec.operation_mix[1],
                          "insert": spec.operation_mix[2]},
        "seed": args.seed,
        "prng": PRNG,
        "seed_derivation": "SeedSequence([seed, blake2b-64(dialogue id)])",
        "accuracy_definition": "|noisy & gold| / max(|noisy|, |gold|); 1.0 when both empty",
        "realized_mean_accuracy": fsum(accs) / len(accs) if accs else None,
        "n_dialogues": len(noisy),
        "source": {"path": str(Path(args.corpus).resolve()), "sha256": _sha256(args.corpus)},
        "ontology": {"path": _ontology_path(args), "sha256": _sha256(_ontology_path(args))},
        "per_dialogue": realized,
    }
    _write_json(meta, str(args.out) + ".meta.json")
    return 0


def _read_ids(path: str) -> list[str]:
    return [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]


def cmd_split_da(args) -> int:
    ontology = _ontology(_ontology_path(args))
    corpus = load_corpus(args.corpus, ontology)
    if args.target_domain not in ontology.domains:
        raise CorpusError(f"unknown target domain {args.target_domain!r}")
    test_ids = _read_ids(args.test_ids) if args.test_ids else None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        split = make_da_splits(corpus, args.target_domain, args.fewshot, args.seed, test_ids)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("train", "test", "fewshot"):
        ids = getattr(split, name)
        (out / f"{name}.ids").write_text("".join(i + "\n" for i in ids), encoding="utf-8")
    meta = {**split.to_dict(), "fewshot_fraction": args.fewshot, "prng": PRNG,
            "test_ids": str(Path(args.test_ids).resolve()) if args.test_ids else None}
    _write_json(meta, str(out / "split.json"))
    return 0


def cmd_stats(args) -> int:
    tok = _tokenizer(args)
    if args.no_validate:
        corpus = [dialogue_from_json(rec, ln, args.corpus) for ln, rec in iter_jsonl(args.corpus)]
    else:
        corpus = load_corpus(args.corpus, _ontology(_ontology_path(args)))
    if not corpus:
        raise CorpusError("corpus is empty")
    stats = corpus_stats(corpus, tok)
    _write_json({"schema_version": SCHEMA_VERSION, **stats.to_dict(), "tokenizer": tok.config()}, args.out)
    return 0


# ---- argument parsing ----

def _add_common(p: argparse.ArgumentParser, tokenizer: bool = True) -> None:
    p.add_argument("--ontology", help="ontology JSON (default: bundled five-domain ontology)")
    if tokenizer:
        g = p.add_argument_group("tokenizer")
        g.add_argument("--keep-case", action="store_true", help="do not lowercase")
        g.add_argument("--keep-punctuation", action="store_true", help="keep leading/trailing punctuation")
        g.add_argument("--fold-digit-words", action="store_true", help="map 'two' -> '2' before scoring")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="todsum", description="Evaluation toolkit for dialogue summaries grounded in dialogue states.")
    parser.add_argument("--version", action="version", version=f"todsumkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("evaluate", help="ROUGE + state-aware factual consistency report")
    p.add_argument("--gold", required=True, help="gold corpus JSONL")
    p.add_argument("--pred", required=True, help="prediction JSONL ('-' for stdin)")
    p.add_argument("--state-channel", choices=("extract", "pred-file", "joint"), default="extract",
                   help="extract tuples from the summary, use the supplied 'state', or decode joint 'output'")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="report path (default stdout)")
    p.add_argument("--per-sample", help="optional per-sample JSONL path")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rouge", help="ROUGE-1/2/L per sample and corpus mean")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out")
    p.add_argument("--per-sample")
    _add_common(p)
    p.set_defaults(func=cmd_rouge)

    p = sub.add_parser("extract", help="extract state tuples from summaries (JSONL with id, summary)")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    _add_common(p, tokenizer=False)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("codec", help="serialize/parse states and joint targets")
    p.add_argument("direction", choices=("encode", "decode"))
    p.add_argument("--input", required=True, help="JSONL: 'state' (+ 'summary') to encode, 'text' to decode")
    p.add_argument("--joint", action="store_true", help="use the '<state> <|endoftext|> <summary>' format")
    p.add_argument("--out")
    _add_common(p, tokenizer=False)
    p.set_defaults(func=cmd_codec)

    p = sub.add_parser("baseline", help="extractive baseline predictions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--method", choices=("lead3", "oracle"), required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="prediction JSONL (default stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("noise", help="perturb gold states to a target tuple-level accuracy")
    p.add_argument("--corpus", required=True)
    p.add_argument("--accuracy", type=float, required=True)
    p.add_argument("--mix", type=_parse_mix, default=(1.0, 1.0, 1.0), help="delete,replace,insert weights")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output corpus; metadata goes to <out>.meta.json")
    _add_common(p, tokenizer=False)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("split-da", help="leave-one-domain-out few-shot split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--target-domain", required=True)
    p.add_argument("--fewshot", type=float, default=0.10, help="fraction of the target pool (default 0.10)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-ids", help="file with the original test-partition ids, one per line")
    p.add_argument("--out-dir", required=True)
    _add_common(p, tokenizer=False)
    p.set_defaults(func=cmd_split_da)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--no-validate", action="store_true", help="skip ontology validation (foreign corpora)")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be >= 1")
    with tempfile.TemporaryDirectory(prefix="todsum-") as tmp:
        for name in ("pred", "input"):
            if getattr(args, name, None) == "-":
                # spool stdin so it can be read more than once (parsing + checksum)
                spooled = Path(tmp) / f"{name}.jsonl"
                spooled.write_bytes(sys.stdin.buffer.read())
                setattr(args, name, str(spooled))
                setattr(args, f"{name}_label", "<stdin>")
        return _dispatch(args)


def _dispatch(args) -> int:
    try:
        return args.func(args)
    except (CorpusError, OntologyError, StateParseError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"todsum {args.command}: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
