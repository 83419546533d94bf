"""Corpus data model, validation against an ontology, JSONL I/O and statistics."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .ontology import Ontology, normalize_value
from .rouge import DEFAULT_TOKENIZER, Tokenizer
from .state import DialogueState, StateTuple

SPEAKERS = ("user", "system")


class CorpusError(ValueError):
    """A file could not be parsed; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = ":".join(str(x) for x in (path, line) if x is not None)
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.path = path


class CorpusValidationError(CorpusError):
    def __init__(self, violations: list["Violation"], line: int | None = None, path: str | None = None):
        first = violations[0]
        more = f" (+{len(violations) - 1} more)" if len(violations) > 1 else ""
        super().__init__(f"dialogue {first.dialogue_id!r}: {first.field}: {first.message}{more}", line, path)
        self.violations = violations


@dataclass(frozen=True)
class Utterance:
    speaker: str
    text: str


@dataclass(frozen=True)
class Dialogue:
    id: str
    turns: tuple[Utterance, ...]
    state: DialogueState = field(default_factory=DialogueState)
    summary: str | None = None
    domains: frozenset[str] | None = None

    def __post_init__(self):
        object.__setattr__(self, "turns", tuple(self.turns))
        if self.domains is None:
            object.__setattr__(self, "domains", self.state.domains)
        else:
            object.__setattr__(self, "domains", frozenset(self.domains))

    def to_json(self) -> dict:
        rec = {
            "id": self.id,
            "turns": [{"speaker": u.speaker, "text": u.text} for u in self.turns],
            "state": self.state.to_json(),
        }
        if self.summary is not None:
            rec["summary"] = self.summary
        rec["domains"] = sorted(self.domains)
        return rec


@dataclass(frozen=True)
class Violation:
    dialogue_id: str
    field: str
    message: str
    tuple: StateTuple | None = None

    def __str__(self) -> str:
        return f"{self.dialogue_id}: {self.field}: {self.message}"


def validate_dialogue(d: Dialogue, ontology: Ontology) -> list[Violation]:
    """All problems with ``d``; an empty list means the dialogue is valid."""
    out: list[Violation] = []
    if not d.id:
        out.append(Violation(d.id, "id", "empty id"))
    if not d.turns:
        out.append(Violation(d.id, "turns", "dialogue has no turns"))
    for k, u in enumerate(d.turns):
        if u.speaker not in SPEAKERS:
            out.append(Violation(d.id, f"turns[{k}].speaker", f"unknown speaker {u.speaker!r}"))
        if not u.text.strip():
            out.append(Violation(d.id, f"turns[{k}].text", "empty utterance"))
    for t in d.state:
        if t.domain not in ontology.domains:
            out.append(Violation(d.id, "state.domain", f"unknown domain {t.domain!r}", t))
        elif t.intent not in ontology.intents[t.domain]:
            out.append(Violation(d.id, "state.intent", f"unknown intent {t.intent!r} in domain {t.domain!r}", t))
        elif t.slot not in ontology.slots[(t.domain, t.intent)]:
            out.append(Violation(d.id, "state.slot", f"unknown slot {t.slot!r} for {t.domain}.{t.intent}", t))
        elif normalize_value(ontology, t.domain, t.slot, t.value) is None:
            out.append(Violation(d.id, "state.value", f"value {t.value!r} not allowed for {t.domain}.{t.slot}", t))
    if d.domains != d.state.domains:
        out.append(Violation(
            d.id, "domains",
            f"declared {sorted(d.domains)} but state covers {sorted(d.state.domains)}",
        ))
    return out


def canonicalize(d: Dialogue, ontology: Ontology) -> Dialogue:
    """Rewrite state values to their canonical ontology form (valid dialogues only)."""
    tuples = frozenset(
        StateTuple(t.domain, t.intent, t.slot, normalize_value(ontology, t.domain, t.slot, t.value))
        for t in d.state
    )
    return Dialogue(d.id, d.turns, DialogueState(tuples), d.summary, d.domains)


def _state_from_json(obj, line: int, path: str) -> DialogueState:
    if not isinstance(obj, list):
        raise CorpusError("'state' must be an array", line, path)
    out = []
    for k, item in enumerate(obj):
        if not isinstance(item, dict) or not all(isinstance(item.get(f), str) for f in StateTuple._fields):
            raise CorpusError(f"state[{k}] must have string fields domain/intent/slot/value", line, path)
        if not all(item[f] for f in StateTuple._fields):
            raise CorpusError(f"state[{k}] has an empty field", line, path)
        out.append(StateTuple(*(item[f] for f in StateTuple._fields)))
    return DialogueState(frozenset(out))


def dialogue_from_json(rec, line: int | None = None, path: str | None = None) -> Dialogue:
    if not isinstance(rec, dict):
        raise CorpusError("record must be a JSON object", line, path)
    did = rec.get("id")
    if not isinstance(did, str):
        raise CorpusError("'id' must be a string", line, path)
    turns = rec.get("turns")
    if not isinstance(turns, list):
        raise CorpusError(f"dialogue {did!r}: 'turns' must be an array", line, path)
    utts = []
    for k, u in enumerate(turns):
        if not isinstance(u, dict) or not isinstance(u.get("speaker"), str) or not isinstance(u.get("text"), str):
            raise CorpusError(f"dialogue {did!r}: turns[{k}] needs string 'speaker' and 'text'", line, path)
        utts.append(Utterance(u["speaker"], u["text"]))
    state = _state_from_json(rec.get("state", []), line, path)
    summary = rec.get("summary")
    if summary is not None and not isinstance(summary, str):
        raise CorpusError(f"dialogue {did!r}: 'summary' must be a string", line, path)
    domains = rec.get("domains")
    if domains is not None and (not isinstance(domains, list) or not all(isinstance(x, str) for x in domains)):
        raise CorpusError(f"dialogue {did!r}: 'domains' must be an array of strings", line, path)
    return Dialogue(did, tuple(utts), state, summary, None if domains is None else frozenset(domains))


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, object]]:
    """(line number, decoded object) for every non-blank line."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"invalid JSON: {exc.msg}", lineno, str(path)) from None


def load_corpus(path: str | Path, ontology: Ontology) -> list[Dialogue]:
    """Read, validate and canonicalize a JSONL corpus. Raises on the first bad record."""
    out: list[Dialogue] = []
    seen: set[str] = set()
    for lineno, rec in iter_jsonl(path):
        d = dialogue_from_json(rec, lineno, str(path))
        if d.id in seen:
            raise CorpusValidationError([Violation(d.id, "id", "duplicate id")], lineno, str(path))
        seen.add(d.id)
        bad = validate_dialogue(d, ontology)
        if bad:
            raise CorpusValidationError(bad, lineno, str(path))
        out.append(canonicalize(d, ontology))
    return out


def dump_dialogue(d: Dialogue) -> str:
    return json.dumps(d.to_json(), ensure_ascii=False, separators=(",", ":"))


def save_corpus(corpus: Iterable[Dialogue], path: str | Path) -> None:
    """Write canonical JSONL: tuples sorted, compact separators, UTF-8."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for d in corpus:
            fh.write(dump_dialogue(d) + "\n")


@dataclass(frozen=True)
class Prediction:
    id: str
    summary: str | None = None
    state: DialogueState | None = None
    output: str | None = None


def load_predictions(path: str | Path) -> list[Prediction]:
    """Prediction JSONL: ``id`` plus ``summary`` and/or ``state`` and/or joint ``output``."""
    out = []
    for lineno, rec in iter_jsonl(path):
        if not isinstance(rec, dict) or not isinstance(rec.get("id"), str):
            raise CorpusError("prediction needs a string 'id'", lineno, str(path))
        summary = rec.get("summary")
        output = rec.get("output")
        if summary is not None and not isinstance(summary, str):
            raise CorpusError("'summary' must be a string", lineno, str(path))
        if output is not None and not isinstance(output, str):
            raise CorpusError("'output' must be a string", lineno, str(path))
        state = _state_from_json(rec["state"], lineno, str(path)) if "state" in rec else None
        out.append(Prediction(rec["id"], summary, state, output))
    return out


def save_predictions(preds: Iterable[Prediction], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for p in preds:
            rec: dict = {"id": p.id}
            if p.summary is not None:
                rec["summary"] = p.summary
            if p.state is not None:
                rec["state"] = p.state.to_json()
            if p.output is not None:
                rec["output"] = p.output
            fh.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n")


@dataclass(frozen=True)
class CorpusStats:
    size: int
    avg_dialogue_len: float
    avg_turns: float
    avg_summary_len: float
    avg_domains_per_dialogue: float
    avg_intents_per_dialogue: float
    # distinct (domain, slot) pairs: a slot repeated across domains counts per domain
    avg_slots_per_dialogue: float
    # distinct slot names: "area" in hotel and restaurant counts once
    avg_slot_names_per_dialogue: float
    n_summaries: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def corpus_stats(corpus: Sequence[Dialogue], tokenizer: Tokenizer = DEFAULT_TOKENIZER) -> CorpusStats:
    if not corpus:
        raise ValueError("corpus_stats needs at least one dialogue")
    n = len(corpus)
    # integer totals first so the means do not depend on corpus order
    dialog_tokens = turns = summ_tokens = n_summ = doms = ints = slots = names = 0
    for d in corpus:
        dialog_tokens += sum(len(tokenizer.tokenize(u.text)) for u in d.turns)
        turns += len(d.turns)
        if d.summary is not None:
            n_summ += 1
            summ_tokens += len(tokenizer.tokenize(d.summary))
        doms += len(d.state.domains)
        ints += len(d.state.intents)
        slots += len({(t.domain, t.slot) for t in d.state})
        names += len({t.slot for t in d.state})
    return CorpusStats(
        size=n,
        avg_dialogue_len=dialog_tokens / n,
        avg_turns=turns / n,
        avg_summary_len=summ_tokens / n_summ if n_summ else 0.0,
        avg_domains_per_dialogue=doms / n,
        avg_intents_per_dialogue=ints / n,
        avg_slots_per_dialogue=slots / n,
        avg_slot_names_per_dialogue=names / n,
        n_summaries=n_summ,
    )
