"""Evaluation toolkit for task-oriented dialogue summaries grounded in dialogue states."""
__version__ = "0.1.0"

from .baselines import ExtractiveSummary, greedy_oracle, lead_k
from .corpus import (
    CorpusError, CorpusStats, CorpusValidationError, Dialogue, Prediction, Utterance, Violation,
    corpus_stats, load_corpus, load_predictions, save_corpus, save_predictions, validate_dialogue,
)
from .extract import ExtractionResult, extract_tuples, render_reference_summary
from .factual import (
    ERROR_TYPES, ErrorProfile, FactualReport, FactualScore, aggregate_report, classify_errors, factual_prf,
)
from .ontology import Ontology, OntologyError, load_bundled_ontology, load_ontology, normalize_value
from .perturb import DomainSplit, NoiseSpec, inject_noise, make_da_splits, tuple_accuracy
from .rouge import DEFAULT_TOKENIZER, RougeScore, Tokenizer, rouge_all, rouge_l, rouge_n, tokenize
from .state import (
    SENTINEL, DialogueState, JointOutput, StateParseError, StateTuple, decode_joint_output,
    encode_joint_target, parse_state, serialize_state, state_match_accuracy,
)
