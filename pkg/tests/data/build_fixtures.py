"""Regenerate the frozen JSONL fixtures: python tests/data/build_fixtures.py"""
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from gen import realistic_corpus, stats_corpus  # noqa: E402
from todsumkit.corpus import save_corpus  # noqa: E402
from todsumkit.ontology import load_bundled_ontology  # noqa: E402

FIXTURE50_SEED = 20220101


def main():
    ontology = load_bundled_ontology()
    save_corpus(realistic_corpus(FIXTURE50_SEED, 50, ontology), HERE / "fixture50.jsonl")
    save_corpus(stats_corpus(), HERE / "stats20.jsonl")


if __name__ == "__main__":
    main()
