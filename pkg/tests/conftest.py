import pytest

from gramforge.oracle import TokenSequence, train_ngram_oracle
from gramforge.poc import build_category_corpus, build_wsd_corpus
from gramforge.probmatrix import corpus_vocabulary, expand_corpus, fill_matrix


def toy_corpus():
    return [
        TokenSequence.from_text("a b c"),
        TokenSequence.from_text("a c b"),
        TokenSequence.from_text("b a"),
    ]


@pytest.fixture(scope="session")
def planted():
    """Planted two-sense corpus with its bigram oracle and filled matrix."""
    corpus, target, gold = build_wsd_corpus()
    oracle = train_ngram_oracle(corpus, order=2, smoothing_k=0.1)
    rows = expand_corpus(corpus)
    vocabulary = corpus_vocabulary(corpus)
    matrix = fill_matrix(rows, vocabulary, oracle)
    return {
        "corpus": corpus,
        "target": target,
        "gold": gold,
        "oracle": oracle,
        "matrix": matrix,
    }


@pytest.fixture(scope="session")
def category_data():
    corpus, determiners, pronouns = build_category_corpus()
    oracle = train_ngram_oracle(corpus, order=2, smoothing_k=0.1)
    rows = expand_corpus(corpus)
    vocabulary = corpus_vocabulary(corpus)
    matrix = fill_matrix(rows, vocabulary, oracle)
    return {
        "corpus": corpus,
        "determiners": determiners,
        "pronouns": pronouns,
        "oracle": oracle,
        "matrix": matrix,
    }
