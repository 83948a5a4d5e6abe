import math
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gramforge.errors import DataError, OutOfVocabularyError
from gramforge.oracle import (
    BOUNDARY,
    MASK,
    MaskedQuery,
    NgramOracle,
    SequenceOracle,
    SequenceScore,
    TokenSequence,
    backward_logprob,
    forward_logprob,
    load_ngram_oracle,
    save_ngram_oracle,
    sequence_score,
    train_ngram_oracle,
)

TINY_K = 1e-12  # effectively unsmoothed, keeps hand counts exact to ~1e-12


def seq(text):
    return TokenSequence.from_text(text)


def corpus(*texts):
    return [seq(t) for t in texts]


class RecordingOracle(SequenceOracle):
    """Uniform stub that records every uncached query it answers."""

    def __init__(self, vocab_size=10):
        super().__init__()
        self.vocab_size = vocab_size
        self.queries = []

    def _masked_token_logprob(self, query, token):
        self.queries.append((query.tokens, query.target_position, token))
        return -math.log(self.vocab_size)


# -- domain types -----------------------------------------------------------


def test_token_sequence_rejects_reserved_symbols():
    with pytest.raises(DataError):
        TokenSequence((MASK,))
    with pytest.raises(DataError):
        TokenSequence(("a", BOUNDARY))
    with pytest.raises(DataError):
        TokenSequence(())
    with pytest.raises(DataError):
        TokenSequence(("a", ""))


def test_masked_query_validation():
    MaskedQuery(("a", MASK), 1)
    with pytest.raises(DataError):
        MaskedQuery(("a", "b"), 0)  # nothing masked
    with pytest.raises(DataError):
        MaskedQuery(("a", MASK), 0)  # target not masked
    with pytest.raises(DataError):
        MaskedQuery((MASK,), 3)  # out of bounds


def test_sequence_score_combined_is_log_space_mean():
    score = SequenceScore(math.log(0.04), math.log(0.01))
    assert score.combined_logprob == (score.forward_logprob + score.backward_logprob) / 2
    assert score.combined_logprob == pytest.approx(math.log(0.02), abs=1e-12)
    equal = SequenceScore(-3.5, -3.5)
    assert equal.combined_logprob == -3.5
    # symmetric under swapping the directions
    swapped = SequenceScore(math.log(0.01), math.log(0.04))
    assert swapped.combined_logprob == score.combined_logprob


# -- n-gram training: hand-counted conditionals ------------------------------


def test_single_continuation_is_certain():
    oracle = train_ngram_oracle(corpus("a b"), order=2, smoothing_k=TINY_K)
    q = MaskedQuery(("a", MASK), 1)
    assert oracle.masked_token_logprob(q, "b") == pytest.approx(0.0, abs=1e-9)


def test_bigram_split_continuation():
    oracle = train_ngram_oracle(corpus("a b", "a c"), order=2, smoothing_k=TINY_K)
    q = MaskedQuery(("a", MASK), 1)
    assert oracle.masked_token_logprob(q, "b") == pytest.approx(math.log(0.5), rel=1e-9)
    assert oracle.masked_token_logprob(q, "c") == pytest.approx(math.log(0.5), rel=1e-9)


def test_add_k_smoothed_value_by_hand():
    # vocabulary {a, b, c, boundary}, k = 1: P(b|a) = (1+1)/(2+1*4) = 1/3
    oracle = train_ngram_oracle(corpus("a b", "a c"), order=2, smoothing_k=1.0)
    assert len(oracle.vocabulary) == 4
    q = MaskedQuery(("a", MASK), 1)
    assert oracle.masked_token_logprob(q, "b") == pytest.approx(math.log(1 / 3), rel=1e-12)


def test_empty_corpus_rejected():
    with pytest.raises(DataError):
        train_ngram_oracle([], order=2, smoothing_k=0.1)


def test_smoothed_conditionals_sum_to_one_per_context():
    oracle = train_ngram_oracle(
        corpus("a b c", "b a", "c c a"), order=3, smoothing_k=0.4
    )
    for table, direction in ((oracle.forward_counts, "f"), (oracle.backward_counts, "b")):
        for ctx in table:
            total = sum(
                math.exp(oracle._conditional(direction, ctx, tok))
                for tok in oracle.vocabulary
            )
            assert total == pytest.approx(1.0, abs=1e-9)


# -- masked conditional queries ----------------------------------------------


def test_masked_query_conditions_only_on_visible_prefix():
    # P(MASK2=answered | she MASK2 MASK3): the right side is masked, so the
    # model conditions on "she" alone.
    oracle = train_ngram_oracle(
        corpus("she answered quickly", "she left quickly"), order=3, smoothing_k=0.1
    )
    q = MaskedQuery(("she", MASK, MASK), 1)
    expected = oracle._conditional("f", (BOUNDARY, "she"), "answered")
    assert oracle.masked_token_logprob(q, "answered") == pytest.approx(expected, abs=1e-12)


def test_masked_context_window_breaks_at_mask():
    # trigram with a masked middle context: falls back to the unigram
    oracle = train_ngram_oracle(corpus("a b c", "a c b"), order=3, smoothing_k=0.2)
    q = MaskedQuery(("a", MASK, MASK, "a"), 2)
    # left window hits the mask at position 1 immediately; right window sees a
    # real token plus the end boundary, so the reversed conditional wins.
    expected = oracle._conditional("b", (BOUNDARY, "a"), "b")
    assert oracle.masked_token_logprob(q, "b") == pytest.approx(expected, abs=1e-12)


def test_distribution_normalizes_over_full_vocabulary():
    oracle = train_ngram_oracle(corpus("a b c", "b c a", "c a b"), order=2, smoothing_k=0.3)
    queries = [
        MaskedQuery(("a", MASK, "c"), 1),      # both sides informative
        MaskedQuery(("a", MASK, MASK), 1),     # left only
        MaskedQuery((MASK, MASK, "c"), 1),     # right only
        MaskedQuery((MASK, MASK, MASK), 1),    # nothing visible
        MaskedQuery((MASK,), 0),               # boundary-only context
    ]
    for q in queries:
        total = sum(
            math.exp(oracle.masked_token_logprob(q, tok)) for tok in oracle.vocabulary
        )
        assert total == pytest.approx(1.0, abs=1e-6)


def test_out_of_vocabulary_handling():
    lenient = train_ngram_oracle(corpus("a b"), order=2, smoothing_k=0.5)
    q = MaskedQuery(("a", MASK), 1)
    got = lenient.masked_token_logprob(q, "zzz")
    # unseen event: k / (total + k|V|), context "a" was seen twice... once
    expected = math.log(0.5 / (1 + 0.5 * len(lenient.vocabulary)))
    assert got == pytest.approx(expected, abs=1e-12)

    strict = train_ngram_oracle(corpus("a b"), order=2, smoothing_k=0.5, strict=True)
    with pytest.raises(OutOfVocabularyError):
        strict.masked_token_logprob(q, "zzz")


def test_memoization_is_transparent_and_shared():
    oracle = RecordingOracle()
    q = MaskedQuery(("a", MASK), 1)
    first = oracle.masked_token_logprob(q, "b")
    second = oracle.masked_token_logprob(q, "b")
    assert first == second
    assert len(oracle.queries) == 1


def test_memoized_oracle_is_thread_safe():
    oracle = train_ngram_oracle(corpus("a b c", "c b a"), order=2, smoothing_k=0.1)
    sentence = seq("a b c a b")
    results = []

    def work():
        results.append(sequence_score(oracle, sentence).combined_logprob)

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(results)) == 1


# -- forward / backward chains ------------------------------------------------


def test_forward_single_token_uses_one_query():
    oracle = RecordingOracle()
    total = forward_logprob(oracle, seq("hello"))
    assert total == -math.log(10)
    assert oracle.queries == [((MASK,), 0, "hello")]


def test_forward_decomposes_into_one_masked_query_per_token():
    oracle = RecordingOracle()
    forward_logprob(oracle, seq("she answered quickly"))
    assert oracle.queries == [
        ((MASK, MASK, MASK), 0, "she"),
        (("she", MASK, MASK), 1, "answered"),
        (("she", "answered", MASK), 2, "quickly"),
    ]


def test_forward_matches_hand_computed_bigram_chain():
    oracle = train_ngram_oracle(corpus("a b", "a c"), order=2, smoothing_k=TINY_K)
    # P(a | boundary) = 1.0, P(b | a) = 0.5
    assert forward_logprob(oracle, seq("a b")) == pytest.approx(math.log(0.5), rel=1e-9)


def test_backward_matches_hand_computed_reversed_chain():
    oracle = train_ngram_oracle(corpus("a b", "a c"), order=2, smoothing_k=TINY_K)
    # reversed table: P(b | end boundary) = 0.5, P(a | b) = 1.0
    assert backward_logprob(oracle, seq("a b")) == pytest.approx(math.log(0.5), rel=1e-9)


def test_single_token_backward_equals_forward():
    oracle = train_ngram_oracle(corpus("a b", "b a", "a a"), order=2, smoothing_k=0.2)
    s = seq("a")
    assert backward_logprob(oracle, s) == forward_logprob(oracle, s)


def test_backward_is_forward_of_reverse_for_symmetric_oracle():
    # a corpus closed under reversal gives identical tables in both
    # directions, i.e. an order-symmetric oracle
    sentences = ["a b c", "c b a", "a c", "c a", "b b"]
    oracle = train_ngram_oracle(corpus(*sentences), order=2, smoothing_k=0.3)
    for text in ("a b", "c b a", "b c a"):
        s = seq(text)
        rev = TokenSequence(tuple(reversed(s.tokens)))
        assert backward_logprob(oracle, s) == pytest.approx(
            forward_logprob(oracle, rev), abs=1e-12
        )


def test_sequence_score_fills_all_fields():
    oracle = train_ngram_oracle(corpus("a b", "a c"), order=2, smoothing_k=0.1)
    score = sequence_score(oracle, seq("a b"))
    assert score.forward_logprob == forward_logprob(oracle, seq("a b"))
    assert score.backward_logprob == backward_logprob(oracle, seq("a b"))
    assert score.combined_logprob == (score.forward_logprob + score.backward_logprob) / 2


# -- chain-rule exactness (module-level spot check; exhaustive in acceptance) --


def brute_force_bigram_joint(counts, totals, vocab_size, k, tokens):
    """Independent chain product from raw counts."""
    prob = 1.0
    prev = BOUNDARY
    for tok in tokens:
        c = counts.get((prev,), {}).get(tok, 0)
        t = totals.get((prev,), 0)
        prob *= (c + k) / (t + k * vocab_size)
        prev = tok
    return prob


def test_forward_equals_brute_force_joint():
    k = 0.25
    train = corpus("a b b", "b c", "c a b", "a a")
    oracle = train_ngram_oracle(train, order=2, smoothing_k=k)
    totals = {ctx: sum(c.values()) for ctx, c in oracle.forward_counts.items()}
    for text in ("a b", "b b c", "c c c", "a b c a"):
        s = seq(text)
        expected = brute_force_bigram_joint(
            oracle.forward_counts, totals, len(oracle.vocabulary), k, s.tokens
        )
        assert math.exp(forward_logprob(oracle, s)) == pytest.approx(expected, rel=1e-9)


# -- properties ----------------------------------------------------------------


token_st = st.sampled_from(["a", "b", "c", "d"])
sentence_st = st.lists(token_st, min_size=1, max_size=6).map(
    lambda toks: TokenSequence(tuple(toks))
)


@settings(max_examples=40, deadline=None)
@given(sentence_st)
def test_appending_a_token_never_increases_forward_logprob(s):
    oracle = train_ngram_oracle(corpus("a b c d", "d c b a", "a d"), order=2, smoothing_k=0.2)
    extended = TokenSequence(s.tokens + ("a",))
    assert forward_logprob(oracle, extended) <= forward_logprob(oracle, s) + 1e-12


@settings(max_examples=25, deadline=None)
@given(sentence_st, st.integers(min_value=0, max_value=5))
def test_masked_distribution_sums_to_one(s, pos):
    oracle = train_ngram_oracle(corpus("a b c d", "b a d c", "c a"), order=3, smoothing_k=0.15)
    pos = pos % len(s)
    tokens = list(s.tokens)
    tokens[pos] = MASK
    q = MaskedQuery(tuple(tokens), pos)
    total = sum(math.exp(oracle.masked_token_logprob(q, tok)) for tok in oracle.vocabulary)
    assert total == pytest.approx(1.0, abs=1e-6)


# -- persistence ----------------------------------------------------------------


def test_ngram_round_trip(tmp_path):
    oracle = train_ngram_oracle(corpus("a b c", "c b a", "a c"), order=3, smoothing_k=0.7)
    path = tmp_path / "model.ngram"
    save_ngram_oracle(oracle, path)
    loaded = load_ngram_oracle(path)
    assert loaded.order == oracle.order
    assert loaded.smoothing_k == oracle.smoothing_k
    assert loaded.vocabulary == oracle.vocabulary
    assert loaded.forward_counts == oracle.forward_counts
    assert loaded.backward_counts == oracle.backward_counts
    s = seq("a b a c")
    assert sequence_score(loaded, s) == sequence_score(oracle, s)


def test_loading_rejects_foreign_files(tmp_path):
    path = tmp_path / "bogus.ngram"
    path.write_text("not a model\n")
    with pytest.raises(DataError):
        load_ngram_oracle(path)
