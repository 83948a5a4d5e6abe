import numpy as np
import pytest

from gramforge.categories import (
    NOISE,
    CategoryParams,
    TaggedToken,
    WordCategory,
    category_of,
    category_tag_corpus,
    cluster_categories,
    load_categories,
    render_categories,
    save_categories,
)
from gramforge.errors import DataError
from gramforge.oracle import TokenSequence
from gramforge.probmatrix import BLANK, BlankedSentence, SenseMatrix, build_sense_matrix
from gramforge.wsd import induce_senses


def sense_matrix_for(category_data):
    matrix, corpus = category_data["matrix"], category_data["corpus"]
    senses = induce_senses(matrix, corpus, k=1, seed=0)
    return build_sense_matrix(matrix, senses), senses


@pytest.fixture(scope="module")
def clustered(category_data):
    sm, senses = sense_matrix_for(category_data)
    return category_data, sm, senses, cluster_categories(sm)


# -- clustering ----------------------------------------------------------------


def test_every_sense_column_lands_in_exactly_one_category(clustered):
    _, sm, _, categories = clustered
    seen = [member for cat in categories for member in cat.members]
    assert sorted(seen) == sorted(sm.columns)


def test_determiners_and_pronouns_form_non_noise_categories(clustered):
    data, _, _, categories = clustered
    lookup = category_of(categories)
    det_ids = {lookup[(w, 0)] for w in data["determiners"]}
    pron_ids = {lookup[(w, 0)] for w in data["pronouns"]}
    assert len(det_ids) == 1 and det_ids != {NOISE}
    assert len(pron_ids) == 1 and pron_ids != {NOISE}
    assert det_ids != pron_ids


def test_non_noise_categories_have_min_members(clustered):
    _, _, _, categories = clustered
    for category in categories:
        if category.category_id != NOISE:
            assert len(category.members) >= 2


def test_identical_columns_fall_in_one_category():
    rows = [BlankedSentence(0, (BLANK, "x"), 0), BlankedSentence(0, ("x", BLANK), 1)]
    cells = np.tile(np.array([[-1.0], [-2.0]]), (1, 4))
    sm = SenseMatrix(rows=rows, columns=[(w, 0) for w in "abcd"], cells=cells)
    categories = cluster_categories(sm)
    non_noise = [c for c in categories if c.category_id != NOISE]
    assert len(non_noise) == 1
    assert len(non_noise[0].members) == 4


def test_too_few_columns_rejected():
    rows = [BlankedSentence(0, (BLANK, "x"), 0)]
    sm = SenseMatrix(rows=rows, columns=[("a", 0)], cells=np.array([[-1.0]]))
    with pytest.raises(DataError):
        cluster_categories(sm)


def test_global_probability_scaling_leaves_memberships_unchanged(clustered):
    # additive shift in log space = positive scaling in probability space
    data, sm, _, categories = clustered
    shifted = SenseMatrix(rows=sm.rows, columns=sm.columns, cells=sm.cells - 123.0)
    again = cluster_categories(shifted)
    assert [c.members for c in again] == [c.members for c in categories]


def test_determinism(clustered):
    _, sm, _, categories = clustered
    again = cluster_categories(sm)
    assert [(c.category_id, c.members) for c in again] == [
        (c.category_id, c.members) for c in categories
    ]


# -- tagging ----------------------------------------------------------------


def test_tag_corpus_covers_every_token(clustered):
    data, _, senses, categories = clustered
    corpus = data["corpus"]
    tagged = category_tag_corpus(corpus, senses, categories)
    assert len(tagged) == len(corpus)
    for sentence, row in zip(corpus, tagged):
        assert len(row) == len(sentence)
        for tok, tag in zip(sentence.tokens, row):
            assert tag.word == tok


def test_tags_follow_category_membership(clustered):
    data, _, senses, categories = clustered
    lookup = category_of(categories)
    tagged = category_tag_corpus(data["corpus"], senses, categories)
    det_id = lookup[("the", 0)]
    for row in tagged:
        for tag in row:
            if tag.word in data["determiners"]:
                assert tag.category == det_id


def test_single_category_tags_everything_identically():
    corpus = [TokenSequence.from_text("a b a")]
    senses = {}
    categories = [WordCategory(0, [("a", 0), ("b", 0)])]
    tagged = category_tag_corpus(corpus, senses, categories)
    assert [t.category for t in tagged[0]] == [0, 0, 0]


def test_unknown_words_tag_as_noise():
    corpus = [TokenSequence.from_text("mystery")]
    tagged = category_tag_corpus(corpus, {}, [])
    assert tagged[0] == [TaggedToken("mystery", 0, NOISE)]


# -- reporting ----------------------------------------------------------------


def test_render_lists_noise_first(clustered):
    _, _, _, categories = clustered
    text = render_categories(categories)
    lines = text.strip().splitlines()
    assert lines[0].startswith("Cluster #-1:") or not any(
        c.category_id == NOISE for c in categories
    )
    assert any(line.startswith("Cluster #0:") for line in lines)


def test_categories_round_trip(tmp_path, clustered):
    _, _, _, categories = clustered
    path = tmp_path / "categories.json"
    save_categories(categories, path)
    loaded = load_categories(path)
    assert [(c.category_id, c.members) for c in loaded] == [
        (c.category_id, c.members) for c in categories
    ]
