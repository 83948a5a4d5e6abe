"""Word-category formation over sense columns.

After sense induction, each (word, sense) column of the matrix is a
distributional fingerprint. OPTICS clusters those columns under cosine
distance without a preset cluster count and is free to leave the awkward
remainder uncategorized (cluster #-1). The corpus interleaves determiners
and pronouns through shared frames, so each group lands in its own
category.
"""

from gramforge import train_ngram_oracle
from gramforge.categories import cluster_categories, render_categories
from gramforge.poc import build_category_corpus
from gramforge.probmatrix import (
    build_sense_matrix,
    corpus_vocabulary,
    expand_corpus,
    fill_matrix,
)
from gramforge.wsd import induce_senses

corpus, determiners, pronouns = build_category_corpus()
print(f"{len(corpus)} sentences, e.g. {corpus[0].text()!r} / {corpus[-1].text()!r}")

oracle = train_ngram_oracle(corpus, order=2, smoothing_k=0.1)
matrix = fill_matrix(expand_corpus(corpus), corpus_vocabulary(corpus), oracle)
senses = induce_senses(matrix, corpus, k=1, seed=0)
sense_matrix = build_sense_matrix(matrix, senses)

categories = cluster_categories(sense_matrix)
print()
print(render_categories(categories))
print(f"planted determiner set: {sorted(determiners)}")
print(f"planted pronoun set:    {sorted(pronouns)}")
