"""Unsupervised word-sense induction from the probability matrix.

Every occurrence of a word is represented by a matrix row: the scores of
the sentence with that occurrence blanked and every vocabulary word
substituted in. Clustering one word's rows with spherical k-means splits
its occurrences into senses. The corpus here plants "bat" in two context
families (flying animal vs. wooden tool).
"""

from gramforge import train_ngram_oracle
from gramforge.poc import build_wsd_corpus
from gramforge.probmatrix import corpus_vocabulary, expand_corpus, fill_matrix
from gramforge.wsd import cluster_senses, collect_instances, wsd_f1

corpus, target, gold = build_wsd_corpus()
oracle = train_ngram_oracle(corpus, order=2, smoothing_k=0.1)
matrix = fill_matrix(expand_corpus(corpus), corpus_vocabulary(corpus), oracle)
print(f"matrix: {len(matrix.rows)} blanked rows x {len(matrix.columns)} words")

instances = collect_instances(matrix, corpus, target)
model = cluster_senses(matrix, instances, k=2, seed=0)

for sense in range(model.n_senses):
    print(f"\nCluster #{sense} samples:")
    for (sid, pos), assigned in sorted(model.instance_assignments.items()):
        if assigned == sense:
            tokens = [
                t.upper() if i == pos else t
                for i, t in enumerate(corpus[sid].tokens)
            ]
            print("  " + " ".join(tokens))

score = wsd_f1(model.instance_assignments, gold)
print(f"\nbest-alignment micro-F1 against the planted senses: {score:.2f}")
