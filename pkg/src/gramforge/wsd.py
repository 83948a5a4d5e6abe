"""Word-sense induction by clustering a word's matrix rows.

Each occurrence of a word contributes one instance vector: the matrix row
blanked at that occurrence, mapped to its probability-space direction. The
instances of one word are clustered with spherical k-means (unit sphere,
cosine similarity); the resulting clusters are the word's senses and the
unit-norm cluster centroids feed the sense-matrix restructuring.

Very frequent words (function words, typically) are exempted from
disambiguation via a corpus frequency filter and keep a single sense.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DataError
from .oracle import TokenSequence
from .probmatrix import BLANK, ProbMatrix, matrix_embeddings

InstanceKey = tuple[int, int]  # (sentence_id, position)


@dataclass(frozen=True)
class WordInstance:
    """One corpus occurrence of a word, tied to its blanked matrix row."""

    word: str
    sentence_id: int
    position: int
    row_index: int

    def key(self) -> InstanceKey:
        return (self.sentence_id, self.position)


@dataclass
class SenseModel:
    """Induced senses of one word: unit centroids plus instance assignments."""

    word: str
    centroids: list[np.ndarray]
    instance_assignments: dict[InstanceKey, int] = field(default_factory=dict)
    degenerate: bool = False

    def __post_init__(self):
        if not self.centroids:
            raise DataError(f"sense model for {self.word!r} needs >= 1 centroid")
        for c in self.centroids:
            norm = float(np.linalg.norm(c))
            if abs(norm - 1.0) > 1e-9:
                raise DataError(
                    f"sense centroid for {self.word!r} has norm {norm}, expected 1"
                )
        for key, sense in self.instance_assignments.items():
            if not (0 <= sense < len(self.centroids)):
                raise DataError(f"instance {key} assigned to missing sense {sense}")

    @property
    def n_senses(self) -> int:
        return len(self.centroids)


def collect_instances(
    matrix: ProbMatrix, corpus: Sequence[TokenSequence], word: str
) -> list[WordInstance]:
    """One instance per corpus occurrence of the word.

    Deduplicated matrix rows may back several occurrences; each occurrence
    still appears once here, pointing at the shared row.
    """
    instances: list[WordInstance] = []
    for sid, sentence in enumerate(corpus):
        for pos, tok in enumerate(sentence.tokens):
            if tok != word:
                continue
            blanked = list(sentence.tokens)
            blanked[pos] = BLANK
            instances.append(
                WordInstance(word, sid, pos, matrix.row_for(tuple(blanked)))
            )
    if not instances:
        raise DataError(f"word {word!r} does not occur in the corpus")
    return instances


def frequency_filter(
    corpus: Sequence[TokenSequence], fraction: float = 0.10
) -> set[str]:
    """The ceil(fraction * |V|) most frequent words, exempt from WSD.

    Frequency ties break lexicographically so the exempt set is stable.
    """
    if not (0 <= fraction < 1):
        raise DataError("filter fraction must be in [0, 1)")
    counts = Counter(tok for sentence in corpus for tok in sentence.tokens)
    n_exempt = math.ceil(fraction * len(counts))
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return {word for word, _ in ranked[:n_exempt]}


# -- spherical k-means --------------------------------------------------------


def _plus_plus_seeds(vectors: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ style seeding with cosine distance on the unit sphere."""
    n = vectors.shape[0]
    chosen = [int(rng.integers(n))]
    while len(chosen) < k:
        sims = vectors @ vectors[chosen].T
        dist = np.clip(1.0 - sims.max(axis=1), 0.0, None)
        weights = dist**2
        total = weights.sum()
        if total <= 0:
            remaining = [i for i in range(n) if i not in chosen]
            chosen.append(int(rng.choice(remaining)))
            continue
        chosen.append(int(rng.choice(n, p=weights / total)))
    return vectors[chosen].copy()


def _normalize_rows(block: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(block, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return block / norms


def spherical_kmeans(
    vectors: np.ndarray,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    n_init: int = 5,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Cluster unit vectors by cosine similarity.

    Returns (centroids, labels, objective history of the winning run); the
    objective (sum of cosine similarities to the assigned centroid) is
    non-decreasing across iterations. Restarts keep the best final
    objective, which makes the outcome robust to permutations of the input.
    """
    if k < 1:
        raise DataError("k must be >= 1")
    X = _normalize_rows(np.asarray(vectors, dtype=np.float64))
    n = X.shape[0]
    if k > n:
        raise DataError(f"cannot form {k} clusters from {n} vectors")

    best: tuple[float, np.ndarray, np.ndarray, list[float]] | None = None
    for restart in range(n_init):
        rng = np.random.default_rng((seed, restart))
        centroids = _plus_plus_seeds(X, k, rng)
        labels = np.full(n, -1, dtype=np.int64)
        history: list[float] = []
        for _ in range(max_iters):
            sims = X @ centroids.T
            new_labels = np.argmax(sims, axis=1)
            history.append(float(sims[np.arange(n), new_labels].sum()))
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for j in range(k):
                members = X[labels == j]
                if len(members) == 0:
                    # reseed an empty cluster at the worst-served point
                    worst = int(np.argmin(sims.max(axis=1)))
                    centroids[j] = X[worst]
                    continue
                mean = members.sum(axis=0)
                norm = np.linalg.norm(mean)
                centroids[j] = mean / norm if norm > 0 else members[0]
        objective = history[-1]
        if best is None or objective > best[0] + 1e-12:
            best = (objective, centroids, labels, history)

    _, centroids, labels, history = best
    return centroids, labels, history


def cluster_senses(
    matrix: ProbMatrix,
    instances: Sequence[WordInstance],
    k: int = 2,
    seed: int = 0,
) -> SenseModel:
    """Spherical k-means over one word's instance embeddings.

    Fewer instances than k fall back to one sense per distinct vector;
    all-identical vectors collapse to a single sense with the degenerate
    flag raised.
    """
    if not instances:
        raise DataError("cannot cluster an empty instance list")
    word = instances[0].word
    if any(inst.word != word for inst in instances):
        raise DataError("instances of different words in one clustering job")
    if k < 1:
        raise DataError("k must be >= 1")

    vectors = matrix_embeddings(
        matrix.cells[[inst.row_index for inst in instances]], axis=0
    )

    distinct: list[np.ndarray] = []
    vector_ids: list[int] = []
    for v in vectors:
        for j, seen in enumerate(distinct):
            if np.allclose(v, seen, atol=1e-12):
                vector_ids.append(j)
                break
        else:
            distinct.append(v)
            vector_ids.append(len(distinct) - 1)

    if len(distinct) == 1:
        centroid = distinct[0] / np.linalg.norm(distinct[0])
        return SenseModel(
            word=word,
            centroids=[centroid],
            instance_assignments={inst.key(): 0 for inst in instances},
            degenerate=k > 1,
        )

    if len(instances) < k:
        return SenseModel(
            word=word,
            centroids=[v / np.linalg.norm(v) for v in distinct],
            instance_assignments={
                inst.key(): vector_ids[i] for i, inst in enumerate(instances)
            },
        )

    k_eff = min(k, len(distinct))
    centroids, labels, _ = spherical_kmeans(vectors, k_eff, seed=seed)
    return SenseModel(
        word=word,
        centroids=[c / np.linalg.norm(c) for c in centroids],
        instance_assignments={
            inst.key(): int(labels[i]) for i, inst in enumerate(instances)
        },
    )


def induce_senses(
    matrix: ProbMatrix,
    corpus: Sequence[TokenSequence],
    k: int = 2,
    seed: int = 0,
    filter_fraction: float = 0.10,
    jobs: int = 1,
) -> dict[str, SenseModel]:
    """Per-word sense models for the whole vocabulary.

    Words in the frequency-filter exempt set keep a single sense; the rest
    are clustered independently (one job per word).
    """
    exempt = frequency_filter(corpus, filter_fraction)

    def job(word: str) -> tuple[str, SenseModel]:
        instances = collect_instances(matrix, corpus, word)
        word_k = 1 if word in exempt else k
        return word, cluster_senses(matrix, instances, k=word_k, seed=seed)

    words = list(matrix.columns)
    if jobs <= 1:
        results = [job(w) for w in words]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(job, words))
    return dict(results)


# -- evaluation ----------------------------------------------------------------


def wsd_f1(
    assignments: Mapping[Hashable, int], gold: Mapping[Hashable, Hashable]
) -> float:
    """Best-alignment micro-averaged F1 of cluster labels against gold senses.

    Clusters are matched one-to-one to gold labels by maximum-weight
    bipartite assignment (Hungarian); with a single label per instance on
    both sides, micro precision equals micro recall equals matched / total.
    """
    if not assignments:
        raise DataError("cannot score an empty evaluation set")
    missing = [key for key in assignments if key not in gold]
    if missing:
        raise DataError(f"gold labels missing for {missing[:3]!r}...")

    clusters = sorted({int(c) for c in assignments.values()})
    labels = sorted({gold[key] for key in assignments}, key=repr)
    confusion = np.zeros((len(clusters), len(labels)), dtype=np.int64)
    c_index = {c: i for i, c in enumerate(clusters)}
    l_index = {l: j for j, l in enumerate(labels)}
    for key, cluster in assignments.items():
        confusion[c_index[int(cluster)], l_index[gold[key]]] += 1

    rows, cols = linear_sum_assignment(confusion, maximize=True)
    matched = int(confusion[rows, cols].sum())
    return matched / len(assignments)


# -- persistence ----------------------------------------------------------------


def save_sense_models(models: Mapping[str, SenseModel], path: str | Path) -> None:
    payload = {
        word: {
            "centroids": [np.asarray(c).tolist() for c in model.centroids],
            "assignments": {
                f"{sid}:{pos}": sense
                for (sid, pos), sense in sorted(model.instance_assignments.items())
            },
            "degenerate": model.degenerate,
        }
        for word, model in sorted(models.items())
    }
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8")


def load_sense_models(path: str | Path) -> dict[str, SenseModel]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    models: dict[str, SenseModel] = {}
    for word, record in payload.items():
        assignments = {}
        for key, sense in record["assignments"].items():
            sid, _, pos = key.partition(":")
            assignments[(int(sid), int(pos))] = int(sense)
        models[word] = SenseModel(
            word=word,
            centroids=[np.asarray(c, dtype=np.float64) for c in record["centroids"]],
            instance_assignments=assignments,
            degenerate=bool(record.get("degenerate", False)),
        )
    return models
