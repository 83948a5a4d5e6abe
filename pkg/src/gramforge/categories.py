"""Word-category formation over sense columns.

The sense-matrix columns (one per word sense) are mapped to their
probability-space directions and clustered with OPTICS under cosine
distance. Density clustering needs no cluster count and is allowed to
leave columns uncategorized: the noise label -1 is a first-class outcome,
reported rather than treated as a failure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from sklearn.cluster import OPTICS

from .errors import DataError
from .oracle import TokenSequence
from .probmatrix import SenseMatrix, matrix_embeddings
from .wsd import SenseModel

NOISE = -1

WordSense = tuple[str, int]


@dataclass
class CategoryParams:
    """Density-clustering knobs; defaults suit desk-scale corpora."""

    min_samples: int = 2
    xi: float = 0.05
    max_eps: float = np.inf
    min_members: int = 2


@dataclass
class WordCategory:
    """One induced category; -1 collects the uncategorized remainder."""

    category_id: int
    members: list[WordSense] = field(default_factory=list)

    def words(self) -> list[str]:
        return [word for word, _ in self.members]


def cluster_categories(
    matrix: SenseMatrix, params: CategoryParams | None = None
) -> list[WordCategory]:
    """OPTICS reachability clustering of unit-normalized sense columns.

    Cluster ids are compacted to 0..m-1 in order of first appearance over
    the column order; clusters smaller than min_members dissolve into the
    noise category. Every sense column lands in exactly one category.
    """
    params = params or CategoryParams()
    if len(matrix.columns) < 2:
        raise DataError("category clustering needs at least 2 sense columns")

    embeddings = matrix_embeddings(matrix.cells, axis=1)
    # cosine distance on unit vectors, clipped against float fuzz
    distances = np.clip(1.0 - embeddings @ embeddings.T, 0.0, 2.0)
    np.fill_diagonal(distances, 0.0)

    optics = OPTICS(
        min_samples=params.min_samples,
        metric="precomputed",
        cluster_method="xi",
        xi=params.xi,
        max_eps=params.max_eps,
    )
    # duplicate columns give zero reachability; the xi ratio then divides by 0
    with np.errstate(divide="ignore", invalid="ignore"):
        labels = optics.fit(distances).labels_

    # dissolve undersized clusters, then compact ids by first appearance
    counts: dict[int, int] = {}
    for label in labels:
        counts[label] = counts.get(label, 0) + 1
    remap: dict[int, int] = {}
    compact: list[int] = []
    for label in labels:
        if label == NOISE or counts[label] < params.min_members:
            compact.append(NOISE)
            continue
        if label not in remap:
            remap[label] = len(remap)
        compact.append(remap[label])

    categories: dict[int, WordCategory] = {}
    for column, label in zip(matrix.columns, compact):
        categories.setdefault(label, WordCategory(label)).members.append(column)
    ordered = sorted(categories.values(), key=lambda c: c.category_id)
    return ordered


def category_of(categories: Sequence[WordCategory]) -> dict[WordSense, int]:
    """Lookup table word-sense -> category id."""
    table: dict[WordSense, int] = {}
    for category in categories:
        for member in category.members:
            table[member] = category.category_id
    return table


@dataclass(frozen=True)
class TaggedToken:
    word: str
    sense: int
    category: int


def category_tag_corpus(
    corpus: Sequence[TokenSequence],
    senses: Mapping[str, SenseModel],
    categories: Sequence[WordCategory],
) -> list[list[TaggedToken]]:
    """Annotate every token with its sense index and category id.

    Senses come from the stored instance assignments (the nearest-centroid
    decisions of the WSD step); tokens without a recorded assignment fall
    back to sense 0, and word senses outside every category tag as -1.
    Tagging never fails.
    """
    lookup = category_of(categories)
    tagged: list[list[TaggedToken]] = []
    for sid, sentence in enumerate(corpus):
        row: list[TaggedToken] = []
        for pos, word in enumerate(sentence.tokens):
            model = senses.get(word)
            sense = 0
            if model is not None:
                sense = model.instance_assignments.get((sid, pos), 0)
            row.append(TaggedToken(word, sense, lookup.get((word, sense), NOISE)))
        tagged.append(row)
    return tagged


# -- reporting ------------------------------------------------------------------


def render_categories(categories: Sequence[WordCategory]) -> str:
    """Human-readable cluster listing, noise first."""
    lines = []
    for category in categories:
        words = ", ".join(category.words())
        lines.append(f"Cluster #{category.category_id}: [{words}]")
    return "\n".join(lines) + "\n"


def save_categories(categories: Sequence[WordCategory], path: str | Path) -> None:
    payload = {
        str(category.category_id): [[w, s] for w, s in category.members]
        for category in categories
    }
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8")


def load_categories(path: str | Path) -> list[WordCategory]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    categories = [
        WordCategory(int(cid), [(w, int(s)) for w, s in members])
        for cid, members in payload.items()
    ]
    return sorted(categories, key=lambda c: c.category_id)
