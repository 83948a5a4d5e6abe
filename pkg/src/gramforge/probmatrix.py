"""Word-by-blanked-sentence probability matrices.

Every corpus sentence of length N expands into N rows, each with one
position blanked; each cell holds the combined log probability of the row's
sentence with the blank replaced by the column's word. After word-sense
induction the matrix is restructured so that columns are (word, sense)
pairs: each cell of a polysemous word's column moves to exactly one of its
sense columns (nearest sense centroid to the row's embedding) and the other
sense columns stay EMPTY at that row.

EMPTY is NaN in the float cells (never a valid log probability); it reads
as probability zero when sense columns are collapsed back together and as
coordinate zero in clustering vectors.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, OracleUnavailableError
from .oracle import SequenceOracle, TokenSequence, sequence_score

if TYPE_CHECKING:  # pragma: no cover
    from .wsd import SenseModel

BLANK = "[BLANK]"
BLANK_DISPLAY = "_"

_MATRIX_FORMAT_VERSION = 1


@dataclass(frozen=True)
class BlankedSentence:
    """A corpus sentence with exactly one position replaced by BLANK."""

    source_sentence_id: int
    tokens: tuple[str, ...]
    blank_position: int

    def __post_init__(self):
        if self.tokens.count(BLANK) != 1:
            raise DataError("a blanked sentence needs exactly one blank")
        if self.tokens[self.blank_position] != BLANK:
            raise DataError("blank_position does not point at the blank")

    def filled(self, word: str) -> TokenSequence:
        """The sentence with the blank substituted; BLANK never reaches an oracle."""
        toks = list(self.tokens)
        toks[self.blank_position] = word
        return TokenSequence(tuple(toks))

    def render(self) -> str:
        return " ".join(BLANK_DISPLAY if t == BLANK else t for t in self.tokens)

    def row_id(self) -> str:
        return f"{self.source_sentence_id}:{self.blank_position}:{self.render()}"


def expand_corpus(corpus: Sequence[TokenSequence]) -> list[BlankedSentence]:
    """One row per token instance, deduplicated on the blanked token string.

    Duplicate blanked sentences (repeated sentences, or different sentences
    that agree everywhere but the blank) keep their first occurrence, so the
    row ordering is a deterministic function of the corpus ordering.
    """
    if not corpus:
        raise DataError("cannot expand an empty corpus")
    rows: list[BlankedSentence] = []
    seen: set[tuple[str, ...]] = set()
    for sid, sentence in enumerate(corpus):
        for pos in range(len(sentence)):
            toks = list(sentence.tokens)
            toks[pos] = BLANK
            key = tuple(toks)
            if key in seen:
                continue
            seen.add(key)
            rows.append(BlankedSentence(sid, key, pos))
    return rows


def corpus_vocabulary(corpus: Sequence[TokenSequence]) -> list[str]:
    """Sorted distinct corpus tokens (the matrix column order)."""
    vocab = sorted({tok for sentence in corpus for tok in sentence.tokens})
    if not vocab:
        raise DataError("empty vocabulary")
    return vocab


@dataclass
class ProbMatrix:
    """Dense log-probability matrix: rows are blanked sentences, columns words."""

    rows: list[BlankedSentence]
    columns: list[str]
    cells: np.ndarray
    _row_index: dict[tuple[str, ...], int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if self.cells.shape != (len(self.rows), len(self.columns)):
            raise DataError(
                f"cell block {self.cells.shape} does not match "
                f"{len(self.rows)} rows x {len(self.columns)} columns"
            )
        if not self._row_index:
            self._row_index = {row.tokens: i for i, row in enumerate(self.rows)}

    def row_for(self, tokens: tuple[str, ...]) -> int:
        try:
            return self._row_index[tokens]
        except KeyError:
            raise DataError(f"no matrix row for {tokens!r}") from None

    def column_for(self, word: str) -> int:
        try:
            return self.columns.index(word)
        except ValueError:
            raise DataError(f"no matrix column for {word!r}") from None


@dataclass
class SenseMatrix:
    """ProbMatrix restructured so columns are (word, sense_index) pairs."""

    rows: list[BlankedSentence]
    columns: list[tuple[str, int]]
    cells: np.ndarray

    def __post_init__(self):
        if self.cells.shape != (len(self.rows), len(self.columns)):
            raise DataError("cell block does not match rows x sense columns")

    def columns_for(self, word: str) -> list[int]:
        return [j for j, (w, _) in enumerate(self.columns) if w == word]


def fill_matrix(
    rows: Sequence[BlankedSentence],
    vocabulary: Sequence[str],
    oracle: SequenceOracle,
    jobs: int = 1,
    checkpoint_path: str | Path | None = None,
) -> ProbMatrix:
    """Score every (row, word) substitution with the combined log probability.

    Rows are independent, so they are farmed out to a bounded thread pool;
    each worker writes to its own cells and the oracle's memo cache shares
    the heavily overlapping masked sub-queries. If the oracle dies mid-fill,
    the completed rows are checkpointed (when a path was given) before the
    error propagates.
    """
    if not rows or not vocabulary:
        raise DataError("matrix fill needs at least one row and one column")
    rows = list(rows)
    vocabulary = list(vocabulary)
    cells = np.full((len(rows), len(vocabulary)), np.nan, dtype=np.float64)
    done = [False] * len(rows)

    def fill_row(i: int) -> None:
        row = rows[i]
        for j, word in enumerate(vocabulary):
            cells[i, j] = sequence_score(oracle, row.filled(word)).combined_logprob
        done[i] = True

    try:
        if jobs <= 1:
            for i in range(len(rows)):
                fill_row(i)
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                for future in [pool.submit(fill_row, i) for i in range(len(rows))]:
                    future.result()
    except OracleUnavailableError:
        if checkpoint_path is not None:
            kept = [i for i, ok in enumerate(done) if ok]
            partial = ProbMatrix(
                rows=[rows[i] for i in kept],
                columns=vocabulary,
                cells=cells[kept] if kept else np.zeros((0, len(vocabulary))),
            )
            save_matrix_csv(partial, checkpoint_path)
        raise

    return ProbMatrix(rows=rows, columns=vocabulary, cells=cells)


def unit_prob_embedding(logvec: np.ndarray) -> np.ndarray:
    """Probability-space direction of a log-probability vector.

    exp(x - max x), EMPTY/-inf coordinates as zero, L2-normalized. The
    per-vector shift is a positive scaling in probability space, so the
    direction (and all cosine geometry) is exact despite the underflow
    that plain exp would hit.
    """
    x = np.asarray(logvec, dtype=np.float64)
    out = np.zeros_like(x)
    finite = np.isfinite(x)
    if not finite.any():
        return out
    shifted = x[finite] - x[finite].max()
    out[finite] = np.exp(shifted)
    norm = np.linalg.norm(out)
    if norm == 0.0:
        return out
    return out / norm


def matrix_embeddings(cells: np.ndarray, axis: int = 0) -> np.ndarray:
    """Unit probability embeddings of rows (axis=0) or columns (axis=1)."""
    block = cells if axis == 0 else cells.T
    return np.vstack([unit_prob_embedding(v) for v in block])


def build_sense_matrix(
    matrix: ProbMatrix, senses: Mapping[str, "SenseModel"]
) -> SenseMatrix:
    """Route each cell of a polysemous word to its nearest sense column.

    The row's embedding (same construction the sense clustering used) is
    compared against the word's sense centroids by cosine similarity; the
    winning sense column receives the original cell value, the word's other
    sense columns stay EMPTY for that row. Ties go to the lowest sense
    index. Monosemous columns are copied through.
    """
    columns: list[tuple[str, int]] = []
    for word in matrix.columns:
        model = senses.get(word)
        n = len(model.centroids) if model is not None else 1
        if n < 1:
            raise DataError(f"sense model for {word!r} has no centroids")
        columns.extend((word, k) for k in range(n))

    cells = np.full((len(matrix.rows), len(columns)), np.nan, dtype=np.float64)
    row_embeddings: np.ndarray | None = None

    col_of = {pair: j for j, pair in enumerate(columns)}
    for word in matrix.columns:
        source = matrix.cells[:, matrix.column_for(word)]
        model = senses.get(word)
        n = len(model.centroids) if model is not None else 1
        if n == 1:
            cells[:, col_of[(word, 0)]] = source
            continue
        if row_embeddings is None:
            row_embeddings = matrix_embeddings(matrix.cells, axis=0)
        centroids = np.vstack([np.asarray(c, dtype=np.float64) for c in model.centroids])
        if centroids.shape[1] != len(matrix.columns):
            raise DataError(
                f"sense centroids for {word!r} have dimension "
                f"{centroids.shape[1]}, expected {len(matrix.columns)}"
            )
        similarities = row_embeddings @ centroids.T
        best = np.argmax(similarities, axis=1)  # argmax takes the lowest tied index
        for i in range(len(matrix.rows)):
            cells[i, col_of[(word, int(best[i]))]] = source[i]

    return SenseMatrix(rows=list(matrix.rows), columns=columns, cells=cells)


def collapse_senses(sense_matrix: SenseMatrix) -> tuple[list[str], np.ndarray]:
    """Sum each word's sense columns in probability space (EMPTY = 0).

    Returns the word order and the collapsed log-probability cells; with the
    exactly-one-sense-per-row invariant this reproduces the parent matrix.
    """
    words: list[str] = []
    for word, _ in sense_matrix.columns:
        if word not in words:
            words.append(word)
    out = np.full((sense_matrix.cells.shape[0], len(words)), -np.inf)
    for w_idx, word in enumerate(words):
        block = sense_matrix.cells[:, sense_matrix.columns_for(word)]
        filled = np.where(np.isnan(block), -np.inf, block)
        with np.errstate(invalid="ignore", divide="ignore"):
            m = filled.max(axis=1)
            safe_m = np.where(np.isfinite(m), m, 0.0)
            summed = np.log(np.exp(filled - safe_m[:, None]).sum(axis=1))
            out[:, w_idx] = np.where(np.isfinite(m), m + summed, -np.inf)
    return words, out


# -- corpus input -----------------------------------------------------------


def read_corpus(path: str | Path) -> list[TokenSequence]:
    """One sentence per line: plain whitespace-tokenized text, or JSON lines
    with a pre-tokenized {"tokens": [...]} object. Tokens are lowercased."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file {path} does not exist")
    sentences: list[TokenSequence] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("{"):
            try:
                record = json.loads(line)
                tokens = [str(t).lower() for t in record["tokens"]]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad JSON corpus line: {exc}") from exc
            sentences.append(TokenSequence(tuple(tokens)))
        else:
            sentences.append(TokenSequence.from_text(line))
    if not sentences:
        raise DataError(f"{path}: empty corpus")
    return sentences


def write_corpus(corpus: Iterable[TokenSequence], path: str | Path) -> None:
    Path(path).write_text(
        "".join(s.text() + "\n" for s in corpus), encoding="utf-8"
    )


# -- matrix persistence -------------------------------------------------------


def _column_header(col) -> str:
    if isinstance(col, tuple):
        word, sense = col
        return f"{word}#{sense}"
    return col


def _parse_column_header(name: str):
    if "#" in name:
        word, _, sense = name.rpartition("#")
        try:
            return (word, int(sense))
        except ValueError:
            return name
    return name


def save_matrix_csv(matrix: ProbMatrix | SenseMatrix, path: str | Path) -> None:
    """Row id column, then one log-prob column per word or word#sense.

    EMPTY cells are written as empty fields; floats use repr so the
    round-trip is bit-exact.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row"] + [_column_header(c) for c in matrix.columns])
        for i, row in enumerate(matrix.rows):
            rendered = [
                "" if np.isnan(v) else repr(float(v)) for v in matrix.cells[i]
            ]
            writer.writerow([row.row_id()] + rendered)


def _parse_row_id(row_id: str) -> BlankedSentence:
    try:
        sid, pos, rendered = row_id.split(":", 2)
        tokens = rendered.split(" ")
        tokens[int(pos)] = BLANK  # position-keyed, so a literal "_" token is safe
        return BlankedSentence(int(sid), tuple(tokens), int(pos))
    except (ValueError, IndexError, DataError) as exc:
        raise DataError(f"malformed matrix row id {row_id!r}: {exc}") from exc


def load_matrix_csv(path: str | Path) -> ProbMatrix | SenseMatrix:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty matrix file") from None
        columns = [_parse_column_header(h) for h in header[1:]]
        rows: list[BlankedSentence] = []
        data: list[list[float]] = []
        for record in reader:
            rows.append(_parse_row_id(record[0]))
            data.append([float(v) if v else np.nan for v in record[1:]])
    cells = np.asarray(data, dtype=np.float64)
    if any(isinstance(c, tuple) for c in columns):
        return SenseMatrix(rows=rows, columns=columns, cells=cells)
    return ProbMatrix(rows=rows, columns=columns, cells=cells)


def save_matrix_binary(matrix: ProbMatrix | SenseMatrix, path: str | Path) -> None:
    """Compact binary twin of the CSV layout (column-major cell block)."""
    header = {
        "version": _MATRIX_FORMAT_VERSION,
        "columns": [list(c) if isinstance(c, tuple) else c for c in matrix.columns],
        "rows": [[r.source_sentence_id, list(r.tokens), r.blank_position] for r in matrix.rows],
        "kind": "sense" if isinstance(matrix, SenseMatrix) else "prob",
    }
    np.savez(
        path,
        header=np.frombuffer(json.dumps(header).encode("utf-8"), dtype=np.uint8),
        cells=np.asfortranarray(matrix.cells),
    )


def load_matrix_binary(path: str | Path) -> ProbMatrix | SenseMatrix:
    with np.load(path) as archive:
        header = json.loads(bytes(archive["header"]).decode("utf-8"))
        cells = np.array(archive["cells"], dtype=np.float64)
    if header.get("version") != _MATRIX_FORMAT_VERSION:
        raise DataError(f"{path}: unsupported matrix format version")
    rows = [
        BlankedSentence(sid, tuple(tokens), pos)
        for sid, tokens, pos in header["rows"]
    ]
    if header["kind"] == "sense":
        columns = [(w, int(k)) for w, k in header["columns"]]
        return SenseMatrix(rows=rows, columns=columns, cells=cells)
    return ProbMatrix(rows=rows, columns=list(header["columns"]), cells=cells)
