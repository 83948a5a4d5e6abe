"""Sequence-probability oracles and directional sentence scoring.

A sentence is scored by chaining masked-token conditionals: the forward
score multiplies P(w_i | w_0..w_{i-1}), the backward score multiplies
P(w_i | w_{i+1}..w_N), and the combined score is their geometric mean
(arithmetic mean in log space). Any oracle that can answer
"log P(target = token | unmasked positions)" plugs into the same chains.

Two oracles live here: a deterministic add-k smoothed n-gram model (so the
whole pipeline runs offline and is hand-checkable) and, in
:mod:`gramforge.remote`, a client for the masked-LM HTTP service.

Scoring is defined over single sentences; wider discourse context would
enter through extra visible tokens in the masked queries, which is the
extension point for multi-sentence support.
"""

from __future__ import annotations

import math
import threading
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError, OutOfVocabularyError

MASK = "[MASK]"
BOUNDARY = "[BOUNDARY]"

RESERVED_TOKENS = frozenset({MASK, BOUNDARY})

_NGRAM_MAGIC = "gramforge-ngram"
_NGRAM_VERSION = 1


@dataclass(frozen=True)
class TokenSequence:
    """An ordered, lowercased token sequence (one sentence)."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        if isinstance(self.tokens, list):
            object.__setattr__(self, "tokens", tuple(self.tokens))
        if len(self.tokens) < 1:
            raise DataError("a token sequence needs at least one token")
        for tok in self.tokens:
            if not tok or not isinstance(tok, str):
                raise DataError(f"empty or non-string token in {self.tokens!r}")
            if tok in RESERVED_TOKENS:
                raise DataError(f"reserved symbol {tok!r} cannot appear in a sentence")

    @classmethod
    def from_text(cls, text: str) -> "TokenSequence":
        return cls(tuple(text.lower().split()))

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class MaskedQuery:
    """A token sequence with masked positions and one designated target.

    ``tokens`` holds concrete tokens or the MASK symbol; ``target_position``
    must index a masked slot. ``candidates`` optionally limits which tokens
    the caller intends to score there (used by the wire protocol).
    """

    tokens: tuple[str, ...]
    target_position: int
    candidates: tuple[str, ...] | None = None

    def __post_init__(self):
        if isinstance(self.tokens, list):
            object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.candidates is not None and not isinstance(self.candidates, tuple):
            object.__setattr__(self, "candidates", tuple(self.candidates))
        if MASK not in self.tokens:
            raise DataError("a masked query needs at least one masked position")
        if not (0 <= self.target_position < len(self.tokens)):
            raise DataError(f"target position {self.target_position} out of bounds")
        if self.tokens[self.target_position] != MASK:
            raise DataError("target position must be masked")


@dataclass(frozen=True)
class SequenceScore:
    """Directional log probabilities of one sentence (natural log)."""

    forward_logprob: float
    backward_logprob: float

    @property
    def combined_logprob(self) -> float:
        """Log of the geometric mean of the two directional probabilities."""
        return (self.forward_logprob + self.backward_logprob) / 2.0


class SequenceOracle(ABC):
    """Answers masked-token conditional log-probability queries.

    Responses are memoized by (query, candidate) behind this interface; the
    cache is lock-protected so concurrent read-only workers can share one
    oracle instance.
    """

    def __init__(self):
        self._cache: dict[tuple, float] = {}
        self._cache_lock = threading.Lock()

    def masked_token_logprob(self, query: MaskedQuery, token: str) -> float:
        """log P(target position = token | unmasked positions)."""
        key = (query.tokens, query.target_position, token)
        with self._cache_lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        value = self._masked_token_logprob(query, token)
        with self._cache_lock:
            self._cache[key] = value
        return value

    @abstractmethod
    def _masked_token_logprob(self, query: MaskedQuery, token: str) -> float:
        ...


def forward_logprob(oracle: SequenceOracle, sequence: TokenSequence) -> float:
    """Sum of log P(w_i | w_0..w_{i-1}); positions i..N are masked per factor."""
    n = len(sequence)
    total = 0.0
    for i in range(n):
        query = MaskedQuery(sequence.tokens[:i] + (MASK,) * (n - i), i)
        total += oracle.masked_token_logprob(query, sequence.tokens[i])
    return total


def backward_logprob(oracle: SequenceOracle, sequence: TokenSequence) -> float:
    """Sum of log P(w_i | w_{i+1}..w_N); positions 0..i are masked per factor."""
    n = len(sequence)
    total = 0.0
    for i in range(n - 1, -1, -1):
        query = MaskedQuery((MASK,) * (i + 1) + sequence.tokens[i + 1:], i)
        total += oracle.masked_token_logprob(query, sequence.tokens[i])
    return total


def sequence_score(oracle: SequenceOracle, sequence: TokenSequence) -> SequenceScore:
    """Forward, backward, and geometric-mean combined log probability."""
    return SequenceScore(
        forward_logprob=forward_logprob(oracle, sequence),
        backward_logprob=backward_logprob(oracle, sequence),
    )


class NgramOracle(SequenceOracle):
    """Add-k smoothed n-gram model that answers masked queries.

    Sentences are padded with a single boundary symbol on both ends during
    training, and context tables are kept for every context length up to
    order-1, in both reading directions. A masked query is answered from the
    visible context windows around the target:

    * walking outward from the target, a side's context stops at the first
      masked position; positions beyond the sentence count as the boundary
      symbol (the query length tells the model where the sentence ends);
    * a side is *informative* if its window contains a real (non-boundary)
      token. If both sides are informative the two directional conditionals
      are combined product-of-experts style (divided by the unigram) and
      renormalized; if one is, that side's conditional is used as-is; if
      neither is, the left boundary context wins, then the right, then the
      unigram.

    The precedence rules make the forward chain exactly reproduce the
    model's own left-to-right factorization while the backward chain reads
    the reversed-direction tables, boundary included.
    """

    def __init__(
        self,
        order: int,
        smoothing_k: float,
        vocabulary: frozenset[str],
        forward_counts: Mapping[tuple[str, ...], Counter],
        backward_counts: Mapping[tuple[str, ...], Counter],
        strict: bool = False,
    ):
        super().__init__()
        if order < 1:
            raise DataError("n-gram order must be >= 1")
        if smoothing_k <= 0:
            raise DataError("smoothing_k must be > 0")
        self.order = order
        self.smoothing_k = smoothing_k
        self.vocabulary = frozenset(vocabulary) | {BOUNDARY}
        self.strict = strict
        self.forward_counts = dict(forward_counts)
        self.backward_counts = dict(backward_counts)
        self._forward_totals = {c: sum(t.values()) for c, t in self.forward_counts.items()}
        self._backward_totals = {c: sum(t.values()) for c, t in self.backward_counts.items()}
        self._dist_lock = threading.Lock()
        self._dist_cache: dict[tuple, tuple] = {}

    # -- raw conditionals ------------------------------------------------

    def _conditional(self, direction: str, context: tuple[str, ...], token: str) -> float:
        counts = self.forward_counts if direction == "f" else self.backward_counts
        totals = self._forward_totals if direction == "f" else self._backward_totals
        total = totals.get(context, 0)
        seen = counts.get(context, None)
        c = seen.get(token, 0) if seen is not None else 0
        return math.log((c + self.smoothing_k) / (total + self.smoothing_k * len(self.vocabulary)))

    # -- context extraction ----------------------------------------------

    def _side_context(self, query: MaskedQuery, step: int) -> tuple[str, ...]:
        """Visible window on one side of the target (step -1 left, +1 right).

        Returned outward-to-inward reversed into natural reading order for
        the matching direction table; stops at the first masked position.
        """
        collected = []
        pos = query.target_position
        for _ in range(self.order - 1):
            pos += step
            if 0 <= pos < len(query.tokens):
                tok = query.tokens[pos]
                if tok == MASK:
                    break
                collected.append(tok)
            else:
                collected.append(BOUNDARY)
        return tuple(reversed(collected))

    @staticmethod
    def _informative(context: tuple[str, ...]) -> bool:
        return any(tok != BOUNDARY for tok in context)

    def _resolve(self, query: MaskedQuery) -> tuple[str, tuple[str, ...], tuple[str, ...]]:
        """Pick the conditioning mode: both sides, one side, or unigram."""
        left = self._side_context(query, -1)
        right = self._side_context(query, +1)
        if self._informative(left) and self._informative(right):
            return "both", left, right
        if self._informative(left):
            return "left", left, right
        if self._informative(right):
            return "right", left, right
        if left:
            return "left", left, right
        if right:
            return "right", left, right
        return "unigram", left, right

    def _raw_logprob(self, mode: str, left, right, token: str) -> float:
        if mode == "both":
            return (
                self._conditional("f", left, token)
                + self._conditional("b", right, token)
                - self._conditional("f", (), token)
            )
        if mode == "left":
            return self._conditional("f", left, token)
        if mode == "right":
            return self._conditional("b", right, token)
        return self._conditional("f", (), token)

    # -- distribution over the vocabulary ----------------------------------

    def _distribution(self, query: MaskedQuery) -> tuple[dict[str, float], float, tuple]:
        """Normalized distribution over the vocabulary, plus the normalizer.

        One-sided smoothed conditionals already sum to one; only the
        product-of-experts combination needs explicit renormalization.
        """
        resolved = self._resolve(query)
        with self._dist_lock:
            cached = self._dist_cache.get(resolved)
        if cached is not None:
            return cached

        mode, left, right = resolved
        raw = {v: self._raw_logprob(mode, left, right, v) for v in sorted(self.vocabulary)}
        norm = _logsumexp(raw.values()) if mode == "both" else 0.0
        dist = {v: lp - norm for v, lp in raw.items()}

        entry = (dist, norm, resolved)
        with self._dist_lock:
            self._dist_cache[resolved] = entry
        return entry

    def _masked_token_logprob(self, query: MaskedQuery, token: str) -> float:
        dist, norm, (mode, left, right) = self._distribution(query)
        if token in dist:
            return dist[token]
        if self.strict:
            raise OutOfVocabularyError(f"token {token!r} not in the oracle vocabulary")
        # Out-of-vocabulary tokens score as the smoothed unseen event.
        return self._raw_logprob(mode, left, right, token) - norm


def _logsumexp(values: Iterable[float]) -> float:
    vals = list(values)
    m = max(vals)
    return m + math.log(sum(math.exp(v - m) for v in vals))


def train_ngram_oracle(
    corpus: Sequence[TokenSequence],
    order: int = 2,
    smoothing_k: float = 0.1,
    strict: bool = False,
) -> NgramOracle:
    """Count boundary-padded n-gram events of every length up to order-1.

    Each sentence contributes one prediction event per real token plus one
    for the closing boundary; the reversed tables are trained the same way
    on reversed sentences, so both directions share the unigram table.
    """
    if not corpus:
        raise DataError("cannot train an n-gram oracle on an empty corpus")
    if order < 1:
        raise DataError("n-gram order must be >= 1")

    vocabulary: set[str] = set()
    forward: dict[tuple[str, ...], Counter] = {}
    backward: dict[tuple[str, ...], Counter] = {}

    def count(table, tokens):
        padded = [BOUNDARY] * (order - 1) + list(tokens) + [BOUNDARY]
        for j in range(order - 1, len(padded)):
            for ell in range(order):
                ctx = tuple(padded[j - ell:j])
                table.setdefault(ctx, Counter())[padded[j]] += 1

    for sentence in corpus:
        vocabulary.update(sentence.tokens)
        count(forward, sentence.tokens)
        count(backward, tuple(reversed(sentence.tokens)))

    return NgramOracle(
        order=order,
        smoothing_k=smoothing_k,
        vocabulary=frozenset(vocabulary),
        forward_counts=forward,
        backward_counts=backward,
        strict=strict,
    )


# -- model persistence ----------------------------------------------------


def save_ngram_oracle(oracle: NgramOracle, path: str | Path) -> None:
    """Versioned line-based text format: direction, count, token, context."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"{_NGRAM_MAGIC} {_NGRAM_VERSION}\n")
        fh.write(f"order\t{oracle.order}\n")
        fh.write(f"smoothing_k\t{oracle.smoothing_k!r}\n")
        fh.write(f"strict\t{int(oracle.strict)}\n")
        for tok in sorted(oracle.vocabulary):
            fh.write(f"vocab\t{tok}\n")
        for tag, table in (("F", oracle.forward_counts), ("B", oracle.backward_counts)):
            for ctx in sorted(table):
                counter = table[ctx]
                for tok in sorted(counter):
                    fields = [tag, str(counter[tok]), tok, *ctx]
                    fh.write("\t".join(fields) + "\n")


def load_ngram_oracle(path: str | Path) -> NgramOracle:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataError(f"{path}: empty n-gram model file")
    header = lines[0].split()
    if len(header) != 2 or header[0] != _NGRAM_MAGIC:
        raise DataError(f"{path}: not a gramforge n-gram model")
    if int(header[1]) != _NGRAM_VERSION:
        raise DataError(f"{path}: unsupported model version {header[1]}")

    order = None
    smoothing_k = None
    strict = False
    vocabulary: set[str] = set()
    forward: dict[tuple[str, ...], Counter] = {}
    backward: dict[tuple[str, ...], Counter] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split("\t")
        key = fields[0]
        if key == "order":
            order = int(fields[1])
        elif key == "smoothing_k":
            smoothing_k = float(fields[1])
        elif key == "strict":
            strict = bool(int(fields[1]))
        elif key == "vocab":
            vocabulary.add(fields[1])
        elif key in ("F", "B"):
            if len(fields) < 3:
                raise DataError(f"{path}:{lineno}: malformed count line")
            count = int(fields[1])
            token = fields[2]
            ctx = tuple(fields[3:])
            table = forward if key == "F" else backward
            table.setdefault(ctx, Counter())[token] = count
        else:
            raise DataError(f"{path}:{lineno}: unknown record {key!r}")
    if order is None or smoothing_k is None:
        raise DataError(f"{path}: missing order/smoothing_k header")
    vocabulary.discard(BOUNDARY)
    return NgramOracle(
        order=order,
        smoothing_k=smoothing_k,
        vocabulary=frozenset(vocabulary),
        forward_counts=forward,
        backward_counts=backward,
        strict=strict,
    )
