"""Candidate-rule proposal and oracle-guided incremental rule acceptance.

A candidate link rule is proposed from category adjacencies in the tagged
corpus, then judged by generation: sentences sampled with the rule anchored
in the grammar are scored against sentences sampled from the grammar with
the rule mutated (connector directions swapped). If the originals beat the
distortions by more than the threshold, in mean per-token log probability,
the rule is accepted. A reference mode compares generated sentences against
same-length reference sentences instead of a mutation.
"""

from __future__ import annotations

import json
import zlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .categories import NOISE, TaggedToken
from .errors import DataError, GenerationError, GrammarConsistencyError
from .grammar import (
    Connector,
    Disjunct,
    Grammar,
    Rule,
    generate,
    install_rule,
    mutate_rule,
    parse_rule,
)
from .oracle import SequenceOracle, TokenSequence, sequence_score

ACCEPT = "accept"
REJECT = "reject"
SKIPPED = "skipped"

MODE_MUTATION = "mutation"
MODE_REFERENCE = "reference"

PROPOSED = "proposed-from-corpus"
USER_SUPPLIED = "user-supplied"


@dataclass(frozen=True)
class CandidateRule:
    rule: Rule
    provenance: str = PROPOSED
    support: int = 1

    def __post_init__(self):
        if self.provenance == PROPOSED and self.support < 1:
            raise DataError("corpus-proposed candidates need support >= 1")


@dataclass
class EvaluationReport:
    """Full audit record of one rule's verdict."""

    rule: Rule
    mutated_rule: Rule | None
    samples_original: list[tuple[TokenSequence, float]]
    samples_mutated: list[tuple[TokenSequence, float]]
    margin: float
    verdict: str
    mode: str
    error: str | None = None
    warnings: list[str] = field(default_factory=list)


@dataclass
class InductionConfig:
    samples_per_rule: int = 20
    threshold: float = 0.2  # nats per token
    max_len: int = 16
    rng_seed: int = 0
    mode: str = MODE_MUTATION
    length_normalization: str = "per-token"  # or "none"
    min_support: int = 1
    max_depth: int = 8
    max_attempts: int = 100

    def __post_init__(self):
        if self.samples_per_rule < 1:
            raise DataError("samples_per_rule must be >= 1")
        if self.threshold < 0:
            raise DataError("threshold must be >= 0")
        if self.mode not in (MODE_MUTATION, MODE_REFERENCE):
            raise DataError(f"unknown evaluation mode {self.mode!r}")
        if self.length_normalization not in ("per-token", "none"):
            raise DataError("length_normalization must be 'per-token' or 'none'")


def _category_name(category: int, names: Mapping[int, str] | None) -> str:
    if names and category in names:
        return names[category]
    return f"c{category}"


def propose_rules(
    tagged_corpus: Sequence[Sequence[TaggedToken]],
    category_names: Mapping[int, str] | None = None,
    min_support: int = 1,
) -> list[CandidateRule]:
    """Adjacency-based candidates over category labels.

    Every ordered pair of categories (A, B) adjacent in the corpus proposes
    ``B: A-`` (the counterpart ``A: B+`` is implied and added at install
    time); every category trigram (A, B, C) additionally proposes the
    composite ``C: B- & A-``. Uncategorized (-1) tokens never participate.
    Candidates are deduplicated, filtered by support, and sorted by support
    descending with a lexicographic tie-break.
    """
    if not tagged_corpus or all(not row for row in tagged_corpus):
        raise DataError("cannot propose rules from an empty tagged corpus")

    pair_counts: Counter[tuple[str, str]] = Counter()
    trigram_counts: Counter[tuple[str, str, str]] = Counter()
    for row in tagged_corpus:
        labels = [
            None if tag.category == NOISE else _category_name(tag.category, category_names)
            for tag in row
        ]
        for a, b in zip(labels, labels[1:]):
            if a is not None and b is not None:
                pair_counts[(a, b)] += 1
        for a, b, c in zip(labels, labels[1:], labels[2:]):
            if a is not None and b is not None and c is not None:
                trigram_counts[(a, b, c)] += 1

    candidates: list[CandidateRule] = []
    for (a, b), support in pair_counts.items():
        if support < min_support or a == b:
            continue
        rule = Rule(b, (Disjunct((Connector(a, "-"),)),))
        candidates.append(CandidateRule(rule, PROPOSED, support))
    for (a, b, c), support in trigram_counts.items():
        if support < min_support or len({a, b, c}) < 3:
            continue
        rule = Rule(c, (Disjunct((Connector(b, "-"), Connector(a, "-"))),))
        candidates.append(CandidateRule(rule, PROPOSED, support))

    candidates.sort(key=lambda cand: (-cand.support, cand.rule.render()))
    return candidates


def _rule_seed(rule: Rule, config: InductionConfig, salt: str) -> int:
    return config.rng_seed ^ zlib.crc32(f"{salt}:{rule.render()}".encode("utf-8"))


def _score(oracle: SequenceOracle, sentence: TokenSequence, config: InductionConfig) -> float:
    combined = sequence_score(oracle, sentence).combined_logprob
    if config.length_normalization == "per-token":
        return combined / len(sentence)
    return combined


def _sample(
    grammar: Grammar,
    rule: Rule,
    oracle: SequenceOracle,
    config: InductionConfig,
    salt: str,
) -> list[tuple[TokenSequence, float]]:
    base = _rule_seed(rule, config, salt)
    samples = []
    for k in range(config.samples_per_rule):
        sentence = generate(
            grammar,
            anchor_rule=rule,
            max_len=config.max_len,
            rng_seed=base + k,
            max_depth=config.max_depth,
            max_attempts=config.max_attempts,
        )
        samples.append((sentence, _score(oracle, sentence, config)))
    return samples


def evaluate_rule(
    rule: Rule,
    grammar: Grammar,
    oracle: SequenceOracle,
    config: InductionConfig | None = None,
) -> EvaluationReport:
    """Mutation-mode verdict: does the rule beat its connector-swap?

    The rule is installed on a copy, mutated (with counterpart swaps), and
    both grammars generate anchored samples which the oracle scores. Accept
    iff the mean score margin exceeds the threshold. Generation or mutation
    failures yield a skipped report, never a rejection.
    """
    config = config or InductionConfig()
    work = install_rule(grammar, rule)
    try:
        mutated, mutated_grammar = mutate_rule(rule, work)
    except GrammarConsistencyError as exc:
        return EvaluationReport(
            rule=rule,
            mutated_rule=None,
            samples_original=[],
            samples_mutated=[],
            margin=float("nan"),
            verdict=SKIPPED,
            mode=MODE_MUTATION,
            error=f"mutation failed: {exc}",
        )
    try:
        originals = _sample(work, rule, oracle, config, "original")
        mutants = _sample(mutated_grammar, mutated, oracle, config, "mutated")
    except GenerationError as exc:
        return EvaluationReport(
            rule=rule,
            mutated_rule=mutated,
            samples_original=[],
            samples_mutated=[],
            margin=float("nan"),
            verdict=SKIPPED,
            mode=MODE_MUTATION,
            error=f"generation failed: {exc}",
        )

    margin = _mean(s for _, s in originals) - _mean(s for _, s in mutants)
    return EvaluationReport(
        rule=rule,
        mutated_rule=mutated,
        samples_original=originals,
        samples_mutated=mutants,
        margin=margin,
        verdict=ACCEPT if margin > config.threshold else REJECT,
        mode=MODE_MUTATION,
    )


def evaluate_against_references(
    rule: Rule,
    grammar: Grammar,
    oracle: SequenceOracle,
    references: Sequence[TokenSequence],
    config: InductionConfig | None = None,
) -> EvaluationReport:
    """Reference-mode verdict: generated sentences vs same-length references.

    Each generated sample is compared against the references of its own
    length (nearest length with a recorded warning when none matches).
    Accept iff the generated mean is within the threshold of the reference
    mean.
    """
    config = config or InductionConfig()
    if not references:
        raise DataError("reference mode needs a non-empty reference set")
    work = install_rule(grammar, rule)
    try:
        originals = _sample(work, rule, oracle, config, "original")
    except GenerationError as exc:
        return EvaluationReport(
            rule=rule,
            mutated_rule=None,
            samples_original=[],
            samples_mutated=[],
            margin=float("nan"),
            verdict=SKIPPED,
            mode=MODE_REFERENCE,
            error=f"generation failed: {exc}",
        )

    warnings: list[str] = []
    by_length: dict[int, list[TokenSequence]] = {}
    for ref in references:
        by_length.setdefault(len(ref), []).append(ref)
    ref_scores = {ref.tokens: _score(oracle, ref, config) for ref in references}

    # each sample is compared to the mean of its own length band, so a rule
    # whose samples are their own references lands at margin zero exactly
    per_sample_ref_means: list[float] = []
    selected: list[TokenSequence] = []
    seen: set[tuple[str, ...]] = set()
    for sentence, _ in originals:
        n = len(sentence)
        if n in by_length:
            matches = by_length[n]
        else:
            nearest = min(by_length, key=lambda m: (abs(m - n), m))
            matches = by_length[nearest]
            warnings.append(
                f"no reference of length {n}; using nearest length {nearest}"
            )
        per_sample_ref_means.append(_mean(ref_scores[ref.tokens] for ref in matches))
        for ref in matches:
            if ref.tokens not in seen:
                seen.add(ref.tokens)
                selected.append(ref)

    reference_samples = [(ref, ref_scores[ref.tokens]) for ref in selected]
    margin = _mean(s for _, s in originals) - _mean(per_sample_ref_means)
    # cushion for float dust so self-references accept even at threshold 0
    verdict = ACCEPT if margin >= -config.threshold - 1e-12 else REJECT
    return EvaluationReport(
        rule=rule,
        mutated_rule=None,
        samples_original=originals,
        samples_mutated=reference_samples,
        margin=margin,
        verdict=verdict,
        mode=MODE_REFERENCE,
        warnings=warnings,
    )


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


def lexicon_from_tags(
    tagged_corpus: Sequence[Sequence[TaggedToken]],
    category_names: Mapping[int, str] | None = None,
) -> dict[str, tuple[str, ...]]:
    members: dict[str, set[str]] = {}
    for row in tagged_corpus:
        for tag in row:
            if tag.category == NOISE:
                continue
            members.setdefault(
                _category_name(tag.category, category_names), set()
            ).add(tag.word)
    return {cat: tuple(sorted(words)) for cat, words in members.items()}


def induce(
    tagged_corpus: Sequence[Sequence[TaggedToken]],
    oracle: SequenceOracle,
    config: InductionConfig | None = None,
    category_names: Mapping[int, str] | None = None,
    references: Sequence[TokenSequence] | None = None,
) -> tuple[Grammar, list[EvaluationReport]]:
    """Accumulate a grammar: propose, evaluate in support order, install.

    Accepted rules (with their counterparts) join the grammar before the
    next candidate is evaluated; every candidate leaves an audit report.
    """
    config = config or InductionConfig()
    candidates = propose_rules(
        tagged_corpus, category_names=category_names, min_support=config.min_support
    )
    grammar = Grammar(
        rules={}, category_lexicon=lexicon_from_tags(tagged_corpus, category_names)
    )
    reports: list[EvaluationReport] = []
    for candidate in candidates:
        if config.mode == MODE_REFERENCE:
            report = evaluate_against_references(
                candidate.rule, grammar, oracle, references or [], config
            )
        else:
            report = evaluate_rule(candidate.rule, grammar, oracle, config)
        reports.append(report)
        if report.verdict == ACCEPT:
            grammar = install_rule(grammar, candidate.rule)
    return grammar, reports


# -- report persistence ------------------------------------------------------------


def report_to_dict(report: EvaluationReport) -> dict:
    return {
        "rule": report.rule.render(),
        "mutated_rule": report.mutated_rule.render() if report.mutated_rule else None,
        "margin": report.margin,
        "verdict": report.verdict,
        "mode": report.mode,
        "samples_original": [
            {"sentence": s.text(), "score": score} for s, score in report.samples_original
        ],
        "samples_mutated": [
            {"sentence": s.text(), "score": score} for s, score in report.samples_mutated
        ],
        "error": report.error,
        "warnings": report.warnings,
    }


def save_reports(reports: Sequence[EvaluationReport], path: str | Path) -> None:
    """JSON-lines audit trail, one report per rule."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(json.dumps(report_to_dict(report), sort_keys=True) + "\n")


def load_reports(path: str | Path) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]
