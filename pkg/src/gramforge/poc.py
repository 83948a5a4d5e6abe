"""Desk-scale proof-of-concept fixtures and the end-to-end rule experiment.

Everything here is deterministic and offline: small hand-built corpora with
planted structure (two-sense words, determiner/pronoun frames), the gold
link grammar over six word categories, the spurious rules that corrupt it,
and the runner that scores every rule of the corrupted grammar against its
mutation with an n-gram oracle trained on gold-generated sentences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .grammar import Grammar, Rule, generate, install_rule, parse_grammar, parse_rule
from .induction import (
    ACCEPT,
    REJECT,
    EvaluationReport,
    InductionConfig,
    evaluate_rule,
)
from .oracle import NgramOracle, TokenSequence, train_ngram_oracle


def _sentences(*texts: str) -> list[TokenSequence]:
    return [TokenSequence.from_text(t) for t in texts]


def build_wsd_corpus() -> tuple[list[TokenSequence], str, dict[tuple[int, int], str]]:
    """A 16-sentence corpus where "bat" has two planted context families.

    Family "animal" frames the target between "furry" and "flew"; family
    "tool" between "wooden" and "hit". Sibling words (owl/moth, club/stick)
    occupy the same frames so each family's rows point at a family-specific
    set of compatible fill words. Returns the corpus, the target word, and
    gold sense labels keyed by (sentence_id, position of the target).
    """
    animal = _sentences(
        "the furry bat flew at night .",
        "the furry bat flew over us .",
        "the furry bat flew away quickly .",
        "the furry bat flew past dawn .",
        "the furry bat flew in circles .",
        "the furry owl flew at night .",
        "the furry owl flew over us .",
        "the furry moth flew away quickly .",
    )
    tool = _sentences(
        "the wooden bat hit the ball .",
        "the wooden bat hit a window .",
        "the wooden bat hit the fence .",
        "the wooden bat hit his arm .",
        "the wooden bat hit the wall .",
        "the wooden club hit the ball .",
        "the wooden club hit a window .",
        "the wooden stick hit the fence .",
    )
    corpus = animal + tool
    target = "bat"
    gold: dict[tuple[int, int], str] = {}
    for sid, sentence in enumerate(corpus):
        for pos, tok in enumerate(sentence.tokens):
            if tok == target:
                gold[(sid, pos)] = "animal" if sid < len(animal) else "tool"
    return corpus, target, gold


def build_category_corpus() -> tuple[list[TokenSequence], set[str], set[str]]:
    """Sentences whose determiners and pronouns are freely interchangeable.

    The three determiners share every noun frame and the four pronouns share
    every bare-verb frame, so their matrix columns form two tight bundles
    for the density clustering to pick up. Returns the corpus plus the two
    planted word sets.
    """
    determiners = ["the", "my", "his"]
    pronouns = ["they", "he", "i", "you"]
    corpus: list[TokenSequence] = []
    for det in determiners:
        for noun in ("dog", "cat"):
            for verb in ("runs", "sleeps"):
                corpus.append(TokenSequence.from_text(f"{det} {noun} {verb} ."))
    for pronoun in pronouns:
        for verb in ("run", "sleep"):
            corpus.append(TokenSequence.from_text(f"{pronoun} {verb} daily ."))
    return corpus, set(determiners), set(pronouns)


FRAGMENT_DICT = """
% Three-word noun-phrase fragment: licenses exactly "the small kids".
kids: small- & the-;
small: kids+;
the: kids+;
"""


def fragment_grammar() -> Grammar:
    """The noun-phrase trio used to demonstrate connector-swap mutation."""
    return parse_grammar(FRAGMENT_DICT)


GOLD_DICT = """
% Gold proof-of-concept dictionary: six words in six categories plus the
% sentence-final period. Longest sentence:
%   the small kids eat the small candy quickly .
the:     kids+ | candy+;
small:   kids+ | candy+;
kids:    the- & eat+ | small- & the- & eat+;
candy:   eat- | the- & eat- | small- & the- & eat-;
eat:     kids- & .+ | kids- & candy+ & .+ | kids- & quickly+ & .+ | kids- & candy+ & quickly+ & .+;
quickly: eat-;
.:       eat-;
"""

GOLD_CATEGORIES = {
    "det": ("the",),
    "adj": ("small",),
    "subj": ("kids",),
    "verb": ("eat",),
    "obj": ("candy",),
    "adv": ("quickly",),
    "punct": (".",),
}

LONGEST_GOLD_SENTENCE = "the small kids eat the small candy quickly ."


def gold_grammar() -> Grammar:
    """The 15-rule gold grammar of the rule-evaluation experiment."""
    return parse_grammar(GOLD_DICT, GOLD_CATEGORIES)


# Hand-added corruptions: attachment reversals whose anchored samples stay
# short, so the corrupted word order dominates the score on both
# orientations and neither side can coast on embedded gold fragments.
SPURIOUS_RULES = (
    "kids: quickly+;",    # subject takes an adverb
    "eat: the+;",         # verb governs a bare determiner
    "candy: quickly-;",   # adverb attached to a noun
    "the: small-;",       # determiner after its adjective
    "small: eat+;",       # adjective governing a verb
    "quickly: the+;",     # adverb governing a determiner
)


def correct_rules() -> list[Rule]:
    """The gold dictionary split into one single-disjunct rule per entry."""
    gold = gold_grammar()
    rules = []
    for owner in gold.owners():
        for disjunct in gold.rules[owner].disjuncts:
            rules.append(Rule(owner, (disjunct,)))
    return rules


def spurious_rules() -> list[Rule]:
    return [parse_rule(text) for text in SPURIOUS_RULES]


def corrupted_grammar() -> Grammar:
    """Gold grammar plus the spurious rules (and their counterparts)."""
    grammar = gold_grammar()
    for rule in spurious_rules():
        grammar = install_rule(grammar, rule)
    return grammar


def generate_gold_corpus(n_sentences: int = 5000, seed: int = 0) -> list[TokenSequence]:
    """Deterministic sample of gold-grammar sentences for oracle training."""
    gold = gold_grammar()
    return [generate(gold, rng_seed=seed * 100003 + i) for i in range(n_sentences)]


@dataclass
class PocResult:
    """Outcome of the 21-rule evaluation experiment."""

    reports: list[tuple[str, Rule, EvaluationReport]] = field(default_factory=list)
    config: InductionConfig | None = None
    oracle: NgramOracle | None = None

    def verdicts(self, kind: str) -> list[str]:
        return [report.verdict for k, _, report in self.reports if k == kind]

    @property
    def spurious_rejected(self) -> int:
        return sum(1 for v in self.verdicts("spurious") if v == REJECT)

    @property
    def correct_rejected(self) -> int:
        return sum(1 for v in self.verdicts("correct") if v == REJECT)

    @property
    def correct_accepted(self) -> int:
        return sum(1 for v in self.verdicts("correct") if v == ACCEPT)

    def summary(self) -> dict:
        return {
            "n_correct": len(self.verdicts("correct")),
            "n_spurious": len(self.verdicts("spurious")),
            "spurious_rejected": self.spurious_rejected,
            "correct_rejected": self.correct_rejected,
            "correct_accepted": self.correct_accepted,
            "skipped": sum(
                1 for _, _, r in self.reports if r.verdict not in (ACCEPT, REJECT)
            ),
        }


def run_poc_experiment(
    seed: int = 0,
    n_train_sentences: int = 5000,
    oracle_order: int = 3,
    smoothing_k: float = 0.1,
    config: InductionConfig | None = None,
) -> PocResult:
    """Evaluate all 21 rules of the corrupted grammar against their mutations.

    The oracle is an n-gram model trained on gold-generated sentences, so
    the judgments are exactly the gold language's statistics: correct rules
    regenerate in-distribution word orders, spurious rules and all mutations
    produce orders the oracle has never seen.
    """
    config = config or InductionConfig(rng_seed=seed)
    corpus = generate_gold_corpus(n_train_sentences, seed=seed)
    oracle = train_ngram_oracle(corpus, order=oracle_order, smoothing_k=smoothing_k)
    grammar = corrupted_grammar()

    result = PocResult(config=config, oracle=oracle)
    for kind, rules in (("correct", correct_rules()), ("spurious", spurious_rules())):
        for rule in rules:
            report = evaluate_rule(rule, grammar, oracle, config)
            result.reports.append((kind, rule, report))
    return result
