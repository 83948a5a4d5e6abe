"""Link-grammar core: dictionaries, planar parsing, generation, mutation.

A rule lists, per owner (a word or a category), disjuncts of direction-
tagged connectors. A connector names the peer owner it links to; a left
connector on B naming A pairs with a right connector on A naming B. Within
a disjunct, same-direction connectors are ordered nearest first. A sentence
is grammatical when every word satisfies exactly one of its disjuncts and
the links are planar (no crossings); the empty disjunct ``()`` satisfies a
word with no links.

Parsing searches disjunct choices left to right with a stack of open right
connectors: planarity holds by construction because a non-crossing perfect
matching of link endpoints is exactly the stack matching. Generation grows
a linkage tree outward from a seed rule, bubbling connectors that must
attach beyond their parent out to the sentence edges, and validates the
assembled linkage before returning it.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import json

from .errors import DataError, GenerationError, GrammarConsistencyError, GrammarError
from .oracle import TokenSequence

LEFT = "-"
RIGHT = "+"


@dataclass(frozen=True)
class Connector:
    """A direction-tagged slot naming the peer owner it must pair with."""

    label: str
    direction: str

    def __post_init__(self):
        if not self.label:
            raise GrammarError("connector label must be non-empty")
        if self.direction not in (LEFT, RIGHT):
            raise GrammarError(f"connector direction must be '-' or '+', got {self.direction!r}")

    def flipped(self) -> "Connector":
        return Connector(self.label, LEFT if self.direction == RIGHT else RIGHT)

    def render(self) -> str:
        return f"{self.label}{self.direction}"


@dataclass(frozen=True)
class Disjunct:
    """One conjunction of connectors; same-direction order is nearest first.

    The empty disjunct () lets a word stand with no links at all.
    """

    connectors: tuple[Connector, ...] = ()

    def __post_init__(self):
        if isinstance(self.connectors, list):
            object.__setattr__(self, "connectors", tuple(self.connectors))

    def lefts(self) -> tuple[Connector, ...]:
        return tuple(c for c in self.connectors if c.direction == LEFT)

    def rights(self) -> tuple[Connector, ...]:
        return tuple(c for c in self.connectors if c.direction == RIGHT)

    def flipped(self) -> "Disjunct":
        return Disjunct(tuple(c.flipped() for c in self.connectors))

    def render(self) -> str:
        if not self.connectors:
            return "()"
        return " & ".join(c.render() for c in self.connectors)


@dataclass(frozen=True)
class Rule:
    """All disjuncts of one owner."""

    owner: str
    disjuncts: tuple[Disjunct, ...]

    def __post_init__(self):
        if isinstance(self.disjuncts, list):
            object.__setattr__(self, "disjuncts", tuple(self.disjuncts))
        if not self.owner:
            raise GrammarError("rule owner must be non-empty")
        if not self.disjuncts:
            raise GrammarError(f"rule for {self.owner!r} needs at least one disjunct")
        if len(set(self.disjuncts)) != len(self.disjuncts):
            raise GrammarError(f"rule for {self.owner!r} has duplicate disjuncts")

    def render(self) -> str:
        return f"{self.owner}: " + " | ".join(d.render() for d in self.disjuncts) + ";"


@dataclass(frozen=True)
class Grammar:
    """Closed dictionary: every connector label is an owner with a rule.

    Owners may be categories; the lexicon maps a category to its member
    words. Grammars are immutable; mutation and installation return new
    instances.
    """

    rules: Mapping[str, Rule]
    category_lexicon: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "rules", dict(self.rules))
        object.__setattr__(
            self,
            "category_lexicon",
            {cat: tuple(words) for cat, words in self.category_lexicon.items()},
        )
        for owner, rule in self.rules.items():
            if rule.owner != owner:
                raise GrammarError(f"rule keyed {owner!r} is owned by {rule.owner!r}")
            for disjunct in rule.disjuncts:
                for connector in disjunct.connectors:
                    if connector.label not in self.rules:
                        raise GrammarError(
                            f"{owner!r} references {connector.label!r}, "
                            "which has no rule (open dictionary)"
                        )

    def owners(self) -> list[str]:
        return sorted(self.rules)

    def owner_candidates(self, word: str) -> tuple[str, ...]:
        """Owners that could govern this word: itself, then its categories."""
        candidates = []
        if word in self.rules:
            candidates.append(word)
        for category in sorted(self.category_lexicon):
            if word in self.category_lexicon[category] and category in self.rules:
                if category not in candidates:
                    candidates.append(category)
        return tuple(candidates)

    def words_for_owner(self, owner: str) -> tuple[str, ...]:
        members = self.category_lexicon.get(owner)
        if members:
            return tuple(members)
        return (owner,)

    def with_rules(self, rules: Mapping[str, Rule]) -> "Grammar":
        return Grammar(rules=rules, category_lexicon=self.category_lexicon)


@dataclass(frozen=True)
class Linkage:
    """A parse: planar links (i, j, label) with i < j, one disjunct per word."""

    sentence: TokenSequence
    links: frozenset[tuple[int, int, str]]


@dataclass(frozen=True)
class NoParse:
    sentence: TokenSequence
    reason: str
    word_index: int | None = None


def link_label(left_owner: str, right_owner: str) -> str:
    return f"{left_owner}|{right_owner}"


def is_planar(links: Iterable[tuple[int, int, str] | tuple[int, int]]) -> bool:
    """Quadratic crossing test: no pair i < k < j < l."""
    spans = [(l[0], l[1]) for l in links]
    for a, (i, j) in enumerate(spans):
        for k, l in spans[a + 1:]:
            lo, hi = (i, j), (k, l)
            if i < k < j < l or k < i < l < j:
                return False
    return True


# -- parsing -----------------------------------------------------------------


def parse(
    sentence: TokenSequence,
    grammar: Grammar,
    length_cap: int = 32,
    require_connected: bool = False,
) -> Linkage | NoParse:
    """Exhaustive backtracking over per-word (owner, disjunct) choices.

    Words are processed left to right; a word's left connectors must pop
    matching entries off the stack of open right connectors (nearest
    connector pops the top), then its right connectors push on (farthest
    first). A complete parse empties the stack. Connectivity is optional
    and off by default.
    """
    tokens = sentence.tokens
    if len(tokens) > length_cap:
        raise GrammarError(f"sentence length {len(tokens)} over cap {length_cap}")

    candidates: list[tuple[str, ...]] = []
    for i, word in enumerate(tokens):
        owners = grammar.owner_candidates(word)
        if not owners:
            return NoParse(sentence, f"unknown word {word!r}", i)
        candidates.append(owners)

    n = len(tokens)
    deepest_failure = 0

    def search(i: int, stack: tuple, links: tuple):
        nonlocal deepest_failure
        if i == n:
            if stack:
                return None
            if require_connected and not _connected(n, links):
                return None
            return links
        progressed = False
        for owner in candidates[i]:
            for disjunct in grammar.rules[owner].disjuncts:
                lefts = disjunct.lefts()
                if len(lefts) > len(stack):
                    continue
                new_links = links
                ok = True
                for rank, connector in enumerate(lefts):
                    expected_owner, opener_owner, opener_pos = stack[-1 - rank]
                    if expected_owner != owner or connector.label != opener_owner:
                        ok = False
                        break
                    new_links = new_links + (
                        (opener_pos, i, link_label(opener_owner, owner)),
                    )
                if not ok:
                    continue
                progressed = True
                pushed = tuple(
                    (c.label, owner, i) for c in reversed(disjunct.rights())
                )
                remaining = stack[: len(stack) - len(lefts)] + pushed
                result = search(i + 1, remaining, new_links)
                if result is not None:
                    return result
        if not progressed:
            deepest_failure = max(deepest_failure, i)
        return None

    links = search(0, (), ())
    if links is None:
        word = tokens[min(deepest_failure, n - 1)]
        return NoParse(
            sentence,
            f"no disjunct of {word!r} can be satisfied",
            min(deepest_failure, n - 1),
        )
    return Linkage(sentence=sentence, links=frozenset(links))


def _connected(n: int, links: tuple) -> bool:
    if n == 1:
        return True
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j, _ in links:
        parent[find(i)] = find(j)
    return len({find(i) for i in range(n)}) == 1


def check_linkage(
    grammar: Grammar, sentence: TokenSequence, links: Iterable[tuple[int, int, str]]
) -> bool:
    """Validate planarity and exact disjunct satisfaction for given links."""
    links = list(links)
    if not is_planar(links):
        return False
    tokens = sentence.tokens
    touching: dict[int, list[int]] = {i: [] for i in range(len(tokens))}
    for i, j, _ in links:
        if not (0 <= i < j < len(tokens)):
            return False
        touching[i].append(j)
        touching[j].append(i)

    # rebuild per-word used-connector sequences (near first) and match a disjunct
    for i, word in enumerate(tokens):
        left_partners = sorted((j for j in touching[i] if j < i), reverse=True)
        right_partners = sorted(j for j in touching[i] if j > i)
        satisfied = False
        for owner in grammar.owner_candidates(word):
            for disjunct in grammar.rules[owner].disjuncts:
                lefts, rights = disjunct.lefts(), disjunct.rights()
                if len(lefts) != len(left_partners) or len(rights) != len(right_partners):
                    continue
                if all(
                    c.label in grammar.owner_candidates(tokens[j])
                    for j, c in zip(left_partners, lefts)
                ) and all(
                    c.label in grammar.owner_candidates(tokens[j])
                    for j, c in zip(right_partners, rights)
                ):
                    satisfied = True
                    break
            if satisfied:
                break
        if not satisfied:
            return False
    return True


# -- generation -----------------------------------------------------------------


class _Retry(Exception):
    """Internal: abandon the current generation attempt."""


@dataclass
class _Fragment:
    tokens: list[str]
    links: list[tuple[int, int, str]]
    head: int  # index of the fragment's head word
    overflow: list[tuple[int, str, Connector]]  # (origin index, origin owner, connector)

    def shift(self, offset: int) -> None:
        self.head += offset
        self.links = [(i + offset, j + offset, lab) for i, j, lab in self.links]
        self.overflow = [(i + offset, o, c) for i, o, c in self.overflow]


def _merge_right(base: _Fragment, extra: _Fragment) -> int:
    """Append the extra block on the right; returns the extra head's position."""
    offset = len(base.tokens)
    extra.shift(offset)
    base.tokens.extend(extra.tokens)
    base.links.extend(extra.links)
    base.overflow.extend(extra.overflow)
    return extra.head


def _prepend_left(base: _Fragment, extra: _Fragment) -> int:
    """Prepend the extra block on the left; returns the extra head's position."""
    base.shift(len(extra.tokens))
    base.tokens = extra.tokens + base.tokens
    base.links.extend(extra.links)
    base.overflow.extend(extra.overflow)
    return extra.head


class _Generator:
    def __init__(self, grammar: Grammar, rng: random.Random, max_depth: int,
                 weight_hook: Callable[[str, Disjunct], float] | None = None):
        self.grammar = grammar
        self.rng = rng
        self.max_depth = max_depth
        self.weight_hook = weight_hook

    def _choose(self, options: list):
        if not options:
            raise _Retry
        if self.weight_hook is None:
            return self.rng.choice(options)
        weights = [max(self.weight_hook(*opt[:2]), 0.0) if isinstance(opt, tuple) else 1.0
                   for opt in options]
        total = sum(weights)
        if total <= 0:
            return self.rng.choice(options)
        return self.rng.choices(options, weights=weights, k=1)[0]

    def _word_for(self, owner: str) -> str:
        words = self.grammar.words_for_owner(owner)
        if len(words) == 1:
            return words[0]
        return self.rng.choice(sorted(words))

    def expand_root(self, owner: str, disjuncts: Sequence[Disjunct]) -> _Fragment:
        disjunct = self._choose([(owner, d) for d in disjuncts])[1]
        return self._assemble(owner, disjunct, back=None, depth=0)

    def expand_child(self, owner: str, parent_owner: str, toward: str, depth: int) -> _Fragment:
        """Expand a peer that must consume a connector back to its parent."""
        if depth > self.max_depth:
            raise _Retry
        rule = self.grammar.rules.get(owner)
        if rule is None:
            raise _Retry
        options = []
        for disjunct in rule.disjuncts:
            for idx, connector in enumerate(disjunct.connectors):
                if connector.label == parent_owner and connector.direction == toward:
                    options.append((owner, disjunct, idx))
        owner, disjunct, back_idx = self._choose(options)
        return self._assemble(owner, disjunct, back=back_idx, depth=depth)

    def _assemble(self, owner: str, disjunct: Disjunct, back: int | None, depth: int) -> _Fragment:
        if depth > self.max_depth:
            raise _Retry
        word = self._word_for(owner)
        fragment = _Fragment(tokens=[word], links=[], head=0, overflow=[])

        lefts = [(i, c) for i, c in enumerate(disjunct.connectors) if c.direction == LEFT]
        rights = [(i, c) for i, c in enumerate(disjunct.connectors) if c.direction == RIGHT]

        back_connector = disjunct.connectors[back] if back is not None else None
        if back_connector is not None and back_connector.direction == RIGHT:
            rank = [i for i, _ in rights].index(back)
            inner = rights[:rank]
            outer = rights[rank + 1:]
            rights = inner
            for _, connector in outer:
                fragment.overflow.append((fragment.head, owner, connector))
        elif back_connector is not None:
            rank = [i for i, _ in lefts].index(back)
            inner = lefts[:rank]
            outer = lefts[rank + 1:]
            lefts = inner
            for _, connector in outer:
                fragment.overflow.append((fragment.head, owner, connector))

        # left children near to far: each next fragment goes further left
        for _, connector in lefts:
            child = self.expand_child(connector.label, owner, RIGHT, depth + 1)
            child_head = _prepend_left(fragment, child)
            fragment.links.append(
                (child_head, fragment.head, link_label(connector.label, owner))
            )

        # right children near to far
        for _, connector in rights:
            child = self.expand_child(connector.label, owner, LEFT, depth + 1)
            child_head = _merge_right(fragment, child)
            fragment.links.append(
                (fragment.head, child_head, link_label(owner, connector.label))
            )
        return fragment


def generate_with_linkage(
    grammar: Grammar,
    anchor_rule: Rule | None = None,
    max_len: int = 16,
    rng_seed: int = 0,
    max_depth: int = 8,
    max_attempts: int = 100,
    weight_hook: Callable[[str, Disjunct], float] | None = None,
) -> tuple[TokenSequence, Linkage]:
    """Sample a sentence (and its linkage) from the grammar.

    With an anchor rule, the expansion is seeded at the anchor owner using
    one of the anchor's disjuncts, so the returned linkage uses the rule.
    Length and depth caps bound looping grammars; attempts that blow a cap
    or assemble a non-planar overflow layout are retried.
    """
    if max_len < 1:
        raise GrammarError("max_len must be >= 1")
    if not grammar.rules:
        raise GrammarError("cannot generate from an empty grammar")
    if anchor_rule is not None and anchor_rule.owner not in grammar.rules:
        raise GrammarError(f"anchor owner {anchor_rule.owner!r} not in grammar")

    rng = random.Random(rng_seed)
    for _ in range(max_attempts):
        gen = _Generator(grammar, rng, max_depth, weight_hook)
        try:
            if anchor_rule is not None:
                fragment = gen.expand_root(anchor_rule.owner, anchor_rule.disjuncts)
            else:
                options = [
                    (owner, disjunct)
                    for owner in grammar.owners()
                    for disjunct in grammar.rules[owner].disjuncts
                ]
                owner, disjunct = gen._choose(options)
                fragment = gen.expand_root(owner, [disjunct])

            # Bubbled-up connectors attach outboard of everything assembled so
            # far: rightward overflow nests by descending origin (larger
            # origin closer in), leftward overflow mirrors that. Prepends
            # shift every held position, so origins are tracked cumulatively.
            while fragment.overflow:
                if len(fragment.tokens) > max_len:
                    raise _Retry
                entries = fragment.overflow
                fragment.overflow = []
                rightward = sorted(
                    (e for e in entries if e[2].direction == RIGHT), key=lambda e: -e[0]
                )
                leftward = sorted(
                    (e for e in entries if e[2].direction == LEFT), key=lambda e: e[0]
                )
                left_shift = 0
                for origin, origin_owner, connector in rightward:
                    child = gen.expand_child(connector.label, origin_owner, LEFT, 1)
                    child_head = _merge_right(fragment, child)
                    fragment.links.append(
                        (origin, child_head, link_label(origin_owner, connector.label))
                    )
                for origin, origin_owner, connector in leftward:
                    child = gen.expand_child(connector.label, origin_owner, RIGHT, 1)
                    child_head = _prepend_left(fragment, child)
                    left_shift += len(child.tokens)
                    fragment.links.append(
                        (
                            child_head,
                            origin + left_shift,
                            link_label(connector.label, origin_owner),
                        )
                    )

            if len(fragment.tokens) > max_len:
                raise _Retry
            sentence = TokenSequence(tuple(fragment.tokens))
            if not is_planar(fragment.links):
                raise _Retry
            if not check_linkage(grammar, sentence, fragment.links):
                raise _Retry
            linkage = Linkage(sentence=sentence, links=frozenset(fragment.links))
            return sentence, linkage
        except _Retry:
            continue
    raise GenerationError(
        "no sentence up to the length cap "
        + (f"uses the anchor rule {anchor_rule.owner!r}" if anchor_rule else "was found")
        + f" after {max_attempts} attempts"
    )


def generate(
    grammar: Grammar,
    anchor_rule: Rule | None = None,
    max_len: int = 16,
    rng_seed: int = 0,
    max_depth: int = 8,
    max_attempts: int = 100,
    weight_hook: Callable[[str, Disjunct], float] | None = None,
) -> TokenSequence:
    sentence, _ = generate_with_linkage(
        grammar, anchor_rule, max_len, rng_seed, max_depth, max_attempts, weight_hook
    )
    return sentence


# -- mutation -----------------------------------------------------------------


def mutate_rule(rule: Rule, grammar: Grammar) -> tuple[Rule, Grammar]:
    """Flip every connector in the rule, plus the counterparts in its peers.

    The peer adjustment flips every connector naming the rule's owner across
    all of the peer's disjuncts (flipping only some occurrences would leave
    the dictionary inconsistent). Applying the mutation to the mutated rule
    in the adjusted grammar restores the original pair exactly.
    """
    owner = rule.owner
    current = grammar.rules.get(owner)
    if current is None:
        raise GrammarConsistencyError(f"rule owner {owner!r} not in grammar")
    for disjunct in rule.disjuncts:
        if disjunct not in current.disjuncts:
            raise GrammarConsistencyError(
                f"disjunct {disjunct.render()!r} of {owner!r} not in grammar"
            )

    peer_labels = {c.label for d in rule.disjuncts for c in d.connectors}
    if owner in peer_labels:
        raise GrammarConsistencyError(
            f"{owner!r} references itself; counterpart swap is ill-defined"
        )

    flip_map = {d: d.flipped() for d in rule.disjuncts}
    new_owner_disjuncts = tuple(flip_map.get(d, d) for d in current.disjuncts)
    if len(set(new_owner_disjuncts)) != len(new_owner_disjuncts):
        raise GrammarConsistencyError(
            f"mutating {owner!r} collides with one of its existing disjuncts"
        )

    new_rules = dict(grammar.rules)
    new_rules[owner] = Rule(owner, new_owner_disjuncts)

    for peer in sorted(peer_labels):
        peer_rule = new_rules.get(peer)
        if peer_rule is None:
            raise GrammarConsistencyError(f"peer {peer!r} missing from grammar")
        touched = False
        new_disjuncts = []
        for disjunct in peer_rule.disjuncts:
            connectors = []
            for connector in disjunct.connectors:
                if connector.label == owner:
                    connectors.append(connector.flipped())
                    touched = True
                else:
                    connectors.append(connector)
            new_disjuncts.append(Disjunct(tuple(connectors)))
        if not touched:
            raise GrammarConsistencyError(
                f"peer {peer!r} has no counterpart connector naming {owner!r}"
            )
        new_rules[peer] = Rule(peer, tuple(new_disjuncts))

    mutated = Rule(owner, tuple(flip_map[d] for d in rule.disjuncts))
    return mutated, grammar.with_rules(new_rules)


def install_rule(grammar: Grammar, rule: Rule) -> Grammar:
    """Add a rule's disjuncts (and any missing counterparts) to the grammar.

    Peers named by the new connectors that lack a matching counterpart get a
    single-connector disjunct added, so the installed rule is linkable.
    """
    new_rules = dict(grammar.rules)
    existing = new_rules.get(rule.owner)
    if existing is None:
        new_rules[rule.owner] = rule
    else:
        merged = list(existing.disjuncts)
        for disjunct in rule.disjuncts:
            if disjunct not in merged:
                merged.append(disjunct)
        new_rules[rule.owner] = Rule(rule.owner, tuple(merged))

    for disjunct in rule.disjuncts:
        for connector in disjunct.connectors:
            counterpart = Connector(rule.owner, LEFT if connector.direction == RIGHT else RIGHT)
            peer = new_rules.get(connector.label)
            if peer is None:
                new_rules[connector.label] = Rule(connector.label, (Disjunct((counterpart,)),))
                continue
            has_counterpart = any(
                c == counterpart for d in peer.disjuncts for c in d.connectors
            )
            if not has_counterpart:
                new_rules[connector.label] = Rule(
                    peer.owner, peer.disjuncts + (Disjunct((counterpart,)),)
                )
    return grammar.with_rules(new_rules)


# -- dictionary file format -------------------------------------------------------

_CONNECTOR_RE = re.compile(r"^(.+)([+-])$")


def parse_rule(text: str) -> Rule:
    """One dictionary entry: ``owner: conn- & conn+ | alternative | ();``"""
    text = text.strip().rstrip(";").strip()
    if ":" not in text:
        raise DataError(f"rule {text!r} is missing the owner separator ':'")
    owner, _, body = text.partition(":")
    owner = owner.strip()
    disjuncts = []
    for part in body.split("|"):
        part = part.strip()
        if not part:
            raise DataError(f"empty disjunct in rule for {owner!r}")
        if part == "()":
            disjuncts.append(Disjunct(()))
            continue
        connectors = []
        for token in part.split("&"):
            token = token.strip()
            match = _CONNECTOR_RE.match(token)
            if not match:
                raise DataError(f"malformed connector {token!r} in rule for {owner!r}")
            connectors.append(Connector(match.group(1).strip(), match.group(2)))
        disjuncts.append(Disjunct(tuple(connectors)))
    return Rule(owner, tuple(disjuncts))


def parse_grammar(text: str, category_lexicon: Mapping[str, Sequence[str]] | None = None) -> Grammar:
    """Parse a dictionary file body: ``%`` comments, ``;``-separated rules."""
    stripped = "\n".join(line.partition("%")[0] for line in text.splitlines())
    rules: dict[str, Rule] = {}
    for chunk in stripped.split(";"):
        if not chunk.strip():
            continue
        rule = parse_rule(chunk + ";")
        if rule.owner in rules:
            raise DataError(f"duplicate dictionary entry for {rule.owner!r}")
        rules[rule.owner] = rule
    lexicon = {
        cat: tuple(words) for cat, words in (category_lexicon or {}).items()
    }
    return Grammar(rules=rules, category_lexicon=lexicon)


def render_grammar(grammar: Grammar) -> str:
    lines = ["% gramforge link-grammar dictionary"]
    for owner in grammar.owners():
        lines.append(grammar.rules[owner].render())
    return "\n".join(lines) + "\n"


def save_grammar(grammar: Grammar, path: str | Path) -> None:
    """Dictionary text beside an optional ``<path>.lexicon.json``."""
    path = Path(path)
    path.write_text(render_grammar(grammar), encoding="utf-8")
    if grammar.category_lexicon:
        lexicon_path = path.with_suffix(path.suffix + ".lexicon.json")
        lexicon_path.write_text(
            json.dumps(
                {cat: list(words) for cat, words in sorted(grammar.category_lexicon.items())},
                indent=1,
                sort_keys=True,
            ),
            encoding="utf-8",
        )


def load_grammar(path: str | Path) -> Grammar:
    path = Path(path)
    lexicon_path = path.with_suffix(path.suffix + ".lexicon.json")
    lexicon = {}
    if lexicon_path.exists():
        lexicon = json.loads(lexicon_path.read_text(encoding="utf-8"))
    return parse_grammar(path.read_text(encoding="utf-8"), lexicon)
