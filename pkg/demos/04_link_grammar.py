"""Link-grammar parsing, generation, and connector-swap mutation.

A dictionary assigns each word disjuncts of direction-tagged connectors;
a sentence parses when connectors pair up into a planar linkage. Mutating
a rule flips its connector directions (and the counterparts on its peers),
which distorts the licensed word order: the classic noun phrase flips from
"the small kids" to "kids small the".
"""

from gramforge import TokenSequence
from gramforge.grammar import generate, mutate_rule, parse, parse_rule, render_grammar
from gramforge.poc import fragment_grammar, gold_grammar


def show_parse(grammar, text):
    result = parse(TokenSequence.from_text(text), grammar)
    if hasattr(result, "links"):
        rendered = ", ".join(f"{i}-{j}" for i, j, _ in sorted(result.links))
        print(f"  {text!r}: links {rendered}")
    else:
        print(f"  {text!r}: NO PARSE ({result.reason})")


grammar = fragment_grammar()
print("fragment dictionary:")
print(render_grammar(grammar))
show_parse(grammar, "the small kids")
show_parse(grammar, "kids small the")

rule = parse_rule("kids: small- & the-;")
mutated, adjusted = mutate_rule(rule, grammar)
print(f"\nmutating {rule.render()!r} -> {mutated.render()!r} (+ counterpart swaps)")
show_parse(adjusted, "the small kids")
show_parse(adjusted, "kids small the")

print("\nsampling the gold grammar:")
gold = gold_grammar()
for seed in range(6):
    sentence = generate(gold, rng_seed=seed)
    print(f"  seed {seed}: {sentence.text()}")

anchor = parse_rule("eat: kids- & candy+ & quickly+ & .+;")
print(f"\nanchored at {anchor.render()!r}:")
for seed in range(3):
    print(f"  {generate(gold, anchor_rule=anchor, rng_seed=seed).text()}")
