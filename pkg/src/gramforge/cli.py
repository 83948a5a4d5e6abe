"""Command-line pipeline: corpus in, artifacts out.

Subcommands cover the whole workflow (score, matrix, wsd, categories,
induce, eval-rule, generate, parse) plus ``poc``, which replays the
desk-scale rule-evaluation experiment end to end with the gold grammar and
an n-gram oracle. Every run writes its artifacts next to a manifest
recording the effective configuration, seeds, and input hashes; artifacts
contain no timestamps, so identical manifests reproduce identical bytes.

Configuration comes from a TOML file (``--config`` or the
``GRAMFORGE_CONFIG`` environment variable) overridden by flags. Exit codes:
0 success, 1 usage, 2 config, 3 oracle unavailable, 4 data error.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .categories import CategoryParams, category_tag_corpus, cluster_categories
from .categories import render_categories, save_categories
from .errors import (
    ConfigError,
    DataError,
    GramforgeError,
    OracleUnavailableError,
)
from .grammar import (
    Linkage,
    load_grammar,
    parse as parse_sentence,
    parse_rule,
    generate as generate_sentence,
    save_grammar,
)
from .induction import (
    InductionConfig,
    evaluate_against_references,
    evaluate_rule,
    induce,
    report_to_dict,
    save_reports,
)
from .oracle import (
    TokenSequence,
    load_ngram_oracle,
    save_ngram_oracle,
    sequence_score,
    train_ngram_oracle,
)
from .poc import gold_grammar, corrupted_grammar, generate_gold_corpus, run_poc_experiment
from .probmatrix import (
    corpus_vocabulary,
    expand_corpus,
    fill_matrix,
    build_sense_matrix,
    read_corpus,
    save_matrix_binary,
    save_matrix_csv,
    write_corpus,
)
from .remote import RemoteOracle
from .wsd import induce_senses, save_sense_models

log = logging.getLogger("gramforge")

CONFIG_ENV_VAR = "GRAMFORGE_CONFIG"


@dataclass
class OracleConfig:
    kind: str = "ngram"  # or "remote"
    order: int = 2
    smoothing_k: float = 0.1
    model_path: str | None = None
    endpoint: str | None = None
    timeout: float = 30.0


@dataclass
class WsdConfig:
    k: int = 2
    filter_fraction: float = 0.10
    seed: int = 0


@dataclass
class ClusteringConfig:
    min_samples: int = 2
    xi: float = 0.05
    min_members: int = 2


@dataclass
class PipelineConfig:
    corpus: str | None = None
    output_dir: str = "gramforge-out"
    jobs: int = 1
    log_level: str = "INFO"
    oracle: OracleConfig = field(default_factory=OracleConfig)
    wsd: WsdConfig = field(default_factory=WsdConfig)
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    induction: InductionConfig = field(default_factory=InductionConfig)


def _apply_section(obj, section: dict, where: str):
    valid = {f.name for f in fields(obj)}
    for key, value in section.items():
        if key not in valid:
            raise ConfigError(f"unknown config key {where}.{key}")
        setattr(obj, key, value)


def load_pipeline_config(path: str | None) -> PipelineConfig:
    """TOML sections [oracle], [wsd], [clustering], [induction], [output]."""
    config = PipelineConfig()
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return config
    file = Path(path)
    if not file.exists():
        raise ConfigError(f"config file {file} does not exist")
    try:
        raw = tomllib.loads(file.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{file}: {exc}") from exc
    for section, target in (
        ("oracle", config.oracle),
        ("wsd", config.wsd),
        ("clustering", config.clustering),
        ("induction", config.induction),
    ):
        if section in raw:
            _apply_section(target, raw.pop(section), section)
    output = raw.pop("output", {})
    if "dir" in output:
        config.output_dir = output["dir"]
    _apply_section(config, {k: v for k, v in raw.items() if k != "output"}, "top level")
    return config


def _config_dict(config: PipelineConfig) -> dict:
    return asdict(config)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(outdir: Path, subcommand: str, config: PipelineConfig,
                    inputs: list[Path], artifacts: list[Path]) -> None:
    payload = {
        "tool": "gramforge",
        "version": __version__,
        "subcommand": subcommand,
        "config": _config_dict(config),
        "config_hash": hashlib.sha256(
            json.dumps(_config_dict(config), sort_keys=True).encode()
        ).hexdigest(),
        "inputs": {str(p): _sha256(Path(p)) for p in inputs if Path(p).exists()},
        "artifacts": [p.name for p in artifacts],
    }
    (outdir / "manifest.json").write_text(
        json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8"
    )


def _build_oracle(config: PipelineConfig, corpus=None):
    choice = config.oracle
    if choice.kind == "remote":
        if not choice.endpoint:
            raise ConfigError("remote oracle needs oracle.endpoint")
        oracle = RemoteOracle(choice.endpoint, timeout=choice.timeout)
        if not oracle.healthy():
            raise OracleUnavailableError(f"no healthy service at {choice.endpoint}")
        return oracle
    if choice.kind != "ngram":
        raise ConfigError(f"unknown oracle kind {choice.kind!r}")
    if choice.model_path:
        return load_ngram_oracle(choice.model_path)
    if corpus is None:
        raise ConfigError("n-gram oracle needs a corpus or oracle.model_path")
    log.info("training order-%d n-gram oracle on %d sentences", choice.order, len(corpus))
    return train_ngram_oracle(corpus, order=choice.order, smoothing_k=choice.smoothing_k)


def _load_corpus(config: PipelineConfig, override: str | None):
    path = override or config.corpus
    if not path:
        raise ConfigError("no corpus given (flag --corpus or config key 'corpus')")
    return read_corpus(path), Path(path)


def _outdir(config: PipelineConfig, override: str | None) -> Path:
    out = Path(override or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pipeline_matrix(config: PipelineConfig, corpus):
    oracle = _build_oracle(config, corpus)
    rows = expand_corpus(corpus)
    vocabulary = corpus_vocabulary(corpus)
    log.info("filling %d x %d matrix", len(rows), len(vocabulary))
    matrix = fill_matrix(rows, vocabulary, oracle, jobs=config.jobs)
    return oracle, matrix


pass_config = click.make_pass_decorator(PipelineConfig)


@click.group(name="gramforge")
@click.version_option(__version__)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help=f"TOML config file (falls back to ${CONFIG_ENV_VAR}).")
@click.option("--jobs", type=int, default=None, help="Worker pool size.")
@click.option("--log-level", default=None, help="Logging level (stderr).")
@click.pass_context
def cli(ctx, config_path, jobs, log_level):
    """Oracle-guided link-grammar induction toolkit."""
    config = load_pipeline_config(config_path)
    if jobs is not None:
        config.jobs = jobs
    if log_level is not None:
        config.log_level = log_level
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, config.log_level.upper(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = config


@cli.command()
@click.argument("sentence")
@click.option("--corpus", "corpus_path", type=click.Path(), default=None,
              help="Training corpus for the n-gram oracle.")
@click.option("--oracle-model", type=click.Path(), default=None,
              help="Pre-trained n-gram model file.")
@click.option("--order", type=int, default=None)
@click.option("--smoothing-k", type=float, default=None)
@pass_config
def score(config, sentence, corpus_path, oracle_model, order, smoothing_k):
    """Print forward, backward, and combined log probability of SENTENCE."""
    if oracle_model:
        config.oracle.model_path = oracle_model
    if order is not None:
        config.oracle.order = order
    if smoothing_k is not None:
        config.oracle.smoothing_k = smoothing_k
    corpus = None
    if config.oracle.kind == "ngram" and not config.oracle.model_path:
        corpus, _ = _load_corpus(config, corpus_path)
    oracle = _build_oracle(config, corpus)
    result = sequence_score(oracle, TokenSequence.from_text(sentence))
    click.echo(f"forward_logprob  {result.forward_logprob:.6f}")
    click.echo(f"backward_logprob {result.backward_logprob:.6f}")
    click.echo(f"combined_logprob {result.combined_logprob:.6f}")


@cli.command()
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@pass_config
def matrix(config, corpus_path, out_dir):
    """Build the word x blanked-sentence log-probability matrix."""
    corpus, corpus_file = _load_corpus(config, corpus_path)
    outdir = _outdir(config, out_dir)
    _, m = _pipeline_matrix(config, corpus)
    csv_path = outdir / "matrix.csv"
    npz_path = outdir / "matrix.npz"
    save_matrix_csv(m, csv_path)
    save_matrix_binary(m, npz_path)
    _write_manifest(outdir, "matrix", config, [corpus_file], [csv_path, npz_path])
    click.echo(f"matrix {len(m.rows)} x {len(m.columns)} -> {csv_path}")


@cli.command()
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--senses-k", type=int, default=None, help="Senses per word.")
@click.option("--filter-fraction", type=float, default=None)
@click.option("--seed", type=int, default=None)
@pass_config
def wsd(config, corpus_path, out_dir, senses_k, filter_fraction, seed):
    """Induce word senses by clustering each word's matrix rows."""
    if senses_k is not None:
        config.wsd.k = senses_k
    if filter_fraction is not None:
        config.wsd.filter_fraction = filter_fraction
    if seed is not None:
        config.wsd.seed = seed
    corpus, corpus_file = _load_corpus(config, corpus_path)
    outdir = _outdir(config, out_dir)
    _, m = _pipeline_matrix(config, corpus)
    senses = induce_senses(
        m, corpus,
        k=config.wsd.k,
        seed=config.wsd.seed,
        filter_fraction=config.wsd.filter_fraction,
        jobs=config.jobs,
    )
    senses_path = outdir / "senses.json"
    save_sense_models(senses, senses_path)
    _write_manifest(outdir, "wsd", config, [corpus_file], [senses_path])
    polysemous = sum(1 for model in senses.values() if model.n_senses > 1)
    click.echo(f"senses for {len(senses)} words ({polysemous} polysemous) -> {senses_path}")


@cli.command()
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@pass_config
def categories(config, corpus_path, out_dir):
    """Cluster sense columns into word categories (noise allowed)."""
    corpus, corpus_file = _load_corpus(config, corpus_path)
    outdir = _outdir(config, out_dir)
    _, m = _pipeline_matrix(config, corpus)
    senses = induce_senses(
        m, corpus, k=config.wsd.k, seed=config.wsd.seed,
        filter_fraction=config.wsd.filter_fraction, jobs=config.jobs,
    )
    sense_matrix = build_sense_matrix(m, senses)
    params = CategoryParams(
        min_samples=config.clustering.min_samples,
        xi=config.clustering.xi,
        min_members=config.clustering.min_members,
    )
    cats = cluster_categories(sense_matrix, params)
    json_path = outdir / "categories.json"
    listing_path = outdir / "categories.txt"
    save_categories(cats, json_path)
    listing_path.write_text(render_categories(cats), encoding="utf-8")
    _write_manifest(outdir, "categories", config, [corpus_file], [json_path, listing_path])
    click.echo(render_categories(cats).rstrip())


@cli.command(name="induce")
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--mode", type=click.Choice(["mutation", "reference"]), default=None)
@click.option("--references", "references_path", type=click.Path(), default=None,
              help="Reference sentences for reference mode (defaults to the corpus).")
@pass_config
def induce_cmd(config, corpus_path, out_dir, mode, references_path):
    """Run the full pipeline and accumulate a grammar incrementally."""
    if mode is not None:
        config.induction.mode = mode
    corpus, corpus_file = _load_corpus(config, corpus_path)
    outdir = _outdir(config, out_dir)
    oracle, m = _pipeline_matrix(config, corpus)
    senses = induce_senses(
        m, corpus, k=config.wsd.k, seed=config.wsd.seed,
        filter_fraction=config.wsd.filter_fraction, jobs=config.jobs,
    )
    sense_matrix = build_sense_matrix(m, senses)
    params = CategoryParams(
        min_samples=config.clustering.min_samples,
        xi=config.clustering.xi,
        min_members=config.clustering.min_members,
    )
    cats = cluster_categories(sense_matrix, params)
    tagged = category_tag_corpus(corpus, senses, cats)
    references = None
    if config.induction.mode == "reference":
        references = read_corpus(references_path) if references_path else corpus
    grammar, reports = induce(
        tagged, oracle, config.induction, references=references
    )
    grammar_path = outdir / "grammar.dict"
    reports_path = outdir / "reports.jsonl"
    save_grammar(grammar, grammar_path)
    save_reports(reports, reports_path)
    _write_manifest(outdir, "induce", config, [corpus_file], [grammar_path, reports_path])
    accepted = sum(1 for r in reports if r.verdict == "accept")
    click.echo(f"{accepted}/{len(reports)} candidates accepted -> {grammar_path}")


@cli.command(name="eval-rule")
@click.option("--rule", "rule_text", required=True, help='e.g. "kids: small- & the-"')
@click.option("--grammar", "grammar_path", required=True, type=click.Path())
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--mode", type=click.Choice(["mutation", "reference"]), default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
@pass_config
def eval_rule(config, rule_text, grammar_path, corpus_path, mode, out_path):
    """Evaluate one rule against its mutation (or references)."""
    if mode is not None:
        config.induction.mode = mode
    rule = parse_rule(rule_text)
    grammar = load_grammar(grammar_path)
    corpus, _ = _load_corpus(config, corpus_path)
    oracle = _build_oracle(config, corpus)
    if config.induction.mode == "reference":
        report = evaluate_against_references(rule, grammar, oracle, corpus, config.induction)
    else:
        report = evaluate_rule(rule, grammar, oracle, config.induction)
    payload = json.dumps(report_to_dict(report), indent=1, sort_keys=True)
    if out_path:
        Path(out_path).write_text(payload + "\n", encoding="utf-8")
    click.echo(payload)


@cli.command(name="generate")
@click.option("--grammar", "grammar_path", required=True, type=click.Path())
@click.option("--anchor", "anchor_text", default=None, help="Anchor rule text.")
@click.option("--count", type=int, default=1)
@click.option("--seed", type=int, default=0)
@click.option("--max-len", type=int, default=16)
@pass_config
def generate_cmd(config, grammar_path, anchor_text, count, seed, max_len):
    """Sample sentences from a grammar."""
    grammar = load_grammar(grammar_path)
    anchor = parse_rule(anchor_text) if anchor_text else None
    for i in range(count):
        sentence = generate_sentence(
            grammar, anchor_rule=anchor, max_len=max_len, rng_seed=seed + i
        )
        click.echo(sentence.text())


@cli.command(name="parse")
@click.argument("sentence")
@click.option("--grammar", "grammar_path", required=True, type=click.Path())
@pass_config
def parse_cmd(config, sentence, grammar_path):
    """Parse SENTENCE and print its linkage (or the failure diagnosis)."""
    grammar = load_grammar(grammar_path)
    result = parse_sentence(TokenSequence.from_text(sentence), grammar)
    if isinstance(result, Linkage):
        click.echo(f"PARSE {result.sentence.text()}")
        for i, j, label in sorted(result.links):
            click.echo(f"  {i:2d} <-> {j:2d}  {label}")
    else:
        click.echo(f"NO PARSE: {result.reason} (word {result.word_index})")


@cli.command(name="poc")
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--seed", type=int, default=0)
@click.option("--train-sentences", type=int, default=5000)
@click.option("--order", type=int, default=3)
@click.option("--threshold", type=float, default=None)
@pass_config
def poc_cmd(config, out_dir, seed, train_sentences, order, threshold):
    """Replay the 21-rule grammar evaluation experiment offline."""
    if threshold is not None:
        config.induction.threshold = threshold
    config.induction.rng_seed = seed
    outdir = _outdir(config, out_dir)
    result = run_poc_experiment(
        seed=seed,
        n_train_sentences=train_sentences,
        oracle_order=order,
        config=config.induction,
    )
    gold_path = outdir / "gold.dict"
    corrupted_path = outdir / "corrupted.dict"
    corpus_path = outdir / "train-corpus.txt"
    oracle_path = outdir / "oracle.ngram"
    reports_path = outdir / "reports.jsonl"
    summary_path = outdir / "summary.json"
    save_grammar(gold_grammar(), gold_path)
    save_grammar(corrupted_grammar(), corrupted_path)
    write_corpus(generate_gold_corpus(train_sentences, seed=seed), corpus_path)
    save_ngram_oracle(result.oracle, oracle_path)
    save_reports([report for _, _, report in result.reports], reports_path)
    summary = result.summary()
    summary_path.write_text(json.dumps(summary, indent=1, sort_keys=True), encoding="utf-8")
    _write_manifest(
        outdir, "poc", config, [],
        [gold_path, corrupted_path, corpus_path, oracle_path, reports_path, summary_path],
    )
    click.echo(
        f"spurious rejected: {summary['spurious_rejected']}/{summary['n_spurious']}"
    )
    click.echo(
        f"correct rejected:  {summary['correct_rejected']}/{summary['n_correct']}"
    )
    for kind, rule, report in result.reports:
        click.echo(f"  {kind:9} {report.verdict:7} margin={report.margin:+.3f} {rule.render()}")


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return 2
    except OracleUnavailableError as exc:
        click.echo(f"oracle unavailable: {exc}", err=True)
        return 3
    except (DataError, GramforgeError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return 4


if __name__ == "__main__":
    sys.exit(main())
