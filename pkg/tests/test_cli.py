import json

import pytest

from gramforge.cli import CONFIG_ENV_VAR, load_pipeline_config, main
from gramforge.poc import build_category_corpus
from gramforge.probmatrix import write_corpus


@pytest.fixture()
def corpus_file(tmp_path):
    corpus, _, _ = build_category_corpus()
    path = tmp_path / "corpus.txt"
    write_corpus(corpus, path)
    return path


def run(*argv):
    return main([str(a) for a in argv])


# -- config ----------------------------------------------------------------


def test_config_file_sections_and_overrides(tmp_path):
    config_file = tmp_path / "gramforge.toml"
    config_file.write_text(
        """
corpus = "corpus.txt"
[oracle]
order = 3
smoothing_k = 0.5
[wsd]
k = 3
[induction]
threshold = 0.4
[output]
dir = "artifacts"
"""
    )
    config = load_pipeline_config(str(config_file))
    assert config.corpus == "corpus.txt"
    assert config.oracle.order == 3
    assert config.oracle.smoothing_k == 0.5
    assert config.wsd.k == 3
    assert config.induction.threshold == 0.4
    assert config.output_dir == "artifacts"


def test_config_env_var_fallback(tmp_path, monkeypatch):
    config_file = tmp_path / "auto.toml"
    config_file.write_text("[oracle]\norder = 4\n")
    monkeypatch.setenv(CONFIG_ENV_VAR, str(config_file))
    assert load_pipeline_config(None).oracle.order == 4


def test_unknown_config_key_is_a_config_error(tmp_path):
    config_file = tmp_path / "bad.toml"
    config_file.write_text("[oracle]\nbogus = 1\n")
    assert run("--config", config_file, "score", "a b") == 2


def test_missing_config_file_is_a_config_error(tmp_path):
    assert run("--config", tmp_path / "absent.toml", "score", "a b") == 2


# -- exit codes ----------------------------------------------------------------


def test_usage_error_exits_one():
    assert run("definitely-not-a-command") == 1


def test_missing_corpus_is_config_error():
    assert run("score", "hello world") == 2


def test_bad_corpus_path_is_data_error(tmp_path, corpus_file):
    missing = tmp_path / "nope.txt"
    assert run("score", "hello", "--corpus", missing) == 4


def test_remote_oracle_unavailable_exits_three(tmp_path, corpus_file):
    config_file = tmp_path / "remote.toml"
    config_file.write_text(
        '[oracle]\nkind = "remote"\nendpoint = "http://127.0.0.1:1"\ntimeout = 0.2\n'
    )
    assert run("--config", config_file, "score", "the dog runs .") == 3


# -- subcommands ----------------------------------------------------------------


def test_score_prints_three_numbers(tmp_path, corpus_file, capsys):
    assert run("score", "the dog runs .", "--corpus", corpus_file) == 0
    out = capsys.readouterr().out
    assert "forward_logprob" in out
    assert "backward_logprob" in out
    assert "combined_logprob" in out
    forward, backward, combined = (float(line.split()[1]) for line in out.strip().splitlines())
    assert combined == pytest.approx((forward + backward) / 2, abs=1e-9)


def test_matrix_writes_artifacts_and_manifest(tmp_path, corpus_file):
    out = tmp_path / "artifacts"
    assert run("matrix", "--corpus", corpus_file, "--out", out) == 0
    assert (out / "matrix.csv").exists()
    assert (out / "matrix.npz").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "matrix"
    assert manifest["config_hash"]
    assert str(corpus_file) in manifest["inputs"]


def test_matrix_rerun_is_byte_identical(tmp_path, corpus_file):
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    assert run("matrix", "--corpus", corpus_file, "--out", out1) == 0
    assert run("matrix", "--corpus", corpus_file, "--out", out2) == 0
    assert (out1 / "matrix.csv").read_bytes() == (out2 / "matrix.csv").read_bytes()
    assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()


def test_wsd_writes_sense_models(tmp_path, corpus_file):
    out = tmp_path / "senses-out"
    assert run("wsd", "--corpus", corpus_file, "--out", out, "--senses-k", 1) == 0
    senses = json.loads((out / "senses.json").read_text())
    assert "the" in senses


def test_categories_lists_clusters(tmp_path, corpus_file, capsys):
    out = tmp_path / "cats-out"
    assert run("--config", _k1_config(tmp_path),
               "categories", "--corpus", corpus_file, "--out", out) == 0
    stdout = capsys.readouterr().out
    assert "Cluster #" in stdout
    listing = (out / "categories.txt").read_text()
    assert "the" in listing and "they" in listing


def _k1_config(tmp_path):
    config_file = tmp_path / "k1.toml"
    config_file.write_text("[wsd]\nk = 1\n")
    return config_file


def test_parse_and_generate_round_trip(tmp_path, capsys):
    out = tmp_path / "poc-out"
    assert run("poc", "--out", out, "--train-sentences", 200) == 0
    capsys.readouterr()

    grammar_path = out / "gold.dict"
    assert run("parse", "the small kids eat the candy .", "--grammar", grammar_path) == 0
    parse_out = capsys.readouterr().out
    assert parse_out.startswith("PARSE")

    assert run("parse", "kids the eat .", "--grammar", grammar_path) == 0
    assert capsys.readouterr().out.startswith("NO PARSE")

    assert run("generate", "--grammar", grammar_path, "--count", 5, "--seed", 3) == 0
    generated = capsys.readouterr().out.strip().splitlines()
    assert len(generated) == 5
    for line in generated:
        assert run("parse", line, "--grammar", grammar_path) == 0
        assert capsys.readouterr().out.startswith("PARSE")


def test_eval_rule_emits_report_json(tmp_path, corpus_file, capsys):
    out = tmp_path / "poc-out"
    assert run("poc", "--out", out, "--train-sentences", 200) == 0
    capsys.readouterr()
    corpus_path = out / "train-corpus.txt"
    report_path = tmp_path / "report.json"
    code = run(
        "eval-rule",
        "--rule", "quickly: eat-",
        "--grammar", out / "gold.dict",
        "--corpus", corpus_path,
        "--out", report_path,
    )
    assert code == 0
    payload = json.loads(report_path.read_text())
    assert payload["rule"] == "quickly: eat-;"
    assert payload["verdict"] == "accept"


def test_induce_produces_grammar_and_reports(tmp_path, corpus_file):
    out = tmp_path / "induce-out"
    code = run(
        "--config", _k1_config(tmp_path),
        "induce", "--corpus", corpus_file, "--out", out,
    )
    assert code == 0
    assert (out / "grammar.dict").exists()
    reports = [json.loads(l) for l in (out / "reports.jsonl").read_text().splitlines()]
    assert reports
    assert {"accept", "reject"} >= {r["verdict"] for r in reports if r["verdict"] != "skipped"}


def test_poc_summary_meets_paper_counts(tmp_path, capsys):
    out = tmp_path / "poc-full"
    assert run("poc", "--out", out, "--seed", 0, "--train-sentences", 1000) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["spurious_rejected"] == summary["n_spurious"] == 6
    assert summary["correct_rejected"] <= 3
    assert summary["n_correct"] == 15
