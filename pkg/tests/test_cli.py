import csv
import json

import pytest

from revsent import cli
from revsent.labeling import label_by_score
from revsent.synthetic import make_lexicon_corpus

from conftest import write_review_csv

TINY = ["--layers", "1", "--hidden", "8", "--heads", "2", "--max-len", "12"]


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    monkeypatch.delenv(cli.OUTPUT_ENV, raising=False)
    monkeypatch.chdir(tmp_path)
    c = make_lexicon_corpus(80, seed=2)
    rows = [[f"r{i}", "u", "", t.upper() + " 5 bintang", str([1, 3, 5][int(y)]), "2024-01-01"]
            for i, (t, y) in enumerate(zip(c.texts, c.labels))]
    write_review_csv(tmp_path / "reviews.csv", rows)
    with open(tmp_path / "lex.tsv", "w", encoding="utf-8") as fh:
        fh.write("word\tweight\n")
        for w, v in c.lexicon.entries.items():
            fh.write(f"{w}\t{v}\n")
    return tmp_path


def run(*argv):
    return cli.dispatch([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def prepare(ws, out="out"):
    assert run("ingest", "--in", "reviews.csv", "--out-dir", out) == 0
    assert run("label", "--method", "lexicon", "--lexicon", "lex.tsv", "--in", f"{out}/clean.csv", "--out-dir", out) == 0
    assert run("split", "--in", f"{out}/labeled_lexicon.csv", "--ratios", "0.7,0.15,0.15", "--seed", 1, "--out-dir", out) == 0
    return ws / out


def test_no_arguments_prints_usage(capsys):
    assert cli.dispatch([]) == 2
    assert "usage:" in capsys.readouterr().err


def test_unknown_subcommand(capsys):
    assert cli.dispatch(["frobnicate"]) == 2
    assert "usage:" in capsys.readouterr().err


def test_label_by_score_example(workspace):
    assert run("label", "--method", "score", "--in", "reviews.csv", "--out", "labeled.csv") == 0
    rows = read_csv(workspace / "labeled.csv")
    assert list(rows[0]) == ["review_id", "username", "user_image", "content", "score", "review_date", "label"]
    assert len(rows) == 80
    for r in rows:
        assert r["label"] == label_by_score(int(r["score"])).label
    meta = json.loads((workspace / "labeled.csv.meta.json").read_text())
    assert meta["seed"] == 0 and "created" in meta


def test_ingest_cleans_text(workspace):
    assert run("ingest", "--in", "reviews.csv", "--app-name", "bintang", "--out", "clean.csv") == 0
    rows = read_csv(workspace / "clean.csv")
    assert all(r["content"] == r["content"].lower() and "bintang" not in r["content"] for r in rows)
    assert not any(ch.isdigit() for r in rows for ch in r["content"])


def test_full_pipeline_and_determinism(workspace):
    first = prepare(workspace, "a")
    second = prepare(workspace, "b")
    for name in ("clean.csv", "labeled_lexicon.csv", "train.csv", "validation.csv", "test.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name
    assert [len(read_csv(first / f"{p}.csv")) for p in ("train", "validation", "test")] == [56, 12, 12]

    for out in ("a", "b"):
        assert run("baseline", "--train", f"{out}/train.csv", "--test", f"{out}/test.csv",
                   "--kinds", "nb,tree", "--folds", 3, "--out-dir", out, "--save-models") == 0
        assert run("finetune", "--train", f"{out}/train.csv", "--validation", f"{out}/validation.csv",
                   "--test", f"{out}/test.csv", "--epochs", 2, "--lr", "3e-3", *TINY, "--out-dir", out) == 0
        assert run("eval", "--weights", f"{out}/best.weights", "--vocab", f"{out}/vocab.txt",
                   "--in", f"{out}/test.csv", "--max-len", 12, "--out-dir", out) == 0
    for name in ("baselines.csv", "baseline_nb.json", "vocab.txt", "best.weights", "history.csv", "eval.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name
    assert json.loads((first / "eval.json").read_text())["n"] == 12


def test_grid_example_gives_six_rows(workspace, capsys):
    out = prepare(workspace)
    code = run("grid", "--train", out / "train.csv", "--validation", out / "validation.csv", "--test", out / "test.csv",
               "--lrs", "1e-5,2e-5,3e-5", "--batch-sizes", "16,32", "--epochs", "25", *TINY, "--out-dir", out, "--jobs", 2)
    assert code == 0
    rows = read_csv(out / "grid_report.csv")
    assert len(rows) == 6
    assert [(r["learning_rate"], r["batch_size"]) for r in rows] == [
        ("1e-05", "16"), ("1e-05", "32"), ("2e-05", "16"), ("2e-05", "32"), ("3e-05", "16"), ("3e-05", "32")]
    assert all(len(r["test_acc"].split(".")[1]) == 4 for r in rows)
    assert "Avg Training Accuracy" in capsys.readouterr().out

    assert run("report", "--in", out / "grid_report.csv", "--format", "markdown", "--out", out / "again.md") == 0
    assert (out / "again.md").read_text() == (out / "grid_report.md").read_text()


def test_config_file_and_flag_override(workspace):
    out = prepare(workspace)
    (workspace / "run.cfg").write_text(
        f"# tiny run\ntrain = {out}/train.csv\nvalidation = {out}/validation.csv\ntest = {out}/test.csv\n"
        "learning_rate = 0.003\nepochs = 3\nmax_len = 12\nencoder.L = 1\nencoder.H = 8\nencoder.A = 2\n",
        encoding="utf-8",
    )
    assert run("finetune", "--config", "run.cfg", "--epochs", 1, "--out-dir", "cfgout") == 0
    assert len((workspace / "cfgout/history.csv").read_text().splitlines()) == 2
    (row,) = read_csv(workspace / "cfgout/report.csv")
    assert (row["learning_rate"], row["epochs"]) == ("0.003", "1")


@pytest.mark.parametrize(
    "text,key",
    [("epochs = many\n", "epochs"), ("colour = blue\n", "colour"), ("train = /no/such/file.csv\n", "train"),
     ("epochs = 0\n", "epochs")],
)
def test_invalid_config_names_first_key(workspace, capsys, text, key):
    (workspace / "bad.cfg").write_text(text, encoding="utf-8")
    assert run("finetune", "--config", "bad.cfg") == 1
    err = capsys.readouterr().err.strip()
    assert err.count("\n") == 0
    assert err.startswith(f"error: config: {key}:")


def test_env_var_overrides_output_dir(workspace, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(workspace / "envout"))
    assert run("label", "--method", "score", "--in", "reviews.csv", "--out-dir", "ignored") == 0
    assert (workspace / "envout" / "labeled_score.csv").exists()
    assert not (workspace / "ignored").exists()


def test_runtime_error_is_one_line(workspace, capsys):
    assert run("label", "--method", "score", "--in", "missing.csv") == 1
    err = capsys.readouterr().err
    assert err.startswith("error: ") and err.count("\n") == 1


def test_lexicon_method_needs_lexicon(workspace, capsys):
    assert run("label", "--method", "lexicon", "--in", "reviews.csv") == 1
    assert "lexicon" in capsys.readouterr().err
