"""The whole pipeline through the command line, in a scratch directory."""

import csv
import tempfile
from pathlib import Path

from revsent.cli import dispatch
from revsent.corpus import REVIEW_COLUMNS
from revsent.synthetic import make_lexicon_corpus

work = Path(tempfile.mkdtemp(prefix="revsent-"))
data = make_lexicon_corpus(150, seed=8)

with open(work / "reviews.csv", "w", newline="", encoding="utf-8") as fh:
    w = csv.writer(fh)
    w.writerow(REVIEW_COLUMNS)
    for i, (text, label) in enumerate(zip(data.texts, data.labels)):
        w.writerow([f"r{i}", f"user{i}", "", f"TokoApp {text} 100%", [1, 3, 5][int(label)], "2024-05-01"])
with open(work / "lexicon.tsv", "w", encoding="utf-8") as fh:
    fh.write("word\tweight\n")
    fh.writelines(f"{w}\t{v}\n" for w, v in data.lexicon.entries.items())

out = work / "out"
steps = [
    ["ingest", "--in", work / "reviews.csv", "--app-name", "tokoapp"],
    ["label", "--method", "lexicon", "--lexicon", work / "lexicon.tsv", "--in", out / "clean.csv"],
    ["split", "--in", out / "labeled_lexicon.csv", "--seed", "0"],
    ["baseline", "--train", out / "train.csv", "--test", out / "test.csv", "--kinds", "nb,svm,knn", "--folds", "5"],
    ["grid", "--train", out / "train.csv", "--validation", out / "validation.csv", "--test", out / "test.csv",
     "--lrs", "1e-3,3e-3", "--batch-sizes", "16", "--epochs", "5", "--layers", "1", "--hidden", "16", "--max-len", "16"],
]
for step in steps:
    print("$ revsent", " ".join(str(s) for s in step))
    code = dispatch([str(s) for s in step] + ["--out-dir", str(out)])
    print(f"(exit {code})\n")

print("artifacts:", sorted(p.name for p in out.iterdir()))
