"""Two ways to label reviews without annotators: star scores and a word lexicon."""

from revsent.corpus import preprocess
from revsent.labeling import Lexicon, class_distribution, label_by_lexicon, label_by_score

reviews = [
    ("TokoApp bagus banget, pengiriman cepat 10/10", 5),
    ("aplikasi sering error dan lemot", 4),
    ("biasa saja", 3),
    ("jelek, gagal bayar 3 kali", 1),
    ("bagus tapi kadang lambat", 2),
]

# clean first: lowercase, drop numbers, punctuation and the app name
texts = [preprocess(t, ["tokoapp"], strip_punctuation=True) for t, _ in reviews]

lexicon = Lexicon({"bagus": 4, "cepat": 3, "error": -3, "lemot": -4, "jelek": -5, "gagal": -4, "lambat": -2})

print(f"{'text':40s} {'score':>5s}  by score   by lexicon")
for text, (_, stars) in zip(texts, reviews):
    print(f"{text:40s} {stars:5d}  {label_by_score(stars).label:9s}  {label_by_lexicon(text, lexicon).label}")

# the rules disagree on rows 2 and 5: stars and wording do not always match
by_score = class_distribution(label_by_score(s) for _, s in reviews)
by_lex = class_distribution(label_by_lexicon(t, lexicon) for t in texts)
print("\nclass counts by score:  ", {k.label: v for k, v in by_score.items()})
print("class counts by lexicon:", {k.label: v for k, v in by_lex.items()})
