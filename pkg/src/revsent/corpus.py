"""Loading, cleaning and splitting of scraped review exports."""

from __future__ import annotations

import csv
import json
import logging
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

REVIEW_COLUMNS = ("review_id", "username", "user_image", "content", "score", "review_date")
_REQUIRED = ("content", "score")
_DIGITS = re.compile(r"\d+")
_PUNCT = re.compile(r"[^\w\s]|_")


class ReviewFormatError(ValueError):
    """The file cannot be read as a review export at all."""


class RowRejected(ValueError):
    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


@dataclass(frozen=True)
class ReviewRecord:
    review_id: str
    username: str
    user_image: str
    content: str
    score: int
    review_date: str

    def to_row(self) -> dict[str, str]:
        row = asdict(self)
        row["score"] = str(self.score)
        return row


@dataclass
class LoadResult:
    records: list[ReviewRecord]
    rejected: list[RowRejected] = field(default_factory=list)

    @property
    def n_rows(self) -> int:
        return len(self.records) + len(self.rejected)


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        fmt = fmt.lower()
    elif path.suffix.lower() in (".jsonl", ".ndjson"):
        fmt = "jsonl"
    else:
        fmt = "csv"
    if fmt not in ("csv", "jsonl"):
        raise ReviewFormatError(f"unsupported review format {fmt!r}")
    return fmt


def _iter_rows(path: Path, fmt: str) -> Iterable[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in _REQUIRED if c not in header]
            if missing:
                raise ReviewFormatError(f"{path}: missing column(s) {', '.join(missing)}")
            yield from reader
        else:
            for lineno, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ReviewFormatError(f"{path}:{lineno + 1}: invalid JSON ({exc.msg})") from exc
                if not isinstance(obj, dict):
                    raise ReviewFormatError(f"{path}:{lineno + 1}: expected a JSON object")
                missing = [c for c in _REQUIRED if c not in obj]
                if missing:
                    raise ReviewFormatError(f"{path}:{lineno + 1}: missing key(s) {', '.join(missing)}")
                yield obj


def _parse_row(index: int, row: dict) -> ReviewRecord:
    content = row.get("content")
    if content is None or not str(content).strip():
        raise RowRejected(index, "empty content")
    raw_score = row.get("score")
    try:
        score_f = float(raw_score)
    except (TypeError, ValueError):
        raise RowRejected(index, f"score {raw_score!r} is not a number") from None
    if not score_f.is_integer() or not 1 <= score_f <= 5:
        raise RowRejected(index, f"score {raw_score!r} outside 1..5")
    return ReviewRecord(
        review_id=str(row.get("review_id") or ""),
        username=str(row.get("username") or ""),
        user_image=str(row.get("user_image") or ""),
        content=str(content),
        score=int(score_f),
        review_date=str(row.get("review_date") or ""),
    )


def read_reviews(path: str | Path, fmt: str | None = None) -> LoadResult:
    """Parse a review export, keeping per-row rejections instead of failing.

    Row indices in rejections are zero-based data rows (header excluded).
    """
    path = Path(path)
    fmt = _infer_format(path, fmt)
    try:
        rows = list(_iter_rows(path, fmt))
    except OSError as exc:
        raise ReviewFormatError(f"cannot read {path}: {exc.strerror}") from exc
    except (csv.Error, UnicodeDecodeError) as exc:
        raise ReviewFormatError(f"cannot parse {path}: {exc}") from exc

    result = LoadResult(records=[])
    for i, row in enumerate(rows):
        try:
            result.records.append(_parse_row(i, row))
        except RowRejected as rej:
            result.rejected.append(rej)
    logger.info("%s: %d rows, %d loaded, %d rejected", path, result.n_rows, len(result.records), len(result.rejected))
    return result


def load_reviews(
    path: str | Path, fmt: str | None = None, *, strict: bool = False, dedup: bool = False
) -> list[ReviewRecord]:
    """Load valid reviews in file order.

    Invalid rows are logged and skipped; with ``strict=True`` the first one
    raises :class:`RowRejected` carrying its row index.
    """
    result = read_reviews(path, fmt)
    if strict and result.rejected:
        raise result.rejected[0]
    for rej in result.rejected:
        logger.warning("rejected %s", rej)
    records = result.records
    return deduplicate(records) if dedup else records


def deduplicate(records: Sequence[ReviewRecord]) -> list[ReviewRecord]:
    seen: set[str] = set()
    out = []
    for rec in records:
        if rec.review_id and rec.review_id in seen:
            continue
        seen.add(rec.review_id)
        out.append(rec)
    return out


def write_reviews(path: str | Path, rows: Sequence[dict], columns: Sequence[str] = REVIEW_COLUMNS) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def read_table(path: str | Path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def load_wordlist(path: str | Path) -> list[str]:
    """Read a one-token-per-line file; blank lines and ``#`` comments are skipped."""
    words = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                words.append(line)
    return words


def preprocess(text: str, keywords: Sequence[str] = (), *, strip_punctuation: bool = False) -> str:
    """Clean one review: lowercase, drop digit runs and keyword tokens, squeeze spaces.

    Keywords match whole whitespace tokens case-insensitively; a multi-word
    keyword removes the matching run of tokens. No stemming is applied.

    >>> preprocess("TokoApp bagus 10 dari 10", ["tokoapp"])
    'bagus dari'
    """
    if any(not k.strip() for k in keywords):
        raise ValueError("keyword list contains an empty entry")
    text = text.lower()
    if strip_punctuation:
        text = _PUNCT.sub(" ", text)
    text = _DIGITS.sub("", text)
    tokens = text.split()
    if not keywords:
        return " ".join(tokens)

    singles = set()
    phrases = []
    for kw in keywords:
        parts = tuple(_DIGITS.sub("", kw.lower()).split())
        if len(parts) == 1:
            singles.add(parts[0])
        elif parts:
            phrases.append(parts)
    tokens = [t for t in tokens if t not in singles]
    # phrase removal can splice a new match together, so repeat to a fixpoint
    changed = bool(phrases)
    while changed:
        changed = False
        for phrase in phrases:
            k = len(phrase)
            out, i = [], 0
            while i < len(tokens):
                if tuple(tokens[i : i + k]) == phrase:
                    i += k
                    changed = True
                else:
                    out.append(tokens[i])
                    i += 1
            tokens = out
    return " ".join(tokens)


@dataclass
class DatasetSplit:
    train: list
    validation: list
    test: list
    seed: int
    train_index: np.ndarray = field(repr=False, default=None)
    validation_index: np.ndarray = field(repr=False, default=None)
    test_index: np.ndarray = field(repr=False, default=None)

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.validation), len(self.test)


def split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    """Part sizes for ``n`` items: held-out parts are rounded to nearest, train takes the rest."""
    if len(ratios) != 3:
        raise ValueError("ratios must be (train, validation, test)")
    if any(r < 0 for r in ratios):
        raise ValueError("ratios must be non-negative")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios sum to {sum(ratios)!r}, expected 1")
    if n <= 0:
        raise ValueError("cannot split an empty list")
    n_val = math.floor(n * ratios[1] + 0.5)
    n_test = math.floor(n * ratios[2] + 0.5)
    n_train = n - n_val - n_test
    for name, size, ratio in (("train", n_train, ratios[0]), ("validation", n_val, ratios[1]), ("test", n_test, ratios[2])):
        if (ratio > 0 or name == "train") and size <= 0:
            raise ValueError(f"{name} part would be empty for n={n} and ratios {tuple(ratios)}")
    return n_train, n_val, n_test


def split(examples: Sequence, ratios: Sequence[float] = (0.9, 0.05, 0.05), seed: int = 0) -> DatasetSplit:
    """Shuffle under ``seed`` and cut into train / validation / test.

    With 10,615 items and (0.90, 0.05, 0.05) this gives 9553 / 531 / 531.
    """
    n_train, n_val, _ = split_sizes(len(examples), ratios)
    perm = np.random.default_rng(seed).permutation(len(examples))
    idx_train = perm[:n_train]
    idx_val = perm[n_train : n_train + n_val]
    idx_test = perm[n_train + n_val :]
    return DatasetSplit(
        train=[examples[i] for i in idx_train],
        validation=[examples[i] for i in idx_val],
        test=[examples[i] for i in idx_test],
        seed=seed,
        train_index=idx_train,
        validation_index=idx_val,
        test_index=idx_test,
    )
