"""Article data model, deterministic tokenizer, and streaming JSONL persistence.

Every pipeline stage reads and writes the same one-object-per-line article
schema: {"id","outlet","ideology","published","url","title","paragraphs"}.
Token sequences are never serialized; they are re-derived from title and
paragraphs so the derivation stays byte-identical across stages.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from datetime import date
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator


class DataError(Exception):
    """Malformed or contract-violating input data (CLI exit code 2)."""


class Ideology(Enum):
    LEFT = "L"
    CENTER = "C"
    RIGHT = "R"

    @classmethod
    def parse(cls, raw: str) -> "Ideology":
        try:
            return cls(raw)
        except ValueError:
            raise DataError(f"unknown ideology {raw!r} (expected L, C, or R)") from None


# Small English stopword list, used where callers opt into stopword removal
# (entity word bags); the tokenizer itself never removes stopwords.
DEFAULT_STOPWORDS = frozenset("""
a about after again against all an and any are as at be been being both but by
can did do does doing down few for from had has have having he her here hers
him his how i if in into is it its just me more most my no nor not now of off
on once only or other our out over own s same she should so some such t than
that the their them then there these they this those through to too under
until up very was we were what when where which who whom why will with you
your
""".split())


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    strip_punctuation: bool = True
    stopwords: frozenset = DEFAULT_STOPWORDS


DEFAULT_TOKENIZER = TokenizerConfig()
CASED_TOKENIZER = TokenizerConfig(lowercase=False)


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def tokenize(text: str, config: TokenizerConfig = DEFAULT_TOKENIZER) -> list[str]:
    """Split text into tokens: NFC normalize, split on Unicode whitespace,
    optionally lowercase and strip leading/trailing punctuation.

    Pure function of (config, text); empty text yields an empty list.
    Stopwords are retained — removal is the caller's choice.
    """
    text = unicodedata.normalize("NFC", text)
    if config.lowercase:
        text = text.lower()
    tokens = []
    for raw in text.split():
        tok = _strip_punct(raw) if config.strip_punctuation else raw
        if tok:
            tokens.append(tok)
    return tokens


_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[str]:
    """Split on '.', '!' or '?' followed by whitespace. Punctuation stays
    attached to its sentence."""
    return [s for s in _SENTENCE_BREAK.split(text) if s.strip()]


def normalize_sentence(sentence: str) -> str:
    """Whitespace-collapsed, lowercased form used for sentence matching."""
    return " ".join(sentence.split()).lower()


# Serialized field order is fixed so saves are byte-deterministic.
_FIELDS = ("id", "outlet", "ideology", "published", "url", "title", "paragraphs")


@dataclass(frozen=True)
class Article:
    id: str
    outlet: str
    ideology: Ideology
    published: date
    url: str
    title: str
    paragraphs: tuple

    @property
    def full_text(self) -> str:
        return "\n".join((self.title, *self.paragraphs))

    @property
    def body_text(self) -> str:
        return "\n".join(self.paragraphs)

    @cached_property
    def tokens(self) -> list[str]:
        """Tokens of title + paragraphs under the default tokenizer (cached;
        re-derivable byte-identically, never serialized)."""
        return tokenize(self.full_text)

    def sentences(self) -> list[str]:
        """Body sentences; paragraph breaks are hard sentence boundaries."""
        out = []
        for para in self.paragraphs:
            out.extend(split_sentences(para))
        return out

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "outlet": self.outlet,
            "ideology": self.ideology.value,
            "published": self.published.isoformat(),
            "url": self.url,
            "title": self.title,
            "paragraphs": list(self.paragraphs),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Article":
        missing = [f for f in _FIELDS if f not in obj]
        if missing:
            raise DataError(f"article missing fields: {', '.join(missing)}")
        paragraphs = obj["paragraphs"]
        if not isinstance(paragraphs, list) or not paragraphs:
            raise DataError(f"article {obj['id']!r} has no paragraphs")
        try:
            published = date.fromisoformat(obj["published"])
        except ValueError:
            raise DataError(
                f"article {obj['id']!r} has bad date {obj['published']!r}"
            ) from None
        return cls(
            id=str(obj["id"]),
            outlet=str(obj["outlet"]),
            ideology=Ideology.parse(obj["ideology"]),
            published=published,
            url=str(obj["url"]),
            title=str(obj["title"]),
            paragraphs=tuple(str(p) for p in paragraphs),
        )


class Corpus:
    """Ordered, immutable collection of articles with an id index.

    Iteration order equals file order. Safe for shared read-only access.
    """

    def __init__(self, articles: Iterable[Article]):
        self.articles: list[Article] = list(articles)
        self.index: dict[str, int] = {}
        for pos, art in enumerate(self.articles):
            if art.id in self.index:
                raise DataError(f"duplicate id {art.id}")
            self.index[art.id] = pos

    def __len__(self) -> int:
        return len(self.articles)

    def __iter__(self) -> Iterator[Article]:
        return iter(self.articles)

    def __contains__(self, article_id: str) -> bool:
        return article_id in self.index

    def by_id(self, article_id: str) -> Article:
        try:
            return self.articles[self.index[article_id]]
        except KeyError:
            raise DataError(f"unknown article id {article_id}") from None

    def ids(self) -> list[str]:
        return [a.id for a in self.articles]

    def subset(self, keep_ids) -> "Corpus":
        """New corpus with the given ids, preserving this corpus's order."""
        keep = set(keep_ids)
        return Corpus(a for a in self.articles if a.id in keep)


def load_corpus(path) -> Corpus:
    """Load a JSONL corpus. Any malformed line or duplicate id fails the
    whole load with the offending line number."""
    path = Path(path)
    articles = []
    seen: dict[str, int] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: malformed JSON at line {lineno}: {exc.msg}") from None
            try:
                art = Article.from_json_obj(obj)
            except DataError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from None
            if art.id in seen:
                raise DataError(f"{path}: duplicate id {art.id} at line {lineno}")
            seen[art.id] = lineno
            articles.append(art)
    return Corpus(articles)


def save_corpus(corpus: Corpus, path) -> None:
    """Write one JSON object per line in stable field order, trailing newline."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as fh:
            for art in corpus:
                fh.write(json.dumps(art.to_json_obj(), ensure_ascii=False))
                fh.write("\n")
    except OSError as exc:
        raise DataError(f"cannot write corpus to {path}: {exc}") from None
