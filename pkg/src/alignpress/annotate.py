"""Named-entity and sentiment-token annotations, from sidecar files or a
built-in heuristic tagger. These feed the alignment entity similarity and the
upsampled masking strategy.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .corpus import (
    Article,
    CASED_TOKENIZER,
    Corpus,
    DataError,
    split_sentences,
    tokenize,
)

log = logging.getLogger(__name__)

ENTITY_TYPES = ("PERSON", "NORP", "ORG", "GPE", "EVENT")
MAX_SPAN_TOKENS = 5


@dataclass(frozen=True)
class EntitySpan:
    article_id: str
    start: int
    end: int  # exclusive
    etype: str
    surface: str

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class SentimentLexicon:
    entries: frozenset
    source_tag: str = "custom"

    @classmethod
    def from_file(cls, path) -> "SentimentLexicon":
        """One word per line, lowercased; '#' comments and blanks ignored."""
        words = set()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            word = line.split("#", 1)[0].strip().lower()
            if word:
                words.add(word)
        return cls(entries=frozenset(words), source_tag=Path(path).stem)


class AnnotationSet:
    """Entity spans and sentiment token positions, keyed by article id.
    Spans within one article are non-overlapping."""

    def __init__(self):
        self._spans: dict[str, list[EntitySpan]] = {}
        self._sentiment: dict[str, set[int]] = {}

    @property
    def entities(self) -> list[EntitySpan]:
        out = []
        for aid in sorted(self._spans):
            out.extend(self._spans[aid])
        return out

    def entity_spans(self, article_id: str) -> list[EntitySpan]:
        return self._spans.get(article_id, [])

    def sentiment_positions(self, article_id: str) -> set:
        return self._sentiment.get(article_id, set())

    def set_spans(self, article_id: str, spans) -> None:
        self._spans[article_id] = sorted(spans, key=lambda s: s.start)

    def set_sentiment(self, article_id: str, positions) -> None:
        self._sentiment[article_id] = set(positions)

    def span_count(self) -> int:
        return sum(len(v) for v in self._spans.values())


def resolve_overlaps(spans) -> list:
    """Keep the longer span of any overlapping pair, then the earlier one."""
    kept: list[EntitySpan] = []
    for span in sorted(spans, key=lambda s: (-(s.end - s.start), s.start, s.etype)):
        if all(span.end <= k.start or span.start >= k.end for k in kept):
            kept.append(span)
    return sorted(kept, key=lambda s: s.start)


def ingest_annotations(path, corpus: Corpus, max_span: int = MAX_SPAN_TOKENS) -> AnnotationSet:
    """Load sidecar entity spans ({"article_id","start","end","etype","surface"}
    per line), validate them against token bounds, resolve overlaps, and drop
    spans longer than `max_span` tokens."""
    raw: dict[str, list[EntitySpan]] = {}
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: malformed JSON at line {lineno}: {exc.msg}") from None
            span = EntitySpan(
                article_id=str(obj["article_id"]),
                start=int(obj["start"]),
                end=int(obj["end"]),
                etype=str(obj["etype"]),
                surface=str(obj.get("surface", "")),
            )
            if span.article_id not in corpus:
                raise DataError(f"{path}: line {lineno}: unknown article id {span.article_id}")
            if span.etype not in ENTITY_TYPES:
                raise DataError(f"{path}: line {lineno}: unknown entity type {span.etype}")
            n_tokens = len(corpus.by_id(span.article_id).tokens)
            if not (0 <= span.start < span.end <= n_tokens):
                raise DataError(
                    f"{path}: line {lineno}: span out of bounds for {span.article_id} "
                    f"(start={span.start}, end={span.end}, tokens={n_tokens})"
                )
            raw.setdefault(span.article_id, []).append(span)
    annotations = AnnotationSet()
    for aid, spans in raw.items():
        resolved = [s for s in resolve_overlaps(spans) if len(s) <= max_span]
        annotations.set_spans(aid, resolved)
    return annotations


def save_annotations(annotations: AnnotationSet, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for span in annotations.entities:
            fh.write(
                json.dumps(
                    {
                        "article_id": span.article_id,
                        "start": span.start,
                        "end": span.end,
                        "etype": span.etype,
                        "surface": span.surface,
                    },
                    ensure_ascii=False,
                )
            )
            fh.write("\n")


def load_gazetteer(path) -> dict:
    """Lines of "surface<TAB>ETYPE"; surfaces matched lowercase."""
    gaz = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            surface, etype = line.rsplit("\t", 1)
        except ValueError:
            raise DataError(f"bad gazetteer line (need 'surface<TAB>TYPE'): {line!r}") from None
        if etype not in ENTITY_TYPES:
            raise DataError(f"bad gazetteer entity type {etype!r}")
        gaz[surface.strip().lower()] = etype
    return gaz


def _cased_tokens_and_sentence_starts(article: Article):
    """Case-preserving tokens plus the token index that starts each sentence.

    Segment-wise tokenization (title, then each body sentence) concatenates
    to exactly the whole-text tokenization because sentence breaks only occur
    at whitespace.
    """
    tokens: list[str] = []
    starts = set()
    for segment in [article.title] + article.sentences():
        seg_tokens = tokenize(segment, CASED_TOKENIZER)
        if seg_tokens:
            starts.add(len(tokens))
            tokens.extend(seg_tokens)
    return tokens, starts


def heuristic_tag_entities(article: Article, gazetteer: dict | None = None) -> list:
    """Fallback tagger: maximal runs of capitalized tokens (split to chunks of
    at most 5), skipping single sentence-initial capitals; entity type comes
    from the gazetteer when the surface is listed, else PERSON."""
    gazetteer = gazetteer or {}
    tokens, sentence_starts = _cased_tokens_and_sentence_starts(article)
    spans = []
    i = 0
    while i < len(tokens):
        if not tokens[i][:1].isupper():
            i += 1
            continue
        j = i
        while j < len(tokens) and tokens[j][:1].isupper():
            j += 1
        if j - i == 1 and i in sentence_starts:
            i = j
            continue
        for chunk_start in range(i, j, MAX_SPAN_TOKENS):
            chunk_end = min(chunk_start + MAX_SPAN_TOKENS, j)
            surface = " ".join(tokens[chunk_start:chunk_end])
            etype = gazetteer.get(surface.lower(), "PERSON")
            spans.append(
                EntitySpan(
                    article_id=article.id,
                    start=chunk_start,
                    end=chunk_end,
                    etype=etype,
                    surface=surface,
                )
            )
        i = j
    return spans


def tag_sentiment(article: Article, lexicon: SentimentLexicon) -> set:
    """Token positions whose lowercase form is in the lexicon."""
    return {i for i, tok in enumerate(article.tokens) if tok.lower() in lexicon.entries}


def annotate_corpus(
    corpus: Corpus,
    sidecar=None,
    gazetteer: dict | None = None,
    lexicon: SentimentLexicon | None = None,
) -> AnnotationSet:
    """Assemble annotations for a corpus: entity spans from a sidecar file or
    the heuristic tagger, plus sentiment positions from a lexicon."""
    if sidecar is not None:
        annotations = ingest_annotations(sidecar, corpus)
    else:
        annotations = AnnotationSet()
        for art in corpus:
            spans = resolve_overlaps(heuristic_tag_entities(art, gazetteer))
            annotations.set_spans(art.id, [s for s in spans if len(s) <= MAX_SPAN_TOKENS])
    if lexicon is not None:
        for art in corpus:
            annotations.set_sentiment(art.id, tag_sentiment(art, lexicon))
    return annotations
