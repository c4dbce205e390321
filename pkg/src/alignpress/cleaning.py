"""Corpus cleaning: non-article filtering, near-duplicate removal, politics
classification, non-US filtering, media-leak stripping, and ideology-balanced
downsampling.
"""

from __future__ import annotations

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import (
    Article,
    Corpus,
    DataError,
    Ideology,
    normalize_sentence,
    split_sentences,
    tokenize,
)
from .linmodel import fit_logistic, sigmoid
from .seeds import rng_for

log = logging.getLogger(__name__)

MASK_TOKEN = "[MASK]"


# ---------------------------------------------------------------------------
# Pattern-based filters


@dataclass
class FilterPatternSet:
    """Lowercase substring patterns; matching is case-insensitive."""

    url_patterns: list = field(default_factory=list)
    title_patterns: list = field(default_factory=list)
    nonus_url_keywords: list = field(default_factory=list)
    us_text_keywords: list = field(default_factory=list)

    def __post_init__(self):
        self.url_patterns = [p.lower() for p in self.url_patterns]
        self.title_patterns = [p.lower() for p in self.title_patterns]
        self.nonus_url_keywords = [p.lower() for p in self.nonus_url_keywords]
        self.us_text_keywords = [p.lower() for p in self.us_text_keywords]

    @classmethod
    def from_dir(cls, directory) -> "FilterPatternSet":
        """Load url_patterns.txt, title_patterns.txt, nonus_url.txt,
        us_text.txt from a directory; missing files mean empty lists."""
        directory = Path(directory)
        names = {
            "url_patterns": "url_patterns.txt",
            "title_patterns": "title_patterns.txt",
            "nonus_url_keywords": "nonus_url.txt",
            "us_text_keywords": "us_text.txt",
        }
        kwargs = {}
        for attr, fname in names.items():
            path = directory / fname
            kwargs[attr] = load_pattern_file(path) if path.exists() else []
        return cls(**kwargs)


def load_pattern_file(path) -> list:
    """One pattern per line; '#' starts a comment; blank lines ignored."""
    patterns = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            patterns.append(line)
    return patterns


DEFAULT_FILTER_PATTERNS = FilterPatternSet(
    url_patterns=["/video/", "/gallery/", "/slideshow/"],
    title_patterns=[
        "weekly digest",
        "10 sites you should know",
        "day's end roundup",
        "photos of the week",
        "5 things you need to know",
    ],
    nonus_url_keywords=[
        "/world/",
        "/international/",
        "/europe/",
        "/africa/",
        "/asia/",
        "/latin-america/",
        "/middle-east/",
    ],
    us_text_keywords=[
        "u.s.",
        "united states",
        "obama",
        "trump",
        "bush",
        "biden",
        "pompeo",
        "clinton",
        "pence",
    ],
)


def _contains_any(text: str, patterns) -> bool:
    low = text.lower()
    return any(p in low for p in patterns)


def filter_non_articles(corpus: Corpus, patterns: FilterPatternSet) -> Corpus:
    """Drop articles whose url or title contains a filter pattern."""
    return Corpus(
        a
        for a in corpus
        if not _contains_any(a.url, patterns.url_patterns)
        and not _contains_any(a.title, patterns.title_patterns)
    )


def filter_non_us(corpus: Corpus, patterns: FilterPatternSet) -> Corpus:
    """Drop articles whose url has a non-US keyword unless the text mentions
    a US keyword."""

    def keep(a: Article) -> bool:
        if not _contains_any(a.url, patterns.nonus_url_keywords):
            return True
        return _contains_any(a.full_text, patterns.us_text_keywords)

    return Corpus(a for a in corpus if keep(a))


# ---------------------------------------------------------------------------
# Near-duplicate removal


def levenshtein(a: str, b: str) -> int:
    """Exact unit-cost edit distance, vectorized one DP row at a time.

    The in-row dependency dp[j] = min(c[j], dp[j-1]+1) is solved in closed
    form: dp[j] = min_{k<=j} (c[k] + j - k) = j + running_min(c[k] - k).
    """
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    bv = np.fromiter((ord(ch) for ch in b), dtype=np.int64, count=len(b))
    m = len(b)
    idx = np.arange(m + 1, dtype=np.int64)
    prev = idx.copy()
    cand = np.empty(m + 1, dtype=np.int64)
    for i, ch in enumerate(a, start=1):
        cand[0] = i
        np.minimum(prev[1:] + 1, prev[:-1] + (bv != ord(ch)), out=cand[1:])
        prev = np.minimum.accumulate(cand - idx) + idx
    return int(prev[-1])


def _char_text(article: Article) -> str:
    return article.title + "\n" + article.body_text


def near_duplicate_diff(a: Article, b: Article) -> float:
    """Edit distance over full character sequences, scaled to [0,1] by the
    longer text. Two empty texts count as identical (0)."""
    ta, tb = _char_text(a), _char_text(b)
    longest = max(len(ta), len(tb))
    if longest == 0:
        return 0.0
    return levenshtein(ta, tb) / longest


def dedupe_group(articles, threshold: float, protected: Article | None = None) -> list:
    """Greedy near-duplicate removal within one scope group.

    Articles are visited in (published, id) order and dropped when within
    `threshold` of any already-kept article, so the earlier-published member
    of each duplicate pair survives (ties broken by smaller id). `protected`
    (a cluster anchor) is always kept and compared against first.
    """
    kept: list[Article] = []
    if protected is not None:
        kept.append(protected)
    for art in sorted(articles, key=lambda x: (x.published, x.id)):
        if any(near_duplicate_diff(art, other) < threshold for other in kept):
            continue
        kept.append(art)
    if protected is not None:
        kept = kept[1:]
    return kept


def dedupe(corpus: Corpus, threshold: float = 0.1) -> Corpus:
    """Remove near-duplicates within each outlet (diff < threshold), keeping
    the earlier-published article. Survivor order follows the input corpus."""
    if not 0.0 < threshold <= 1.0:
        raise DataError(f"dedupe threshold must be in (0,1], got {threshold}")
    by_outlet: dict[str, list[Article]] = {}
    for art in corpus:
        by_outlet.setdefault(art.outlet, []).append(art)
    survivors = set()
    for group in by_outlet.values():
        survivors.update(a.id for a in dedupe_group(group, threshold))
    return corpus.subset(survivors)


# ---------------------------------------------------------------------------
# Politics page classifier


def ngram_counts(tokens) -> Counter:
    """Unigram and bigram counts; bigrams joined with a space."""
    counts = Counter(tokens)
    counts.update(f"{tokens[i]} {tokens[i + 1]}" for i in range(len(tokens) - 1))
    return counts


@dataclass
class PoliticsClassifier:
    """Logistic regression over unigram+bigram TF-IDF features.

    Decision is sigmoid(w.x + b) >= 0.5 on L2-normalized vectors; label 1
    means politics.
    """

    vocabulary: dict
    idf: np.ndarray
    weights: np.ndarray
    bias: float

    def features(self, article: Article) -> np.ndarray:
        vec = np.zeros(len(self.vocabulary))
        for gram, count in ngram_counts(article.tokens).items():
            j = self.vocabulary.get(gram)
            if j is not None:
                vec[j] = count * self.idf[j]
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec

    def predict_proba(self, article: Article) -> float:
        return float(sigmoid(np.array([self.features(article) @ self.weights + self.bias]))[0])

    def predict(self, article: Article) -> bool:
        return self.predict_proba(article) >= 0.5

    def save(self, path) -> None:
        obj = {
            "vocabulary": self.vocabulary,
            "idf": self.idf.tolist(),
            "weights": self.weights.tolist(),
            "bias": self.bias,
        }
        Path(path).write_text(json.dumps(obj), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "PoliticsClassifier":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            vocabulary=obj["vocabulary"],
            idf=np.array(obj["idf"]),
            weights=np.array(obj["weights"]),
            bias=float(obj["bias"]),
        )


def _build_feature_space(docs_grams, min_df: int, max_df_ratio: float):
    n_docs = len(docs_grams)
    df = Counter()
    for grams in docs_grams:
        df.update(grams.keys())
    max_df = max_df_ratio * n_docs
    vocab = {
        g: j
        for j, g in enumerate(sorted(g for g, d in df.items() if min_df <= d <= max_df))
    }
    idf = np.zeros(len(vocab))
    for g, j in vocab.items():
        idf[j] = math.log((1 + n_docs) / (1 + df[g])) + 1.0
    return vocab, idf


def _feature_matrix(docs_grams, vocab, idf) -> np.ndarray:
    X = np.zeros((len(docs_grams), len(vocab)))
    for i, grams in enumerate(docs_grams):
        for g, count in grams.items():
            j = vocab.get(g)
            if j is not None:
                X[i, j] = count * idf[j]
        norm = np.linalg.norm(X[i])
        if norm > 0:
            X[i] /= norm
    return X


def train_politics_classifier(
    labeled,
    min_df: int = 5,
    max_df_ratio: float = 0.7,
    lr: float = 2.0,
    epochs: int = 400,
    unlabeled=None,
    p_pos: float = 0.95,
    p_neg: float = 0.9,
) -> PoliticsClassifier:
    """Fit the politics classifier by plain gradient descent.

    `labeled` is a list of (Article, label) with label truthy for politics.
    Document-frequency bounds default to min_df=5 and max_df=0.7*|D|.
    If `unlabeled` articles are given, one self-training round classifies
    them and folds high-confidence pages (politics prob >= p_pos, or
    non-politics prob >= p_neg) back into the training set before refitting.
    """
    if len(labeled) < 2:
        raise DataError("need at least 2 labeled examples")
    y = np.array([1.0 if lab else 0.0 for _, lab in labeled])
    if y.min() == y.max():
        raise DataError("training data contains a single class")
    docs_grams = [ngram_counts(art.tokens) for art, _ in labeled]
    vocab, idf = _build_feature_space(docs_grams, min_df, max_df_ratio)
    if not vocab:
        raise DataError(
            f"no n-grams survive df bounds min_df={min_df}, max_df={max_df_ratio}*|D|"
        )
    X = _feature_matrix(docs_grams, vocab, idf)
    w, b = fit_logistic(X, y, lr=lr, epochs=epochs)
    clf = PoliticsClassifier(vocabulary=vocab, idf=idf, weights=w, bias=b)
    if not unlabeled:
        return clf

    extra = []
    for art in unlabeled:
        proba = clf.predict_proba(art)
        if proba >= p_pos:
            extra.append((art, 1))
        elif 1.0 - proba >= p_neg:
            extra.append((art, 0))
    if not extra:
        return clf
    log.info("self-training adds %d of %d unlabeled pages", len(extra), len(unlabeled))
    return train_politics_classifier(
        list(labeled) + extra, min_df=min_df, max_df_ratio=max_df_ratio, lr=lr, epochs=epochs
    )


def filter_politics(corpus: Corpus, classifier: PoliticsClassifier) -> Corpus:
    return Corpus(a for a in corpus if classifier.predict(a))


# ---------------------------------------------------------------------------
# Media-leak removal


@dataclass
class LeakPatternTable:
    """Per-outlet self-mention phrases and frequent boilerplate sentences
    (normalized); outlets missing from the table are treated as clean."""

    per_outlet: dict = field(default_factory=dict)

    def phrases(self, outlet: str) -> list:
        return self.per_outlet.get(outlet, {}).get("self_mention_phrases", [])

    def sentences(self, outlet: str) -> set:
        return set(self.per_outlet.get(outlet, {}).get("frequent_sentences", []))

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.per_outlet, sort_keys=True, indent=1), encoding="utf-8"
        )

    @classmethod
    def load(cls, path) -> "LeakPatternTable":
        return cls(per_outlet=json.loads(Path(path).read_text(encoding="utf-8")))


def _mask_phrases(text: str, phrases) -> str:
    for phrase in phrases:
        text = re.sub(re.escape(phrase), MASK_TOKEN, text, flags=re.IGNORECASE)
    return text


def mine_leak_patterns(
    corpus: Corpus, self_mentions: dict | None = None, min_count: int = 100
) -> LeakPatternTable:
    """Build the leak table: given self-mention phrases per outlet, collect
    sentences seen more than `min_count` times within an outlet (counted
    after phrase masking, so patterns may contain the mask token)."""
    self_mentions = self_mentions or {}
    counts: dict[str, Counter] = {}
    for art in corpus:
        phrases = self_mentions.get(art.outlet, [])
        tally = counts.setdefault(art.outlet, Counter())
        for para in art.paragraphs:
            for sent in split_sentences(_mask_phrases(para, phrases)):
                tally[normalize_sentence(sent)] += 1
    table = {}
    for outlet in sorted(set(list(counts) + list(self_mentions))):
        frequent = sorted(
            s for s, c in counts.get(outlet, Counter()).items() if c > min_count
        )
        table[outlet] = {
            "self_mention_phrases": list(self_mentions.get(outlet, [])),
            "frequent_sentences": frequent,
        }
    return LeakPatternTable(per_outlet=table)


def strip_media_leaks(corpus: Corpus, table: LeakPatternTable) -> Corpus:
    """Mask self-mention phrases, then drop any of the first two or last two
    paragraphs containing a frequent boilerplate sentence. Articles left with
    no paragraphs are dropped with a warning."""
    out = []
    for art in corpus:
        phrases = table.phrases(art.outlet)
        frequent = table.sentences(art.outlet)
        title = _mask_phrases(art.title, phrases) if phrases else art.title
        paras = [_mask_phrases(p, phrases) if phrases else p for p in art.paragraphs]
        if frequent:
            n = len(paras)
            eligible = {i for i in (0, 1, n - 2, n - 1) if 0 <= i < n}
            paras = [
                p
                for i, p in enumerate(paras)
                if i not in eligible
                or not any(normalize_sentence(s) in frequent for s in split_sentences(p))
            ]
        if not paras:
            log.warning("dropping article %s: no paragraphs left after leak removal", art.id)
            continue
        out.append(
            Article(
                id=art.id,
                outlet=art.outlet,
                ideology=art.ideology,
                published=art.published,
                url=art.url,
                title=title,
                paragraphs=tuple(paras),
            )
        )
    return Corpus(out)


# ---------------------------------------------------------------------------
# Balanced downsampling


def balance_by_ideology(corpus: Corpus, seed: int) -> Corpus:
    """Downsample so each ideology contributes exactly the minimum per-class
    count, uniformly at random without replacement; deterministic per seed."""
    buckets: dict[Ideology, list[str]] = {ideo: [] for ideo in Ideology}
    for art in corpus:
        buckets[art.ideology].append(art.id)
    for ideo in Ideology:
        if not buckets[ideo]:
            raise DataError(f"cannot balance: no articles with ideology {ideo.value}")
    target = min(len(ids) for ids in buckets.values())
    rng = rng_for(seed, "balance")
    keep = set()
    for ideo in Ideology:  # fixed L, C, R draw order
        ids = sorted(buckets[ideo])
        chosen = rng.choice(len(ids), size=target, replace=False)
        keep.update(ids[i] for i in chosen)
    return corpus.subset(keep)
