"""Same-story article alignment: TF-IDF + entity-overlap scoring, candidate
constraints, per-outlet best-match clustering, and MRR evaluation.

The story score blends two parts: alpha * cosine(TF-IDF of title + first five
sentences) + (1 - alpha) * weighted Jaccard over entity word multisets.
Matches must lie within the date window, share an entity word near the top of
both articles, and score at least theta.
"""

from __future__ import annotations

import json
import math
import multiprocessing
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .cleaning import dedupe_group
from .corpus import Corpus, DataError, DEFAULT_TOKENIZER, tokenize
from .annotate import AnnotationSet


@dataclass(frozen=True)
class AlignConfig:
    alpha: float = 0.4
    theta: float = 0.23
    window_days: int = 3
    sim_scope_sentences: int = 5
    entity_constraint_sentences: int = 3

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DataError(f"alpha must be in [0,1], got {self.alpha}")
        if not 0.0 < self.theta <= 1.0:
            raise DataError(f"theta must be in (0,1], got {self.theta}")
        if self.window_days < 0:
            raise DataError(f"window_days must be >= 0, got {self.window_days}")


@dataclass
class StoryCluster:
    anchor_id: str
    member_ids: list  # anchor first, then matches sorted by outlet
    scores: dict  # non-anchor member id -> similarity

    def to_json_obj(self) -> dict:
        return {
            "anchor": self.anchor_id,
            "members": [
                {"id": mid, "score": self.scores[mid]}
                for mid in self.member_ids
                if mid != self.anchor_id
            ],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "StoryCluster":
        members = obj["members"]
        return cls(
            anchor_id=obj["anchor"],
            member_ids=[obj["anchor"]] + [m["id"] for m in members],
            scores={m["id"]: float(m["score"]) for m in members},
        )


class TfIdfIndex:
    """Unigram TF-IDF vectors (smoothed idf, L2-normalized) over each
    article's title + first-N-sentence scope, plus cached entity word bags."""

    def __init__(self, corpus: Corpus, annotations: AnnotationSet, config: AlignConfig):
        self.config = config
        self.corpus = corpus
        n_docs = len(corpus)
        scope_tokens = {}
        df = Counter()
        for art in corpus:
            toks = self._scope_tokens(art, config.sim_scope_sentences)
            scope_tokens[art.id] = toks
            df.update(set(toks))
        self.vocabulary = {t: j for j, t in enumerate(sorted(df))}
        self.idf = {
            self.vocabulary[t]: math.log((1 + n_docs) / (1 + d)) + 1.0
            for t, d in df.items()
        }
        self.doc_vectors: dict[str, dict] = {}
        for aid, toks in scope_tokens.items():
            vec = {}
            for t, count in Counter(toks).items():
                j = self.vocabulary[t]
                vec[j] = count * self.idf[j]
            norm = math.sqrt(sum(v * v for v in vec.values()))
            if norm > 0:
                vec = {j: v / norm for j, v in vec.items()}
            self.doc_vectors[aid] = vec

        stop = DEFAULT_TOKENIZER.stopwords
        self.entity_bags: dict[str, Counter] = {}
        self.constraint_words: dict[str, frozenset] = {}
        self.by_outlet_date: dict[str, list] = {}
        self._postings: dict[str, set] = {}
        for art in corpus:
            bag = Counter()
            near_top = set()
            bound = self._scope_token_count(art, config.entity_constraint_sentences)
            for span in annotations.entity_spans(art.id):
                words = [w for w in tokenize(span.surface) if w not in stop]
                bag.update(words)
                if span.start < bound:
                    near_top.update(words)
            self.entity_bags[art.id] = bag
            self.constraint_words[art.id] = frozenset(near_top)
            for w in near_top:
                self._postings.setdefault(w, set()).add(art.id)
            self.by_outlet_date.setdefault(art.outlet, []).append((art.published, art.id))
        for entries in self.by_outlet_date.values():
            entries.sort()

    @staticmethod
    def _scope_tokens(article, n_sentences: int) -> list:
        parts = [article.title] + article.sentences()[:n_sentences]
        return tokenize(" ".join(parts))

    @staticmethod
    def _scope_token_count(article, n_sentences: int) -> int:
        return len(tokenize(article.title)) + sum(
            len(tokenize(s)) for s in article.sentences()[:n_sentences]
        )

    def cosine(self, a: str, b: str) -> float:
        va, vb = self.doc_vectors[a], self.doc_vectors[b]
        if len(va) > len(vb):
            va, vb = vb, va
        return sum(v * vb[j] for j, v in va.items() if j in vb)

    def shared_entity_candidates(self, anchor_id: str) -> set:
        pool = set()
        for w in self.constraint_words[anchor_id]:
            pool |= self._postings[w]
        pool.discard(anchor_id)
        return pool


def entity_similarity(a: str, b: str, index: TfIdfIndex) -> float:
    """Weighted Jaccard over entity-word multisets: sum(min)/sum(max);
    0 when the union is empty."""
    ca, cb = index.entity_bags[a], index.entity_bags[b]
    num = 0
    den = 0
    for w in set(ca) | set(cb):
        x, y = ca.get(w, 0), cb.get(w, 0)
        num += min(x, y)
        den += max(x, y)
    return num / den if den else 0.0


def story_similarity(a: str, b: str, index: TfIdfIndex, config: AlignConfig) -> float:
    return config.alpha * index.cosine(a, b) + (1 - config.alpha) * entity_similarity(
        a, b, index
    )


def build_index(corpus: Corpus, annotations: AnnotationSet, config: AlignConfig) -> TfIdfIndex:
    if len(corpus) == 0:
        raise DataError("cannot index an empty corpus")
    return TfIdfIndex(corpus, annotations, config)


def candidates(anchor_id: str, index: TfIdfIndex, config: AlignConfig) -> dict:
    """Per-outlet candidate ids: published within the window of the anchor
    and sharing at least one entity word near the top of both articles."""
    anchor = index.corpus.by_id(anchor_id)
    out: dict[str, list] = {}
    for cid in sorted(index.shared_entity_candidates(anchor_id)):
        cand = index.corpus.by_id(cid)
        if cand.outlet == anchor.outlet:
            continue
        if abs((cand.published - anchor.published).days) > config.window_days:
            continue
        out.setdefault(cand.outlet, []).append(cid)
    return out


def _best_matches(anchor_id: str, index: TfIdfIndex, config: AlignConfig) -> list:
    """(member_id, score) for the top-scoring candidate of each other outlet,
    keeping only scores >= theta; ties broken by smaller id."""
    picks = []
    for outlet, ids in sorted(candidates(anchor_id, index, config).items()):
        best = min(
            ((-story_similarity(anchor_id, cid, index, config), cid) for cid in ids)
        )
        score = -best[0]
        if score >= config.theta:
            picks.append((best[1], score))
    return picks


_WORKER_STATE = None


def _worker_best_matches(anchor_id: str):
    index, config = _WORKER_STATE
    return anchor_id, _best_matches(anchor_id, index, config)


def align(
    corpus: Corpus,
    annotations: AnnotationSet,
    config: AlignConfig = AlignConfig(),
    dedupe_threshold: float = 0.1,
    threads: int = 1,
) -> list:
    """Build story clusters: every article anchors one candidate search; the
    best match per other outlet joins if it scores at least theta; clusters
    are deduped (anchor protected) and singleton clusters dropped.

    Output is deterministic for any thread count.
    """
    if len(corpus) == 0:
        return []
    index = build_index(corpus, annotations, config)
    anchor_ids = corpus.ids()
    if threads > 1:
        global _WORKER_STATE
        _WORKER_STATE = (index, config)
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=threads) as pool:
            scored = pool.map(_worker_best_matches, anchor_ids, chunksize=64)
        _WORKER_STATE = None
    else:
        scored = [(aid, _best_matches(aid, index, config)) for aid in anchor_ids]

    clusters = []
    for anchor_id, picks in scored:
        if not picks:
            continue
        anchor = corpus.by_id(anchor_id)
        members = [corpus.by_id(mid) for mid, _ in picks]
        kept = dedupe_group(members, dedupe_threshold, protected=anchor)
        kept_ids = {a.id for a in kept}
        scores = {mid: s for mid, s in picks if mid in kept_ids}
        if not scores:
            continue
        member_ids = [anchor_id] + sorted(scores, key=lambda m: corpus.by_id(m).outlet)
        clusters.append(StoryCluster(anchor_id=anchor_id, member_ids=member_ids, scores=scores))
    return clusters


def save_clusters(clusters, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for cluster in clusters:
            fh.write(json.dumps(cluster.to_json_obj(), ensure_ascii=False))
            fh.write("\n")


def load_clusters(path) -> list:
    clusters = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                clusters.append(StoryCluster.from_json_obj(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise DataError(f"{path}: bad cluster at line {lineno}: {exc}") from None
    return clusters


def load_gold_groups(path) -> list:
    """Gold story groups: one {"story_id","article_ids":[...]} per line."""
    groups = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            groups.append((str(obj["story_id"]), [str(a) for a in obj["article_ids"]]))
    return groups


def _gold_candidate_records(gold, corpus, annotations, config):
    """Per gold anchor: partner id set plus (cosine, jaccard, id) for every
    constraint-passing candidate. Alpha/theta-independent, so grids reuse it."""
    index = build_index(corpus, annotations, config)
    records = []
    for story_id, ids in gold:
        for aid in ids:
            if aid not in corpus:
                raise DataError(f"gold story {story_id} references missing article {aid}")
        for aid in ids:
            partners = {x for x in ids if x != aid}
            cands = []
            for outlet_ids in candidates(aid, index, config).values():
                for cid in outlet_ids:
                    cands.append(
                        (index.cosine(aid, cid), entity_similarity(aid, cid, index), cid)
                    )
            records.append((partners, cands))
    return records


def _mrr_from_records(records, alpha: float, theta: float) -> float:
    total = 0.0
    for partners, cands in records:
        ranked = sorted(
            (
                (-(alpha * cos + (1 - alpha) * ent), cid)
                for cos, ent, cid in cands
                if alpha * cos + (1 - alpha) * ent >= theta
            ),
        )
        for rank, (_, cid) in enumerate(ranked, start=1):
            if cid in partners:
                total += 1.0 / rank
                break
    return total / len(records) if records else 0.0


def evaluate_mrr(gold, corpus, annotations, config: AlignConfig = AlignConfig()) -> float:
    """Mean reciprocal rank of the first same-story article over all gold
    anchors; anchors whose partners are unreachable under the constraints
    (or below theta) contribute 0."""
    records = _gold_candidate_records(gold, corpus, annotations, config)
    return _mrr_from_records(records, config.alpha, config.theta)


def mrr_grid(gold, corpus, annotations, alphas, thetas, config: AlignConfig = AlignConfig()):
    """MRR for every (alpha, theta) combination, reusing one candidate pass."""
    records = _gold_candidate_records(gold, corpus, annotations, config)
    return [
        [(_mrr_from_records(records, a, t)) for t in thetas]
        for a in alphas
    ]
