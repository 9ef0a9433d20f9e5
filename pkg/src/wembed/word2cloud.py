"""Contrastive Siamese training of point-cloud word embeddings.

Each branch maps a word id through a lookup table (a linear layer on one-hot
input) of width ``hidden`` and then a shared linear map to ``M * k``
coordinates, reshaped into an ``M``-point cloud in R^k.  The two branches are
compared with the Sinkhorn divergence and trained on

    r * W^2 + (1 - r) * max(0, m - W)^2

with context pairs (r = 1) and negative samples (r = 0).
"""
from __future__ import annotations

import csv
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from .errors import OutOfVocabularyError, TrainingDivergedError
from .models import EmbeddingModel
from .optim import AdamState, adam_step
from .ot import SinkhornConfig, sinkhorn_batch

log = logging.getLogger(__name__)

_TOKEN = re.compile(r"[a-z0-9]+")


def tokenize(text):
    return _TOKEN.findall(text.lower())


def read_corpus(path):
    return tokenize(Path(path).read_text())


@dataclass
class Vocabulary:
    words: list
    counts: list = field(default_factory=list)

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("vocabulary words must be distinct")

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def encode(self, tokens):
        """Ids of in-vocabulary tokens; OOV tokens are dropped."""
        idx = self.index
        return np.array([idx[t] for t in tokens if t in idx], dtype=np.int64)

    def lookup(self, word):
        try:
            return self.index[word]
        except KeyError:
            raise OutOfVocabularyError(word, spelling_hints(word, self.words)) from None


def spelling_hints(word, words, limit=5):
    for n in range(min(len(word), 4), 0, -1):
        hits = [w for w in words if w.startswith(word[:n])]
        if hits:
            return sorted(hits)[:limit]
    return []


def build_vocab(tokens, cap=8000):
    counts = Counter(tokens)
    if not counts:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:cap]
    return Vocabulary([w for w, _ in ranked], [c for _, c in ranked])


@dataclass
class WordTrainConfig:
    window: int = 2
    margin: float = 1.0
    neg_rate: int = 1
    lam: float = 0.05
    epochs: int = 3
    vocab_cap: int = 8000
    hidden: int = 64
    points: int = 16
    ground_dim: int = 4
    lr: float = 1e-3
    batch_size: int = 256
    iterations: int = 50
    init_scale: float = 0.1
    negatives: str = "uniform"  # or "unigram" (counts^0.75)
    seed: int = 0

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not self.margin > 0:
            raise ValueError("margin must be > 0")
        if self.neg_rate < 0 or self.epochs < 0 or self.batch_size < 1:
            raise ValueError("neg_rate/epochs must be >= 0 and batch_size >= 1")
        if self.negatives not in ("uniform", "unigram"):
            raise ValueError(f"unknown negative sampler {self.negatives!r}")

    @property
    def sinkhorn(self):
        return SinkhornConfig(lam=self.lam, iterations=self.iterations)


@dataclass
class TrainingPairs:
    """Columnar training pairs; ``other_pos`` is -1 for negative samples."""

    center: np.ndarray
    other: np.ndarray
    label: np.ndarray
    center_pos: np.ndarray
    other_pos: np.ndarray

    def __len__(self):
        return self.center.size

    def take(self, idx):
        return TrainingPairs(*(getattr(self, f)[idx] for f in ("center", "other", "label", "center_pos", "other_pos")))


def _positive_positions(T, l):
    ci, oj = [], []
    for off in range(1, l + 1):
        if off >= T:
            break
        i = np.arange(T - off)
        ci += [i, i + off]
        oj += [i + off, i]
    if not ci:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    ci, oj = np.concatenate(ci), np.concatenate(oj)
    order = np.lexsort((oj, ci))
    return ci[order], oj[order]


def generate_pairs(ids, window=2, neg_rate=1, vocab_size=None, seed=0, neg_probs=None, max_rounds=100):
    """Context pairs for a token-id stream plus ``neg_rate`` negatives each.

    Positives are every ordered position pair ``(i, j)`` with
    ``0 < |i - j| <= window``, sorted by ``(i, j)``.  Each positive is followed
    by its negatives ``(center, w)`` where ``w`` is drawn (uniformly, or from
    ``neg_probs``) among words absent from the center's window.
    """
    ids = np.asarray(ids, dtype=np.int64)
    T = ids.size
    V = int(vocab_size if vocab_size is not None else (ids.max() + 1 if T else 0))
    ci, oj = _positive_positions(T, window)
    n_pos = ci.size
    rng = np.random.default_rng(seed)
    if n_pos == 0 or neg_rate == 0:
        return TrainingPairs(ids[ci], ids[oj], np.ones(n_pos, np.int8), ci, oj)

    # words in each center's window, padded with -1 past the stream ends
    offs = np.arange(-window, window + 1)
    win_pos = ci[:, None] + offs[None, :]
    inside = (win_pos >= 0) & (win_pos < T)
    win_words = np.where(inside, ids[np.clip(win_pos, 0, T - 1)], -1)

    def draw(size):
        if neg_probs is None:
            return rng.integers(0, V, size=size)
        return rng.choice(V, size=size, p=neg_probs)

    neg = draw((n_pos, neg_rate))
    for _ in range(max_rounds):
        clash = (neg[:, :, None] == win_words[:, None, :]).any(axis=2)
        if not clash.any():
            break
        neg[clash] = draw(int(clash.sum()))
    else:
        clash = (neg[:, :, None] == win_words[:, None, :]).any(axis=2)
        log.warning("dropping %d negatives that could not avoid the context window", int(clash.sum()))
        neg = np.where(clash, -1, neg)

    k = 1 + neg_rate
    total = n_pos * k
    center = np.repeat(ids[ci], k)
    other = np.empty(total, np.int64)
    other[0::k] = ids[oj]
    label = np.zeros(total, np.int8)
    label[0::k] = 1
    other_pos = np.full(total, -1, np.int64)
    other_pos[0::k] = oj
    for r in range(neg_rate):
        other[1 + r :: k] = neg[:, r]
    pairs = TrainingPairs(center, other, label, np.repeat(ci, k), other_pos)
    keep = pairs.other >= 0
    return pairs if keep.all() else pairs.take(np.flatnonzero(keep))


def contrastive_loss(dist, r, m=1.0):
    dist = np.asarray(dist, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    hinge = np.maximum(0.0, m - dist)
    out = r * dist**2 + (1.0 - r) * hinge**2
    return float(out) if out.ndim == 0 else out


def contrastive_grad(dist, r, m=1.0):
    """Derivative of :func:`contrastive_loss` with respect to ``dist``."""
    return 2.0 * r * dist - 2.0 * (1.0 - r) * np.maximum(0.0, m - dist)


@dataclass
class WordModel:
    vocab: Vocabulary
    embed_table: np.ndarray  # (V, hidden)
    out_map: np.ndarray  # (hidden, M * k)
    points: int
    ground_dim: int

    def clouds(self, ids=None):
        E = self.embed_table if ids is None else self.embed_table[ids]
        return (E @ self.out_map).reshape(-1, self.points, self.ground_dim)

    def cloud(self, word):
        return self.clouds([self.vocab.lookup(word)])[0]

    def to_embedding(self):
        return EmbeddingModel("wasserstein", self.clouds(), labels=list(self.vocab.words))


def init_word_model(vocab, cfg):
    rng = np.random.default_rng(cfg.seed)
    E = rng.normal(0.0, cfg.init_scale, size=(len(vocab), cfg.hidden))
    W = rng.normal(0.0, 1.0 / np.sqrt(cfg.hidden), size=(cfg.hidden, cfg.points * cfg.ground_dim))
    return WordModel(vocab, E, W, cfg.points, cfg.ground_dim)


def batch_loss_and_grads(model, center, other, label, cfg):
    """Mean contrastive loss over a pair batch and its gradients w.r.t. both layers."""
    E, W = model.embed_table, model.out_map
    n = center.size
    X = (E[center] @ W).reshape(n, model.points, model.ground_dim)
    Y = (E[other] @ W).reshape(n, model.points, model.ground_dim)
    dist, gX, gY = sinkhorn_batch(X, Y, cfg.sinkhorn, grad=True)
    r = label.astype(np.float64)
    loss = contrastive_loss(dist, r, cfg.margin)
    coef = contrastive_grad(dist, r, cfg.margin) / n
    gXf = gX.reshape(n, -1) * coef[:, None]
    gYf = gY.reshape(n, -1) * coef[:, None]
    gW = E[center].T @ gXf + E[other].T @ gYf
    gE = np.zeros_like(E)
    np.add.at(gE, center, gXf @ W.T)
    np.add.at(gE, other, gYf @ W.T)
    return float(np.mean(loss)), dist, gE, gW


def train_word_model(corpus, cfg=None, vocab=None, callback=None):
    """Train on a corpus path or token list; returns ``(model, loss_history)``."""
    cfg = cfg or WordTrainConfig()
    tokens = read_corpus(corpus) if isinstance(corpus, (str, Path)) else list(corpus)
    vocab = vocab or build_vocab(tokens, cfg.vocab_cap)
    ids = vocab.encode(tokens)
    model = init_word_model(vocab, cfg)
    neg_probs = None
    if cfg.negatives == "unigram":
        w = np.asarray(vocab.counts, dtype=np.float64) ** 0.75
        neg_probs = w / w.sum()

    history = []
    if ids.size < 2:
        log.warning("corpus has no context pairs; returning the initial model")
        return model, history
    st_E = AdamState(lr=cfg.lr)
    st_W = AdamState(lr=cfg.lr)
    for epoch in range(cfg.epochs):
        pairs = generate_pairs(ids, cfg.window, cfg.neg_rate, len(vocab), seed=cfg.seed * 1000 + epoch, neg_probs=neg_probs)
        order = np.random.default_rng(cfg.seed * 1000 + epoch + 500).permutation(len(pairs))
        total, count = 0.0, 0
        for start in range(0, order.size, cfg.batch_size):
            sel = order[start : start + cfg.batch_size]
            c, o, r = pairs.center[sel], pairs.other[sel], pairs.label[sel]
            loss, dist, gE, gW = batch_loss_and_grads(model, c, o, r, cfg)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss in epoch {epoch}; last pair ids ({int(c[-1])}, {int(o[-1])})"
                )
            model.embed_table, st_E = adam_step(model.embed_table, gE, st_E)
            model.out_map, st_W = adam_step(model.out_map, gW, st_W)
            total += loss * sel.size
            count += sel.size
        history.append(total / max(count, 1))
        log.info("epoch %d mean loss %.6f", epoch, history[-1])
        if callback is not None:
            callback(epoch, history[-1], model)
    return model, history


def _clouds_and_labels(model):
    if isinstance(model, WordModel):
        return model.clouds(), list(model.vocab.words)
    if model.kind != "wasserstein" or model.labels is None:
        raise TypeError("retrieval needs a labelled wasserstein model")
    return model.params, list(model.labels)


def _lookup(labels, word):
    try:
        return labels.index(word)
    except ValueError:
        raise OutOfVocabularyError(word, spelling_hints(word, labels)) from None


def distances_to(clouds, q, cfg, batch=4096):
    out = np.empty(clouds.shape[0])
    for s in range(0, clouds.shape[0], batch):
        blk = clouds[s : s + batch]
        out[s : s + batch] = sinkhorn_batch(np.broadcast_to(clouds[q], (blk.shape[0],) + clouds[q].shape), blk, cfg)
    return out


def nearest_neighbors(model, query, topk=5, cfg=None):
    """Other words ranked by ascending Sinkhorn distance to ``query``.

    Returns ``[(word, distance), ...]``; ties are broken by vocabulary id.
    """
    cfg = cfg or SinkhornConfig(lam=0.05)
    clouds, labels = _clouds_and_labels(model)
    q = _lookup(labels, query)
    d = distances_to(clouds, q, cfg)
    ids = np.arange(d.size)
    order = [i for i in np.lexsort((ids, d)) if i != q]
    return [(labels[i], float(d[i])) for i in order[:topk]]


@dataclass
class BenchmarkDataset:
    triples: list
    name: str = ""

    def __post_init__(self):
        if not self.triples:
            raise ValueError("benchmark has no word pairs")
        if not all(np.isfinite(s) for _, _, s in self.triples):
            raise ValueError("benchmark scores must be finite")


def load_benchmark(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"word1", "word2", "score"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected a CSV header word1,word2,score")
        rows = [(r["word1"].strip().lower(), r["word2"].strip().lower(), float(r["score"])) for r in reader]
    return BenchmarkDataset(rows, Path(path).stem)


def bundled_benchmark(name="rg65"):
    return load_benchmark(Path(__file__).parent / "data" / f"{name}.csv")


def eval_similarity(model, ds, cfg=None):
    """Spearman correlation of ``-distance`` with human scores on covered pairs."""
    cfg = cfg or SinkhornConfig(lam=0.05)
    clouds, labels = _clouds_and_labels(model)
    index = {w: i for i, w in enumerate(labels)}
    covered = [(index[a], index[b], s) for a, b, s in ds.triples if a in index and b in index]
    if not covered:
        raise ValueError("no benchmark pair has both words in the vocabulary")
    I = np.array([c[0] for c in covered])
    J = np.array([c[1] for c in covered])
    human = np.array([c[2] for c in covered])
    dist = sinkhorn_batch(clouds[I], clouds[J], cfg)
    rho = spearmanr(-dist, human).statistic if len(covered) > 1 else float("nan")
    return {"spearman": float(rho), "covered_pairs": len(covered)}


def synthetic_topic_corpus(topics, n_tokens, seed=0, segment=20, filler=None, filler_rate=0.0):
    """Token stream made of runs of ``segment`` words drawn from one topic at a time.

    ``filler`` words, Zipf-distributed by list position, replace topic words
    at rate ``filler_rate``.
    """
    rng = np.random.default_rng(seed)
    n_seg = -(-n_tokens // segment)
    seg_topic = rng.integers(len(topics), size=n_seg)
    pick = rng.random(n_seg * segment)
    out = []
    for s, t in enumerate(seg_topic):
        words = topics[t]
        out.extend(words[int(u * len(words))] for u in pick[s * segment : (s + 1) * segment])
    out = out[:n_tokens]
    if filler and filler_rate > 0:
        ranks = np.arange(1, len(filler) + 1, dtype=np.float64)
        fp = 1.0 / ranks
        mask = np.flatnonzero(rng.random(n_tokens) < filler_rate)
        draws = rng.choice(len(filler), size=mask.size, p=fp / fp.sum())
        for pos, w in zip(mask, draws):
            out[pos] = filler[w]
    return out
