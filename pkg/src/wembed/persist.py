"""Text formats for run configurations and trained models.

Run configs are flat ``key = value`` files.  Model files start with a
``WEMB v1`` header, carry an optional ``labels`` block and then one line of
space-separated parameters per object.  Floats are written with ``repr`` so a
write/read cycle is bit-exact.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .metric_embed import DistortionConfig
from .models import EmbeddingModel
from .ot import SinkhornConfig
from .word2cloud import WordTrainConfig

MODEL_MAGIC = "WEMB"
MODEL_VERSION = "v1"


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a run in one flat namespace.

    Keys prefixed ``word_`` belong to word training and retrieval; the
    unprefixed Sinkhorn keys drive graph embedding.
    """

    seed: int = 0
    # Sinkhorn for graph embedding
    lam: float = 0.1
    iterations: int = 50
    p: float = 1.0
    stabilization_threshold: float = 0.01
    # graph generators
    graph_model: str = "ba"
    n: int = 64
    attach: int = 2
    ring_k: int = 4
    beta: float = 0.3
    blocks: int = 4
    p_in: float = 0.5
    p_out: float = 0.02
    # metric embedding
    kind: str = "wasserstein"
    points: int = 8
    ground_dim: int = 4
    dim: int = 32
    epochs: int = 1000
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-08
    init_scale: float = 0.1
    batch_pairs: int = 0
    # word training
    word_lam: float = 0.05
    word_iterations: int = 50
    window: int = 2
    margin: float = 1.0
    neg_rate: int = 1
    word_epochs: int = 3
    vocab_cap: int = 8000
    hidden: int = 64
    word_points: int = 16
    word_ground_dim: int = 4
    word_lr: float = 0.001
    batch_size: int = 256
    word_init_scale: float = 0.1
    negatives: str = "uniform"

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            want = _FIELD_TYPES[f.name]
            if want is float and isinstance(value, int) and not isinstance(value, bool):
                object.__setattr__(self, f.name, float(value))
            elif not isinstance(value, want) or isinstance(value, bool):
                raise TypeError(f"config key {f.name!r} expects {want.__name__}, got {value!r}")

    def updated(self, **changes):
        """Copy with ``changes`` applied; ``None`` values are ignored."""
        changes = {k: v for k, v in changes.items() if v is not None}
        unknown = set(changes) - set(_FIELD_TYPES)
        if unknown:
            raise KeyError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return replace(self, **changes)

    def sinkhorn(self):
        return SinkhornConfig(
            lam=self.lam, p=self.p, iterations=self.iterations, stabilization_threshold=self.stabilization_threshold
        )

    def word_sinkhorn(self):
        return SinkhornConfig(
            lam=self.word_lam, p=self.p, iterations=self.word_iterations,
            stabilization_threshold=self.stabilization_threshold,
        )

    def distortion(self):
        return DistortionConfig(
            epochs=self.epochs, batch_pairs=self.batch_pairs, sinkhorn=self.sinkhorn(), lr=self.lr,
            beta1=self.beta1, beta2=self.beta2, adam_eps=self.adam_eps, init_scale=self.init_scale, seed=self.seed,
        )

    def word_training(self):
        return WordTrainConfig(
            window=self.window, margin=self.margin, neg_rate=self.neg_rate, lam=self.word_lam,
            epochs=self.word_epochs, vocab_cap=self.vocab_cap, hidden=self.hidden, points=self.word_points,
            ground_dim=self.word_ground_dim, lr=self.word_lr, batch_size=self.batch_size,
            iterations=self.word_iterations, init_scale=self.word_init_scale, negatives=self.negatives,
            seed=self.seed,
        )

    def dumps(self):
        return "".join(f"{f.name} = {_format_value(getattr(self, f.name))}\n" for f in fields(self))

    @classmethod
    def loads(cls, text, base=None):
        """Parse ``key = value`` lines over ``base`` (defaults when omitted)."""
        changes = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key = value, got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _FIELD_TYPES:
                raise KeyError(f"config line {lineno}: unknown key {key!r}")
            changes[key] = _parse_value(_FIELD_TYPES[key], value, key)
        return replace(base or cls(), **changes)

    @classmethod
    def load(cls, path, base=None):
        return cls.loads(Path(path).read_text(), base)

    def save(self, path):
        Path(path).write_text(self.dumps())


_FIELD_TYPES = {f.name: {"int": int, "float": float, "str": str}[f.type] for f in fields(RunConfig)}


def _format_value(v):
    return repr(v) if isinstance(v, float) else str(v)


def _parse_value(kind, text, key):
    try:
        return kind(text)
    except ValueError:
        raise ValueError(f"config key {key!r}: cannot parse {text!r} as {kind.__name__}") from None


def dumps_model(model):
    shape = " ".join(f"{k}={v}" for k, v in model.shape_info.items())
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION} kind={model.kind} n={model.n_objects} {shape}"]
    if model.labels is not None:
        lines.append("labels")
        for label in model.labels:
            if not label or any(ch.isspace() for ch in label):
                raise ValueError(f"label {label!r} must be a non-empty token without whitespace")
            lines.append(label)
    flat = model.params.reshape(model.n_objects, -1)
    lines.extend(" ".join(repr(float(x)) for x in row) for row in flat)
    return "\n".join(lines) + "\n"


def loads_model(text):
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty model file")
    head = lines[0].split()
    if len(head) < 2 or head[0] != MODEL_MAGIC:
        raise ValueError(f"not a model file (header {lines[0]!r})")
    if head[1] != MODEL_VERSION:
        raise ValueError(f"unsupported model file version {head[1]!r}")
    meta = dict(tok.split("=", 1) for tok in head[2:])
    kind, n = meta.get("kind"), int(meta.get("n", -1))
    if kind == "wasserstein":
        shape = (int(meta["M"]), int(meta["k"]))
    elif kind in ("euclidean", "hyperbolic"):
        shape = (int(meta["d"]),)
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    pos = 1
    labels = None
    if pos < len(lines) and lines[pos] == "labels":
        labels = lines[pos + 1 : pos + 1 + n]
        pos += 1 + n
    rows = lines[pos:]
    if len(labels or []) != (n if labels is not None else 0) or len(rows) != n:
        raise ValueError(f"model file declares n={n} objects but the body does not match")
    width = int(np.prod(shape))
    params = np.empty((n, width))
    for i, row in enumerate(rows):
        vals = row.split()
        if len(vals) != width:
            raise ValueError(f"object {i}: expected {width} parameters, found {len(vals)}")
        params[i] = [float(v) for v in vals]
    return EmbeddingModel(kind, params.reshape((n, *shape)), labels)


def save_model(model, path):
    Path(path).write_text(dumps_model(model))


def load_model(path):
    return loads_model(Path(path).read_text())
