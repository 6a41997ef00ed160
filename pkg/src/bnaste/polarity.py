"""Embedding backends, pair featurization, and the polarity classifier.

The classifier follows the stacked ensemble design: contextual token
embeddings are pooled into pair feature vectors that feed a gradient-boosted
tree model (or a multinomial linear baseline). The contextual encoder itself
is external; its vectors arrive via a precomputed store, with a hashed
character-n-gram backend as the offline-testable stand-in.
"""

from __future__ import annotations

import hashlib
import json
import pickle
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
from sklearn.ensemble import GradientBoostingClassifier

from .corpus import POLARITIES
from .errors import ValidationError
from .pairmatch import token_gap
from .spanex import Interval
from .textnorm import TokenizedText

LABEL_ORDER = POLARITIES  # (positive, negative, neutral); ties resolve leftward


class EmbeddingBackend(Protocol):
    """One d-dimensional vector per token; deterministic for fixed state."""

    @property
    def dim(self) -> int: ...

    def embed(self, text: TokenizedText, review_id: str | None = None) -> np.ndarray: ...


class HashedEmbeddingBackend:
    """Character n-gram (2..4) signed feature hashing, L2-normalized per token.

    Identical token strings always map to identical vectors, and the hash is
    keyed by the seed, so runs are bitwise reproducible.
    """

    def __init__(self, dim: int = 64, seed: int = 42):
        if dim < 8:
            raise ValidationError("hashed embedding dimension must be >= 8")
        self._dim = dim
        self._key = int(seed).to_bytes(8, "little", signed=False)
        self._cache: dict[str, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return self._dim

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._cache.get(token)
        if cached is not None:
            return cached
        vec = np.zeros(self._dim)
        padded = f"<{token}>"
        for n in (2, 3, 4):
            for i in range(len(padded) - n + 1):
                gram = padded[i : i + n]
                digest = hashlib.blake2b(
                    gram.encode("utf-8"), key=self._key, digest_size=8
                ).digest()
                value = int.from_bytes(digest, "little")
                bucket = value % self._dim
                sign = 1.0 if (value >> 63) & 1 else -1.0
                vec[bucket] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        self._cache[token] = vec
        return vec

    def embed(self, text: TokenizedText, review_id: str | None = None) -> np.ndarray:
        if text.token_count == 0:
            return np.zeros((0, self._dim))
        return np.stack([self._token_vector(text.token_text(i)) for i in range(text.token_count)])


# ---------------------------------------------------------------------------
# precomputed vector store
# ---------------------------------------------------------------------------

STORE_SCHEMA = "bnaste-embeddings-v1"


@dataclass
class EmbeddingStore:
    """Per-review token vectors produced by an external encoder."""

    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def get(self, review_id: str, token_count: int) -> np.ndarray:
        if review_id not in self.vectors:
            raise ValidationError(f"embedding store has no entry for review {review_id!r}")
        matrix = self.vectors[review_id]
        if matrix.shape[0] != token_count:
            raise ValidationError(
                f"review {review_id!r}: store has {matrix.shape[0]} token vectors, "
                f"text has {token_count} tokens"
            )
        return matrix


def write_store(path: str | Path, store: EmbeddingStore) -> None:
    """Line-record store: a header line, then one JSON record per review."""
    lines = [json.dumps({"schema": STORE_SCHEMA, "dim": store.dim})]
    for review_id in sorted(store.vectors):
        matrix = store.vectors[review_id]
        lines.append(
            json.dumps({"id": review_id, "vectors": matrix.tolist()}, ensure_ascii=False)
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_store(path: str | Path) -> EmbeddingStore:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValidationError(f"{path}: empty embedding store")
    header = json.loads(lines[0])
    if header.get("schema") != STORE_SCHEMA:
        raise ValidationError(f"{path}: unknown store schema {header.get('schema')!r}")
    dim = int(header["dim"])
    vectors = {}
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        obj = json.loads(line)
        matrix = np.asarray(obj["vectors"], dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] != dim:
            raise ValidationError(f"{path}: line {lineno}: vectors do not match dimension {dim}")
        vectors[obj["id"]] = matrix
    return EmbeddingStore(dim, vectors)


class PrecomputedEmbeddingBackend:
    """Adapter exposing a vector store through the backend contract."""

    def __init__(self, store: EmbeddingStore):
        self._store = store

    @property
    def dim(self) -> int:
        return self._store.dim

    def embed(self, text: TokenizedText, review_id: str | None = None) -> np.ndarray:
        if review_id is None:
            raise ValidationError("precomputed backend requires a review id")
        return self._store.get(review_id, text.token_count)


# ---------------------------------------------------------------------------
# pair features
# ---------------------------------------------------------------------------


def pair_features_from_vectors(
    token_vectors: np.ndarray,
    aspect: Interval,
    opinion: Interval,
    weight: float,
) -> np.ndarray:
    """[pooled aspect, pooled opinion, pooled review, gap, lengths, edge weight].

    Pooling is the arithmetic mean over token vectors; dimension is 3d + 4.
    """
    a_block = token_vectors[aspect[0] : aspect[1] + 1]
    o_block = token_vectors[opinion[0] : opinion[1] + 1]
    extras = np.array(
        [
            float(token_gap(aspect, opinion)),
            float(aspect[1] - aspect[0] + 1),
            float(opinion[1] - opinion[0] + 1),
            float(weight),
        ]
    )
    return np.concatenate(
        [a_block.mean(axis=0), o_block.mean(axis=0), token_vectors.mean(axis=0), extras]
    )


def featurize_pair(
    text: TokenizedText,
    pair: tuple[Interval, Interval],
    edge_weight: float,
    backend: EmbeddingBackend,
    review_id: str | None = None,
) -> np.ndarray:
    """Embed the review with the backend and build the pair feature vector."""
    aspect, opinion = pair
    for i, j in (aspect, opinion):
        if not (0 <= i <= j < text.token_count):
            raise ValidationError(f"interval ({i}, {j}) invalid for {text.token_count} tokens")
    vectors = backend.embed(text, review_id)
    return pair_features_from_vectors(vectors, aspect, opinion, edge_weight)


# ---------------------------------------------------------------------------
# classifiers
# ---------------------------------------------------------------------------


@dataclass
class LinearPolarityModel:
    """Multinomial softmax baseline with standardized features.

    Trained by full-batch gradient descent; zero initialization makes
    training deterministic without randomness.
    """

    weights: np.ndarray  # (n_classes, D)
    bias: np.ndarray  # (n_classes,)
    feature_mean: np.ndarray
    feature_scale: np.ndarray

    @classmethod
    def zeros(cls, dim: int, n_classes: int = 3) -> "LinearPolarityModel":
        return cls(np.zeros((n_classes, dim)), np.zeros(n_classes), np.zeros(dim), np.ones(dim))

    @classmethod
    def fit(
        cls,
        features: np.ndarray,
        label_indices: np.ndarray,
        sample_weight: np.ndarray,
        n_classes: int,
        epochs: int = 300,
        learning_rate: float = 0.5,
    ) -> "LinearPolarityModel":
        mean = features.mean(axis=0)
        scale = features.std(axis=0)
        scale[scale == 0] = 1.0
        x = (features - mean) / scale
        n, d = x.shape
        w = np.zeros((n_classes, d))
        b = np.zeros(n_classes)
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), label_indices] = 1.0
        sw = (sample_weight / sample_weight.sum())[:, None]
        for _ in range(epochs):
            logits = x @ w.T + b
            logits -= logits.max(axis=1, keepdims=True)
            probs = np.exp(logits)
            probs /= probs.sum(axis=1, keepdims=True)
            grad = (probs - onehot) * sw
            w -= learning_rate * grad.T @ x
            b -= learning_rate * grad.sum(axis=0)
        return cls(w, b, mean, scale)

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        x = (np.atleast_2d(features) - self.feature_mean) / self.feature_scale
        logits = x @ self.weights.T + self.bias
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        return probs / probs.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class PolarityTrainConfig:
    kind: str = "gbt"  # gbt | linear
    trees: int = 200
    depth: int = 6
    learning_rate: float = 0.1
    seed: int = 42
    class_weighting: bool = True

    def __post_init__(self):
        if self.kind not in ("gbt", "linear"):
            raise ValidationError(f"unknown polarity model kind {self.kind!r}")


@dataclass
class TrainReport:
    class_counts: dict[str, int]
    train_accuracy: float


@dataclass
class PolarityModel:
    """Trained 3-class polarity classifier with a fixed label order."""

    kind: str
    feature_dim: int
    labels: tuple[str, ...]
    inner: object
    classes_present: tuple[str, ...]
    report: TrainReport | None = None

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        """Distribution over the fixed label order; rows sum to 1."""
        x = np.atleast_2d(np.asarray(features, dtype=float))
        if x.shape[1] != self.feature_dim:
            raise ValidationError(
                f"feature dimension {x.shape[1]} does not match model dimension {self.feature_dim}"
            )
        out = np.zeros((x.shape[0], len(self.labels)))
        if self.kind == "gbt":
            raw = self.inner.predict_proba(x)
            for col, cls in enumerate(self.inner.classes_):
                out[:, self.labels.index(cls)] = raw[:, col]
        else:
            raw = self.inner.predict_proba(x)
            for col, cls in enumerate(self.classes_present):
                out[:, self.labels.index(cls)] = raw[:, col]
        return out

    def predict(self, features: np.ndarray) -> tuple[str, np.ndarray]:
        dist = self.predict_proba(features)[0]
        return self.labels[int(np.argmax(dist))], dist

    def save(self, path: str | Path) -> None:
        path = Path(path)
        if self.kind == "gbt":
            with path.open("wb") as fh:
                pickle.dump(
                    {
                        "kind": self.kind,
                        "feature_dim": self.feature_dim,
                        "labels": self.labels,
                        "classes_present": self.classes_present,
                        "inner": self.inner,
                    },
                    fh,
                )
        else:
            np.savez(
                path,
                kind="linear",
                feature_dim=self.feature_dim,
                labels=np.array(self.labels),
                classes_present=np.array(self.classes_present),
                weights=self.inner.weights,
                bias=self.inner.bias,
                feature_mean=self.inner.feature_mean,
                feature_scale=self.inner.feature_scale,
            )

    @classmethod
    def load(cls, path: str | Path) -> "PolarityModel":
        path = Path(path)
        if path.suffix == ".npz":
            data = np.load(path, allow_pickle=False)
            inner = LinearPolarityModel(
                data["weights"], data["bias"], data["feature_mean"], data["feature_scale"]
            )
            return cls(
                kind="linear",
                feature_dim=int(data["feature_dim"]),
                labels=tuple(str(x) for x in data["labels"]),
                inner=inner,
                classes_present=tuple(str(x) for x in data["classes_present"]),
            )
        with path.open("rb") as fh:
            obj = pickle.load(fh)
        return cls(
            kind=obj["kind"],
            feature_dim=obj["feature_dim"],
            labels=tuple(obj["labels"]),
            inner=obj["inner"],
            classes_present=tuple(obj["classes_present"]),
        )


def train_polarity(
    features: np.ndarray | Sequence[np.ndarray],
    labels: Sequence[str],
    config: PolarityTrainConfig = PolarityTrainConfig(),
) -> PolarityModel:
    """Train the polarity classifier; deterministic for a fixed seed.

    Refuses single-class input rather than silently fitting a constant
    model. Class imbalance is countered with inverse-frequency sample
    weights when class_weighting is on.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValidationError("features must be a non-empty 2-D array")
    y = list(labels)
    if len(y) != x.shape[0]:
        raise ValidationError("feature/label count mismatch")
    unknown = sorted(set(y) - set(LABEL_ORDER))
    if unknown:
        raise ValidationError(f"unknown polarity labels: {unknown}")
    counts = {label: y.count(label) for label in LABEL_ORDER if label in y}
    if len(counts) < 2:
        raise ValidationError(
            f"polarity training needs at least 2 classes, got {sorted(counts) or 'none'}"
        )

    if config.class_weighting:
        weight_of = {lab: len(y) / (len(counts) * n) for lab, n in counts.items()}
        sample_weight = np.array([weight_of[lab] for lab in y])
    else:
        sample_weight = np.ones(len(y))

    present = tuple(lab for lab in LABEL_ORDER if lab in counts)
    if config.kind == "gbt":
        clf = GradientBoostingClassifier(
            n_estimators=config.trees,
            max_depth=config.depth,
            learning_rate=config.learning_rate,
            random_state=config.seed,
        )
        clf.fit(x, np.array(y), sample_weight=sample_weight)
        inner: object = clf
    else:
        label_idx = np.array([present.index(lab) for lab in y])
        inner = LinearPolarityModel.fit(x, label_idx, sample_weight, n_classes=len(present))

    model = PolarityModel(
        kind=config.kind,
        feature_dim=x.shape[1],
        labels=tuple(LABEL_ORDER),
        inner=inner,
        classes_present=present,
    )
    predictions = model.predict_proba(x)
    predicted = [model.labels[i] for i in predictions.argmax(axis=1)]
    accuracy = sum(1 for a, b in zip(predicted, y) if a == b) / len(y)
    model.report = TrainReport(class_counts=counts, train_accuracy=accuracy)
    return model


def predict_polarity(model: PolarityModel, features: np.ndarray) -> tuple[str, np.ndarray]:
    """Argmax label plus the full distribution; ties break by label order."""
    return model.predict(features)
