"""Bipartite aspect-opinion graph construction and pair selection.

Edge weights combine embedding similarity with token-distance proximity:
weight = alpha * (cosine + 1) / 2 + beta * exp(-gap / proximity_scale).
One-to-one selection solves the assignment problem exactly; one-to-many
attaches each opinion to its best aspect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ValidationError
from .spanex import CandidateSpan, Interval

CARDINALITIES = ("one_to_one", "one_to_many")


@dataclass(frozen=True)
class MatchPolicy:
    edge_threshold: float = 0.4
    cardinality: str = "one_to_one"
    alpha: float = 0.7  # similarity coefficient
    beta: float = 0.3  # proximity coefficient
    proximity_scale: float = 5.0  # tokens

    def __post_init__(self):
        if self.cardinality not in CARDINALITIES:
            raise ValidationError(f"unknown cardinality {self.cardinality!r}")
        for name in ("edge_threshold", "alpha", "beta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1]")
        if abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise ValidationError("alpha + beta must equal 1")
        if self.proximity_scale < 1:
            raise ValidationError("proximity_scale must be >= 1")


@dataclass(frozen=True)
class PairGraph:
    aspects: tuple[CandidateSpan, ...]
    opinions: tuple[CandidateSpan, ...]
    weights: np.ndarray  # shape (n_aspects, n_opinions), values in [0, 1]

    def __post_init__(self):
        if self.weights.shape != (len(self.aspects), len(self.opinions)):
            raise ValidationError("weight matrix shape does not match candidate lists")


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; rejects zero vectors and dimension mismatch."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValidationError("cosine undefined for zero vectors")
    return float(np.dot(u, v) / (nu * nv))


def token_gap(a: Interval, b: Interval) -> int:
    """Token distance between nearest span endpoints; 0 when adjacent or overlapping."""
    if a[0] <= b[1] and b[0] <= a[1]:
        return 0
    if b[0] > a[1]:
        return b[0] - a[1] - 1
    return a[0] - b[1] - 1


def edge_weight(
    similarity: float, gap: int, policy: MatchPolicy
) -> float:
    """Convex mix of rescaled cosine and exponential proximity decay."""
    return policy.alpha * (similarity + 1.0) / 2.0 + policy.beta * math.exp(
        -gap / policy.proximity_scale
    )


def build_pair_graph(
    aspects: Sequence[CandidateSpan],
    opinions: Sequence[CandidateSpan],
    aspect_vectors: Sequence[np.ndarray],
    opinion_vectors: Sequence[np.ndarray],
    policy: MatchPolicy,
) -> PairGraph:
    """Weight every aspect-opinion pair; one pooled embedding per candidate."""
    if len(aspect_vectors) != len(aspects) or len(opinion_vectors) != len(opinions):
        raise ValidationError("one embedding required per candidate span")
    weights = np.zeros((len(aspects), len(opinions)))
    for i, (a, av) in enumerate(zip(aspects, aspect_vectors)):
        for j, (o, ov) in enumerate(zip(opinions, opinion_vectors)):
            sim = cosine(av, ov)
            gap = token_gap(a.interval, o.interval)
            weights[i, j] = edge_weight(sim, gap, policy)
    return PairGraph(tuple(aspects), tuple(opinions), weights)


def match_pairs(graph: PairGraph, policy: MatchPolicy) -> list[tuple[int, int]]:
    """Select aspect-opinion pairs from the graph under the match policy.

    one_to_one: maximum-total-weight matching over edges with weight >=
    edge_threshold, solved exactly via the assignment algorithm (weights are
    non-negative, so padding excluded edges with zero preserves optimality).
    one_to_many: each opinion attaches to its highest-weight aspect when that
    edge clears the threshold (ties toward the lower aspect index).

    Output is sorted by aspect index, then opinion index.
    """
    n_a, n_o = graph.weights.shape
    if n_a == 0 or n_o == 0:
        return []
    tau = policy.edge_threshold
    if policy.cardinality == "one_to_many":
        pairs = []
        for j in range(n_o):
            column = graph.weights[:, j]
            i = int(np.argmax(column))  # first (lowest) index wins ties
            if column[i] >= tau:
                pairs.append((i, j))
        return sorted(pairs)
    admissible = np.where(graph.weights >= tau, graph.weights, 0.0)
    rows, cols = linear_sum_assignment(admissible, maximize=True)
    pairs = [
        (int(i), int(j))
        for i, j in zip(rows, cols)
        if graph.weights[i, j] >= tau
    ]
    return sorted(pairs)
