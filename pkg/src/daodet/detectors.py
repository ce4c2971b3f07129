"""Outlier scorers: kNN distance, LOF, Simplified LOF, and DAO.

All four consume a shared NeighborGraph; higher scores mean more outlying.
DAO generalizes SLOF by raising each kdist ratio to the estimated LID of
the neighbor, and reduces to SLOF exactly when every LID equals 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lid import LidProfile
from .neighbors import NeighborGraph, _check_k, kdist_column

# |id * ln(ratio)| is clipped here so extreme neighborhoods cannot push
# exp() outside the finite positive range.
_EXP_CLIP = 700.0

DETECTORS = ("knn", "lof", "slof", "dao")


@dataclass(frozen=True)
class ScoreVector:
    """Per-point outlier scores from one detector at one neighborhood size."""

    detector: str
    k: int
    scores: np.ndarray
    lid_estimator: str | None = None

    def __post_init__(self):
        self.scores.flags.writeable = False

    @property
    def n(self) -> int:
        return self.scores.shape[0]


def score_knn(graph: NeighborGraph, k: int) -> ScoreVector:
    """Score each point by the distance to its k-th nearest neighbor."""
    _check_k(graph, k)
    return ScoreVector("knn", k, kdist_column(graph, k).copy())


def score_slof(graph: NeighborGraph, k: int) -> ScoreVector:
    """Simplified LOF: mean over neighbors o of kdist(q) / kdist(o)."""
    _check_k(graph, k)
    kd = kdist_column(graph, k)
    nb = graph.indices[:, :k]
    scores = (kd[:, None] / kd[nb]).mean(axis=1)
    return ScoreVector("slof", k, scores)


def score_lof(graph: NeighborGraph, k: int) -> ScoreVector:
    """Local Outlier Factor.

    reach(p <- s) = max(kdist(s), d(p, s)); lrd(p) is the inverse mean
    reachability over NN_k(p); the score is the mean lrd ratio of the
    neighbors to the query.
    """
    _check_k(graph, k)
    kd = kdist_column(graph, k)
    nb, nd = graph.neighborhoods(k)
    reach = np.maximum(kd[nb], nd)
    lrd = k / reach.sum(axis=1)
    scores = lrd[nb].mean(axis=1) / lrd
    return ScoreVector("lof", k, scores)


def score_dao(graph: NeighborGraph, k: int, lids: LidProfile) -> ScoreVector:
    """Dimensionality-aware outlierness.

    score(q) = mean over neighbors o of (kdist(q) / kdist(o)) ** id(o),
    with the exponent taken at the neighbor. Computed as exp(id * ln ratio)
    with the product clipped to keep every term finite and positive.
    """
    _check_k(graph, k)
    if lids.n != graph.n:
        raise ValueError(f"lid profile length {lids.n} does not match n={graph.n}")
    kd = kdist_column(graph, k)
    nb = graph.indices[:, :k]
    log_ratio = np.log(kd)[:, None] - np.log(kd)[nb]
    terms = np.exp(np.clip(lids.ids[nb] * log_ratio, -_EXP_CLIP, _EXP_CLIP))
    return ScoreVector("dao", k, terms.mean(axis=1), lid_estimator=lids.estimator)


SCORERS = {"knn": score_knn, "lof": score_lof, "slof": score_slof}


def write_scores_csv(sv: ScoreVector, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_index", "score"])
        for i in range(sv.n):
            writer.writerow([i, repr(float(sv.scores[i]))])
