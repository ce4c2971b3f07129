"""Per-point local intrinsic dimensionality (LID) estimators.

Two estimators are built in: the Hill-type maximum-likelihood estimator
over k-NN distances (mle) and the two-nearest-neighbor point estimate
(twonn). Estimates are clamped into [id_floor, id_cap] so downstream
exponentiation never sees a non-finite or zero value; degenerate tied
neighborhoods clamp to the cap.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .neighbors import NeighborGraph, _check_k

ID_FLOOR = 0.05

# Neighborhood sizes swept when profiling LID for the harness.
K_GRID = (5, 10, 15, 30, 50, 90, 150, 260, 320, 450, 560, 780)


class FeatureUnavailableError(NotImplementedError):
    """An optional, feature-gated estimator that is not built."""


@dataclass(frozen=True)
class LidProfile:
    """Per-point LID estimates from one estimator at one neighborhood size."""

    estimator: str
    k_used: int
    ids: np.ndarray       # (n,) finite positives within [id_floor, id_cap]
    log_ids: np.ndarray   # natural logs of ids

    def __post_init__(self):
        self.ids.flags.writeable = False
        self.log_ids.flags.writeable = False

    @property
    def n(self) -> int:
        return self.ids.shape[0]


def default_id_cap(n_features: int) -> float:
    """Cap estimates at 4x the embedding dimension."""
    return 4.0 * n_features


def _finish(estimator: str, k_used: int, raw: np.ndarray, id_floor: float, id_cap: float) -> LidProfile:
    ids = np.clip(np.where(np.isfinite(raw), raw, id_cap), id_floor, id_cap)
    return LidProfile(estimator=estimator, k_used=k_used, ids=ids, log_ids=np.log(ids))


def estimate_mle(
    graph: NeighborGraph,
    k: int,
    *,
    id_floor: float = ID_FLOOR,
    id_cap: float | None = None,
) -> LidProfile:
    """Hill-type MLE: id(i) = -1 / mean_{j<=k} ln(d_ij / d_ik).

    The mean runs over all k log-ratios including the zero j=k term. A
    fully tied neighborhood (all d_ij = d_ik) diverges and clamps to the cap.
    """
    if k < 2:
        raise ValueError(f"mle needs k >= 2, got {k}")
    _check_k(graph, k)
    if id_cap is None:
        id_cap = default_id_cap(graph.n_features)
    d = graph.distances[:, :k]
    with np.errstate(divide="ignore"):
        mean_log = np.log(d / d[:, k - 1 : k]).mean(axis=1)
        raw = np.where(mean_log < 0.0, -1.0 / mean_log, np.inf)
    return _finish("mle", k, raw, id_floor, id_cap)


def estimate_twonn(
    graph: NeighborGraph,
    *,
    id_floor: float = ID_FLOOR,
    id_cap: float | None = None,
) -> LidProfile:
    """Two-NN point estimate: id(i) = ln 2 / ln(d_i2 / d_i1)."""
    if graph.kmax < 2:
        raise ValueError("twonn needs kmax >= 2")
    if id_cap is None:
        id_cap = default_id_cap(graph.n_features)
    ratio = graph.distances[:, 1] / graph.distances[:, 0]
    with np.errstate(divide="ignore"):
        raw = np.where(ratio > 1.0, np.log(2.0) / np.log(ratio), np.inf)
    return _finish("twonn", 2, raw, id_floor, id_cap)


def estimate_tle(graph: NeighborGraph, dataset, k: int) -> LidProfile:
    """Tight local estimation from pairwise neighborhood distances.

    Gated off in this build: the estimator is defined by an external
    reference implementation that is not available to validate against,
    and nothing downstream requires it.
    """
    raise FeatureUnavailableError(
        "the tle estimator is not built; use 'mle' or 'twonn'"
    )


ESTIMATORS = {"mle": estimate_mle, "twonn": lambda graph, k, **kw: estimate_twonn(graph, **kw)}


def estimator_k_grid(n: int | None = None) -> list[int]:
    """The standard LID neighborhood grid, truncated to sizes <= n-1."""
    if n is None:
        return list(K_GRID)
    return [k for k in K_GRID if k <= n - 1]


def estimate_profile(estimator: str, graph: NeighborGraph, k: int, **kwargs) -> LidProfile:
    if estimator not in ESTIMATORS:
        if estimator == "tle":
            estimate_tle(graph, None, k)
        raise ValueError(f"unknown estimator {estimator!r}; choose from {sorted(ESTIMATORS)}")
    return ESTIMATORS[estimator](graph, k, **kwargs)


def write_profile_csv(profile: LidProfile, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_index", "id", "log_id"])
        for i in range(profile.n):
            writer.writerow([i, repr(float(profile.ids[i])), repr(float(profile.log_ids[i]))])
