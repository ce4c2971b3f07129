import numpy as np
import pytest

from daodet.lid import LidProfile
from daodet.neighbors import NeighborGraph


def fake_graph(indices, distances, n_features=2) -> NeighborGraph:
    """Graph with hand-picked rows, for formula-level tests."""
    indices = np.asarray(indices, dtype=np.int64)
    distances = np.asarray(distances, dtype=np.float64)
    return NeighborGraph(
        indices=indices,
        distances=distances,
        kmax=indices.shape[1],
        n_features=n_features,
    )


def fake_profile(ids, estimator="mle", k_used=2) -> LidProfile:
    ids = np.asarray(ids, dtype=np.float64)
    return LidProfile(estimator=estimator, k_used=k_used, ids=ids, log_ids=np.log(ids))


@pytest.fixture
def rng():
    return np.random.default_rng(20240612)
