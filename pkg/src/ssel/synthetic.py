"""Synthetic data with a known set of informative features."""
from __future__ import annotations

import numpy as np

from .dataset import DataMatrix


def planted_clusters(n_samples=150, n_informative=10, n_noise=190, n_clusters=3,
                     separation=6.0, seed=0):
    """Spherical Gaussian clusters hidden in a subset of the features.

    Cluster means are the vertices of a regular simplex with edge
    ``separation`` (in units of the unit noise standard deviation), placed
    in a random orientation inside the informative subspace. The remaining
    features are pure N(0, 1) noise. Feature order is shuffled.

    Returns
    -------
    X : DataMatrix, shape (n_informative + n_noise, n_samples)
    labels : ndarray of int, shape (n_samples,)
    informative : ndarray of int
        Sorted row indices of the informative features in ``X``.
    """
    if n_clusters > n_informative:
        raise ValueError("need at least as many informative features as clusters")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((n_informative, n_clusters)))
    means = basis * (separation / np.sqrt(2.0))

    labels = np.arange(n_samples) % n_clusters
    rng.shuffle(labels)
    d = n_informative + n_noise
    values = rng.standard_normal((d, n_samples))
    values[:n_informative] += means[:, labels]

    order = rng.permutation(d)
    values = values[order]
    informative = np.sort(np.flatnonzero(order < n_informative))
    return DataMatrix(values), labels, informative
