"""Flat-start initialization: linear segmentation plus per-state k-means."""

from __future__ import annotations

import numpy as np

from .config import TrainConfig, frames_of, variance_floor
from .errors import DataError
from .gmm import GaussianMixture
from .hmm1 import Hmm1Model
from .hmm2 import Hmm2Model


def _kmeans(data: np.ndarray, k: int, rng: np.random.Generator,
            n_iter: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Plain Lloyd iterations with seeded random-frame init; returns (centers, labels)."""
    n = data.shape[0]
    centers = data[rng.choice(n, size=k, replace=False)].copy()
    labels = np.zeros(n, dtype=np.intp)
    for _ in range(n_iter):
        dist = np.sum((data[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = np.argmin(dist, axis=1)
        for m in range(k):
            sel = labels == m
            if not np.any(sel):
                centers[m] = data[rng.integers(n)]
            else:
                centers[m] = data[sel].mean(axis=0)
    return centers, labels


def _state_mixtures(mats, n_states: int, n_comp: int, rng: np.random.Generator,
                    floor: np.ndarray) -> list[GaussianMixture]:
    pools: list[list[np.ndarray]] = [[] for _ in range(n_states)]
    for mat in mats:
        t_len = mat.shape[0]
        assign = np.minimum((np.arange(t_len) * n_states) // t_len, n_states - 1)
        for j in range(n_states):
            pools[j].append(mat[assign == j])
    mixtures = []
    for j in range(n_states):
        data = np.concatenate(pools[j], axis=0)
        if data.shape[0] < n_comp:
            raise DataError("not enough frames for the requested state/mixture counts")
        centers, labels = _kmeans(data, n_comp, rng)
        weights = np.zeros(n_comp)
        variances = np.empty_like(centers)
        for m in range(n_comp):
            sel = labels == m
            weights[m] = max(int(np.sum(sel)), 1)
            scatter = data[sel] - centers[m] if np.any(sel) else np.zeros((1, data.shape[1]))
            variances[m] = np.maximum((scatter ** 2).mean(axis=0), floor)
        weights /= weights.sum()
        mixtures.append(GaussianMixture(weights, centers, variances))
    return mixtures


def _uniform_rows(mask: np.ndarray) -> np.ndarray:
    out = mask.astype(np.float64)
    return out / out.sum(axis=-1, keepdims=True)


def init_hmm2(corpus, n_states: int, n_comp: int, topology: str = "ergodic",
              seed: int = 0, cfg: TrainConfig | None = None) -> Hmm2Model:
    """Uniform topology-allowed transitions, k-means emission flat start."""
    cfg = cfg or TrainConfig()
    if not corpus:
        raise DataError("corpus is empty")
    if n_states < 1 or n_comp < 1:
        raise DataError("state and mixture counts must be >= 1")
    mats = [frames_of(o) for o in corpus]
    if sum(m.shape[0] for m in mats) < n_states * n_comp:
        raise DataError("fewer total frames than states x mixtures")
    rng = np.random.default_rng(seed)
    floor = variance_floor(mats, cfg)
    mixtures = _state_mixtures(mats, n_states, n_comp, rng, floor)
    psi = np.full(n_states, 1.0 / n_states)
    if topology == "left-right":
        a2 = _uniform_rows(np.triu(np.ones((n_states, n_states))))
        mask3 = np.zeros((n_states, n_states, n_states))
        for j in range(n_states):
            mask3[:, j, j:] = 1.0
        a3 = _uniform_rows(mask3)
    else:
        a2 = np.full((n_states, n_states), 1.0 / n_states)
        a3 = np.full((n_states, n_states, n_states), 1.0 / n_states)
    return Hmm2Model(psi, a2, a3, mixtures, topology)


def init_hmm1(corpus, n_states: int, n_comp: int, topology: str = "ergodic",
              seed: int = 0, cfg: TrainConfig | None = None) -> Hmm1Model:
    cfg = cfg or TrainConfig()
    if not corpus:
        raise DataError("corpus is empty")
    if n_states < 1 or n_comp < 1:
        raise DataError("state and mixture counts must be >= 1")
    mats = [frames_of(o) for o in corpus]
    if sum(m.shape[0] for m in mats) < n_states * n_comp:
        raise DataError("fewer total frames than states x mixtures")
    rng = np.random.default_rng(seed)
    floor = variance_floor(mats, cfg)
    mixtures = _state_mixtures(mats, n_states, n_comp, rng, floor)
    pi = np.full(n_states, 1.0 / n_states)
    if topology == "left-right":
        a = _uniform_rows(np.triu(np.ones((n_states, n_states))))
    else:
        a = np.full((n_states, n_states), 1.0 / n_states)
    return Hmm1Model(pi, a, mixtures, topology)
