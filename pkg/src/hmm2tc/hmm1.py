"""First-order continuous-density HMM baseline (log-domain throughout)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .config import TrainConfig, frames_of, variance_floor
from .errors import DataError, NumericError
from .gmm import GaussianMixture, WEIGHT_TOL

log = logging.getLogger(__name__)

TOPOLOGIES = ("ergodic", "left-right")


def _log(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(p)


@dataclass
class Hmm1Model:
    pi: np.ndarray                  # (N,)
    a: np.ndarray                   # (N, N)
    mixtures: list[GaussianMixture]  # length N
    topology: str = "ergodic"

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=np.float64)
        self.a = np.asarray(self.a, dtype=np.float64)
        n = self.pi.size
        if self.a.shape != (n, n) or len(self.mixtures) != n:
            raise DataError("inconsistent state counts across pi, a, mixtures")
        if abs(self.pi.sum() - 1.0) > WEIGHT_TOL or np.any(self.pi < 0):
            raise DataError("pi must be a probability vector")
        if np.any(self.a < 0) or np.any(np.abs(self.a.sum(axis=1) - 1.0) > WEIGHT_TOL):
            raise DataError("every transition row must sum to 1")
        if self.topology not in TOPOLOGIES:
            raise DataError(f"unknown topology {self.topology!r}")
        if self.topology == "left-right" and np.any(np.tril(self.a, -1) != 0):
            raise DataError("left-right topology requires an upper-triangular transition matrix")
        dims = {m.dim for m in self.mixtures}
        comps = {m.n_components for m in self.mixtures}
        if len(dims) != 1 or len(comps) != 1:
            raise DataError("all states must share mixture dim and component count")

    @property
    def n_states(self) -> int:
        return self.pi.size

    @property
    def n_components(self) -> int:
        return self.mixtures[0].n_components

    @property
    def dim(self) -> int:
        return self.mixtures[0].dim

    def emission_log_probs(self, obs) -> np.ndarray:
        """(T, N) matrix of log b_j(O_t)."""
        mat = frames_of(obs)
        return np.stack([m.log_density_frames(mat) for m in self.mixtures], axis=1)


def forward1(model: Hmm1Model, obs) -> tuple[np.ndarray, float]:
    """Log-domain forward lattice (T, N) and total log-likelihood."""
    logb = model.emission_log_probs(obs)
    t_len = logb.shape[0]
    la = np.empty_like(logb)
    la[0] = _log(model.pi) + logb[0]
    loga = _log(model.a)
    for t in range(1, t_len):
        la[t] = logsumexp(la[t - 1][:, None] + loga, axis=0) + logb[t]
    return la, float(logsumexp(la[-1]))


def viterbi1(model: Hmm1Model, obs) -> tuple[np.ndarray, float]:
    logb = model.emission_log_probs(obs)
    t_len, n = logb.shape
    loga = _log(model.a)
    delta = _log(model.pi) + logb[0]
    back = np.zeros((t_len, n), dtype=np.intp)
    for t in range(1, t_len):
        cand = delta[:, None] + loga
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(n)] + logb[t]
    best = int(np.argmax(delta))
    score = float(delta[best])
    if score == -np.inf:
        raise NumericError("no admissible state path for this observation sequence")
    path = np.empty(t_len, dtype=np.intp)
    path[-1] = best
    for t in range(t_len - 1, 0, -1):
        path[t - 1] = back[t][path[t]]
    return path, score


def backward1(model: Hmm1Model, obs) -> np.ndarray:
    logb = model.emission_log_probs(obs)
    t_len, n = logb.shape
    loga = _log(model.a)
    lb = np.zeros((t_len, n))
    for t in range(t_len - 2, -1, -1):
        lb[t] = logsumexp(loga + (logb[t + 1] + lb[t + 1])[None, :], axis=1)
    return lb


def sample_hmm1(model: Hmm1Model, t_len: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if t_len < 1:
        raise DataError("sequence length must be >= 1")
    rng = np.random.default_rng(seed)
    states = np.empty(t_len, dtype=np.intp)
    cdf_pi = np.cumsum(model.pi)
    cdf_a = np.cumsum(model.a, axis=1)
    cdf_pi[-1] = cdf_a[:, -1] = 1.0
    u = rng.random(t_len)
    states[0] = np.searchsorted(cdf_pi, u[0], side="right")
    for t in range(1, t_len):
        states[t] = np.searchsorted(cdf_a[states[t - 1]], u[t], side="right")
    cdf_w = np.stack([np.cumsum(m.weights) for m in model.mixtures])
    cdf_w[:, -1] = 1.0
    comps = np.array([np.searchsorted(cdf_w[q], v, side="right")
                      for q, v in zip(states, rng.random(t_len))])
    means = np.stack([model.mixtures[q].means[m] for q, m in zip(states, comps)])
    stds = np.stack([np.sqrt(model.mixtures[q].variances[m])
                     for q, m in zip(states, comps)])
    frames = rng.normal(means, stds)
    return states, frames


def _update_mixtures(mixtures, occ, corpus_mats, comp_logdens, logb_list, floor,
                     weight_floor):
    """Shared GMM M-step given per-frame state occupancies.

    occ: list of (T, N) occupancy arrays, one per sequence. Returns new
    mixtures; zero-occupancy states or components keep their parameters.
    """
    n = len(mixtures)
    m_comp = mixtures[0].n_components
    d = mixtures[0].dim
    w_acc = np.zeros((n, m_comp))
    mean_acc = np.zeros((n, m_comp, d))
    sq_acc = np.zeros((n, m_comp, d))
    for mat, occ_s, comp_ld, logb in zip(corpus_mats, occ, comp_logdens, logb_list):
        for j in range(n):
            with np.errstate(divide="ignore"):
                logw = np.log(mixtures[j].weights)
            resp = np.exp(comp_ld[j] + logw[None, :] - logb[:, j][:, None])  # (T, M)
            r = occ_s[:, j][:, None] * resp
            w_acc[j] += r.sum(axis=0)
            mean_acc[j] += r.T @ mat
            sq_acc[j] += r.T @ (mat * mat)
    new = []
    for j in range(n):
        tot = w_acc[j].sum()
        if tot <= 1e-300:
            log.warning("state %d has zero occupancy; keeping previous mixture", j)
            new.append(mixtures[j])
            continue
        weights = w_acc[j] / tot
        means = mixtures[j].means.copy()
        variances = mixtures[j].variances.copy()
        for m in range(m_comp):
            if w_acc[j, m] <= 1e-300:
                log.warning("state %d component %d has zero occupancy; kept", j, m)
                continue
            means[m] = mean_acc[j, m] / w_acc[j, m]
            variances[m] = np.maximum(sq_acc[j, m] / w_acc[j, m] - means[m] ** 2, floor)
        weights = np.maximum(weights, weight_floor)
        weights /= weights.sum()
        new.append(GaussianMixture(weights, means, variances))
    return new


def baum_welch1(model: Hmm1Model, corpus, cfg: TrainConfig | None = None
                ) -> tuple[Hmm1Model, list[float]]:
    """EM training over multiple sequences; returns (model, log-likelihood trace)."""
    cfg = cfg or TrainConfig()
    if not corpus:
        raise DataError("training corpus is empty")
    mats = [frames_of(o) for o in corpus]
    for mat in mats:
        if mat.shape[0] < 2:
            raise DataError("baum_welch1 requires sequences with T >= 2")
        if mat.shape[1] != model.dim:
            raise DataError("observation dim does not match the model")
    floor = variance_floor(mats, cfg)
    n = model.n_states
    allowed = np.triu(np.ones((n, n))) if model.topology == "left-right" else np.ones((n, n))
    trace: list[float] = []
    for _ in range(cfg.max_iterations):
        loga = _log(model.a)
        pi_acc = np.zeros(n)
        xi_acc = np.zeros((n, n))
        occ_list, comp_list, logb_list = [], [], []
        total_ll = 0.0
        for mat in mats:
            comp_ld = [mix.component_log_density(mat) for mix in model.mixtures]
            logb = np.stack([logsumexp(cl + _log(mix.weights)[None, :], axis=1)
                             for cl, mix in zip(comp_ld, model.mixtures)], axis=1)
            t_len = mat.shape[0]
            la = np.empty_like(logb)
            la[0] = _log(model.pi) + logb[0]
            for t in range(1, t_len):
                la[t] = logsumexp(la[t - 1][:, None] + loga, axis=0) + logb[t]
            ll = float(logsumexp(la[-1]))
            lb = np.zeros_like(logb)
            for t in range(t_len - 2, -1, -1):
                lb[t] = logsumexp(loga + (logb[t + 1] + lb[t + 1])[None, :], axis=1)
            total_ll += ll
            gamma = np.exp(la + lb - ll)  # (T, N)
            # xi_t(i, j) summed over t
            lx = la[:-1, :, None] + loga[None, :, :] + (logb[1:] + lb[1:])[:, None, :] - ll
            xi_acc += np.exp(logsumexp(lx, axis=0))
            pi_acc += gamma[0]
            occ_list.append(gamma)
            comp_list.append(comp_ld)
            logb_list.append(logb)
        trace.append(total_ll)
        # M-step
        if not cfg.freeze_initials:
            pi_new = pi_acc / pi_acc.sum()
        else:
            pi_new = model.pi
        a_new = model.a.copy()
        denom = xi_acc.sum(axis=1)
        rows = denom > 0
        a_new[rows] = xi_acc[rows] / denom[rows, None]
        if cfg.transition_floor > 0:
            a_new = np.maximum(a_new, cfg.transition_floor * allowed)
            a_new /= a_new.sum(axis=1, keepdims=True)
        mixtures = _update_mixtures(model.mixtures, occ_list, mats, comp_list,
                                    logb_list, floor, cfg.mixture_weight_floor)
        model = Hmm1Model(pi_new, a_new, mixtures, model.topology)
        if len(trace) >= 2 and trace[-1] - trace[-2] < cfg.tol * abs(trace[-2]):
            break
    return model, trace
