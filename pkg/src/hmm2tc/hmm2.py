"""Second-order continuous-density HMM: extended Viterbi, forward/backward, EM.

State pairs index every lattice: a trellis cell (t, j, k) covers the
transition between times t-1 and t. All recursions run in the log domain
with log-sum-exp; impossible events carry -inf.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .config import TrainConfig, frames_of, variance_floor
from .errors import DataError, NumericError
from .gmm import GaussianMixture, WEIGHT_TOL
from .hmm1 import Hmm1Model, TOPOLOGIES, _log, _update_mixtures

log = logging.getLogger(__name__)


@dataclass
class Hmm2Model:
    psi: np.ndarray                  # (N,)  initial state probabilities
    a2: np.ndarray                   # (N, N)  first-step transition matrix
    a3: np.ndarray                   # (N, N, N)  a3[i, j, k] = P(k | j, i)
    mixtures: list[GaussianMixture]
    topology: str = "ergodic"

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=np.float64)
        self.a2 = np.asarray(self.a2, dtype=np.float64)
        self.a3 = np.asarray(self.a3, dtype=np.float64)
        n = self.psi.size
        if self.a2.shape != (n, n) or self.a3.shape != (n, n, n) or len(self.mixtures) != n:
            raise DataError("inconsistent state counts across psi, a2, a3, mixtures")
        if abs(self.psi.sum() - 1.0) > WEIGHT_TOL or np.any(self.psi < 0):
            raise DataError("psi must be a probability vector")
        if np.any(self.a2 < 0) or np.any(np.abs(self.a2.sum(axis=1) - 1.0) > WEIGHT_TOL):
            raise DataError("every a2 row must sum to 1")
        if np.any(self.a3 < 0) or np.any(np.abs(self.a3.sum(axis=2) - 1.0) > WEIGHT_TOL):
            raise DataError("every a3 (i, j) row must sum to 1")
        if self.topology not in TOPOLOGIES:
            raise DataError(f"unknown topology {self.topology!r}")
        if self.topology == "left-right":
            if np.any(np.tril(self.a2, -1) != 0):
                raise DataError("left-right topology requires upper-triangular a2")
            for j in range(n):
                if np.any(self.a3[:, j, :j] != 0):
                    raise DataError("left-right topology forbids backward a3 transitions")
        dims = {m.dim for m in self.mixtures}
        comps = {m.n_components for m in self.mixtures}
        if len(dims) != 1 or len(comps) != 1:
            raise DataError("all states must share mixture dim and component count")

    @property
    def n_states(self) -> int:
        return self.psi.size

    @property
    def n_components(self) -> int:
        return self.mixtures[0].n_components

    @property
    def dim(self) -> int:
        return self.mixtures[0].dim

    def emission_log_probs(self, obs) -> np.ndarray:
        mat = frames_of(obs)
        if mat.shape[1] != self.dim:
            raise DataError(f"observation dim {mat.shape[1]} != model dim {self.dim}")
        return np.stack([m.log_density_frames(mat) for m in self.mixtures], axis=1)


@dataclass
class Trellis2:
    """Log-domain lattice over state pairs; row s covers times (s+1, s+2), 1-based."""

    values: np.ndarray               # (T-1, N, N)
    log_likelihood: float | None = None


def lift_hmm1(model: Hmm1Model) -> Hmm2Model:
    """Embed a first-order model: a3[i, j, k] := a[j, k] for every i."""
    n = model.n_states
    return Hmm2Model(model.pi.copy(), model.a.copy(),
                     np.broadcast_to(model.a[None], (n, n, n)).copy(),
                     list(model.mixtures), model.topology)


def path_log_prob2(model: Hmm2Model, states, obs=None) -> float:
    """Log joint probability of a state path, with emissions unless obs is None."""
    states = np.asarray(states, dtype=np.intp)
    t_len = states.size
    if t_len < 2:
        raise DataError("paths must have length >= 2")
    if np.any(states < 0) or np.any(states >= model.n_states):
        raise DataError("state index out of range")
    with np.errstate(divide="ignore"):
        total = np.log(model.psi[states[0]]) + np.log(model.a2[states[0], states[1]])
        if t_len > 2:
            total += np.sum(np.log(model.a3[states[:-2], states[1:-1], states[2:]]))
    if obs is not None:
        logb = model.emission_log_probs(obs)
        if logb.shape[0] != t_len:
            raise DataError("state path and observation sequence lengths differ")
        total += np.sum(logb[np.arange(t_len), states])
    return float(total)


def _check_t(logb: np.ndarray) -> int:
    t_len = logb.shape[0]
    if t_len < 2:
        raise DataError("second-order recursions require T >= 2")
    return t_len


def forward2(model: Hmm2Model, obs) -> tuple[Trellis2, float]:
    """Extended forward lattice alpha_t(j, k) and total log-likelihood."""
    logb = model.emission_log_probs(obs)
    t_len = _check_t(logb)
    loga3 = _log(model.a3)
    la = np.empty((t_len - 1, model.n_states, model.n_states))
    la[0] = (_log(model.psi) + logb[0])[:, None] + _log(model.a2) + logb[1][None, :]
    for s in range(1, t_len - 1):
        la[s] = logsumexp(la[s - 1][:, :, None] + loga3, axis=0) + logb[s + 1][None, None, :]
    ll = float(logsumexp(la[-1]))
    return Trellis2(la, ll), ll


def backward2(model: Hmm2Model, obs) -> Trellis2:
    """Extended backward lattice beta_t(i, j); beta_T is identically 1."""
    logb = model.emission_log_probs(obs)
    t_len = _check_t(logb)
    loga3 = _log(model.a3)
    lb = np.zeros((t_len - 1, model.n_states, model.n_states))
    for s in range(t_len - 3, -1, -1):
        lb[s] = logsumexp(loga3 + (logb[s + 2] + lb[s + 1])[None, :, :], axis=2)
    return Trellis2(lb)


def viterbi2(model: Hmm2Model, obs) -> tuple[np.ndarray, float]:
    """Most likely state path and its log score (ties: lowest state index)."""
    logb = model.emission_log_probs(obs)
    t_len = _check_t(logb)
    n = model.n_states
    loga3 = _log(model.a3)
    delta = (_log(model.psi) + logb[0])[:, None] + _log(model.a2) + logb[1][None, :]
    back = np.zeros((t_len - 1, n, n), dtype=np.intp)
    for s in range(1, t_len - 1):
        cand = delta[:, :, None] + loga3  # (i, j, k)
        back[s] = np.argmax(cand, axis=0)
        delta = np.max(cand, axis=0) + logb[s + 1][None, :]
    flat = int(np.argmax(delta))
    score = float(delta.flat[flat])
    if score == -np.inf:
        raise NumericError("no admissible state path for this observation sequence")
    j, k = divmod(flat, n)
    path = [j, k]
    for s in range(t_len - 2, 0, -1):
        i = int(back[s][path[0], path[1]])
        path.insert(0, i)
    return np.asarray(path, dtype=np.intp), score


def sample_hmm2(model: Hmm2Model, t_len: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw a state path and observation sequence from the generative model."""
    if t_len < 2:
        raise DataError("sequence length must be >= 2")
    rng = np.random.default_rng(seed)
    states = np.empty(t_len, dtype=np.intp)
    cdf_psi = np.cumsum(model.psi)
    cdf_a2 = np.cumsum(model.a2, axis=1)
    cdf_a3 = np.cumsum(model.a3, axis=2)
    cdf_psi[-1] = cdf_a2[:, -1] = cdf_a3[:, :, -1] = 1.0
    u = rng.random(t_len)
    states[0] = np.searchsorted(cdf_psi, u[0], side="right")
    states[1] = np.searchsorted(cdf_a2[states[0]], u[1], side="right")
    for t in range(2, t_len):
        states[t] = np.searchsorted(cdf_a3[states[t - 2], states[t - 1]],
                                    u[t], side="right")
    cdf_w = np.stack([np.cumsum(m.weights) for m in model.mixtures])
    cdf_w[:, -1] = 1.0
    comps = np.array([np.searchsorted(cdf_w[q], v, side="right")
                      for q, v in zip(states, rng.random(t_len))])
    means = np.stack([model.mixtures[q].means[m] for q, m in zip(states, comps)])
    stds = np.stack([np.sqrt(model.mixtures[q].variances[m])
                     for q, m in zip(states, comps)])
    frames = rng.normal(means, stds)
    return states, frames


def baum_welch2(model: Hmm2Model, corpus, cfg: TrainConfig | None = None
                ) -> tuple[Hmm2Model, list[float]]:
    """EM training of the second-order model over multiple sequences.

    Expected transition counts come from eta_t(i, j, k) built out of the
    extended forward/backward lattices; pair posteriors gamma_t(j, k) drive
    the Psi/a2 updates and per-frame state occupancies for the GMM M-step.
    """
    cfg = cfg or TrainConfig()
    if not corpus:
        raise DataError("training corpus is empty")
    mats = [frames_of(o) for o in corpus]
    for mat in mats:
        if mat.shape[0] < 3:
            raise DataError("baum_welch2 requires sequences with T >= 3")
        if mat.shape[1] != model.dim:
            raise DataError("observation dim does not match the model")
    floor = variance_floor(mats, cfg)
    n = model.n_states
    trace: list[float] = []
    for _ in range(cfg.max_iterations):
        loga2 = _log(model.a2)
        loga3 = _log(model.a3)
        logpsi = _log(model.psi)
        psi_acc = np.zeros(n)
        a2_acc = np.zeros((n, n))
        a3_acc = np.zeros((n, n, n))
        occ_list, comp_list, logb_list = [], [], []
        total_ll = 0.0
        for mat in mats:
            comp_ld = [mix.component_log_density(mat) for mix in model.mixtures]
            logb = np.stack([logsumexp(cl + _log(mix.weights)[None, :], axis=1)
                             for cl, mix in zip(comp_ld, model.mixtures)], axis=1)
            t_len = logb.shape[0]
            la = np.empty((t_len - 1, n, n))
            la[0] = (logpsi + logb[0])[:, None] + loga2 + logb[1][None, :]
            for s in range(1, t_len - 1):
                la[s] = logsumexp(la[s - 1][:, :, None] + loga3, axis=0) + logb[s + 1]
            ll = float(logsumexp(la[-1]))
            lb = np.zeros((t_len - 1, n, n))
            for s in range(t_len - 3, -1, -1):
                lb[s] = logsumexp(loga3 + (logb[s + 2] + lb[s + 1])[None, :, :], axis=2)
            total_ll += ll
            gamma = np.exp(la + lb - ll)            # (T-1, N, N) pair posteriors
            # eta over (t, i, j, k) collapsed over t
            leta = (la[:-1, :, :, None] + loga3[None] +
                    logb[2:, None, None, :] + lb[1:, None, :, :] - ll)
            a3_acc += np.exp(logsumexp(leta, axis=0))
            a2_acc += gamma[0]
            psi_acc += gamma[0].sum(axis=1)
            occ = np.empty((t_len, n))
            occ[0] = gamma[0].sum(axis=1)
            occ[1:] = gamma.sum(axis=1)
            occ_list.append(occ)
            comp_list.append(comp_ld)
            logb_list.append(logb)
        trace.append(total_ll)
        # M-step
        psi_new, a2_new = model.psi, model.a2
        if not cfg.freeze_initials:
            psi_new = psi_acc / psi_acc.sum()
            a2_new = model.a2.copy()
            rows = a2_acc.sum(axis=1) > 0
            a2_new[rows] = a2_acc[rows] / a2_acc[rows].sum(axis=1, keepdims=True)
        a3_new = model.a3.copy()
        denom = a3_acc.sum(axis=2)
        pairs = denom > 0
        a3_new[pairs] = a3_acc[pairs] / denom[pairs][:, None]
        if np.any(~pairs):
            log.warning("%d (i, j) pairs had zero occupancy; kept", int(np.sum(~pairs)))
        if cfg.transition_floor > 0:
            mask = model.a3 > 0
            a3_new = np.where(mask, np.maximum(a3_new, cfg.transition_floor), a3_new)
            a3_new /= a3_new.sum(axis=2, keepdims=True)
        mixtures = _update_mixtures(model.mixtures, occ_list, mats, comp_list,
                                    logb_list, floor, cfg.mixture_weight_floor)
        model = Hmm2Model(psi_new, a2_new, a3_new, mixtures, model.topology)
        if len(trace) >= 2 and trace[-1] - trace[-2] < cfg.tol * abs(trace[-2]):
            break
    return model, trace
