"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import io
import itertools
import wave

import numpy as np
import pytest

from hmm2tc.gmm import GaussianMixture
from hmm2tc.hmm1 import Hmm1Model
from hmm2tc.hmm2 import Hmm2Model, path_log_prob2


def make_wav_bytes(samples_i16: np.ndarray, rate: int = 16000,
                   sampwidth: int = 2, channels: int = 1) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(sampwidth)
        wf.setframerate(rate)
        if sampwidth == 2:
            wf.writeframes(np.asarray(samples_i16, dtype="<i2").tobytes())
        else:
            wf.writeframes(np.asarray(samples_i16, dtype=np.uint8).tobytes())
    return buf.getvalue()


def random_gmm(rng: np.random.Generator, n_comp: int, dim: int,
               mean_scale: float = 2.0) -> GaussianMixture:
    return GaussianMixture(rng.dirichlet(np.ones(n_comp)),
                           rng.normal(0.0, mean_scale, (n_comp, dim)),
                           rng.uniform(0.5, 1.5, (n_comp, dim)))


def random_hmm1(rng: np.random.Generator, n: int, m: int, dim: int) -> Hmm1Model:
    pi = rng.dirichlet(np.ones(n))
    a = np.stack([rng.dirichlet(np.ones(n)) for _ in range(n)])
    return Hmm1Model(pi, a, [random_gmm(rng, m, dim) for _ in range(n)])


def random_hmm2(rng: np.random.Generator, n: int, m: int, dim: int) -> Hmm2Model:
    psi = rng.dirichlet(np.ones(n))
    a2 = np.stack([rng.dirichlet(np.ones(n)) for _ in range(n)])
    a3 = np.stack([[rng.dirichlet(np.ones(n)) for _ in range(n)] for _ in range(n)])
    return Hmm2Model(psi, a2, a3, [random_gmm(rng, m, dim) for _ in range(n)])


def _path_scores2(model: Hmm2Model, obs):
    """Direct per-path log probabilities (emission table cached, no lattice)."""
    mat = np.atleast_2d(getattr(obs, "frames", obs))
    t_len = mat.shape[0]
    logb = model.emission_log_probs(mat)
    with np.errstate(divide="ignore"):
        logpsi = np.log(model.psi)
        loga2 = np.log(model.a2)
        loga3 = np.log(model.a3)
    for q in itertools.product(range(model.n_states), repeat=t_len):
        lp = logpsi[q[0]] + logb[0, q[0]] + loga2[q[0], q[1]] + logb[1, q[1]]
        for t in range(2, t_len):
            lp += loga3[q[t - 2], q[t - 1], q[t]] + logb[t, q[t]]
        yield q, lp


def enumerate_loglik2(model: Hmm2Model, obs) -> float:
    """Brute-force log P(O) by summing over every state path."""
    total = -np.inf
    for _, lp in _path_scores2(model, obs):
        total = np.logaddexp(total, lp)
    return total


def enumerate_viterbi2(model: Hmm2Model, obs) -> tuple[tuple, float]:
    """Brute-force best path; first (lexicographically smallest) argmax wins."""
    best_q, best = None, -np.inf
    for q, lp in _path_scores2(model, obs):
        if lp > best:
            best_q, best = q, lp
    return best_q, best


def enumerate_loglik1(model: Hmm1Model, obs) -> float:
    mat = np.atleast_2d(getattr(obs, "frames", obs))
    t_len = mat.shape[0]
    logb = model.emission_log_probs(mat)
    with np.errstate(divide="ignore"):
        logpi, loga = np.log(model.pi), np.log(model.a)
    total = -np.inf
    for q in itertools.product(range(model.n_states), repeat=t_len):
        lp = logpi[q[0]] + logb[0, q[0]]
        for t in range(1, t_len):
            lp += loga[q[t - 1], q[t]] + logb[t, q[t]]
        total = np.logaddexp(total, lp)
    return total


def fft_cepstrum_oracle(lpc: np.ndarray, order: int, n_fft: int = 4096) -> np.ndarray:
    """Cepstrum of 1/A(z) via log-magnitude spectrum and inverse transform."""
    spectrum = np.fft.rfft(np.concatenate(([1.0], lpc)), n_fft)
    real_cep = np.fft.irfft(np.log(np.abs(spectrum)), n_fft)
    return -2.0 * real_cep[1 : order + 1]


def toeplitz_lpc_oracle(r: np.ndarray) -> np.ndarray:
    """Dense solve of the normal equations, independent of the recursion."""
    from scipy.linalg import toeplitz

    p = len(r) - 1
    return np.linalg.solve(toeplitz(r[:p]), -np.asarray(r[1 : p + 1]))
