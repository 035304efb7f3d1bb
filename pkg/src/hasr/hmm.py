"""Discrete-observation HMM: scaled forward/backward, Viterbi, multi-sequence
Baum-Welch re-estimation, sampling, and a path-enumeration likelihood oracle.

Scaling convention: the forward variables are renormalized every frame and
log P(O|model) is recovered as the sum of the log normalizers. Tie-breaking
everywhere resolves to the lowest index. Viterbi runs in log space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    NoFeasiblePath,
    SymbolOutOfRange,
    TooLarge,
    ZeroProbabilitySequence,
)
from .vq import SymbolSequence, categorical_draw

STOCHASTIC_TOL = 1e-9


@dataclass(frozen=True)
class Hmm:
    pi: np.ndarray  # N
    a: np.ndarray   # N x N, a[i, j] = P(state j at t+1 | state i at t)
    b: np.ndarray   # N x M, b[j, k] = P(symbol k | state j)

    def __post_init__(self):
        object.__setattr__(self, "pi", np.asarray(self.pi, dtype=np.float64))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=np.float64))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=np.float64))

    @property
    def n_states(self) -> int:
        return len(self.pi)

    @property
    def n_symbols(self) -> int:
        return self.b.shape[1]


@dataclass(frozen=True)
class ForwardResult:
    alpha_hat: np.ndarray  # T x N, rows sum to 1
    scales: np.ndarray     # T positive normalizers
    log_likelihood: float


@dataclass(frozen=True)
class ViterbiResult:
    path: np.ndarray  # T state indices
    log_prob: float


@dataclass(frozen=True)
class BaumWelchConfig:
    max_iters: int = 40
    tol: float = 1e-4
    floor: float = 1e-6


def validate(h: Hmm) -> list[str]:
    """Report every violated stochasticity invariant; empty list means ok."""
    violations = []
    for name, arr in (("pi", h.pi[None, :]), ("a", h.a), ("b", h.b)):
        for i, row in enumerate(arr):
            where = f"{name} row {i}" if name != "pi" else "pi"
            for j, v in enumerate(row):
                if not (-STOCHASTIC_TOL <= v <= 1.0 + STOCHASTIC_TOL):
                    entry = f"{name}[{j}]" if name == "pi" else f"{name}[{i},{j}]"
                    violations.append(f"{entry} = {v:.6g} outside [0, 1]")
            s = row.sum()
            if abs(s - 1.0) > STOCHASTIC_TOL:
                violations.append(f"{where} sums to {s:.6g}")
    return violations


def _check_symbols(h: Hmm, obs: SymbolSequence) -> np.ndarray:
    o = np.asarray(obs.symbols, dtype=np.intp)
    if len(o) == 0:
        raise ZeroProbabilitySequence("empty observation sequence")
    if o.min() < 0 or o.max() >= h.n_symbols:
        raise SymbolOutOfRange(
            f"symbols must lie in [0, {h.n_symbols}), got range "
            f"[{o.min()}, {o.max()}]"
        )
    return o


def forward_scaled(h: Hmm, obs: SymbolSequence) -> ForwardResult:
    """Per-frame-normalized forward pass; log-likelihood = sum of log scales."""
    o = _check_symbols(h, obs)
    t_len, n = len(o), h.n_states
    alpha_hat = np.empty((t_len, n))
    scales = np.empty(t_len)

    raw = h.pi * h.b[:, o[0]]
    for t in range(t_len):
        if t > 0:
            raw = (alpha_hat[t - 1] @ h.a) * h.b[:, o[t]]
        c = raw.sum()
        if c == 0.0:
            raise ZeroProbabilitySequence(f"prefix of length {t + 1} has probability 0")
        scales[t] = c
        alpha_hat[t] = raw / c
    return ForwardResult(alpha_hat=alpha_hat, scales=scales,
                         log_likelihood=float(np.log(scales).sum()))


def backward_scaled(h: Hmm, obs: SymbolSequence, scales: np.ndarray) -> np.ndarray:
    """Backward pass using the forward pass's normalizers for the same (h, obs)."""
    o = _check_symbols(h, obs)
    t_len, n = len(o), h.n_states
    beta_hat = np.empty((t_len, n))
    beta_hat[t_len - 1] = 1.0 / scales[t_len - 1]
    for t in range(t_len - 2, -1, -1):
        beta_hat[t] = (h.a @ (h.b[:, o[t + 1]] * beta_hat[t + 1])) / scales[t]
    return beta_hat


def viterbi(h: Hmm, obs: SymbolSequence) -> ViterbiResult:
    """Most likely state path, max-product in log space; ties -> lowest index."""
    o = _check_symbols(h, obs)
    t_len, n = len(o), h.n_states
    with np.errstate(divide="ignore"):
        log_pi = np.log(h.pi)
        log_a = np.log(h.a)
        log_b = np.log(h.b)

    delta = log_pi + log_b[:, o[0]]
    if np.all(np.isneginf(delta)):
        raise NoFeasiblePath("all paths impossible at frame 0")
    psi = np.zeros((t_len, n), dtype=np.intp)
    for t in range(1, t_len):
        cand = delta[:, None] + log_a  # cand[i, j]
        psi[t] = cand.argmax(axis=0)
        delta = cand[psi[t], np.arange(n)] + log_b[:, o[t]]
        if np.all(np.isneginf(delta)):
            raise NoFeasiblePath(f"all paths impossible at frame {t}")

    path = np.empty(t_len, dtype=np.intp)
    path[t_len - 1] = int(delta.argmax())
    for t in range(t_len - 1, 0, -1):
        path[t - 1] = psi[t, path[t]]
    return ViterbiResult(path=path, log_prob=float(delta.max()))


def _gamma_xi(h: Hmm, o: np.ndarray, fwd: ForwardResult, beta_hat: np.ndarray):
    """Posterior state occupancies and transition counts from scaled variables."""
    gamma = fwd.alpha_hat * beta_hat * fwd.scales[:, None]
    # xi[t, i, j] = alpha_hat[t, i] * a[i, j] * b[j, o[t+1]] * beta_hat[t+1, j]
    xi = (fwd.alpha_hat[:-1, :, None] * h.a[None, :, :]
          * (h.b[:, o[1:]].T * beta_hat[1:])[:, None, :])
    return gamma, xi


def baum_welch(
    h0: Hmm,
    sequences: list[SymbolSequence],
    cfg: BaumWelchConfig = BaumWelchConfig(),
) -> tuple[Hmm, list[float]]:
    """Multi-sequence EM re-estimation.

    Expected counts are pooled across all sequences before re-estimating.
    After each re-estimation, structurally nonzero entries of a and b (those
    nonzero in h0) are floored and rows renormalized; structural zeros stay
    exactly zero. Returns the trained model and the log-likelihood history:
    history[k] is the total log-likelihood after k re-estimation steps, so
    history[0] is under h0.
    """
    if not sequences:
        raise ValueError("need at least one training sequence")
    obs = [_check_symbols(h0, s) for s in sequences]
    a_mask = h0.a > 0.0
    b_mask = h0.b > 0.0
    h = Hmm(pi=h0.pi.copy(), a=h0.a.copy(), b=h0.b.copy())

    history: list[float] = []
    for _ in range(cfg.max_iters):
        n, m = h.n_states, h.n_symbols
        pi_acc = np.zeros(n)
        a_num = np.zeros((n, n))
        a_den = np.zeros(n)
        b_num = np.zeros((n, m))
        b_den = np.zeros(n)
        total_ll = 0.0

        for o in obs:
            fwd = forward_scaled(h, SymbolSequence(o))
            beta_hat = backward_scaled(h, SymbolSequence(o), fwd.scales)
            gamma, xi = _gamma_xi(h, o, fwd, beta_hat)
            total_ll += fwd.log_likelihood

            pi_acc += gamma[0]
            a_num += xi.sum(axis=0)
            a_den += gamma[:-1].sum(axis=0)
            np.add.at(b_num.T, o, gamma)
            b_den += gamma.sum(axis=0)

        history.append(total_ll)

        new_pi = pi_acc / len(obs)
        new_a = h.a.copy()
        rows = a_den > 0.0
        new_a[rows] = a_num[rows] / a_den[rows, None]
        new_b = h.b.copy()
        rows = b_den > 0.0
        new_b[rows] = b_num[rows] / b_den[rows, None]

        new_a = _floor_and_renormalize(new_a, a_mask, cfg.floor)
        new_b = _floor_and_renormalize(new_b, b_mask, cfg.floor)
        h = Hmm(pi=new_pi, a=new_a, b=new_b)

        if len(history) >= 2 and history[-1] - history[-2] < cfg.tol:
            break

    # close the history with the returned model's likelihood
    total_ll = sum(forward_scaled(h, SymbolSequence(o)).log_likelihood for o in obs)
    history.append(total_ll)
    return h, history


def _floor_and_renormalize(mat: np.ndarray, mask: np.ndarray, floor: float) -> np.ndarray:
    out = np.where(mask, np.maximum(mat, floor), 0.0)
    sums = out.sum(axis=1, keepdims=True)
    nonzero = sums[:, 0] > 0.0
    out[nonzero] /= sums[nonzero]
    return out


def sample(h: Hmm, t_len: int, seed: int) -> SymbolSequence:
    """Generate a symbol sequence by walking the model with a seeded PCG64."""
    if t_len < 1:
        raise ValueError(f"t_len must be >= 1, got {t_len}")
    rng = np.random.Generator(np.random.PCG64(seed))
    symbols = np.empty(t_len, dtype=np.intp)
    state = categorical_draw(h.pi, rng.random())
    symbols[0] = categorical_draw(h.b[state], rng.random())
    for t in range(1, t_len):
        state = categorical_draw(h.a[state], rng.random())
        symbols[t] = categorical_draw(h.b[state], rng.random())
    return SymbolSequence(symbols=symbols)


def brute_force_likelihood(h: Hmm, obs: SymbolSequence) -> float:
    """P(O|model) by explicit enumeration over all N^T state paths."""
    o = _check_symbols(h, obs)
    t_len, n = len(o), h.n_states
    if n ** t_len > 10 ** 6:
        raise TooLarge(f"{n}^{t_len} paths exceed the enumeration guard")
    total = 0.0
    for path in itertools.product(range(n), repeat=t_len):
        p = h.pi[path[0]] * h.b[path[0], o[0]]
        for t in range(1, t_len):
            p *= h.a[path[t - 1], path[t]] * h.b[path[t], o[t]]
        total += p
    return total
