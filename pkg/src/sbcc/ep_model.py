"""Two-state analytical model of decoder error propagation.

A frame of L blocks is decoded by a chain that starts in a random-error
state, where each block fails independently with probability p, and may
fall into an absorbing error-propagation state, entered with probability
q at each block; once entered, every remaining block fails.  The
closed-form block error rate, its Monte Carlo estimate, and an estimator
recovering (p, q) from simulated error traces live here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "p_enter_ep_at",
    "p_bl_given_tau",
    "p_bl",
    "ModelStats",
    "simulate_model",
    "model_traces",
    "EstimateResult",
    "estimate_pq",
]


def _check_prob(name: str, v: float) -> float:
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must be a probability in [0, 1]")
    return float(v)


def p_enter_ep_at(q: float, tau: int) -> float:
    """Probability that error propagation starts exactly at block tau
    (1-based): q * (1-q)**(tau-1)."""
    q = _check_prob("q", q)
    if tau < 1:
        raise ValueError("tau must be >= 1")
    return q * (1.0 - q) ** (tau - 1)


def p_bl_given_tau(p: float, tau: int, L: int) -> float:
    """Expected fraction of error blocks given propagation starts at tau.

    The L - tau + 1 propagated blocks all fail.  Of the tau - 1 earlier
    blocks, the one immediately before the entry point must have been
    correct (otherwise propagation would be deemed to have started
    earlier), so tau - 2 blocks fail independently with probability p.
    """
    p = _check_prob("p", p)
    if not 1 <= tau <= L:
        raise ValueError("tau must be in 1..L")
    if tau == 1:
        return 1.0
    return (p * (tau - 2) + L - tau + 1) / L


def p_bl(p: float, q: float, L: int) -> float:
    """Closed-form block error rate of the two-state model.

    Sums p_bl_given_tau over entry times weighted by their probability,
    plus the no-propagation term p * (1-q)**L.  With q = 0 this reduces
    to p exactly.
    """
    p = _check_prob("p", p)
    q = _check_prob("q", q)
    if L < 1:
        raise ValueError("L must be >= 1")
    tau = np.arange(1, L + 1)
    cond = np.where(tau == 1, 1.0, (p * (tau - 2) + L - tau + 1) / L)
    enter = q * (1.0 - q) ** (tau - 1.0)
    return float(np.dot(cond, enter) + p * (1.0 - q) ** L)


@dataclass(frozen=True)
class ModelStats:
    """Monte Carlo summary of the model; bler_sigma is the standard
    error of the BLER estimate with frames as the independent unit."""

    bler: float
    fer: float
    ep_fraction: float
    bler_sigma: float
    frames: int


def _entry_times(q: float, n: int, L: int, rng: np.random.Generator):
    """1-based propagation entry time per frame; L+1 encodes no entry."""
    if q == 0.0:
        return np.full(n, L + 1, dtype=np.int64)
    entry = rng.geometric(q, size=n)
    return np.minimum(entry, L + 1)


def simulate_model(p: float, q: float, L: int, n_frames: int,
                   rng: np.random.Generator) -> ModelStats:
    """Monte Carlo estimate of BLER, FER and entry fraction."""
    p = _check_prob("p", p)
    q = _check_prob("q", q)
    if L < 1 or n_frames < 1:
        raise ValueError("L and n_frames must be >= 1")
    entry = _entry_times(q, n_frames, L, rng)
    entered = entry <= L
    pre = np.where(entered, entry - 1, L)
    errs = rng.binomial(pre, p) + np.where(entered, L - entry + 1, 0)
    bler = errs.sum() / (n_frames * L)
    sigma = float(errs.std(ddof=1) / (L * np.sqrt(n_frames))) if n_frames > 1 else 0.0
    return ModelStats(
        bler=float(bler),
        fer=float(np.mean(errs > 0)),
        ep_fraction=float(np.mean(entered)),
        bler_sigma=sigma,
        frames=n_frames,
    )


def model_traces(p: float, q: float, L: int, n_frames: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Per-block error indicator traces, shape (n_frames, L)."""
    p = _check_prob("p", p)
    q = _check_prob("q", q)
    entry = _entry_times(q, n_frames, L, rng)
    err = rng.random((n_frames, L)) < p
    cols = np.arange(1, L + 1)
    return (err | (cols[None, :] >= entry[:, None])).astype(np.uint8)


@dataclass(frozen=True)
class EstimateResult:
    p_hat: float
    q_hat: float
    ep_entries: int
    at_risk_blocks: int
    random_errors: int
    random_blocks: int


def estimate_pq(traces: np.ndarray, min_terminal_run: int = 2) -> EstimateResult:
    """Recover (p, q) from block error traces.

    A frame is counted as having entered error propagation when its
    trailing run of error blocks has length >= min_terminal_run (a
    length-1 terminal run is indistinguishable from a random error and is
    treated as one by default).  q_hat is entries over at-risk block
    slots (one Bernoulli trial per block until entry, L per frame
    otherwise); p_hat is the error rate over blocks before entry.
    """
    tr = np.asarray(traces)
    if tr.ndim != 2:
        raise ValueError("traces must be (n_frames, L)")
    tr = (tr != 0)
    n, L = tr.shape
    rev = tr[:, ::-1]
    term = np.where(rev.all(axis=1), L, rev.argmin(axis=1))
    is_ep = term >= min_terminal_run
    tau1 = L - term + 1  # 1-based entry time of the terminal run
    at_risk = int(np.where(is_ep, tau1, L).sum())
    rand_blocks = int(np.where(is_ep, tau1 - 1, L).sum())
    rand_errors = int(tr.sum() - (term * is_ep).sum())
    return EstimateResult(
        p_hat=rand_errors / rand_blocks if rand_blocks else 0.0,
        q_hat=int(is_ep.sum()) / at_risk if at_risk else 0.0,
        ep_entries=int(is_ep.sum()),
        at_risk_blocks=at_risk,
        random_errors=rand_errors,
        random_blocks=rand_blocks,
    )
