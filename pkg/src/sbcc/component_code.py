"""Rate-2/3 systematic recursive component code and its BCJR decoder.

The component code has two information inputs (u1, u2) and one parity
output per step, with feedback polynomial 1 + D + D^2.  Realization:

    p      = u1 ^ u2 ^ s1
    s1'    = s2 ^ p
    s2'    = u2 ^ p

which gives parity transfer functions 1/(1+D+D^2) for u1 and
(1+D^2)/(1+D+D^2) for u2.  State index is s1*2 + s2; state 0 (both
registers clear) is the reset state.

``bcjr_block`` computes exact MAP posteriors for one length-T block.  The
hot kernel works on probabilities in the linear domain with per-step
normalization, which is algebraically the same as log-MAP with the full
max* correction term but needs far fewer transcendental calls.  A max-log
variant (max* approximated by max) is available behind a flag.

LLR sign convention throughout: positive favors bit 0.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "N_STATES",
    "RESET_STATE",
    "encode_step",
    "encode_block",
    "bcjr_block",
    "uniform_state",
    "point_state",
]

N_STATES = 4
RESET_STATE = 0

# Log-weight used for "impossible" in state distributions.  exp(-800.0)
# underflows to exactly 0.0, so a point distribution is exact in the
# linear-domain kernel while every weight stays finite.
NEG_LOG = -800.0


def _build_tables():
    nxt = np.zeros((4, 4), dtype=np.int64)
    par = np.zeros((4, 4), dtype=np.int64)
    prev = np.zeros((4, 4), dtype=np.int64)
    for s in range(4):
        s1, s2 = s >> 1, s & 1
        for j in range(4):
            u1, u2 = j >> 1, j & 1
            p = u1 ^ u2 ^ s1
            ns = ((s2 ^ p) << 1) | (u2 ^ p)
            nxt[s, j] = ns
            par[s, j] = p
            prev[ns, j] = s
    return nxt, par, prev


NEXT_STATE, PARITY, PREV_STATE = _build_tables()


def encode_step(state: int, u1: int, u2: int) -> tuple[int, int]:
    """One trellis step: returns (parity_bit, next_state)."""
    j = (u1 << 1) | u2
    return int(PARITY[state, j]), int(NEXT_STATE[state, j])


@njit(cache=True)
def _encode_kernel(state, u1, u2, nxt, par, out):
    s = state
    for k in range(u1.shape[0]):
        j = (u1[k] << 1) | u2[k]
        out[k] = par[s, j]
        s = nxt[s, j]
    return s


def encode_block(state: int, u1: np.ndarray, u2: np.ndarray) -> tuple[np.ndarray, int]:
    """Encode one block of input pairs; returns (parity_bits, end_state)."""
    u1 = np.ascontiguousarray(u1, dtype=np.int64)
    u2 = np.ascontiguousarray(u2, dtype=np.int64)
    if u1.shape != u2.shape or u1.ndim != 1:
        raise ValueError("u1 and u2 must be 1-D arrays of equal length")
    out = np.empty(u1.shape[0], dtype=np.int64)
    end = _encode_kernel(int(state), u1, u2, NEXT_STATE, PARITY, out)
    return out.astype(np.uint8), int(end)


def uniform_state() -> np.ndarray:
    """Uniform state distribution (log weights, max = 0)."""
    return np.zeros(N_STATES)


def point_state(s: int) -> np.ndarray:
    """State distribution concentrated on state ``s``."""
    d = np.full(N_STATES, NEG_LOG)
    d[s] = 0.0
    return d


# ---------------------------------------------------------------------------
# BCJR kernels.
#
# The exact kernel keeps alpha/beta as probabilities normalized to sum 1
# each step.  Branch likelihoods are exp(+-l/2) factors per bit, so with
# |channel + prior| <= 2*cap every product stays comfortably inside double
# range for cap up to ~200.  Individual state probabilities may underflow
# to 0; ratios 0/x and x/0 then give +-inf posteriors, which callers clip,
# and the one genuinely undefined case 0/0 yields a neutral 0 extrinsic.
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def _bcjr_exact(lt1, lt2, ltp, alpha_in, beta_in,
                nxt, par, prev,
                want1, want2, wantp,
                ex1, ex2, exp_, alpha_out, beta_out,
                ga, A, B):
    T = lt1.shape[0]

    for k in range(T):
        e1 = np.exp(0.5 * lt1[k])
        e2 = np.exp(0.5 * lt2[k])
        ep = np.exp(0.5 * ltp[k])
        r1 = 1.0 / e1
        r2 = 1.0 / e2
        rp = 1.0 / ep
        f0 = e1 * e2   # (u1,u2) = (0,0)
        f1 = e1 * r2   # (0,1)
        f2 = r1 * e2   # (1,0)
        f3 = r1 * r2   # (1,1)
        for s in range(4):
            ga[k, s, 0] = f0 * (ep if par[s, 0] == 0 else rp)
            ga[k, s, 1] = f1 * (ep if par[s, 1] == 0 else rp)
            ga[k, s, 2] = f2 * (ep if par[s, 2] == 0 else rp)
            ga[k, s, 3] = f3 * (ep if par[s, 3] == 0 else rp)

    # forward
    tot = 0.0
    for s in range(4):
        A[0, s] = np.exp(alpha_in[s])
        tot += A[0, s]
    for s in range(4):
        A[0, s] /= tot
    for k in range(T):
        tot = 0.0
        for s2 in range(4):
            acc = 0.0
            for j in range(4):
                sp = prev[s2, j]
                acc += A[k, sp] * ga[k, sp, j]
            A[k + 1, s2] = acc
            tot += acc
        inv = 1.0 / tot
        for s2 in range(4):
            A[k + 1, s2] *= inv

    # backward
    tot = 0.0
    for s in range(4):
        B[T, s] = np.exp(beta_in[s])
        tot += B[T, s]
    for s in range(4):
        B[T, s] /= tot
    for k in range(T - 1, -1, -1):
        tot = 0.0
        for s in range(4):
            acc = 0.0
            for j in range(4):
                acc += ga[k, s, j] * B[k + 1, nxt[s, j]]
            B[k, s] = acc
            tot += acc
        inv = 1.0 / tot
        for s in range(4):
            B[k, s] *= inv

    # posteriors -> extrinsics; branch weights are shared by all three
    # bit partitions, the want flags only gate the log calls
    for k in range(T):
        n1 = 0.0
        d1 = 0.0
        n2 = 0.0
        d2 = 0.0
        np_ = 0.0
        dp = 0.0
        for s in range(4):
            a = A[k, s]
            m0 = a * ga[k, s, 0] * B[k + 1, nxt[s, 0]]
            m1 = a * ga[k, s, 1] * B[k + 1, nxt[s, 1]]
            m2 = a * ga[k, s, 2] * B[k + 1, nxt[s, 2]]
            m3 = a * ga[k, s, 3] * B[k + 1, nxt[s, 3]]
            n1 += m0 + m1
            d1 += m2 + m3
            n2 += m0 + m2
            d2 += m1 + m3
            if par[s, 0] == 0:
                np_ += m0
            else:
                dp += m0
            if par[s, 1] == 0:
                np_ += m1
            else:
                dp += m1
            if par[s, 2] == 0:
                np_ += m2
            else:
                dp += m2
            if par[s, 3] == 0:
                np_ += m3
            else:
                dp += m3
        if want1:
            if n1 == 0.0 and d1 == 0.0:
                ex1[k] = 0.0
            else:
                ex1[k] = np.log(n1 / d1) - lt1[k]
        if want2:
            if n2 == 0.0 and d2 == 0.0:
                ex2[k] = 0.0
            else:
                ex2[k] = np.log(n2 / d2) - lt2[k]
        if wantp:
            if np_ == 0.0 and dp == 0.0:
                exp_[k] = 0.0
            else:
                exp_[k] = np.log(np_ / dp) - ltp[k]

    mx = 0.0
    for s in range(4):
        if A[T, s] > mx:
            mx = A[T, s]
    for s in range(4):
        v = A[T, s] / mx
        alpha_out[s] = np.log(v) if v > 0.0 else -800.0
    mx = 0.0
    for s in range(4):
        if B[0, s] > mx:
            mx = B[0, s]
    for s in range(4):
        v = B[0, s] / mx
        beta_out[s] = np.log(v) if v > 0.0 else -800.0


@njit(cache=True, fastmath=True)
def _bcjr_maxlog(lt1, lt2, ltp, alpha_in, beta_in,
                 nxt, par, prev,
                 want1, want2, wantp,
                 ex1, ex2, exp_, alpha_out, beta_out,
                 ga, A, B):
    # Same recursions with max in place of max*; metrics stay in the log
    # domain and are normalized by their maximum each step.
    T = lt1.shape[0]
    BIG = -1.0e30

    for k in range(T):
        h1 = 0.5 * lt1[k]
        h2 = 0.5 * lt2[k]
        hp = 0.5 * ltp[k]
        for s in range(4):
            for j in range(4):
                g = h1 if j < 2 else -h1
                g += h2 if (j & 1) == 0 else -h2
                g += hp if par[s, j] == 0 else -hp
                ga[k, s, j] = g

    for s in range(4):
        A[0, s] = alpha_in[s]
    for k in range(T):
        mx = BIG
        for s2 in range(4):
            best = BIG
            for j in range(4):
                sp = prev[s2, j]
                v = A[k, sp] + ga[k, sp, j]
                if v > best:
                    best = v
            A[k + 1, s2] = best
            if best > mx:
                mx = best
        for s2 in range(4):
            A[k + 1, s2] -= mx

    for s in range(4):
        B[T, s] = beta_in[s]
    for k in range(T - 1, -1, -1):
        mx = BIG
        for s in range(4):
            best = BIG
            for j in range(4):
                v = ga[k, s, j] + B[k + 1, nxt[s, j]]
                if v > best:
                    best = v
            B[k, s] = best
            if best > mx:
                mx = best
        for s in range(4):
            B[k, s] -= mx

    for k in range(T):
        n1 = BIG
        d1 = BIG
        n2 = BIG
        d2 = BIG
        np_ = BIG
        dp = BIG
        for s in range(4):
            a = A[k, s]
            for j in range(4):
                m = a + ga[k, s, j] + B[k + 1, nxt[s, j]]
                if j < 2:
                    if m > n1:
                        n1 = m
                else:
                    if m > d1:
                        d1 = m
                if (j & 1) == 0:
                    if m > n2:
                        n2 = m
                else:
                    if m > d2:
                        d2 = m
                if par[s, j] == 0:
                    if m > np_:
                        np_ = m
                else:
                    if m > dp:
                        dp = m
        if want1:
            ex1[k] = (n1 - d1) - lt1[k]
        if want2:
            ex2[k] = (n2 - d2) - lt2[k]
        if wantp:
            exp_[k] = (np_ - dp) - ltp[k]

    mx = A[T, 0]
    for s in range(1, 4):
        if A[T, s] > mx:
            mx = A[T, s]
    for s in range(4):
        alpha_out[s] = max(A[T, s] - mx, -800.0)
    mx = B[0, 0]
    for s in range(1, 4):
        if B[0, s] > mx:
            mx = B[0, s]
    for s in range(4):
        beta_out[s] = max(B[0, s] - mx, -800.0)


def _check_llrs(name: str, arr: np.ndarray, cap: float) -> np.ndarray:
    a = np.ascontiguousarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or infinite values")
    if np.any(np.abs(a) > cap + 1e-9):
        raise ValueError(f"{name} exceeds the saturation cap {cap}")
    return a


def bcjr_block(channel_llr: np.ndarray, prior_llr: np.ndarray,
               alpha_in: np.ndarray, beta_in: np.ndarray,
               maxlog: bool = False, cap: float = 20.0):
    """MAP decode one block; returns (extrinsic_llr, alpha_out, beta_out).

    ``channel_llr`` and ``prior_llr`` are length-3T vectors laid out as
    [u1 bits | u2 bits | parity bits].  ``alpha_in`` / ``beta_in`` are
    length-4 log state distributions for the block edges (normalized so
    the max weight is 0).  The extrinsic output is the full posterior
    minus channel and prior, per position, not clipped.
    """
    ch = _check_llrs("channel_llr", channel_llr, cap)
    pr = _check_llrs("prior_llr", prior_llr, cap)
    if ch.shape != pr.shape or ch.ndim != 1 or ch.size % 3:
        raise ValueError("channel_llr and prior_llr must be equal-length 1-D arrays of size 3T")
    T = ch.size // 3
    if T == 0:
        raise ValueError("block length must be at least 1")
    a_in = np.ascontiguousarray(alpha_in, dtype=np.float64)
    b_in = np.ascontiguousarray(beta_in, dtype=np.float64)
    if a_in.shape != (N_STATES,) or b_in.shape != (N_STATES,):
        raise ValueError("alpha_in and beta_in must have shape (4,)")
    if not (np.all(np.isfinite(a_in)) and np.all(np.isfinite(b_in))):
        raise ValueError("state distributions must be finite")
    a_in = a_in - a_in.max()
    b_in = b_in - b_in.max()

    lt = ch + pr
    lt1, lt2, ltp = lt[:T].copy(), lt[T:2 * T].copy(), lt[2 * T:].copy()
    ex1 = np.empty(T)
    ex2 = np.empty(T)
    exp_ = np.empty(T)
    a_out = np.empty(N_STATES)
    b_out = np.empty(N_STATES)
    ga = np.empty((T, 4, 4))
    A = np.empty((T + 1, 4))
    B = np.empty((T + 1, 4))
    kern = _bcjr_maxlog if maxlog else _bcjr_exact
    kern(lt1, lt2, ltp, a_in, b_in, NEXT_STATE, PARITY, PREV_STATE,
         True, True, True, ex1, ex2, exp_, a_out, b_out, ga, A, B)
    return np.concatenate([ex1, ex2, exp_]), a_out, b_out
