"""Slow reference implementations used to check the fast ones.

Everything here trades speed for obviousness: plain loops, explicit
probability sums, no shared code with the package internals beyond the
encoder state tables (which are themselves pinned by hand traces).
"""

import itertools
import math

import numpy as np

from sbcc.component_code import N_STATES, encode_step


def bit_weight(bit: int, llr: float) -> float:
    # weight convention: positive llr favors bit 0
    return math.exp(0.5 * llr) if bit == 0 else math.exp(-0.5 * llr)


def enumerate_posteriors(lt1, lt2, ltp, alpha_log, beta_log):
    """Exact posterior LLRs by summing over every input pair sequence.

    alpha_log/beta_log are log-domain boundary weights over the 4 states.
    Returns (post_u1, post_u2, post_p) arrays of length T where
    post = log P(bit=0 | everything) / P(bit=1 | everything).
    """
    lt1 = np.asarray(lt1, dtype=float)
    lt2 = np.asarray(lt2, dtype=float)
    ltp = np.asarray(ltp, dtype=float)
    T = lt1.size
    num = np.zeros((3, T))
    den = np.zeros((3, T))
    for s0 in range(N_STATES):
        w0 = math.exp(alpha_log[s0])
        if w0 == 0.0:
            continue
        for seq in itertools.product(range(4), repeat=T):
            s = s0
            w = w0
            parities = []
            for t, pair in enumerate(seq):
                u1, u2 = pair >> 1, pair & 1
                p, s = encode_step(s, u1, u2)
                parities.append(p)
                w *= (bit_weight(u1, lt1[t]) * bit_weight(u2, lt2[t])
                      * bit_weight(p, ltp[t]))
            w *= math.exp(beta_log[s])
            for t, pair in enumerate(seq):
                u1, u2 = pair >> 1, pair & 1
                for row, bit in ((0, u1), (1, u2), (2, parities[t])):
                    if bit == 0:
                        num[row, t] += w
                    else:
                        den[row, t] += w
    with np.errstate(divide="ignore"):
        return tuple(np.log(num[r]) - np.log(den[r]) for r in range(3))


def gf2_div_stream(numer, denom, n):
    """First n coefficients of numer(D)/denom(D) over GF(2).

    Polynomials are lists of 0/1 coefficients in increasing powers of D;
    denom[0] must be 1.  Standard long division: each output coefficient
    is the current remainder's constant term, then the shifted denominator
    is subtracted (xor).
    """
    assert denom[0] == 1
    rem = list(numer) + [0] * n
    out = []
    for _ in range(n):
        c = rem[0]
        out.append(c)
        if c:
            for i, d in enumerate(denom):
                rem[i] ^= d
        rem = rem[1:] + [0]
    return out
