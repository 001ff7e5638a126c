"""Sliding-window iterative decoder for the blockwise braided code.

The window holds up to ``capacity`` consecutive received blocks.  Each
block has two component trellises; their messages live in per-stream
arrays indexed [component, window slot, position]:

  * ``ch_*``  channel LLRs (fixed while a block is in the window),
  * ``pr_*``  priors fed to the next BCJR call,
  * ``ex_*``  extrinsics produced by the last BCJR call,

for the three streams u1 (information), u2 (parity input) and p (parity
output).  Channel LLRs for a block's parity inputs are the permuted
channel LLRs of the previous block's parity outputs; both trellises that
share those bits see the same channel values, and only extrinsics are
exchanged, so no evidence is counted twice.

One vertical iteration decodes both components of one block, exchanging
information-bit extrinsics through P0, I1 times.  One horizontal
iteration sweeps vertical iterations forward over the window (passing
parity-output extrinsics and forward state boundaries to the right
neighbor) and then backward (passing parity-input extrinsics and
backward state boundaries to the left neighbor); the schedule is uniform.
After up to I2 horizontal iterations the leftmost (target) block is
decided and the window shifts.

Boundary conventions: at a frame (or restart) edge the first block's
parity inputs are known zero, so their channel LLRs are +cap and the
forward state distribution is concentrated on the reset state.  After a
shift, the new leftmost block inherits the decided block's parity-output
decision LLRs (capped, permuted) in the channel slot and its final
forward state distribution.  The right edge always has a uniform
backward distribution and zero parity-output priors.  All stored
messages and decision LLRs are saturated to +-cap.  Decision ties
(LLR exactly 0) resolve to bit 0.

Decisions and block-confidence statistics are evaluated on component 1,
whose information stream is in the uninterleaved domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import component_code as cc
from .codec import PermutorSet

__all__ = ["ScheduleParams", "TargetReport", "SlidingWindowDecoder"]


@dataclass(frozen=True)
class ScheduleParams:
    """Iteration schedule and LLR handling for the window decoder."""

    i1: int = 1
    i2: int = 20
    cap: float = 20.0
    gamma: float | None = None
    maxlog: bool = False

    def __post_init__(self):
        if self.i1 < 1 or self.i2 < 1:
            raise ValueError("iteration counts must be >= 1")
        if not 0.0 < self.cap <= 200.0:
            raise ValueError("LLR cap must be in (0, 200]")
        if self.gamma is not None and not 0.0 < self.gamma < 0.5:
            raise ValueError("stopping threshold gamma must be in (0, 0.5)")


@dataclass
class TargetReport:
    """Summary of one decode_target call."""

    target_index: int
    window_size: int
    iterations: int
    stopped_early: bool
    ber_est: float
    avg_abs_llrs: np.ndarray = field(repr=False)


@njit(cache=True, fastmath=True)
def _visit(c, k, want2, wantp, maxlog,
           ch_u1, ch_u2, ch_p, pr_u1, pr_u2, pr_p, ex_u1, ex_u2, ex_p,
           alpha, beta, p0m, p0i, i1, cap,
           nxt, par, prev, ga, A, B, lt1, lt2, ltp, ao, bo):
    # One vertical iteration group for block k: component 1 then component
    # 2, I1 times, exchanging info extrinsics through P0.  Parity streams
    # are computed only when a sweep will consume them.
    T = lt1.shape[0]
    for _ in range(i1):
        for comp in range(2):
            for i in range(T):
                lt1[i] = ch_u1[comp, k, i] + pr_u1[comp, k, i]
                lt2[i] = ch_u2[comp, k, i] + pr_u2[comp, k, i]
                ltp[i] = ch_p[comp, k, i] + pr_p[comp, k, i]
            if maxlog:
                cc._bcjr_maxlog(lt1, lt2, ltp, alpha[comp, k], beta[comp, k],
                                nxt, par, prev, True, want2, wantp,
                                ex_u1[comp, k], ex_u2[comp, k], ex_p[comp, k],
                                ao[comp], bo[comp], ga, A, B)
            else:
                cc._bcjr_exact(lt1, lt2, ltp, alpha[comp, k], beta[comp, k],
                               nxt, par, prev, True, want2, wantp,
                               ex_u1[comp, k], ex_u2[comp, k], ex_p[comp, k],
                               ao[comp], bo[comp], ga, A, B)
            for i in range(T):
                v = ex_u1[comp, k, i]
                if v > cap:
                    ex_u1[comp, k, i] = cap
                elif v < -cap:
                    ex_u1[comp, k, i] = -cap
            if want2:
                for i in range(T):
                    v = ex_u2[comp, k, i]
                    if v > cap:
                        ex_u2[comp, k, i] = cap
                    elif v < -cap:
                        ex_u2[comp, k, i] = -cap
            if wantp:
                for i in range(T):
                    v = ex_p[comp, k, i]
                    if v > cap:
                        ex_p[comp, k, i] = cap
                    elif v < -cap:
                        ex_p[comp, k, i] = -cap
            if comp == 0:
                for i in range(T):
                    pr_u1[1, k, i] = ex_u1[0, k, p0m[i]]
            else:
                for i in range(T):
                    pr_u1[0, k, i] = ex_u1[1, k, p0i[i]]


@njit(cache=True, fastmath=True)
def _sweep(size, i1, cap, maxlog, full_extr,
           ch_u1, ch_u2, ch_p, pr_u1, pr_u2, pr_p, ex_u1, ex_u2, ex_p,
           alpha, beta, alpha_tgt,
           p0m, p0i, p1m, p1i, p2m, p2i,
           nxt, par, prev, ga, A, B, lt1, lt2, ltp, ao, bo):
    # One horizontal iteration: forward then backward sweep over the
    # window.  Forward visits need parity-output extrinsics (passed
    # right); backward visits need parity-input extrinsics (passed left)
    # and refresh the target's parity outputs for decision storage.
    T = lt1.shape[0]
    for k in range(size):
        _visit(0, k, False, True, maxlog,
               ch_u1, ch_u2, ch_p, pr_u1, pr_u2, pr_p, ex_u1, ex_u2, ex_p,
               alpha, beta, p0m, p0i, i1, cap,
               nxt, par, prev, ga, A, B, lt1, lt2, ltp, ao, bo)
        alpha[0, k + 1, :] = ao[0]
        alpha[1, k + 1, :] = ao[1]
        if k + 1 < size:
            for i in range(T):
                pr_u2[0, k + 1, i] = ex_p[1, k, p1m[i]]
                pr_u2[1, k + 1, i] = ex_p[0, k, p2m[i]]
    for k in range(size - 1, -1, -1):
        wantp = full_extr or k == 0
        _visit(0, k, True, wantp, maxlog,
               ch_u1, ch_u2, ch_p, pr_u1, pr_u2, pr_p, ex_u1, ex_u2, ex_p,
               alpha, beta, p0m, p0i, i1, cap,
               nxt, par, prev, ga, A, B, lt1, lt2, ltp, ao, bo)
        if k > 0:
            beta[0, k - 1, :] = bo[0]
            beta[1, k - 1, :] = bo[1]
            for i in range(T):
                pr_p[1, k - 1, i] = ex_u2[0, k, p1i[i]]
                pr_p[0, k - 1, i] = ex_u2[1, k, p2i[i]]
        else:
            alpha_tgt[0, :] = ao[0]
            alpha_tgt[1, :] = ao[1]


class SlidingWindowDecoder:
    """Streaming window decoder over consecutive received blocks.

    ``load`` starts (or restarts) the window from a known encoder reset;
    ``decode_target`` runs horizontal iterations on the current window;
    ``shift`` decides nothing itself but advances the window, storing the
    decided block's soft outputs as the new left edge.
    """

    def __init__(self, perms: PermutorSet, capacity: int, params: ScheduleParams):
        if capacity < 1:
            raise ValueError("window capacity must be >= 1")
        self.perms = perms
        self.capacity = capacity
        self.params = params
        T = perms.size
        self.T = T
        shape = (2, capacity, T)
        self.ch_u1 = np.zeros(shape)
        self.ch_u2 = np.zeros(shape)
        self.ch_p = np.zeros(shape)
        self.pr_u1 = np.zeros(shape)
        self.pr_u2 = np.zeros(shape)
        self.pr_p = np.zeros(shape)
        self.ex_u1 = np.zeros(shape)
        self.ex_u2 = np.zeros(shape)
        self.ex_p = np.zeros(shape)
        self.alpha = np.zeros((2, capacity + 1, 4))
        self.beta = np.zeros((2, capacity, 4))
        self.alpha_tgt = np.zeros((2, 4))
        self.size = 0
        self.first_index = 0
        # scratch for the kernels
        self._ga = np.empty((T, 4, 4))
        self._A = np.empty((T + 1, 4))
        self._B = np.empty((T + 1, 4))
        self._lt1 = np.empty(T)
        self._lt2 = np.empty(T)
        self._ltp = np.empty(T)
        self._ao = np.empty((2, 4))
        self._bo = np.empty((2, 4))

    # -- window construction -------------------------------------------------

    def _append(self, llrs: np.ndarray, known_zero_edge: bool = False) -> None:
        if self.size >= self.capacity:
            raise ValueError("window is full")
        llrs = np.asarray(llrs, dtype=np.float64)
        T = self.T
        if llrs.shape != (3, T):
            raise ValueError("channel LLR block must have shape (3, T)")
        k = self.size
        cap = self.params.cap
        cu, cp1, cp2 = np.clip(llrs, -cap, cap)
        self.ch_u1[0, k] = cu
        self.ch_u1[1, k] = self.perms.p0.forward(cu)
        self.ch_p[0, k] = cp1
        self.ch_p[1, k] = cp2
        if k > 0:
            self.ch_u2[0, k] = self.perms.p1.forward(self.ch_p[1, k - 1])
            self.ch_u2[1, k] = self.perms.p2.forward(self.ch_p[0, k - 1])
        elif known_zero_edge:
            self.ch_u2[0, k] = cap
            self.ch_u2[1, k] = cap
            self.alpha[0, 0] = cc.point_state(cc.RESET_STATE)
            self.alpha[1, 0] = cc.point_state(cc.RESET_STATE)
        for arr in (self.pr_u1, self.pr_u2, self.pr_p,
                    self.ex_u1, self.ex_u2, self.ex_p):
            arr[:, k] = 0.0
        self.beta[:, k] = 0.0
        self.size += 1

    def load(self, blocks, first_index: int = 0) -> None:
        """Restart the window at a known encoder reset point."""
        self.size = 0
        self.first_index = first_index
        for i, b in enumerate(blocks):
            self._append(b, known_zero_edge=(i == 0))

    def pop_right(self) -> np.ndarray:
        """Drop the rightmost block, returning its raw channel LLRs."""
        if self.size == 0:
            raise ValueError("window is empty")
        k = self.size - 1
        out = np.stack([self.ch_u1[0, k], self.ch_p[0, k], self.ch_p[1, k]])
        self.size -= 1
        return out

    def extend(self, llrs: np.ndarray) -> None:
        """Grow the window by one new block and restart its iterations.

        All priors and extrinsics (and backward boundaries) in the old
        blocks are reset to zero; channel LLRs and the inherited left
        edge are kept.
        """
        self._append(llrs)
        n = self.size
        for arr in (self.pr_u1, self.pr_u2, self.pr_p,
                    self.ex_u1, self.ex_u2, self.ex_p):
            arr[:, :n] = 0.0
        self.beta[:, :n] = 0.0

    # -- iterations ----------------------------------------------------------

    def vertical_iteration(self, k: int) -> None:
        """Run the component BCJRs of block ``k``, exchanging info extrinsics."""
        if not 0 <= k < self.size:
            raise IndexError("block index outside the window")
        p = self.params
        _visit(0, k, True, True, p.maxlog,
               self.ch_u1, self.ch_u2, self.ch_p,
               self.pr_u1, self.pr_u2, self.pr_p,
               self.ex_u1, self.ex_u2, self.ex_p,
               self.alpha, self.beta,
               self.perms.p0.map_, self.perms.p0.inv, p.i1, p.cap,
               cc.NEXT_STATE, cc.PARITY, cc.PREV_STATE,
               self._ga, self._A, self._B,
               self._lt1, self._lt2, self._ltp, self._ao, self._bo)

    def horizontal_iteration(self, full_extr: bool = False) -> None:
        """One forward-plus-backward sweep over the whole window."""
        if self.size == 0:
            raise ValueError("window is empty")
        p = self.params
        _sweep(self.size, p.i1, p.cap, p.maxlog, full_extr,
               self.ch_u1, self.ch_u2, self.ch_p,
               self.pr_u1, self.pr_u2, self.pr_p,
               self.ex_u1, self.ex_u2, self.ex_p,
               self.alpha, self.beta, self.alpha_tgt,
               self.perms.p0.map_, self.perms.p0.inv,
               self.perms.p1.map_, self.perms.p1.inv,
               self.perms.p2.map_, self.perms.p2.inv,
               cc.NEXT_STATE, cc.PARITY, cc.PREV_STATE,
               self._ga, self._A, self._B,
               self._lt1, self._lt2, self._ltp, self._ao, self._bo)

    # -- soft outputs --------------------------------------------------------

    def decision_llrs(self, k: int = 0) -> np.ndarray:
        """Capped decision LLRs (channel + prior + extrinsic) for the
        information bits of in-window block ``k``, component-1 domain."""
        cap = self.params.cap
        s = self.ch_u1[0, k] + self.pr_u1[0, k] + self.ex_u1[0, k]
        return np.clip(s, -cap, cap)

    def avg_abs_llr(self, k: int) -> float:
        """Average magnitude of block ``k``'s decision LLRs."""
        return float(np.mean(np.abs(self.decision_llrs(k))))

    def ber_est(self) -> float:
        """Soft bit-error estimate for the target block's decisions."""
        return float(np.mean(1.0 / (1.0 + np.exp(np.abs(self.decision_llrs(0))))))

    def decide(self, k: int = 0) -> np.ndarray:
        """Hard decisions for block ``k`` (LLR 0 resolves to bit 0)."""
        return (self.decision_llrs(k) < 0).astype(np.uint8)

    def decide_all(self) -> list[np.ndarray]:
        return [self.decide(k) for k in range(self.size)]

    def parity_app(self, k: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Capped decision LLRs for both parity-output blocks of block ``k``."""
        cap = self.params.cap
        a1 = np.clip(self.ch_p[0, k] + self.pr_p[0, k] + self.ex_p[0, k], -cap, cap)
        a2 = np.clip(self.ch_p[1, k] + self.pr_p[1, k] + self.ex_p[1, k], -cap, cap)
        return a1, a2

    # -- decode / shift ------------------------------------------------------

    def decode_target(self, full_extr: bool = False):
        """Run up to I2 horizontal iterations, stopping early when the
        soft bit-error estimate for the target drops to gamma or below.
        Returns (hard decisions, TargetReport)."""
        p = self.params
        iters = 0
        stopped = False
        for _ in range(p.i2):
            self.horizontal_iteration(full_extr=full_extr)
            iters += 1
            if p.gamma is not None and self.ber_est() <= p.gamma:
                stopped = True
                break
        avg = np.array([self.avg_abs_llr(k) for k in range(self.size)])
        rep = TargetReport(self.first_index, self.size, iters, stopped,
                           self.ber_est(), avg)
        return self.decide(0), rep

    def shift(self, new_llrs: np.ndarray | None = None) -> None:
        """Advance past the decided target block.

        The target's parity-output decision LLRs (permuted, capped) become
        the new left edge's parity-input channel information, and its
        final forward state distribution becomes the left boundary.
        """
        if self.size == 0:
            raise ValueError("window is empty")
        a1, a2 = self.parity_app(0)
        edge_u2_1 = self.perms.p1.forward(a2)
        edge_u2_2 = self.perms.p2.forward(a1)
        edge_alpha = self.alpha_tgt.copy()
        n = self.size
        for arr in (self.ch_u1, self.ch_u2, self.ch_p,
                    self.pr_u1, self.pr_u2, self.pr_p,
                    self.ex_u1, self.ex_u2, self.ex_p, self.beta):
            arr[:, 0:n - 1] = arr[:, 1:n]
        self.alpha[:, 0:n] = self.alpha[:, 1:n + 1]
        self.size = n - 1
        self.first_index += 1
        if new_llrs is not None:
            self._append(new_llrs)
        if self.size > 0:
            self.ch_u2[0, 0] = edge_u2_1
            self.ch_u2[1, 0] = edge_u2_2
            self.pr_u2[:, 0] = 0.0
            self.alpha[0, 0] = edge_alpha[0]
            self.alpha[1, 0] = edge_alpha[1]
