"""Error-propagation countermeasures wrapped around the window decoder.

Five operating modes beyond plain decoding:

  * window extension ("winext"): when, after I2 horizontal iterations,
    any of the first tau in-window blocks has average decision-LLR
    magnitude below theta, grow the window by one new block (up to w_max)
    and restart its iterations; the window returns to w_init on shift.
  * resynchronization ("resync"): after N_r consecutive targets below
    theta, the transmitter resets to the zero superstate; the decoder
    decides every in-window block from current LLRs and restarts on the
    next w fresh blocks with a known-zero left edge.
  * retransmission ("retx"): after N'_r consecutive failures the
    transmitter re-encodes the N'_r failed blocks plus the w - 1 blocks
    remaining in the window from the zero superstate and resends them
    (N'_r + w - 1 blocks); the decoder discards everything it had for
    those blocks and starts over at the first failed block.
  * "winext+resync" and "winext+retx" try extension first; the failure
    counter then runs on targets decided after the window has been reset
    to w_init.

Failure tests use strict comparison: a block at exactly theta is not
failed.  Feedback is ideal (instant, error-free).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .channel import FeedbackEvent

__all__ = [
    "MitigationConfig",
    "FrameResult",
    "MitigationRunner",
    "check_extension",
    "check_failed",
    "throughput",
]

_MODES = ("none", "winext", "resync", "winext+resync", "retx", "winext+retx")


@dataclass(frozen=True)
class MitigationConfig:
    """Mode selection and thresholds for the countermeasures."""

    mode: str = "none"
    w_init: int = 3
    w_max: int | None = None
    tau: int | None = None
    theta: float = 10.0
    n_r: int | None = None
    n_r_prime: int | None = None

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown mitigation mode {self.mode!r}")
        if self.w_init < 1:
            raise ValueError("w_init must be >= 1")
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.uses_winext:
            w_max = self.w_max if self.w_max is not None else self.w_init
            if w_max < self.w_init:
                raise ValueError("w_max must be at least w_init")
            object.__setattr__(self, "w_max", w_max)
        tau = self.tau if self.tau is not None else math.ceil(self.w_init / 2)
        if not 1 <= tau <= self.w_init:
            raise ValueError("tau must be in 1..w_init")
        object.__setattr__(self, "tau", tau)
        if self.uses_resync and (self.n_r is None or self.n_r < 1):
            raise ValueError("resync modes need n_r >= 1")
        if self.uses_retx and (self.n_r_prime is None or self.n_r_prime < 1):
            raise ValueError("retransmission modes need n_r_prime >= 1")

    @property
    def uses_winext(self) -> bool:
        return self.mode in ("winext", "winext+resync", "winext+retx")

    @property
    def uses_resync(self) -> bool:
        return self.mode in ("resync", "winext+resync")

    @property
    def uses_retx(self) -> bool:
        return self.mode in ("retx", "winext+retx")

    @property
    def capacity(self) -> int:
        """Window capacity the decoder must be built with."""
        return self.w_max if self.uses_winext else self.w_init


def check_extension(avg_abs_llrs: np.ndarray, tau: int, theta: float) -> bool:
    """True when any of the first tau blocks falls below theta."""
    head = np.asarray(avg_abs_llrs)[:tau]
    return bool(np.any(head < theta))

def check_failed(target_avg_abs_llr: float, theta: float) -> bool:
    """True when the decided target falls below theta."""
    return target_avg_abs_llr < theta


def throughput(T: int, L: int, rate: float, s_r_mean: float,
               n_r_prime: int | None, w: int) -> float:
    """Effective information rate with retransmission overhead.

    Each retransmission event resends n_r_prime + w - 1 blocks, so with
    an average of s_r_mean events per L-block frame the throughput is
    T*L / ((T/rate) * (L + s_r_mean*(n_r_prime + w - 1))).
    """
    if s_r_mean == 0.0:
        return rate
    extra = s_r_mean * ((n_r_prime or 0) + w - 1)
    return T * L / ((T / rate) * (L + extra))


@dataclass
class FrameResult:
    """Decisions and bookkeeping from one decoded frame."""

    decisions: np.ndarray
    iterations: list[int] = field(default_factory=list)
    window_sizes: list[int] = field(default_factory=list)
    events: list[FeedbackEvent] = field(default_factory=list)
    tx_blocks: int = 0
    retx_blocks: int = 0
    wasted_blocks: int = 0
    extensions: int = 0
    stopped_targets: int = 0


class _Transmitter:
    """Streams encoded blocks through the channel on demand."""

    def __init__(self, encoder, info, transmit_fn):
        self.encoder = encoder
        self.info = info
        self.transmit_fn = transmit_fn
        self.next_idx = 0
        self.sent = 0
        self.trace = {0: encoder.superstate}

    def send(self):
        idx = self.next_idx
        blk = self.encoder.encode_next(self.info[idx])
        self.next_idx += 1
        self.sent += 1
        self.trace[self.next_idx] = self.encoder.superstate
        return idx, self.transmit_fn(blk)

    def reset_to(self, idx: int) -> None:
        """Ideal feedback: reset the chain and continue from block idx."""
        self.encoder.reset()
        self.next_idx = idx
        self.trace[idx] = self.encoder.superstate


class MitigationRunner:
    """Drives transmitter, channel and window decoder over one frame."""

    def __init__(self, decoder, encoder, transmit_fn, info_blocks,
                 config: MitigationConfig, collector=None):
        self.dec = decoder
        self.cfg = config
        self.info = np.asarray(info_blocks, dtype=np.uint8)
        if self.info.ndim != 2:
            raise ValueError("info_blocks must be (L, T)")
        self.L = self.info.shape[0]
        self.tx = _Transmitter(encoder, self.info, transmit_fn)
        self.collector = collector
        self.pending: deque = deque()
        if getattr(decoder, "capacity", config.capacity) < config.capacity:
            raise ValueError("decoder window capacity is too small for this mode")

    # -- block supply --------------------------------------------------------

    def _have_next(self) -> bool:
        return bool(self.pending) or self.tx.next_idx < self.L

    def _next_block(self):
        if self.pending:
            return self.pending.popleft()[1]
        _, llr = self.tx.send()
        return llr

    def _drop_pending(self) -> None:
        self.res.wasted_blocks += len(self.pending)
        self.pending.clear()

    def _fill(self, t: int, want: int) -> list:
        return [self._next_block() for _ in range(min(want, self.L - t))]

    # -- main loop -----------------------------------------------------------

    def run(self) -> FrameResult:
        cfg = self.cfg
        dec = self.dec
        L = self.L
        self.res = res = FrameResult(np.zeros_like(self.info))
        if L == 0:
            return res
        dec.load(self._fill(0, cfg.w_init), first_index=0)
        t = 0
        failures = 0
        while t < L:
            rep = self._decode_with_extension()
            if cfg.uses_winext:
                self._shrink_to(cfg.w_init, t)
            res.iterations.append(rep.iterations)
            res.window_sizes.append(rep.window_size)
            if rep.stopped_early:
                res.stopped_targets += 1
            if cfg.uses_resync or cfg.uses_retx:
                if check_failed(rep.avg_abs_llrs[0], cfg.theta):
                    failures += 1
                else:
                    failures = 0
                limit = cfg.n_r if cfg.uses_resync else cfg.n_r_prime
                if failures == limit:
                    failures = 0
                    if cfg.uses_resync:
                        t = self._do_resync(t)
                    else:
                        t = self._do_retransmit(t)
                    continue
            self._record(t, 0)
            res.decisions[t] = dec.decide(0)
            nxt = self._next_block() if t + dec.size < L else None
            dec.shift(nxt)
            t += 1
        res.tx_blocks = self.tx.sent
        return res

    def _decode_with_extension(self):
        cfg = self.cfg
        dec = self.dec
        full = self.collector is not None
        total_iters = 0
        while True:
            _, rep = dec.decode_target(full_extr=full)
            total_iters += rep.iterations
            rep.iterations = total_iters
            if not cfg.uses_winext or rep.stopped_early:
                return rep
            if not check_extension(rep.avg_abs_llrs, cfg.tau, cfg.theta):
                return rep
            if dec.size >= cfg.w_max or not self._have_next():
                return rep
            dec.extend(self._next_block())
            self.res.extensions += 1

    def _shrink_to(self, w: int, t: int) -> None:
        while self.dec.size > w:
            idx = t + self.dec.size - 1
            self.pending.appendleft((idx, self.dec.pop_right()))

    def _record(self, abs_idx: int, slot: int) -> None:
        if self.collector is not None:
            self.collector.on_decided(self.dec, slot, abs_idx)

    def _do_resync(self, t: int) -> int:
        dec = self.dec
        res = self.res
        size = dec.size
        for k in range(size):
            self._record(t + k, k)
        for k, bits in enumerate(dec.decide_all()):
            res.decisions[t + k] = bits
        res.events.append(FeedbackEvent("resync", t))
        if self.collector is not None:
            self.collector.on_event(res.events[-1])
        t_new = t + size
        self._drop_pending()
        self.tx.reset_to(t_new)
        if t_new < self.L:
            dec.load(self._fill(t_new, self.cfg.w_init), first_index=t_new)
        return t_new

    def _do_retransmit(self, t: int) -> int:
        cfg = self.cfg
        res = self.res
        n_rp = cfg.n_r_prime
        first_failed = t - (n_rp - 1)
        count = n_rp + self.dec.size - 1
        self._drop_pending()
        self.tx.reset_to(first_failed)
        blocks = [self.tx.send() for _ in range(count)]
        res.retx_blocks += count
        res.events.append(FeedbackEvent("retransmit", t, count))
        if self.collector is not None:
            self.collector.on_event(res.events[-1])
        head = blocks[:cfg.w_init]
        self.pending = deque(blocks[cfg.w_init:])
        window = [llr for _, llr in head]
        window += self._fill(first_failed + len(window), cfg.w_init - len(window))
        self.dec.load(window, first_index=first_failed)
        return first_failed
