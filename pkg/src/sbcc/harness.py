"""Monte Carlo harness: runs frames, classifies error patterns, and
aggregates statistics.

Frames are independent work units.  Frame ``i`` of a run draws all its
randomness (information bits, then channel noise in transmission order)
from a generator seeded by (master seed, frame index), so any frame can
be reproduced in isolation and results do not depend on worker count or
completion order.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from multiprocessing import get_context

import numpy as np

from . import channel as chan
from .codec import (BccEncoder, BlockDecisionRecord, PermutorSet,
                    make_permutors, superstate_from_decisions)
from .mitigation import MitigationConfig, MitigationRunner, throughput
from .window_decoder import ScheduleParams, SlidingWindowDecoder

__all__ = [
    "RunConfig",
    "FrameStats",
    "AggregateStats",
    "run_frame",
    "simulate",
    "classify",
    "aggregate",
    "diagnose",
]

CODE_RATE = 1.0 / 3.0


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one simulation run at one SNR."""

    T: int = 100
    L: int = 100
    frames: int = 100
    snr_db: float | None = 1.2
    snr_ref: str = "eb"
    noiseless: bool = False
    mode: str = "none"
    w_init: int = 3
    w_max: int | None = None
    i1: int = 1
    i2: int = 20
    tau: int | None = None
    theta: float = 10.0
    gamma: float | None = None
    n_r: int | None = None
    n_r_prime: int | None = None
    cap: float = 20.0
    maxlog: bool = False
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.T < 1 or self.L < 1 or self.frames < 1:
            raise ValueError("T, L and frames must be >= 1")
        if not self.noiseless and self.snr_db is None:
            raise ValueError("snr_db is required unless noiseless is set")
        # constructing these validates the remaining fields
        self.schedule()
        self.mitigation()

    def schedule(self) -> ScheduleParams:
        return ScheduleParams(i1=self.i1, i2=self.i2, cap=self.cap,
                              gamma=self.gamma, maxlog=self.maxlog)

    def mitigation(self) -> MitigationConfig:
        return MitigationConfig(mode=self.mode, w_init=self.w_init,
                                w_max=self.w_max, tau=self.tau,
                                theta=self.theta, n_r=self.n_r,
                                n_r_prime=self.n_r_prime)

    def noise(self) -> chan.NoiseModel:
        if self.noiseless:
            return chan.NoiseModel.noiseless(self.cap)
        return chan.NoiseModel.from_snr(self.snr_db, self.snr_ref,
                                        CODE_RATE, self.cap)

    def permutors(self) -> PermutorSet:
        return make_permutors(self.seed, self.T)


def frame_rng(master_seed: int, frame_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(1, frame_index)))


@dataclass
class FrameStats:
    """Per-frame outcome, cheap to ship between worker processes."""

    frame_index: int
    bit_errors: list[int]
    bursts: list[tuple[int, int]]
    ep_run: tuple[int, int] | None
    iterations: list[int]
    window_sizes: list[int]
    events: list[tuple[str, int]]
    tx_blocks: int
    retx_events: int
    retx_blocks: int
    wasted_blocks: int
    extensions: int
    stopped_targets: int


def classify(block_errors) -> tuple[list[tuple[int, int]], tuple[int, int] | None]:
    """Split a frame's error blocks into bursts and a propagation run.

    Maximal runs of consecutive error blocks are extracted; a run that
    touches the last block is reported as the propagation run, all
    others as bursts (start, length).
    """
    e = np.asarray(block_errors).astype(bool)
    L = e.size
    runs = []
    start = None
    for i, v in enumerate(e):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start, i - start))
            start = None
    if start is not None:
        runs.append((start, L - start))
    ep = None
    if runs and runs[-1][0] + runs[-1][1] == L:
        ep = runs.pop()
    return runs, ep


def run_frame(cfg: RunConfig, frame_index: int, collector=None) -> FrameStats:
    """Encode, transmit and decode one frame; fully deterministic given
    (cfg, frame_index)."""
    rng = frame_rng(cfg.seed, frame_index)
    info = rng.integers(0, 2, size=(cfg.L, cfg.T), dtype=np.uint8)
    perms = cfg.permutors()
    noise = cfg.noise()
    mit = cfg.mitigation()
    dec = SlidingWindowDecoder(perms, mit.capacity, cfg.schedule())
    enc = BccEncoder(perms)

    def tx(blk):
        return chan.transmit(blk.bits(), noise, rng)

    runner = MitigationRunner(dec, enc, tx, info, mit, collector)
    res = runner.run()
    if collector is not None:
        collector.finish(runner, info, res)
    per_block = (res.decisions != info).sum(axis=1)
    bursts, ep = classify(per_block > 0)
    return FrameStats(
        frame_index=frame_index,
        bit_errors=[int(x) for x in per_block],
        bursts=bursts,
        ep_run=ep,
        iterations=res.iterations,
        window_sizes=res.window_sizes,
        events=[(ev.kind, ev.position) for ev in res.events],
        tx_blocks=res.tx_blocks,
        retx_events=sum(1 for ev in res.events if ev.kind == "retransmit"),
        retx_blocks=res.retx_blocks,
        wasted_blocks=res.wasted_blocks,
        extensions=res.extensions,
        stopped_targets=res.stopped_targets,
    )


@dataclass(frozen=True)
class AggregateStats:
    """Run-level statistics over all frames at one SNR point."""

    snr_db: float | None
    snr_ref: str
    frames: int
    ber: float
    bler: float
    fer: float
    ep_freq: float
    burst_freq: float
    mean_burst_len: float
    avg_window: float
    avg_h_iters: float
    avg_retx: float
    throughput: float


def aggregate(stats: list[FrameStats], cfg: RunConfig) -> AggregateStats:
    """Reduce frame outcomes; all sums are integer so the result does not
    depend on reduction order."""
    n = len(stats)
    T, L = cfg.T, cfg.L
    bit_errs = sum(sum(s.bit_errors) for s in stats)
    blk_errs = sum(sum(1 for b in s.bit_errors if b) for s in stats)
    frame_errs = sum(1 for s in stats if any(s.bit_errors))
    ep_frames = sum(1 for s in stats if s.ep_run is not None)
    burst_frames = sum(1 for s in stats if s.bursts)
    burst_lens = sum(sum(ln for _, ln in s.bursts) for s in stats)
    burst_count = sum(len(s.bursts) for s in stats)
    positions = sum(len(s.iterations) for s in stats)
    iters = sum(sum(s.iterations) for s in stats)
    windows = sum(sum(s.window_sizes) for s in stats)
    retx_events = sum(s.retx_events for s in stats)
    return AggregateStats(
        snr_db=cfg.snr_db if not cfg.noiseless else None,
        snr_ref=cfg.snr_ref,
        frames=n,
        ber=bit_errs / (n * L * T),
        bler=blk_errs / (n * L),
        fer=frame_errs / n,
        ep_freq=ep_frames / n,
        burst_freq=burst_frames / n,
        mean_burst_len=burst_lens / burst_count if burst_count else 0.0,
        avg_window=windows / positions if positions else 0.0,
        avg_h_iters=iters / positions if positions else 0.0,
        avg_retx=retx_events / n,
        throughput=throughput(T, L, CODE_RATE, retx_events / n,
                              cfg.n_r_prime, cfg.w_init),
    )


def _frame_task(args):
    cfg, idx = args
    return run_frame(cfg, idx)


def _resolve_workers(cfg: RunConfig) -> int:
    env = os.environ.get("SBCC_WORKERS")
    if env is not None:
        return max(1, int(env))
    return max(1, cfg.workers)


def simulate(cfg: RunConfig, progress=None) -> AggregateStats:
    """Run all frames of a config (in parallel when workers > 1) and
    aggregate in frame order."""
    workers = _resolve_workers(cfg)
    tasks = [(cfg, i) for i in range(cfg.frames)]
    if workers == 1:
        stats = []
        for t in tasks:
            stats.append(_frame_task(t))
            if progress is not None:
                progress(len(stats))
    else:
        run_frame(replace(cfg, frames=1, L=min(cfg.L, 2)), 0)  # warm JIT pre-fork
        chunk = max(1, cfg.frames // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers,
                                 mp_context=get_context("fork")) as pool:
            stats = list(pool.map(_frame_task, tasks, chunksize=chunk))
    stats.sort(key=lambda s: s.frame_index)
    return aggregate(stats, cfg)


class _DiagnosticCollector:
    """Captures soft outputs at decision time for diagnose runs."""

    def __init__(self, perms: PermutorSet):
        self.perms = perms
        self.blocks: dict[int, dict] = {}
        self.events: list[tuple[str, int]] = []
        self.trace = None

    def on_decided(self, dec, slot: int, abs_idx: int) -> None:
        a1, a2 = dec.parity_app(slot)
        if slot == 0:
            d1 = dec.alpha_tgt[0].copy()
            d2 = dec.alpha_tgt[1].copy()
        else:
            d1 = dec.alpha[0, slot + 1].copy()
            d2 = dec.alpha[1, slot + 1].copy()
        self.blocks[abs_idx] = {
            "decision_llrs": dec.decision_llrs(slot),
            "record": BlockDecisionRecord(a1, a2, d1, d2),
        }

    def on_event(self, ev) -> None:
        self.events.append((ev.kind, ev.position))

    def finish(self, runner, info, res) -> None:
        self.trace = dict(runner.tx.trace)


def diagnose(cfg: RunConfig, frame_index: int, blocks_of_interest=()) -> list[dict]:
    """Re-run one frame and emit per-block records.

    Every block gets a record with its bit error count and four
    indicator streams comparing the superstate implied by the decoder's
    decisions with the one the transmitter actually presented to the
    next block.  Blocks of interest additionally carry their decision
    LLR dump.  Records are dicts with keys type / frame_seed / block /
    data, ready for JSON-lines output.
    """
    interest = set(int(b) for b in blocks_of_interest)
    bad = [b for b in interest if not 0 <= b < cfg.L]
    if bad:
        raise ValueError(
            f"block index must satisfy 0 <= block < L={cfg.L}, got {sorted(bad)}")
    perms = cfg.permutors()
    coll = _DiagnosticCollector(perms)
    stats = run_frame(cfg, frame_index, collector=coll)
    out = [{
        "type": "frame",
        "frame_seed": frame_index,
        "block": None,
        "data": {
            "bit_errors": int(sum(stats.bit_errors)),
            "error_blocks": int(sum(1 for b in stats.bit_errors if b)),
            "bursts": [list(b) for b in stats.bursts],
            "ep_run": list(stats.ep_run) if stats.ep_run else None,
            "events": [list(e) for e in stats.events],
        },
    }]
    for t in range(cfg.L):
        rec = coll.blocks.get(t)
        data = {"bit_errors": int(stats.bit_errors[t])}
        if rec is not None and t + 1 in coll.trace:
            implied = superstate_from_decisions(rec["record"], perms)
            true = coll.trace[t + 1]
            data["superstate_diff"] = {
                "parity_in_1": int(np.any(implied.parity_in_1 != true.parity_in_1)),
                "parity_in_2": int(np.any(implied.parity_in_2 != true.parity_in_2)),
                "state_1": int(implied.state_1 != true.state_1),
                "state_2": int(implied.state_2 != true.state_2),
            }
        if t in interest and rec is not None:
            data["decision_llrs"] = [round(float(x), 6)
                                     for x in rec["decision_llrs"]]
        out.append({"type": "block", "frame_seed": frame_index,
                    "block": t, "data": data})
    return out
