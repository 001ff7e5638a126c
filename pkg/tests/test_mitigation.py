import numpy as np
import pytest

from sbcc.codec import (BccEncoder, encode_frame, initial_superstate,
                        make_permutors)
from sbcc.mitigation import (MitigationConfig, MitigationRunner,
                             check_extension, check_failed, throughput)

T = 4
HIGH, LOW = 100.0, 1.0


class ScriptedDecoder:
    """Decoder double whose per-call confidence is scripted.

    ``script`` is consumed one entry per decode_target call; True means
    "report every in-window block below theta".  Everything else mimics
    the real window bookkeeping so the runner's supply logic is exercised
    for real.
    """

    def __init__(self, capacity, script):
        self.capacity = capacity
        self.script = list(script)
        self.blocks = []
        self.first_index = 0
        self.log = []
        self.loads = []

    @property
    def size(self):
        return len(self.blocks)

    def load(self, blocks, first_index=0):
        self.blocks = [np.array(b) for b in blocks]
        self.first_index = first_index
        self.loads.append((first_index, [b.copy() for b in self.blocks]))
        self.log.append(("load", first_index, self.size))

    def decode_target(self, full_extr=False):
        fail = self.script.pop(0) if self.script else False
        avg = np.full(self.size, LOW if fail else HIGH)
        self.log.append(("decode", self.first_index, self.size, fail))

        class Rep:
            pass

        rep = Rep()
        rep.target_index = self.first_index
        rep.window_size = self.size
        rep.iterations = 1
        rep.stopped_early = False
        rep.ber_est = 0.0
        rep.avg_abs_llrs = avg
        return np.zeros(T, np.uint8), rep

    def decide(self, k=0):
        return np.zeros(T, np.uint8)

    def decide_all(self):
        return [np.zeros(T, np.uint8) for _ in range(self.size)]

    def shift(self, new=None):
        self.blocks.pop(0)
        self.first_index += 1
        if new is not None:
            self.blocks.append(np.array(new))
        self.log.append(("shift", self.first_index, self.size))

    def extend(self, llr):
        self.blocks.append(np.array(llr))
        self.log.append(("extend", self.first_index, self.size))

    def pop_right(self):
        self.log.append(("pop", self.first_index, self.size - 1))
        return self.blocks.pop()


def build(L, mode, script, seed=0, **kw):
    perms = make_permutors(seed, T)
    info = np.random.default_rng(seed).integers(0, 2, (L, T), dtype=np.uint8)
    cfg = MitigationConfig(mode=mode, **kw)
    dec = ScriptedDecoder(cfg.capacity, script)
    enc = BccEncoder(perms)
    runner = MitigationRunner(dec, enc, lambda blk: blk.bits().astype(float),
                              info, cfg)
    return runner, dec, perms, info


def targets(dec):
    return [e[1] for e in dec.log if e[0] == "decode"]


# -- threshold predicates ----------------------------------------------------

def test_threshold_comparisons_are_strict():
    assert not check_failed(10.0, 10.0)
    assert check_failed(9.999, 10.0)
    assert not check_extension([10.0, 0.1], tau=1, theta=10.0)
    assert check_extension([10.0, 0.1], tau=2, theta=10.0)
    assert not check_extension([11.0, 12.0, 0.1], tau=2, theta=10.0)


def test_throughput_formula():
    assert throughput(100, 50, 1 / 3, 0.0, 4, 14) == 1 / 3
    # direct evaluation: extra = 2 * (1 + 6 - 1) = 12 resent blocks
    assert throughput(77, 1000, 1 / 3, 2.0, 1, 6) == pytest.approx(
        (1 / 3) * 1000 / 1012, rel=1e-12)


# -- config validation -------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError, match="mode"):
        MitigationConfig(mode="winfix")
    with pytest.raises(ValueError, match="w_max"):
        MitigationConfig(mode="winext", w_init=5, w_max=4)
    with pytest.raises(ValueError, match="n_r "):
        MitigationConfig(mode="resync")
    with pytest.raises(ValueError, match="n_r_prime"):
        MitigationConfig(mode="retx")
    with pytest.raises(ValueError, match="tau"):
        MitigationConfig(mode="winext", w_init=3, w_max=6, tau=4)
    with pytest.raises(ValueError, match="theta"):
        MitigationConfig(theta=0.0)
    cfg = MitigationConfig(mode="winext", w_init=4, w_max=7)
    assert cfg.tau == 2 and cfg.capacity == 7
    assert MitigationConfig(mode="none", w_init=4).capacity == 4


# -- plain decoding ----------------------------------------------------------

def test_none_mode_ignores_low_confidence():
    runner, dec, _, info = build(6, "none", [True] * 6, w_init=3)
    res = runner.run()
    assert res.events == []
    assert targets(dec) == [0, 1, 2, 3, 4, 5]
    assert res.tx_blocks == 6
    assert res.window_sizes == [3, 3, 3, 3, 2, 1]
    assert len(res.iterations) == 6


# -- window extension --------------------------------------------------------

def test_winext_extends_then_shrinks_to_pending():
    # target 0 fails at sizes 3 and 4, succeeds at 5 = w_max
    script = [True, True, False] + [False] * 10
    runner, dec, _, _ = build(8, "winext", script, w_init=3, w_max=5, tau=3)
    res = runner.run()
    assert res.events == [] and res.extensions == 2
    decodes = [e for e in dec.log if e[0] == "decode"]
    assert [(d[1], d[2]) for d in decodes[:3]] == [(0, 3), (0, 4), (0, 5)]
    # accumulated iteration count for the extended position
    assert res.iterations[0] == 3 and res.window_sizes[0] == 5
    # blocks 3 and 4 were popped back and must be re-consumed in order
    pops = [e for e in dec.log if e[0] == "pop"]
    assert len(pops) == 2
    assert targets(dec) == [0, 0, 0, 1, 2, 3, 4, 5, 6, 7]
    assert res.tx_blocks == 8  # nothing transmitted twice
    assert res.wasted_blocks == 0


def test_winext_stops_extending_at_w_max_even_if_still_failed():
    script = [True, True] + [False] * 10
    runner, dec, _, _ = build(8, "winext", script, w_init=3, w_max=4, tau=2)
    res = runner.run()
    assert res.extensions == 1
    decodes = [e for e in dec.log if e[0] == "decode"]
    assert [(d[1], d[2]) for d in decodes[:2]] == [(0, 3), (0, 4)]
    # the w_max failure cannot extend further; target decided as-is
    assert decodes[2][1] == 1
    assert res.window_sizes[0] == 4
    assert res.tx_blocks == 8


# -- resynchronization -------------------------------------------------------

def test_resync_fires_after_consecutive_failures():
    # targets 2 and 3 fail; n_r = 2 -> resync when deciding target 3
    script = [False, False, True, True] + [False] * 10
    runner, dec, _, _ = build(8, "resync", script, w_init=3, n_r=2)
    res = runner.run()
    assert [(e.kind, e.position) for e in res.events] == [("resync", 3)]
    # window [3,4,5] was flushed; decoding restarted at 6 with a fresh load
    assert targets(dec) == [0, 1, 2, 3, 6, 7]
    assert dec.loads[1][0] == 6 and len(dec.loads[1][1]) == 2
    assert res.window_sizes == [3, 3, 3, 3, 2, 1]
    # every source block transmitted exactly once, none wasted
    assert res.tx_blocks == 8 and res.wasted_blocks == 0
    # encoder was reset to the zero superstate for block 6
    assert runner.tx.trace[6] == initial_superstate(T)


def test_resync_counter_resets_on_success():
    script = [False, True, False, True, False, True, False, False]
    runner, dec, _, _ = build(8, "resync", script, w_init=3, n_r=2)
    res = runner.run()
    assert res.events == []
    assert targets(dec) == list(range(8))


def test_resync_near_frame_end_consumes_remaining_blocks():
    # failure at the last two targets; window has shrunk naturally
    script = [False] * 4 + [True, True]
    runner, dec, _, _ = build(6, "resync", script, w_init=3, n_r=2)
    res = runner.run()
    assert [(e.kind, e.position) for e in res.events] == [("resync", 5)]
    # t_new = 5 + size(1) = 6 = L: nothing left, no reload
    assert targets(dec) == [0, 1, 2, 3, 4, 5]
    assert len(dec.loads) == 1


# -- retransmission ----------------------------------------------------------

def test_retransmit_resends_exactly_nrp_plus_w_minus_1():
    script = [False] * 4 + [True, True] + [False] * 10
    runner, dec, perms, info = build(10, "retx", script, w_init=4, n_r_prime=2)
    res = runner.run()
    ev = res.events[0]
    assert (ev.kind, ev.position) == ("retransmit", 5)
    # window size was 4 at the event: 2 + 4 - 1 = 5 blocks resent
    assert ev.blocks == 5 and res.retx_blocks == 5
    assert res.tx_blocks == 10 + 5
    # decoding restarts at the first failed block
    assert targets(dec) == [0, 1, 2, 3, 4, 5, 4, 5, 6, 7, 8, 9]
    first_idx, loaded = dec.loads[1]
    assert first_idx == 4 and len(loaded) == 4
    # retransmitted blocks are re-encoded from the zero superstate
    assert runner.tx.trace[4] == initial_superstate(T)
    fresh, _ = encode_frame(info[4:9], perms)
    for got, want in zip(loaded, fresh):
        assert np.array_equal(got, want.bits().astype(float))
    # the 5th resent block waits in pending and is consumed on shift
    assert res.wasted_blocks == 0


def test_retransmit_counter_needs_consecutive_failures():
    script = [True, False] * 5
    runner, dec, _, _ = build(10, "retx", script, w_init=3, n_r_prime=2)
    res = runner.run()
    assert res.events == [] and res.retx_blocks == 0


# -- combined modes ----------------------------------------------------------

def test_winext_resync_drops_stale_pending_blocks():
    # target 0: extend 3->4 (w_max), still failed, n_r=1 -> resync now
    script = [True, True] + [False] * 10
    runner, dec, _, _ = build(8, "winext+resync", script,
                              w_init=3, w_max=4, tau=3, n_r=1)
    res = runner.run()
    assert [(e.kind, e.position) for e in res.events] == [("resync", 0)]
    # the block popped back during shrink belonged to the old chain
    assert res.wasted_blocks == 1
    assert res.tx_blocks == 8 + 1  # block 3 sent twice
    assert runner.tx.trace[3] == initial_superstate(T)
    assert targets(dec) == [0, 0, 3, 4, 5, 6, 7]


def test_winext_retx_restarts_with_fresh_window():
    script = [False, True, True] + [False] * 12
    runner, dec, perms, info = build(9, "winext+retx", script,
                                     w_init=3, w_max=4, tau=3, n_r_prime=1)
    res = runner.run()
    # decode of target 1 extends once, still failed -> retransmit fires
    assert res.extensions == 1
    ev = res.events[0]
    assert (ev.kind, ev.position) == ("retransmit", 1)
    # post-shrink window size 3: 1 + 3 - 1 = 3 blocks resent
    assert ev.blocks == 3
    # the shrink-pending block (old chain) is wasted, chain restarts at 1
    assert res.wasted_blocks == 1
    assert runner.tx.trace[1] == initial_superstate(T)
    first_idx, loaded = dec.loads[1]
    assert first_idx == 1 and len(loaded) == 3
    fresh, _ = encode_frame(info[1:4], perms)
    for got, want in zip(loaded, fresh):
        assert np.array_equal(got, want.bits().astype(float))
    assert targets(dec) == [0, 1, 1, 1, 2, 3, 4, 5, 6, 7, 8]


def test_runner_rejects_undersized_decoder():
    cfg = MitigationConfig(mode="winext", w_init=3, w_max=6)
    dec = ScriptedDecoder(4, [])
    enc = BccEncoder(make_permutors(0, T))
    with pytest.raises(ValueError, match="capacity"):
        MitigationRunner(dec, enc, lambda b: b.bits(), np.zeros((4, T)), cfg)
