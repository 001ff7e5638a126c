import numpy as np
import pytest

from sbcc import component_code as cc
from sbcc.codec import (BccEncoder, BlockDecisionRecord, PermutorSet,
                        encode_block, encode_frame, initial_superstate,
                        make_permutors, reencode_for_retransmission,
                        superstate_from_decisions)
from sbcc.permutor import BlockPermutor


def test_permutor_set_requires_equal_sizes():
    a = BlockPermutor(np.arange(4))
    b = BlockPermutor(np.arange(5))
    with pytest.raises(ValueError, match="block length"):
        PermutorSet(a, a, b)
    assert PermutorSet(a, a, a).size == 4


def test_make_permutors_deterministic_and_distinct():
    ps = make_permutors(42, 8)
    qs = make_permutors(42, 8)
    for p, q in zip((ps.p0, ps.p1, ps.p2), (qs.p0, qs.p1, qs.p2)):
        assert np.array_equal(p.map_, q.map_)
    # frozen draws for master seed 42, T=8
    assert list(ps.p0.map_) == [2, 6, 4, 1, 3, 5, 7, 0]
    assert list(ps.p1.map_) == [6, 0, 3, 1, 5, 2, 4, 7]
    assert list(ps.p2.map_) == [1, 6, 0, 5, 7, 3, 4, 2]


def test_block_encoding_wires_the_cross_feed(rng):
    T = 16
    perms = make_permutors(5, T)
    u0 = rng.integers(0, 2, T, dtype=np.uint8)
    u1 = rng.integers(0, 2, T, dtype=np.uint8)
    ss0 = initial_superstate(T)
    blk0, ss1 = encode_block(ss0, u0, perms)

    # component 1 of block 0: second input is all zeros, reset register
    p1_ref, s1_ref = cc.encode_block(cc.RESET_STATE, u0, np.zeros(T, np.uint8))
    assert np.array_equal(blk0.parity_1, p1_ref)
    # component 2 sees the interleaved info block
    p2_ref, s2_ref = cc.encode_block(cc.RESET_STATE, perms.p0.forward(u0),
                                     np.zeros(T, np.uint8))
    assert np.array_equal(blk0.parity_2, p2_ref)
    # next superstate carries the permuted parities of the other encoder
    assert np.array_equal(ss1.parity_in_1, perms.p1.forward(blk0.parity_2))
    assert np.array_equal(ss1.parity_in_2, perms.p2.forward(blk0.parity_1))
    assert (ss1.state_1, ss1.state_2) == (s1_ref, s2_ref)

    # block 1's components consume those delayed parity blocks
    blk1, _ = encode_block(ss1, u1, perms)
    p1b, _ = cc.encode_block(ss1.state_1, u1, ss1.parity_in_1)
    p2b, _ = cc.encode_block(ss1.state_2, perms.p0.forward(u1), ss1.parity_in_2)
    assert np.array_equal(blk1.parity_1, p1b)
    assert np.array_equal(blk1.parity_2, p2b)


def test_bits_stacks_three_streams(rng):
    T = 8
    perms = make_permutors(1, T)
    u = rng.integers(0, 2, T, dtype=np.uint8)
    blk, _ = encode_block(initial_superstate(T), u, perms)
    b = blk.bits()
    assert b.shape == (3, T)
    assert np.array_equal(b[0], u)
    assert np.array_equal(b[1], blk.parity_1)
    assert np.array_equal(b[2], blk.parity_2)


def test_frame_encode_matches_stepwise_and_traces_states(rng):
    T, L = 12, 7
    perms = make_permutors(9, T)
    info = rng.integers(0, 2, (L, T), dtype=np.uint8)
    blocks, trace = encode_frame(info, perms)
    assert len(blocks) == L and len(trace) == L + 1
    enc = BccEncoder(perms)
    for k in range(L):
        assert trace[k] == enc.superstate
        blk = enc.encode_next(info[k])
        assert np.array_equal(blk.bits(), blocks[k].bits())
    assert trace[L] == enc.superstate


def test_encoder_reset_restores_zero_superstate(rng):
    T = 10
    perms = make_permutors(2, T)
    enc = BccEncoder(perms)
    enc.encode_next(rng.integers(0, 2, T, dtype=np.uint8))
    assert enc.superstate != initial_superstate(T)
    enc.reset()
    assert enc.superstate == initial_superstate(T)


def test_retransmission_restarts_from_zero_superstate(rng):
    T, L = 8, 5
    perms = make_permutors(3, T)
    info = rng.integers(0, 2, (L, T), dtype=np.uint8)
    _, trace = encode_frame(info, perms)
    # re-encoding a mid-frame run ignores the original chain state
    re_blocks = reencode_for_retransmission(info[2:], perms)
    fresh, _ = encode_frame(info[2:], perms)
    for a, b in zip(re_blocks, fresh):
        assert np.array_equal(a.bits(), b.bits())
    # and differs from the original transmission whenever the original
    # superstate at block 2 was nonzero
    if trace[2] != initial_superstate(T):
        assert any(not np.array_equal(a.bits(), b.bits())
                   for a, b in zip(re_blocks, encode_frame(info, perms)[0][2:]))


def test_superstate_from_confident_decisions_is_exact(rng):
    T, L = 16, 4
    perms = make_permutors(7, T)
    info = rng.integers(0, 2, (L, T), dtype=np.uint8)
    blocks, trace = encode_frame(info, perms)
    k = 2
    blk, true_next = blocks[k], trace[k + 1]
    big = 15.0
    rec = BlockDecisionRecord(
        app_parity1=np.where(blk.parity_1, -big, big),
        app_parity2=np.where(blk.parity_2, -big, big),
        state_dist1=np.where(np.arange(4) == true_next.state_1, 0.0, -50.0),
        state_dist2=np.where(np.arange(4) == true_next.state_2, 0.0, -50.0),
    )
    assert superstate_from_decisions(rec, perms) == true_next


def test_encode_block_rejects_wrong_length():
    perms = make_permutors(0, 6)
    with pytest.raises(ValueError, match="length"):
        encode_block(initial_superstate(6), np.zeros(5, np.uint8), perms)
