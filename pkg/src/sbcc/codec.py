"""Blockwise braided encoder: two coupled rate-2/3 component encoders.

Each encoder takes the information block as one input and the other
encoder's previous parity block (permuted) as its second input, so parity
bits are cross-fed with a one-block delay.  Encoder 2 sees the
information block through permutor P0; the parity cross-feeds go through
P1 (encoder 2 parity -> encoder 1 input) and P2 (encoder 1 parity ->
encoder 2 input).  The transmitted block is (u, parity_1, parity_2), so
the overall rate is 1/3.

The encoder state between blocks is the ``Superstate``: both pending
parity-input blocks plus both register states.  A frame starts from the
zero superstate (all-zero parity inputs, both encoders in the reset
state), which is also what resynchronization and retransmission return
the encoder to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import component_code as cc
from .permutor import BlockPermutor, generate

__all__ = [
    "PermutorSet",
    "make_permutors",
    "Superstate",
    "EncodedBlock",
    "initial_superstate",
    "encode_block",
    "encode_frame",
    "reencode_for_retransmission",
    "BccEncoder",
    "BlockDecisionRecord",
    "superstate_from_decisions",
]


@dataclass(frozen=True)
class PermutorSet:
    """The three permutors (P0 info, P1/P2 parity cross-feeds) of a code."""

    p0: BlockPermutor
    p1: BlockPermutor
    p2: BlockPermutor

    def __post_init__(self):
        if not (self.p0.size == self.p1.size == self.p2.size):
            raise ValueError("permutors must share one block length")

    @property
    def size(self) -> int:
        return self.p0.size


def make_permutors(seed: int, size: int) -> PermutorSet:
    """Three independent seeded permutors for a block length.

    Permutor streams live under spawn_key (0, i) of the master seed;
    per-frame noise streams use a disjoint spawn domain, so the two can
    never collide.
    """
    seqs = [np.random.SeedSequence(seed, spawn_key=(0, i)) for i in range(3)]
    return PermutorSet(*(generate(s, size) for s in seqs))


@dataclass(frozen=True)
class Superstate:
    """Inter-block encoder state: pending parity inputs and register states."""

    parity_in_1: np.ndarray
    parity_in_2: np.ndarray
    state_1: int
    state_2: int

    def __eq__(self, other):
        return (isinstance(other, Superstate)
                and self.state_1 == other.state_1
                and self.state_2 == other.state_2
                and np.array_equal(self.parity_in_1, other.parity_in_1)
                and np.array_equal(self.parity_in_2, other.parity_in_2))


@dataclass(frozen=True)
class EncodedBlock:
    """One transmitted block: information bits and both parity blocks."""

    u: np.ndarray
    parity_1: np.ndarray
    parity_2: np.ndarray

    def bits(self) -> np.ndarray:
        """Stacked (3, T) bit array, rows [u, parity_1, parity_2]."""
        return np.stack([self.u, self.parity_1, self.parity_2])


def initial_superstate(size: int) -> Superstate:
    """Zero superstate: all-zero parity inputs, both encoders reset."""
    z = np.zeros(size, dtype=np.uint8)
    return Superstate(z, z.copy(), cc.RESET_STATE, cc.RESET_STATE)


def encode_block(ss: Superstate, u: np.ndarray, perms: PermutorSet):
    """Encode one information block; returns (EncodedBlock, next Superstate)."""
    u = np.asarray(u, dtype=np.uint8)
    if u.shape != (perms.size,):
        raise ValueError("information block length must match the permutor size")
    p1, s1 = cc.encode_block(ss.state_1, u, ss.parity_in_1)
    u_il = perms.p0.forward(u)
    p2, s2 = cc.encode_block(ss.state_2, u_il, ss.parity_in_2)
    nxt = Superstate(perms.p1.forward(p2), perms.p2.forward(p1), s1, s2)
    return EncodedBlock(u, p1, p2), nxt


def encode_frame(info_blocks: np.ndarray, perms: PermutorSet):
    """Encode a frame from the zero superstate.

    Returns (blocks, trace) where ``trace`` has L+1 superstates: the one
    presented to each block plus the final state.
    """
    info = np.asarray(info_blocks, dtype=np.uint8)
    if info.ndim != 2:
        raise ValueError("info_blocks must be (L, T)")
    ss = initial_superstate(perms.size)
    blocks = []
    trace = [ss]
    for u in info:
        blk, ss = encode_block(ss, u, perms)
        blocks.append(blk)
        trace.append(ss)
    return blocks, trace


def reencode_for_retransmission(info_blocks: np.ndarray, perms: PermutorSet):
    """Re-encode a run of information blocks from the zero superstate.

    Used when the transmitter is asked to resend: the first block is
    encoded with known all-zero parity inputs and reset registers.
    """
    blocks, _ = encode_frame(info_blocks, perms)
    return blocks


class BccEncoder:
    """Stateful stream encoder; ``reset`` returns it to the zero superstate."""

    def __init__(self, perms: PermutorSet):
        self.perms = perms
        self.superstate = initial_superstate(perms.size)

    def reset(self) -> None:
        self.superstate = initial_superstate(self.perms.size)

    def encode_next(self, u: np.ndarray) -> EncodedBlock:
        blk, self.superstate = encode_block(self.superstate, u, self.perms)
        return blk


@dataclass(frozen=True)
class BlockDecisionRecord:
    """Decoder outputs for one decided block, enough to rebuild the
    superstate it implies for the following block.

    ``app_parity1`` / ``app_parity2`` are decision LLRs for the two parity
    output blocks; ``state_dist1`` / ``state_dist2`` are log state
    distributions at the end of the block for each component trellis.
    """

    app_parity1: np.ndarray
    app_parity2: np.ndarray
    state_dist1: np.ndarray
    state_dist2: np.ndarray


def superstate_from_decisions(rec: BlockDecisionRecord, perms: PermutorSet) -> Superstate:
    """Superstate implied by a decoded block's soft outputs.

    Parity LLRs are hard-decided (ties to bit 0) and pushed through the
    cross-feed permutors; each register state is the mode of its
    distribution (ties to the lowest state index).
    """
    hard2 = (np.asarray(rec.app_parity2) < 0).astype(np.uint8)
    hard1 = (np.asarray(rec.app_parity1) < 0).astype(np.uint8)
    return Superstate(
        perms.p1.forward(hard2),
        perms.p2.forward(hard1),
        int(np.argmax(rec.state_dist1)),
        int(np.argmax(rec.state_dist2)),
    )
