"""Block permutors (interleavers) used to couple the component encoders.

A permutor of size T is stored as an index map ``map_`` with the forward
convention ``y[i] = x[map_[i]]``.  The inverse map is precomputed so that
applying forward then inverse returns the input unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["BlockPermutor", "generate", "apply", "load", "save"]


@dataclass(frozen=True)
class BlockPermutor:
    """An index permutation of a fixed block length.

    Attributes
    ----------
    map_ : ndarray of int64
        Forward index map, a permutation of ``0..size-1``.
    inv : ndarray of int64
        Inverse map, satisfying ``map_[inv] == arange(size)``.
    """

    map_: np.ndarray
    inv: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        m = np.asarray(self.map_, dtype=np.int64)
        if m.ndim != 1 or m.size == 0:
            raise ValueError("permutor map must be a non-empty 1-D index array")
        if not np.array_equal(np.sort(m), np.arange(m.size)):
            raise ValueError("permutor map must be a permutation of 0..size-1")
        object.__setattr__(self, "map_", m)
        object.__setattr__(self, "inv", np.argsort(m))

    @property
    def size(self) -> int:
        return self.map_.size

    def forward(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x)[..., self.map_]

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x)[..., self.inv]


def generate(seed, size: int) -> BlockPermutor:
    """Draw a uniformly random permutor of the given size.

    Uses a seeded PCG64 generator (numpy's default_rng), whose
    ``permutation`` is a Fisher-Yates shuffle.  ``seed`` is anything
    default_rng accepts (int or SeedSequence); the same (seed, size)
    pair always yields the same map.
    """
    if size < 1:
        raise ValueError("permutor size must be >= 1")
    rng = np.random.default_rng(seed)
    return BlockPermutor(rng.permutation(size))


def apply(p: BlockPermutor, x: np.ndarray, direction: str = "forward") -> np.ndarray:
    """Apply a permutor to the last axis of ``x``.

    ``direction`` is "forward" (``y[i] = x[map_[i]]``) or "inverse".
    """
    if direction == "forward":
        return p.forward(x)
    if direction == "inverse":
        return p.inverse(x)
    raise ValueError(f"unknown direction {direction!r}")


def save(p: BlockPermutor, path) -> None:
    """Write a permutor as a newline-separated index list."""
    with open(path, "w") as f:
        for i in p.map_:
            f.write(f"{i}\n")


def load(path) -> BlockPermutor:
    """Read a permutor written by :func:`save`.  Rejects non-permutations."""
    with open(path) as f:
        idx = [int(line) for line in f if line.strip()]
    return BlockPermutor(np.asarray(idx, dtype=np.int64))
