"""Block-partitioned vectors of R^n and the norms used by the iteration.

A partition splits ``n`` coordinates into ``alpha`` contiguous blocks of sizes
``n_1, ..., n_alpha``. The euclidean structure is the usual one, and the
*block maximum norm* is the largest per-block euclidean norm.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import EmptyPartition, InvalidSize, PartitionMismatch

__all__ = [
    "BlockPartition",
    "BlockVector",
    "make_partition",
    "inner_product",
    "block_max_norm",
    "euclidean_norm",
    "block_norms",
]


@dataclass(frozen=True)
class BlockPartition:
    sizes: tuple

    def __post_init__(self):
        if len(self.sizes) == 0:
            raise EmptyPartition("a partition needs at least one block")
        for s in self.sizes:
            if int(s) != s or s < 1:
                raise InvalidSize(f"block sizes must be integers >= 1, got {s!r}")
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))

    @property
    def alpha(self) -> int:
        return len(self.sizes)

    @property
    def total(self) -> int:
        return sum(self.sizes)

    @cached_property
    def offsets(self) -> np.ndarray:
        """Start index of every block, plus ``total`` as a sentinel."""
        return np.concatenate(([0], np.cumsum(self.sizes))).astype(np.intp)

    def block_slice(self, i: int) -> slice:
        """Slice of block ``i`` (0-based) in the flat coordinate array."""
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    @cached_property
    def slices(self) -> tuple:
        return tuple(self.block_slice(i) for i in range(self.alpha))


def make_partition(sizes: Sequence[int]) -> BlockPartition:
    return BlockPartition(tuple(sizes))


class BlockVector:
    """A point ``x = (x_1, ..., x_alpha)`` stored as one flat float64 array.

    ``block(i)`` returns a view, so writes through it land in ``data``.
    """

    __slots__ = ("partition", "data")

    def __init__(self, partition: BlockPartition, data):
        arr = np.array(data, dtype=np.float64).reshape(-1)
        if arr.size != partition.total:
            raise PartitionMismatch(
                f"{arr.size} coordinates given for a partition of size {partition.total}"
            )
        self.partition = partition
        self.data = arr

    @classmethod
    def zeros(cls, partition: BlockPartition) -> "BlockVector":
        return cls(partition, np.zeros(partition.total))

    @classmethod
    def from_blocks(cls, partition: BlockPartition, blocks) -> "BlockVector":
        blocks = [np.atleast_1d(np.asarray(b, dtype=np.float64)) for b in blocks]
        if len(blocks) != partition.alpha or any(
            b.size != s for b, s in zip(blocks, partition.sizes)
        ):
            raise PartitionMismatch("block shapes do not match the partition")
        return cls(partition, np.concatenate(blocks))

    def block(self, i: int) -> np.ndarray:
        return self.data[self.partition.block_slice(i)]

    def blocks(self) -> list:
        return [self.data[s] for s in self.partition.slices]

    def copy(self) -> "BlockVector":
        return BlockVector(self.partition, self.data)

    def __len__(self):
        return self.data.size

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, BlockVector):
            return NotImplemented
        return self.partition == other.partition and np.array_equal(self.data, other.data)

    def __repr__(self):
        inner = ", ".join(np.array2string(b, separator=", ") for b in self.blocks())
        return f"BlockVector({inner})"


def _check_same(x: BlockVector, y: BlockVector):
    if x.partition != y.partition:
        raise PartitionMismatch(f"{x.partition.sizes} != {y.partition.sizes}")


def inner_product(x: BlockVector, y: BlockVector) -> float:
    _check_same(x, y)
    # sum of per-block inner products == flat dot product
    return float(np.dot(x.data, y.data))


def euclidean_norm(x: BlockVector) -> float:
    return float(np.linalg.norm(x.data))


def block_norms(partition: BlockPartition, data: np.ndarray) -> np.ndarray:
    """Per-block euclidean norms of a flat array (or of each row of a 2-D array)."""
    sq = np.square(data)
    return np.sqrt(np.add.reduceat(sq, partition.offsets[:-1], axis=-1))


def block_max_norm(x: BlockVector) -> float:
    return float(block_norms(x.partition, x.data).max())
