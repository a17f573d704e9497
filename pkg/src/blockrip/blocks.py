"""Block-structured vectors and the mixed l2/l* norm family.

A length-N vector is viewed as a concatenation of M contiguous blocks with
sizes d_0..d_{M-1}. Block indices are 0-based throughout. All types are
immutable after construction and all operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import accumulate
from typing import Iterable

import numpy as np

__all__ = [
    "BlockStructure",
    "BlockVector",
    "block_support",
    "norm_2_0",
    "norm_2_1",
    "norm_2_2",
    "norm_2_inf",
    "restrict",
    "complement_indices",
    "top_k_blocks",
    "best_block_k_approx",
]


@dataclass(frozen=True)
class BlockStructure:
    """Partition of coordinates {0..N-1} into M contiguous blocks."""

    block_sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        sizes = tuple(int(d) for d in self.block_sizes)
        if len(sizes) == 0:
            raise ValueError("a block structure needs at least one block")
        if any(d < 1 for d in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        object.__setattr__(self, "block_sizes", sizes)
        bounds = (0,) + tuple(accumulate(sizes))
        object.__setattr__(self, "_bounds", bounds)
        # reduceat needs the start offset of every block as an index array
        object.__setattr__(self, "_starts", np.asarray(bounds[:-1], dtype=np.intp))

    @property
    def num_blocks(self) -> int:
        return len(self.block_sizes)

    @property
    def dimension(self) -> int:
        return self._bounds[-1]

    def slice_of(self, i: int) -> slice:
        """Coordinate slice occupied by block ``i``."""
        if not 0 <= i < self.num_blocks:
            raise ValueError(f"block index {i} out of range [0, {self.num_blocks})")
        return slice(self._bounds[i], self._bounds[i + 1])

    def check_indices(self, indices: Iterable[int]) -> frozenset[int]:
        """Validate a set of block indices against this structure."""
        idx = frozenset(int(i) for i in indices)
        for i in idx:
            if not 0 <= i < self.num_blocks:
                raise ValueError(f"block index {i} out of range [0, {self.num_blocks})")
        return idx

    @classmethod
    def equal_blocks(cls, num_blocks: int, block_size: int) -> "BlockStructure":
        return cls((int(block_size),) * int(num_blocks))

    @classmethod
    def scalar(cls, dimension: int) -> "BlockStructure":
        """Structure with every block of size one (conventional sparsity)."""
        return cls((1,) * int(dimension))


@dataclass(frozen=True, eq=False)
class BlockVector:
    """A length-N real vector interpreted against a BlockStructure."""

    values: np.ndarray
    structure: BlockStructure

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if arr.size != self.structure.dimension:
            raise ValueError(
                f"vector length {arr.size} does not match structure dimension "
                f"{self.structure.dimension}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def block(self, i: int) -> np.ndarray:
        return self.values[self.structure.slice_of(i)]

    def block_norms(self) -> np.ndarray:
        """Euclidean norm of every block, as a length-M array."""
        sums = np.add.reduceat(self.values * self.values, self.structure._starts)
        return np.sqrt(sums)

    @classmethod
    def zero(cls, structure: BlockStructure) -> "BlockVector":
        return cls(np.zeros(structure.dimension), structure)


def block_support(v: BlockVector) -> frozenset[int]:
    """Indices of blocks containing at least one bitwise-nonzero entry."""
    nonzero = np.add.reduceat((v.values != 0.0).astype(np.intp), v.structure._starts)
    return frozenset(int(i) for i in np.flatnonzero(nonzero))


def norm_2_0(v: BlockVector) -> int:
    """Number of nonzero blocks (exact zero test, no tolerance)."""
    return len(block_support(v))


def norm_2_1(v: BlockVector) -> float:
    """Sum over blocks of per-block Euclidean norms."""
    return float(np.sum(v.block_norms()))


def norm_2_2(v: BlockVector) -> float:
    """Plain Euclidean norm of the whole vector."""
    return float(np.linalg.norm(v.values))


def norm_2_inf(v: BlockVector) -> float:
    """Largest per-block Euclidean norm."""
    return float(np.max(v.block_norms()))


def restrict(v: BlockVector, indices: Iterable[int]) -> BlockVector:
    """Vector equal to ``v`` on the given blocks and zero elsewhere."""
    idx = v.structure.check_indices(indices)
    out = np.zeros_like(v.values)
    for i in idx:
        sl = v.structure.slice_of(i)
        out[sl] = v.values[sl]
    return BlockVector(out, v.structure)


def complement_indices(indices: Iterable[int], structure: BlockStructure) -> frozenset[int]:
    idx = structure.check_indices(indices)
    return frozenset(range(structure.num_blocks)) - idx


def top_k_blocks(v: BlockVector, k: int) -> frozenset[int]:
    """Indices of the k blocks of largest Euclidean norm.

    Ties are broken by the lowest block index so the result is deterministic.
    """
    k = int(k)
    if not 1 <= k <= v.structure.num_blocks:
        raise ValueError(f"k={k} must be in [1, {v.structure.num_blocks}]")
    norms = v.block_norms()
    # stable argsort of -norms keeps ascending index order among ties
    order = np.argsort(-norms, kind="stable")
    return frozenset(int(i) for i in order[:k])


def best_block_k_approx(v: BlockVector, k: int) -> BlockVector:
    """``v`` with all but its k largest-norm blocks zeroed."""
    return restrict(v, top_k_blocks(v, k))
