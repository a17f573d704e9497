"""Block restricted-isometry constants by support enumeration or sampling.

The block RIC of order k is the smallest delta with
(1-delta)*||x||^2 <= ||Ax||^2 <= (1+delta)*||x||^2 for every block k-sparse
x. Per block support S it equals max(lmax(G_S)-1, 1-lmin(G_S)) for the Gram
matrix G_S of the columns in S; the constant is the maximum over supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from .blocks import BlockStructure
from .errors import CapacityError

__all__ = [
    "ENUMERATION_GUARD",
    "SensingMatrix",
    "RicReport",
    "ConditionCheck",
    "exact_block_ric",
    "sampled_block_ric",
    "ric_order_for",
    "recovery_threshold",
    "check_recovery_condition",
]

# largest number of block supports an exact computation may enumerate
ENUMERATION_GUARD = 1_000_000

# relative slack absorbing float noise in t*k before taking the ceiling
_CEIL_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    """An n-by-N sensing matrix together with the block structure of its columns."""

    entries: np.ndarray
    structure: BlockStructure

    def __post_init__(self) -> None:
        arr = np.array(self.entries, dtype=float, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"sensing matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("sensing matrix needs at least one row")
        if arr.shape[1] != self.structure.dimension:
            raise ValueError(
                f"matrix has {arr.shape[1]} columns but the structure has "
                f"dimension {self.structure.dimension}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def num_rows(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class RicReport:
    """A certified value (mode 'exact') or lower bound (mode 'sampled-lower-bound')
    of the block RIC at a given order."""

    order_k: int
    delta: float
    mode: str
    supports_examined: int
    extremal_support: tuple[int, ...]
    clamped: bool = False


@dataclass(frozen=True)
class ConditionCheck:
    """Outcome of testing delta against the recovery threshold sqrt((t-1)/t)."""

    met: bool
    margin: float
    threshold: float


def _support_deviation(gram: np.ndarray, support: Sequence[int], structure: BlockStructure) -> float:
    cols = np.concatenate([np.arange(structure.slice_of(i).start, structure.slice_of(i).stop)
                           for i in support])
    sub = gram[np.ix_(cols, cols)]
    eigs = np.linalg.eigvalsh(sub)
    return float(max(eigs[-1] - 1.0, 1.0 - eigs[0]))


def _scan_supports(A: SensingMatrix, k: int, supports: Iterator[tuple[int, ...]]) -> tuple[float, tuple[int, ...], int]:
    gram = A.entries.T @ A.entries
    best = -math.inf
    best_support: tuple[int, ...] = ()
    examined = 0
    # strict improvement keeps the lexicographically smallest extremal support
    for supp in supports:
        dev = _support_deviation(gram, supp, A.structure)
        examined += 1
        if dev > best:
            best = dev
            best_support = tuple(supp)
    return max(best, 0.0), best_support, examined


def exact_block_ric(A: SensingMatrix, k: int) -> RicReport:
    """Exact block RIC of order k by enumerating every size-k block support.

    Raises CapacityError when C(M, k) exceeds ENUMERATION_GUARD.
    """
    k = int(k)
    M = A.structure.num_blocks
    if not 1 <= k <= M:
        raise ValueError(f"k={k} must be in [1, {M}]")
    count = math.comb(M, k)
    if count > ENUMERATION_GUARD:
        raise CapacityError(
            f"C({M},{k}) = {count} supports exceeds the enumeration guard "
            f"{ENUMERATION_GUARD}"
        )
    delta, support, examined = _scan_supports(A, k, combinations(range(M), k))
    return RicReport(
        order_k=k,
        delta=delta,
        mode="exact",
        supports_examined=examined,
        extremal_support=support,
    )


def sampled_block_ric(A: SensingMatrix, k: int, trials: int, seed: int) -> RicReport:
    """Lower-bound the block RIC from `trials` distinct uniformly drawn supports.

    Deterministic given the seed. Falls back to the exact computation when the
    trial budget covers every support.
    """
    k = int(k)
    trials = int(trials)
    M = A.structure.num_blocks
    if not 1 <= k <= M:
        raise ValueError(f"k={k} must be in [1, {M}]")
    if trials < 1:
        raise ValueError("trials must be positive")
    count = math.comb(M, k)
    if trials >= count and count <= ENUMERATION_GUARD:
        return exact_block_ric(A, k)

    rng = np.random.default_rng(seed)
    seen: set[tuple[int, ...]] = set()
    while len(seen) < trials:
        supp = tuple(sorted(int(i) for i in rng.choice(M, size=k, replace=False)))
        seen.add(supp)
    # sorted scan makes the report independent of draw order
    delta, support, examined = _scan_supports(A, k, iter(sorted(seen)))
    return RicReport(
        order_k=k,
        delta=delta,
        mode="sampled-lower-bound",
        supports_examined=examined,
        extremal_support=support,
    )


def ric_order_for(t: float, k: int) -> int:
    """Block-sparsity order ceil(t*k) used by the order-tk RIC.

    A relative slack guards against t*k landing a hair above an integer in
    floating point.
    """
    t = float(t)
    k = int(k)
    if not t > 1.0:
        raise ValueError(f"t={t} must be > 1")
    if k < 1:
        raise ValueError(f"k={k} must be >= 1")
    tk = t * k
    return int(math.ceil(tk - _CEIL_EPS * max(1.0, abs(tk))))


def recovery_threshold(t: float) -> float:
    """The critical RIC level sqrt((t-1)/t) for order-tk recovery."""
    t = float(t)
    if not t > 1.0:
        raise ValueError(f"t={t} must be > 1")
    return math.sqrt((t - 1.0) / t)


def check_recovery_condition(delta_tk: float, t: float) -> ConditionCheck:
    """Strict test delta_tk < sqrt((t-1)/t); the boundary does not qualify."""
    delta_tk = float(delta_tk)
    if delta_tk < 0.0:
        raise ValueError(f"delta_tk={delta_tk} must be nonnegative")
    threshold = recovery_threshold(t)
    return ConditionCheck(
        met=delta_tk < threshold,
        margin=threshold - delta_tk,
        threshold=threshold,
    )
