"""Convex decomposition of the block polytope into sparse atoms.

The polytope with parameters (alpha, k) holds every vector whose per-block
norms are at most alpha and whose mixed l2/l1 norm is at most k*alpha. Each
member is a convex combination of atoms: block k-sparse vectors supported
inside the member's support, with the same mixed l2/l1 norm and per-block
norms at most alpha. `decompose` constructs such a combination explicitly by
peeling one nonzero block per recursion level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import BlockStructure, BlockVector, block_support, norm_2_0, norm_2_1, norm_2_inf
from .errors import HypothesisNotMetError

__all__ = [
    "PolytopeSpec",
    "ConvexDecomposition",
    "in_polytope",
    "in_atom_set",
    "decompose",
    "check_tail_power_inequality",
]

# membership slacks: absolute on the per-block norm cap, relative on the
# mixed-norm equality (sums across blocks accumulate rounding)
_INF_SLACK = 1e-12
_SUM_SLACK = 1e-12
_EQ_RTOL = 1e-9

# convex weights below this are dropped and the rest renormalized
_WEIGHT_FLOOR = 1e-14


@dataclass(frozen=True)
class PolytopeSpec:
    """Parameters (alpha, k) of the block polytope and its atom sets."""

    alpha: float
    k: int

    def __post_init__(self) -> None:
        if not float(self.alpha) > 0.0:
            raise ValueError(f"alpha={self.alpha} must be positive")
        if int(self.k) < 1:
            raise ValueError(f"k={self.k} must be >= 1")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "k", int(self.k))


@dataclass(frozen=True, eq=False)
class ConvexDecomposition:
    """Weights and atoms with sum(weights[i] * atoms[i]) equal to the input."""

    weights: tuple[float, ...]
    atoms: tuple[BlockVector, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.atoms) or len(self.weights) == 0:
            raise ValueError("weights and atoms must be nonempty and equally long")
        if any(not 0.0 <= lam <= 1.0 for lam in self.weights):
            raise ValueError("weights must lie in [0, 1]")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {sum(self.weights)!r}, expected 1")

    def recombine(self) -> np.ndarray:
        out = np.zeros_like(self.atoms[0].values)
        for lam, atom in zip(self.weights, self.atoms):
            out += lam * atom.values
        return out


def in_polytope(v: BlockVector, spec: PolytopeSpec) -> bool:
    """Membership test: per-block norms <= alpha and mixed norm <= k*alpha."""
    return (
        norm_2_inf(v) <= spec.alpha + _INF_SLACK
        and norm_2_1(v) <= spec.k * spec.alpha + _SUM_SLACK
    )


def in_atom_set(u: BlockVector, v: BlockVector, spec: PolytopeSpec) -> bool:
    """Atom test relative to v: support containment, block k-sparsity,
    equal mixed l2/l1 norm, per-block norms <= alpha."""
    if u.structure != v.structure:
        raise ValueError("u and v must share a block structure")
    if not block_support(u) <= block_support(v):
        return False
    if norm_2_0(u) > spec.k:
        return False
    ref = norm_2_1(v)
    if abs(norm_2_1(u) - ref) > _EQ_RTOL * max(1.0, ref):
        return False
    return norm_2_inf(u) <= spec.alpha + _INF_SLACK


def _peel(values: np.ndarray, structure: BlockStructure, spec: PolytopeSpec,
          weight: float, out: list[tuple[float, np.ndarray]]) -> None:
    sums = np.add.reduceat(values * values, structure._starts)
    norms = np.sqrt(sums)
    nonzero = [int(i) for i in np.flatnonzero(norms)]
    s = len(nonzero)
    if s <= spec.k:
        out.append((weight, values))
        return

    # c_1 >= ... >= c_s with ties broken by ascending block index
    ranked = sorted(nonzero, key=lambda i: (-norms[i], i))
    c = norms[np.asarray(ranked)]
    alpha = spec.alpha

    # largest l (1-based) with c_l + ... + c_s <= (s-l)*alpha; nonempty since
    # the mixed norm is at most k*alpha <= (s-1)*alpha
    suffix = np.cumsum(c[::-1])[::-1]  # suffix[j] = c_{j+1} + ... + c_s (0-based)
    chosen = 0
    for l in range(s - 1, 0, -1):
        tail = float(suffix[l - 1])
        cap = (s - l) * alpha
        if tail <= cap * (1.0 + _EQ_RTOL) + _SUM_SLACK:
            chosen = l
            break
    if chosen == 0:
        raise RuntimeError("no feasible split level; polytope membership was violated")

    l = chosen
    tail_sum = float(suffix[l - 1])
    bbar = tail_sum / (s - l)  # shared block magnitude; also equals sum of b_j
    b = bbar - c[l - 1:]
    b = np.maximum(b, 0.0)  # exact math gives b_j > 0; clamp rounding dust

    head = ranked[: l - 1]
    tail_blocks = ranked[l - 1:]
    for offset, j in enumerate(tail_blocks):
        lam = float(b[offset]) / bbar
        if lam < _WEIGHT_FLOOR:
            continue
        child = np.zeros_like(values)
        for i in head:
            sl = structure.slice_of(i)
            child[sl] = values[sl]
        for i in tail_blocks:
            if i == j:
                continue
            sl = structure.slice_of(i)
            child[sl] = values[sl] * (bbar / norms[i])
        _peel(child, structure, spec, weight * lam, out)


def decompose(v: BlockVector, spec: PolytopeSpec) -> ConvexDecomposition:
    """Express a polytope member as a convex combination of sparse atoms.

    Follows the inductive construction: a block <=k-sparse member is its own
    single atom; otherwise the smallest blocks are averaged into children with
    one fewer nonzero block each, and the recursion continues. Children with
    negligible weight are dropped and the weights renormalized.

    Raises ValueError when v is not in the polytope. Termination is
    guaranteed because every level strictly reduces the block support.
    """
    if not in_polytope(v, spec):
        raise ValueError(
            f"vector is not in the block polytope: ||v||_2,inf={norm_2_inf(v)!r}, "
            f"||v||_2,1={norm_2_1(v)!r}, alpha={spec.alpha!r}, k={spec.k}"
        )
    collected: list[tuple[float, np.ndarray]] = []
    _peel(v.values.copy(), v.structure, spec, 1.0, collected)

    total = sum(lam for lam, _ in collected)
    # canonical order: lexicographic by atom coordinates, weight as tiebreak
    collected.sort(key=lambda pair: (tuple(pair[1]), pair[0]))
    weights = tuple(lam / total for lam, _ in collected)
    atoms = tuple(BlockVector(vals, v.structure) for _, vals in collected)
    return ConvexDecomposition(weights=weights, atoms=atoms)


def check_tail_power_inequality(a, k: int, lam: float, alpha: float) -> bool:
    """Probe the tail power inequality on a sorted nonnegative sequence.

    Given a_1 >= ... >= a_m >= 0 with sum(a_1..a_k) + lam >= sum(a_{k+1}..a_m),
    checks whether

        sum_{j>k} a_j^alpha  <=  k * ((sum_{i<=k} a_i^alpha / k)^(1/alpha) + lam/k)^alpha

    holds for alpha >= 1. The inequality is a theorem, so a False return from
    this probe on hypothesis-satisfying input indicates a bug; tests use it as
    a falsification target. Raises HypothesisNotMetError when the premise
    fails and ValueError on unsorted or invalid input.
    """
    seq = np.asarray(a, dtype=float).reshape(-1)
    k = int(k)
    lam = float(lam)
    alpha = float(alpha)
    if seq.size < 1 or k < 1 or seq.size < k:
        raise ValueError(f"need len(a) >= k >= 1, got len(a)={seq.size}, k={k}")
    if np.any(seq < 0.0):
        raise ValueError("sequence entries must be nonnegative")
    if np.any(np.diff(seq) > 0.0):
        raise ValueError("sequence must be sorted in nonincreasing order")
    if lam < 0.0:
        raise ValueError(f"lambda={lam} must be nonnegative")
    if alpha < 1.0:
        raise ValueError(f"alpha={alpha} must be >= 1")

    head = float(np.sum(seq[:k]))
    tail = float(np.sum(seq[k:]))
    if head + lam < tail * (1.0 - 1e-12):
        raise HypothesisNotMetError(
            f"sum of the first k entries plus lambda ({head + lam!r}) is below "
            f"the tail sum ({tail!r})"
        )

    lhs = float(np.sum(seq[k:] ** alpha))
    head_pow = float(np.sum(seq[:k] ** alpha))
    rhs = k * ((head_pow / k) ** (1.0 / alpha) + lam / k) ** alpha
    # tiny relative slack: equality cases must not fail to rounding
    return lhs <= rhs * (1.0 + 1e-9) + 1e-12
