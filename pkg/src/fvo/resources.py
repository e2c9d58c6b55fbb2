"""Qubit budgets and UCCSD-style ansatz size estimates for expansion plans.

One qubit per spin-orbital under Jordan-Wigner, so a calculation over
``o`` occupied and ``v`` virtual spatial orbitals needs ``2 (o + v)`` qubits.
The circuit-depth figure is a linear heuristic, not a compiled depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import UsageError
from .fragmentation import OrbitalPartition, SubsetKey, subset_keys

__all__ = [
    "QubitBudget",
    "AnsatzEstimate",
    "qubit_count",
    "budget_for_plan",
    "ansatz_estimate",
    "DEPTH_PER_SINGLE",
    "DEPTH_PER_DOUBLE",
]

DEPTH_PER_SINGLE = 2
DEPTH_PER_DOUBLE = 8


def qubit_count(occupied_count: int, virtual_count: int) -> int:
    if occupied_count < 0 or virtual_count < 0:
        raise UsageError("orbital counts must be non-negative")
    return 2 * (occupied_count + virtual_count)


@dataclass(frozen=True)
class QubitBudget:
    per_subset: Mapping[SubsetKey, int]
    max_per_order: Mapping[int, int]
    full_qubits: int
    reduction_percent: Mapping[int, float]
    n_active_occupied: int

    def table(self) -> list[tuple[int, int, float]]:
        """Rows of (order, max qubits, reduction %)."""
        return [(n, self.max_per_order[n], self.reduction_percent[n]) for n in sorted(self.max_per_order)]


def budget_for_plan(
    partition: OrbitalPartition, max_order: int, frozen_core: int | None = None
) -> QubitBudget:
    """Qubits for every expansion subset up to ``max_order``.

    ``frozen_core`` defaults to the partition's own frozen-core count; pass
    ``0`` to count every occupied orbital.
    """
    n = partition.n_fragments
    if not 1 <= max_order <= n:
        raise UsageError(f"max_order={max_order} outside 1..{n}")
    n_occ = len(partition.occupied.occupied)
    frozen = partition.occupied.n_frozen_core if frozen_core is None else frozen_core
    if not 0 <= frozen <= n_occ:
        raise UsageError(f"frozen_core={frozen} outside 0..{n_occ}")
    active = n_occ - frozen
    sizes = [len(f) for f in partition.fragments]
    per_subset = {
        key: qubit_count(active, sum(sizes[f - 1] for f in key.fragments))
        for key in subset_keys(n, max_order)
        if key.order
    }
    full = qubit_count(active, sum(sizes))
    max_per_order = {
        order: max(q for k, q in per_subset.items() if k.order == order)
        for order in range(1, max_order + 1)
    }
    reduction = {
        order: (100.0 * (full - q) / full if full else 0.0) for order, q in max_per_order.items()
    }
    return QubitBudget(per_subset, max_per_order, full, reduction, active)


@dataclass(frozen=True)
class AnsatzEstimate:
    n_singles: int
    n_doubles: int
    depth_estimate: int

    @property
    def n_parameters(self) -> int:
        return self.n_singles + self.n_doubles


def ansatz_estimate(
    occupied_count: int,
    virtual_count: int,
    depth_per_single: int = DEPTH_PER_SINGLE,
    depth_per_double: int = DEPTH_PER_DOUBLE,
) -> AnsatzEstimate:
    """Spin-adapted closed-shell UCCSD amplitude counts and a depth heuristic.

    Singles are ``o*v``; doubles count unordered occupied pairs times
    unordered virtual pairs, ``[o(o+1)/2][v(v+1)/2]``.
    """
    if occupied_count < 0 or virtual_count < 0:
        raise UsageError("orbital counts must be non-negative")
    o, v = occupied_count, virtual_count
    singles = o * v
    doubles = (o * (o + 1) // 2) * (v * (v + 1) // 2)
    return AnsatzEstimate(singles, doubles, depth_per_single * singles + depth_per_double * doubles)
