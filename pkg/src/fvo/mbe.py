"""Many-body expansion over virtual-orbital fragments and its spatial wrapper.

Subset energies are correlation energies relative to the Hartree-Fock
reference, so the empty subset contributes exactly zero. Terms and totals
are always summed in canonical key order, which makes reports independent
of how many workers evaluated the subsets.
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

from .errors import DependencyError, FVOError, SolverError, UsageError
from .fragmentation import OrbitalPartition, SubsetKey, subset_keys, subset_union
from .integrals import MOIntegrals
from .reference import hf_reference_energy
from .solvers import CorrelationResult, SubspaceSpec, solve

logger = logging.getLogger(__name__)

__all__ = [
    "KCAL_PER_HARTREE",
    "MBETerm",
    "MBEReport",
    "SubsetCache",
    "delta_term",
    "expand",
    "mbe_expand",
    "SpatialExpansionInput",
    "spatial_expand",
    "SpatialFragmentRun",
    "HierarchicalReport",
    "hierarchical_expand",
]

KCAL_PER_HARTREE = 627.509474


@dataclass(frozen=True)
class MBETerm:
    key: SubsetKey
    delta_e: float

    @property
    def order(self) -> int:
        return self.key.order


def delta_term(energies: Mapping[SubsetKey, float], key: SubsetKey) -> MBETerm:
    """Inclusion-exclusion increment sum_{T<=S} (-1)^{|S|-|T|} E(O u T)."""
    total = 0.0
    for sub in key.subsets():
        try:
            value = energies[sub]
        except KeyError:
            raise DependencyError(
                f"subset energy {sub} is required by term {key} but was not computed"
            ) from None
        total += value if (key.order - sub.order) % 2 == 0 else -value
    return MBETerm(key, total)


class SubsetCache:
    """Memo table guaranteeing at most one evaluation per key across threads."""

    def __init__(self, evaluate: Callable[[SubsetKey], float]):
        self._evaluate = evaluate
        self._lock = threading.Lock()
        self._futures: dict[SubsetKey, Future] = {}
        self.evaluations = 0

    def get(self, key: SubsetKey) -> float:
        with self._lock:
            fut = self._futures.get(key)
            owner = fut is None
            if owner:
                fut = Future()
                self._futures[key] = fut
                self.evaluations += 1
        if owner:
            try:
                fut.set_result(self._evaluate(key))
            except SolverError as exc:
                fut.set_exception(exc)
            except Exception as exc:
                fut.set_exception(SolverError(key, exc))
        return fut.result()

    def values(self) -> dict[SubsetKey, float]:
        with self._lock:
            done = dict(self._futures)
        return {k: f.result() for k, f in sorted(done.items()) if f.done()}


@dataclass(frozen=True)
class MBEReport:
    solver_tag: str
    n_fragments: int
    max_order: int
    subset_energies: Mapping[SubsetKey, float]
    terms: tuple[MBETerm, ...]
    truncated_totals: Mapping[int, float]
    evaluations: int
    reference_energy: float | None = None
    full_energy: float | None = None
    errors_vs_full: Mapping[int, tuple[float, float]] | None = None
    flags: Mapping[SubsetKey, tuple[str, ...]] = field(default_factory=dict)

    def order_sums(self) -> dict[int, float]:
        sums = {n: 0.0 for n in range(1, self.max_order + 1)}
        for term in self.terms:
            if term.order:
                sums[term.order] += term.delta_e
        return sums

    def terms_of_order(self, n: int) -> list[MBETerm]:
        return [t for t in self.terms if t.order == n]

    def cumulative_evaluations(self, n: int) -> int:
        """Subset evaluations needed to reach order ``n`` (empty subset included)."""
        return sum(1 for k in self.subset_energies if k.order <= n)

    def total_energy(self, n: int) -> float:
        if self.reference_energy is None:
            raise UsageError("report carries no reference energy")
        return self.reference_energy + self.truncated_totals[n]


def expand(
    energy: Callable[[SubsetKey], float] | SubsetCache,
    n_fragments: int,
    max_order: int,
    compute_full: bool = False,
    jobs: int = 1,
    solver_tag: str = "synthetic",
) -> MBEReport:
    """Run the expansion over any subset-energy function.

    ``energy`` must return the correlation energy of ``O`` plus the union of
    the fragments in a key; it is called once per key through a memo cache.
    """
    if n_fragments < 1:
        raise UsageError("need at least one fragment")
    if not 1 <= max_order <= n_fragments:
        raise UsageError(f"max_order={max_order} outside 1..{n_fragments}")
    if jobs < 1:
        raise UsageError("jobs must be >= 1")
    cache = energy if isinstance(energy, SubsetCache) else SubsetCache(energy)
    keys = subset_keys(n_fragments, max_order)
    full_key = SubsetKey.full(n_fragments)
    wanted = keys + ([full_key] if compute_full and max_order < n_fragments else [])

    if jobs == 1:
        for key in wanted:
            cache.get(key)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(cache.get, wanted))

    energies = cache.values()
    terms = tuple(delta_term(energies, key) for key in keys)
    totals: dict[int, float] = {}
    running = 0.0
    for n in range(1, max_order + 1):
        for term in terms:
            if term.order == n:
                running += term.delta_e
        totals[n] = running

    full = errors = None
    if compute_full:
        full = energies[full_key]
        errors = {
            n: (totals[n] - full, (totals[n] - full) * KCAL_PER_HARTREE) for n in totals
        }
    return MBEReport(
        solver_tag=solver_tag,
        n_fragments=n_fragments,
        max_order=max_order,
        subset_energies={k: energies[k] for k in sorted(energies)},
        terms=terms,
        truncated_totals=totals,
        evaluations=cache.evaluations,
        full_energy=full,
        errors_vs_full=errors,
    )


def mbe_expand(
    ints: MOIntegrals,
    partition: OrbitalPartition,
    solver_tag: str,
    max_order: int,
    compute_full: bool = False,
    jobs: int = 1,
    solver_options: Mapping | None = None,
    solver: Callable[[MOIntegrals, SubspaceSpec], CorrelationResult] | None = None,
) -> MBEReport:
    """Expansion of the correlation energy of ``ints`` over ``partition``.

    ``solver`` overrides the dispatch facade (same call signature as the
    kernels); the report still carries ``solver_tag``.
    """
    partition.check_covers(ints)
    options = dict(solver_options or {})
    results: dict[SubsetKey, CorrelationResult] = {}

    def evaluate(key: SubsetKey) -> float:
        sub = subset_union(partition, key)
        try:
            res = solver(ints, sub) if solver else solve(solver_tag, ints, sub, **options)
        except FVOError as exc:
            raise SolverError(key, exc) from exc
        results[key] = res
        return res.e_corr

    report = expand(evaluate, partition.n_fragments, max_order, compute_full, jobs, solver_tag)
    flags = {k: results[k].flags for k in sorted(results) if results[k].flags}
    return replace(
        report, reference_energy=hf_reference_energy(ints, partition.occupied), flags=flags
    )


# -- spatial layer -----------------------------------------------------------


@dataclass(frozen=True)
class SpatialExpansionInput:
    """Monomer energies ``E_i`` and dimer energies ``E_ij`` (Hartree)."""

    monomer_energies: Mapping[str, float]
    dimer_energies: Mapping[tuple[str, str], float]

    def __post_init__(self):
        dimers: dict[tuple[str, str], float] = {}
        for (i, j), value in self.dimer_energies.items():
            if i == j:
                raise UsageError(f"dimer ({i}, {j}) pairs a monomer with itself")
            key = (i, j) if str(i) <= str(j) else (j, i)
            if key in dimers and dimers[key] != value:
                raise UsageError(f"dimer {key} given twice with different energies")
            dimers[key] = float(value)
        object.__setattr__(self, "monomer_energies", dict(self.monomer_energies))
        object.__setattr__(self, "dimer_energies", dimers)

    def dimer(self, i: str, j: str) -> float:
        return self.dimer_energies[(i, j) if str(i) <= str(j) else (j, i)]


def spatial_expand(inp: SpatialExpansionInput) -> float:
    """Two-body spatial total sum_i E_i + sum_{i<j} (E_ij - E_i - E_j).

    Pairs without a dimer energy contribute no correction.
    """
    mono = inp.monomer_energies
    dangling = sorted(p for p in inp.dimer_energies if p[0] not in mono or p[1] not in mono)
    if dangling:
        raise UsageError(f"dimers reference undeclared monomers: {dangling}")
    total = 0.0
    for value in mono.values():
        total += value
    for (i, j) in sorted(inp.dimer_energies, key=lambda p: (str(p[0]), str(p[1]))):
        total += inp.dimer_energies[(i, j)] - mono[i] - mono[j]
    return total


@dataclass(frozen=True)
class SpatialFragmentRun:
    """One monomer or dimer calculation of a hierarchical run."""

    name: str
    monomers: tuple[str, ...]
    integrals: MOIntegrals
    partition: OrbitalPartition
    max_order: int

    def __post_init__(self):
        if len(self.monomers) not in (1, 2):
            raise UsageError(f"{self.name}: spatial fragments are monomers or dimers")


@dataclass(frozen=True)
class HierarchicalReport:
    solver_tag: str
    runs: Mapping[str, MBEReport]
    spatial_input: SpatialExpansionInput
    total_energy: float

    def fragment_total(self, name: str) -> float:
        rep = self.runs[name]
        return rep.total_energy(rep.max_order)


def hierarchical_expand(
    runs: Sequence[SpatialFragmentRun],
    solver_tag: str,
    jobs: int = 1,
    solver_options: Mapping | None = None,
) -> HierarchicalReport:
    """Virtual-orbital expansion inside every spatial fragment, then the
    two-body spatial expansion over their totals."""
    if not runs:
        raise UsageError("hierarchical run needs at least one spatial fragment")
    names = [r.name for r in runs]
    if len(set(names)) != len(names):
        raise UsageError(f"duplicate spatial fragment names in {names}")
    reports: dict[str, MBEReport] = {}
    monomers: dict[str, float] = {}
    dimers: dict[tuple[str, str], float] = {}
    for run in runs:
        try:
            rep = mbe_expand(
                run.integrals, run.partition, solver_tag, run.max_order,
                jobs=jobs, solver_options=solver_options,
            )
        except SolverError as exc:
            raise SolverError(exc.key, exc.cause, context=run.name) from exc
        except UsageError as exc:
            raise UsageError(f"spatial fragment {run.name}: {exc}") from exc
        reports[run.name] = rep
        total = rep.total_energy(run.max_order)
        if len(run.monomers) == 1:
            if run.monomers[0] in monomers:
                raise UsageError(f"monomer {run.monomers[0]} defined twice")
            monomers[run.monomers[0]] = total
        else:
            dimers[tuple(run.monomers)] = total
    spatial = SpatialExpansionInput(monomers, dimers)
    return HierarchicalReport(solver_tag, reports, spatial, spatial_expand(spatial))
