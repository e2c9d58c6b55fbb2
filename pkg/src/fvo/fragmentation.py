"""Virtual-space partitions and the subset algebra used by the expansion.

Sidecar grammar (orbital indices are 1-based, as in FCIDUMP; coordinates
in bohr unless a ``units angstrom`` line precedes them)::

    # comment
    units bohr
    group <name>
      [symbol] x y z
      ...
    end
    <orbital> x y z [label]

One orbital record per virtual orbital. ``group`` blocks declare the atom
sets used for proximity assignment; their declaration order breaks ties.
"""

from __future__ import annotations

import io
import itertools
import logging
import math
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError, UsageError
from .integrals import MOIntegrals
from .reference import OccupiedSpace
from .solvers import SubspaceSpec

logger = logging.getLogger(__name__)

__all__ = [
    "SubsetKey",
    "OrbitalPartition",
    "OrbitalCentroids",
    "virtual_orbitals",
    "partition_explicit",
    "partition_blocks",
    "partition_by_energy",
    "partition_by_centroid",
    "default_fragment_count",
    "subset_union",
    "subset_keys",
    "parse_sidecar",
    "read_sidecar",
]

ANGSTROM_TO_BOHR = 1.0 / 0.52917721092


@dataclass(frozen=True)
class SubsetKey:
    """Set of fragments (1-based) encoded as a bitmask; bit ``i-1`` is fragment ``i``."""

    mask: int = 0

    def __post_init__(self):
        if self.mask < 0:
            raise UsageError("subset mask must be non-negative")

    @classmethod
    def of(cls, *fragments: int) -> "SubsetKey":
        return cls.from_fragments(fragments)

    @classmethod
    def from_fragments(cls, fragments: Iterable[int]) -> "SubsetKey":
        mask = 0
        for f in fragments:
            if f < 1:
                raise UsageError(f"fragment labels are 1-based, got {f}")
            mask |= 1 << (f - 1)
        return cls(mask)

    @classmethod
    def full(cls, n_fragments: int) -> "SubsetKey":
        return cls((1 << n_fragments) - 1)

    @property
    def fragments(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in range(self.mask.bit_length()) if self.mask >> i & 1)

    @property
    def order(self) -> int:
        return bin(self.mask).count("1")

    def subsets(self) -> list["SubsetKey"]:
        """All subsets, empty set included, in canonical order."""
        frags = self.fragments
        return [
            SubsetKey.from_fragments(c)
            for r in range(len(frags) + 1)
            for c in itertools.combinations(frags, r)
        ]

    def sort_key(self) -> tuple[int, tuple[int, ...]]:
        return (self.order, self.fragments)

    def __lt__(self, other: "SubsetKey") -> bool:
        return self.sort_key() < other.sort_key()

    def __or__(self, other: "SubsetKey") -> "SubsetKey":
        return SubsetKey(self.mask | other.mask)

    def __str__(self) -> str:
        return "{" + ",".join(str(f) for f in self.fragments) + "}"


def subset_keys(n_fragments: int, max_order: int) -> list[SubsetKey]:
    """Every key with ``0 <= order <= max_order`` in canonical order."""
    return [
        SubsetKey.from_fragments(c)
        for r in range(max_order + 1)
        for c in itertools.combinations(range(1, n_fragments + 1), r)
    ]


@dataclass(frozen=True)
class OrbitalPartition:
    occupied: OccupiedSpace
    fragments: tuple[tuple[int, ...], ...]
    strategy_tag: str = "explicit"
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        frags = tuple(tuple(sorted(int(a) for a in f)) for f in self.fragments)
        object.__setattr__(self, "fragments", frags)
        if not frags:
            raise UsageError("a partition needs at least one fragment")
        empty = [i + 1 for i, f in enumerate(frags) if not f]
        if empty:
            raise UsageError(f"empty fragments: {empty}")
        seen: dict[int, int] = {}
        for i, frag in enumerate(frags, start=1):
            for a in frag:
                if a in seen:
                    raise UsageError(f"orbital {a} appears in fragments {seen[a]} and {i}")
                seen[a] = i
        clash = set(seen) & set(self.occupied.occupied)
        if clash:
            raise UsageError(f"occupied orbitals assigned to fragments: {sorted(clash)}")
        if self.labels is not None and len(self.labels) != len(frags):
            raise UsageError("one label per fragment required")

    @property
    def n_fragments(self) -> int:
        return len(self.fragments)

    @property
    def virtuals(self) -> tuple[int, ...]:
        return tuple(sorted(a for f in self.fragments for a in f))

    def check_covers(self, ints: MOIntegrals) -> None:
        """Raise unless the fragments cover exactly the virtual space of ``ints``."""
        expected = set(virtual_orbitals(ints, self.occupied))
        got = set(self.virtuals)
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise UsageError(
                f"partition does not cover the virtual space (missing {missing}, extra {extra})"
            )

    def relabeled(self, order: Sequence[int]) -> "OrbitalPartition":
        """Fragments reordered so new fragment ``k`` is old fragment ``order[k]`` (0-based)."""
        if sorted(order) != list(range(self.n_fragments)):
            raise UsageError("order must be a permutation of fragment positions")
        labels = None if self.labels is None else tuple(self.labels[i] for i in order)
        return OrbitalPartition(
            self.occupied, tuple(self.fragments[i] for i in order), self.strategy_tag, labels
        )


def virtual_orbitals(ints: MOIntegrals, occupied: OccupiedSpace) -> tuple[int, ...]:
    occ = set(occupied.occupied)
    return tuple(p for p in range(ints.n_orbitals) if p not in occ)


def _natural_key(label: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", str(label))]


def partition_explicit(
    assignment: Mapping[int, str] | Iterable[tuple[int, str]],
    virtuals: Sequence[int],
    occupied: OccupiedSpace,
) -> OrbitalPartition:
    """Partition from a user-supplied orbital -> label map.

    Fragments are ordered by label (numeric runs compare numerically).
    """
    pairs = list(assignment.items()) if isinstance(assignment, Mapping) else list(assignment)
    counts: dict[int, int] = {}
    for orb, _ in pairs:
        counts[int(orb)] = counts.get(int(orb), 0) + 1
    problems = []
    doubled = sorted(o for o, c in counts.items() if c > 1)
    if doubled:
        problems.append(f"orbitals mapped more than once: {doubled}")
    missing = sorted(set(virtuals) - set(counts))
    if missing:
        problems.append(f"unmapped virtual orbitals: {missing}")
    extra = sorted(set(counts) - set(virtuals))
    if extra:
        problems.append(f"mapped orbitals that are not virtual: {extra}")
    if problems:
        raise UsageError("; ".join(problems))
    groups: dict[str, list[int]] = {}
    for orb, label in pairs:
        groups.setdefault(str(label), []).append(int(orb))
    labels = sorted(groups, key=_natural_key)
    return OrbitalPartition(
        occupied, tuple(tuple(groups[l]) for l in labels), "explicit", tuple(labels)
    )


def _block_split(ordered: Sequence[int], n_fragments: int) -> tuple[tuple[int, ...], ...]:
    if not 1 <= n_fragments <= len(ordered):
        raise UsageError(f"n_fragments={n_fragments} outside 1..{len(ordered)}")
    base, extra = divmod(len(ordered), n_fragments)
    out, start = [], 0
    for k in range(n_fragments):
        size = base + (1 if k < extra else 0)
        out.append(tuple(ordered[start : start + size]))
        start += size
    return tuple(out)


def partition_blocks(
    occupied: OccupiedSpace, virtuals: Sequence[int], n_fragments: int
) -> OrbitalPartition:
    """Contiguous index blocks whose sizes differ by at most one (larger first)."""
    return OrbitalPartition(occupied, _block_split(sorted(virtuals), n_fragments), "blocks")


def partition_by_energy(
    occupied: OccupiedSpace,
    virtuals: Sequence[int],
    orbital_energies: Sequence[float] | Mapping[int, float] | None,
    n_fragments: int,
) -> OrbitalPartition:
    """Sort virtuals by orbital energy (ties by index), then block-split."""
    if orbital_energies is None:
        raise UsageError("energy partitioning needs orbital energies")
    try:
        eps = {a: float(orbital_energies[a]) for a in virtuals}
    except (KeyError, IndexError):
        raise UsageError("orbital energies missing for some virtual orbitals") from None
    ordered = sorted(virtuals, key=lambda a: (eps[a], a))
    return OrbitalPartition(occupied, _block_split(ordered, n_fragments), "energy")


def default_fragment_count(n_virtual: int) -> int:
    """About a third of the virtual space per fragment."""
    return max(1, min(3, n_virtual))


@dataclass(frozen=True)
class OrbitalCentroids:
    """Virtual-orbital centroids plus named atom groups, all in bohr."""

    centroids: Mapping[int, tuple[float, float, float]]
    groups: tuple[tuple[str, np.ndarray], ...]
    labels: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        for orb, xyz in self.centroids.items():
            if len(xyz) != 3 or not all(math.isfinite(c) for c in xyz):
                raise UsageError(f"centroid of orbital {orb} is not a finite 3-vector")
        groups = []
        for name, atoms in self.groups:
            arr = np.asarray(atoms, dtype=float).reshape(-1, 3)
            if not np.all(np.isfinite(arr)):
                raise UsageError(f"atom group {name!r} has non-finite coordinates")
            groups.append((str(name), arr))
        object.__setattr__(self, "groups", tuple(groups))

    def translated(self, shift) -> "OrbitalCentroids":
        d = np.asarray(shift, dtype=float)
        return OrbitalCentroids(
            {o: tuple(float(c) for c in np.add(xyz, d)) for o, xyz in self.centroids.items()},
            tuple((name, atoms + d) for name, atoms in self.groups),
            dict(self.labels),
        )


def partition_by_centroid(
    occupied: OccupiedSpace, virtuals: Sequence[int], centroids: OrbitalCentroids
) -> OrbitalPartition:
    """Assign each virtual to the atom group holding its nearest atom.

    Distance is centroid-to-nearest-atom; ties go to the earlier-declared
    group. Groups that receive no orbital are dropped.
    """
    if not centroids.groups:
        raise UsageError("centroid partitioning needs at least one atom group")
    empty = [name for name, atoms in centroids.groups if atoms.shape[0] == 0]
    if empty:
        raise UsageError(f"empty atom groups: {empty}")
    missing = sorted(set(virtuals) - set(centroids.centroids))
    if missing:
        raise UsageError(f"no centroid for virtual orbitals {missing}")
    members: list[list[int]] = [[] for _ in centroids.groups]
    for a in sorted(virtuals):
        c = np.asarray(centroids.centroids[a])
        dists = [np.min(np.linalg.norm(atoms - c, axis=1)) for _, atoms in centroids.groups]
        members[int(np.argmin(dists))].append(a)
    kept = [(name, m) for (name, _), m in zip(centroids.groups, members) if m]
    dropped = [name for (name, _), m in zip(centroids.groups, members) if not m]
    if dropped:
        logger.warning("atom groups with no assigned virtual orbitals dropped: %s", dropped)
    return OrbitalPartition(
        occupied,
        tuple(tuple(m) for _, m in kept),
        "centroid",
        tuple(name for name, _ in kept),
    )


def subset_union(partition: OrbitalPartition, key: SubsetKey) -> SubspaceSpec:
    """Occupied space plus the union of the fragments selected by ``key``."""
    if key.mask >> partition.n_fragments:
        raise UsageError(f"key {key} references fragments beyond {partition.n_fragments}")
    virt = sorted(a for f in key.fragments for a in partition.fragments[f - 1])
    return SubspaceSpec(partition.occupied, tuple(virt))


def parse_sidecar(source: IO[str] | str) -> OrbitalCentroids:
    """Parse the centroid/assignment sidecar described in the module docstring.

    Orbital indices are converted to 0-based.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    scale = 1.0
    centroids: dict[int, tuple[float, float, float]] = {}
    labels: dict[int, str] = {}
    groups: list[tuple[str, list]] = []
    names: set[str] = set()
    current: list | None = None
    for lineno, raw in enumerate(source.read().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        head = fields[0].lower()
        try:
            if head == "units":
                unit = fields[1].lower() if len(fields) == 2 else ""
                if unit not in ("bohr", "angstrom"):
                    raise ParseError(f"unknown units {line!r}", lineno)
                scale = ANGSTROM_TO_BOHR if unit == "angstrom" else 1.0
            elif head == "group":
                if current is not None:
                    raise ParseError("nested group block", lineno)
                if len(fields) != 2:
                    raise ParseError("expected 'group <name>'", lineno)
                if fields[1] in names:
                    raise ParseError(f"duplicate group name {fields[1]!r}", lineno)
                names.add(fields[1])
                current = []
                groups.append((fields[1], current))
            elif head == "end":
                if current is None:
                    raise ParseError("'end' outside a group block", lineno)
                current = None
            elif current is not None:
                coords = fields[-3:] if len(fields) in (3, 4) else None
                if coords is None:
                    raise ParseError("expected '[symbol] x y z' inside group", lineno)
                current.append([float(c) * scale for c in coords])
            else:
                if len(fields) not in (4, 5):
                    raise ParseError("expected 'orbital x y z [label]'", lineno)
                orb = int(fields[0]) - 1
                if orb < 0:
                    raise ParseError("orbital indices are 1-based", lineno)
                if orb in centroids:
                    raise ParseError(f"orbital {orb + 1} listed twice", lineno)
                centroids[orb] = tuple(float(c) * scale for c in fields[1:4])
                if len(fields) == 5:
                    labels[orb] = fields[4]
        except ValueError as exc:
            raise ParseError(f"bad number in {raw.strip()!r}: {exc}", lineno) from None
    if current is not None:
        raise ParseError("unterminated group block")
    if labels and len(labels) != len(centroids):
        raise ParseError("fragment labels must be given for all orbitals or none")
    return OrbitalCentroids(centroids, tuple((n, np.array(a).reshape(-1, 3)) for n, a in groups), labels)


def read_sidecar(path) -> OrbitalCentroids:
    with open(path, encoding="utf-8") as fh:
        return parse_sidecar(fh)
