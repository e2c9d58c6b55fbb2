"""Molecular-orbital integral store and FCIDUMP reader/writer.

Integrals are kept sparse under canonical index keys so the 8-fold
permutational symmetry of real chemists'-notation ERIs holds by
construction. Indices are 0-based in the Python API and 1-based on disk.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import IO, Iterable, Mapping

import numpy as np

from .errors import ParseError, UsageError

__all__ = [
    "MOIntegrals",
    "canonical_eri_key",
    "canonical_h_key",
    "parse_fcidump",
    "read_fcidump",
    "write_fcidump",
    "dumps_fcidump",
]

DUPLICATE_TOL = 1e-10

_NAMELIST_ITEM = re.compile(
    r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)(?=[A-Za-z_][A-Za-z0-9_]*\s*=|$)",
    re.DOTALL,
)


def canonical_h_key(p: int, q: int) -> tuple[int, int]:
    return (p, q) if p >= q else (q, p)


def canonical_eri_key(p: int, q: int, r: int, s: int) -> tuple[int, int, int, int]:
    """Representative of the 8-fold permutation class of ``(pq|rs)``."""
    pq = (p, q) if p >= q else (q, p)
    rs = (r, s) if r >= s else (s, r)
    if pq < rs:
        pq, rs = rs, pq
    return pq + rs


def eri_permutations(p: int, q: int, r: int, s: int) -> set[tuple[int, int, int, int]]:
    return {
        (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
        (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
    }


@dataclass(frozen=True)
class MOIntegrals:
    """Closed-shell one- and two-electron integrals in an orthonormal MO basis.

    ``h_core`` and ``eri`` map canonical 0-based keys to values in Hartree;
    entries that are absent are exactly zero.
    """

    n_orbitals: int
    n_electrons: int
    h_core: Mapping[tuple[int, int], float]
    eri: Mapping[tuple[int, int, int, int], float]
    e_nuclear: float = 0.0
    ms2: int = 0
    orbital_energies: tuple[float, ...] | None = None
    orbsym: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n_orbitals < 0:
            raise UsageError("n_orbitals must be non-negative")
        if self.ms2 != 0 or self.n_electrons % 2:
            raise UsageError(
                f"only closed-shell systems are supported (NELEC={self.n_electrons}, "
                f"MS2={self.ms2})"
            )
        if self.n_electrons > 2 * self.n_orbitals:
            raise UsageError("more electrons than the basis can hold")
        n = self.n_orbitals
        for key in self.h_core:
            if key != canonical_h_key(*key) or not all(0 <= k < n for k in key):
                raise UsageError(f"non-canonical or out-of-range h key {key}")
        for key in self.eri:
            if key != canonical_eri_key(*key) or not all(0 <= k < n for k in key):
                raise UsageError(f"non-canonical or out-of-range eri key {key}")
        if self.orbital_energies is not None and len(self.orbital_energies) != n:
            raise UsageError("orbital_energies must have one entry per orbital")
        object.__setattr__(self, "h_core", MappingProxyType(dict(self.h_core)))
        object.__setattr__(self, "eri", MappingProxyType(dict(self.eri)))

    @classmethod
    def from_arrays(
        cls,
        h: np.ndarray,
        eri: np.ndarray,
        n_electrons: int,
        e_nuclear: float = 0.0,
        orbital_energies: Iterable[float] | None = None,
        atol: float = 1e-10,
    ) -> "MOIntegrals":
        """Build a store from dense arrays, checking their symmetry first."""
        h = np.asarray(h, dtype=float)
        eri = np.asarray(eri, dtype=float)
        n = h.shape[0]
        if h.shape != (n, n) or eri.shape != (n, n, n, n):
            raise UsageError("array shapes do not match (n,n) and (n,n,n,n)")
        if not np.allclose(h, h.T, atol=atol, rtol=0):
            raise UsageError("one-electron integrals are not symmetric")
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if not np.allclose(eri, eri.transpose(perm), atol=atol, rtol=0):
                raise UsageError("two-electron integrals lack 8-fold symmetry")
        h_map = {}
        for p in range(n):
            for q in range(p + 1):
                if h[p, q] != 0.0:
                    h_map[(p, q)] = float(h[p, q])
        eri_map = {}
        for p, q, r, s in zip(*np.nonzero(eri)):
            key = (int(p), int(q), int(r), int(s))
            if canonical_eri_key(*key) == key:
                eri_map[key] = float(eri[key])
        eps = None if orbital_energies is None else tuple(float(e) for e in orbital_energies)
        return cls(n, n_electrons, h_map, eri_map, float(e_nuclear), 0, eps)

    @property
    def n_occupied(self) -> int:
        return self.n_electrons // 2

    def _check(self, *idx: int) -> None:
        for i in idx:
            if not 0 <= i < self.n_orbitals:
                raise UsageError(f"orbital index {i} outside 0..{self.n_orbitals - 1}")

    def get_h(self, p: int, q: int) -> float:
        self._check(p, q)
        return self.h_core.get(canonical_h_key(p, q), 0.0)

    def get_eri(self, p: int, q: int, r: int, s: int) -> float:
        """Return ``(pq|rs)``; never-set entries are exactly ``0.0``."""
        self._check(p, q, r, s)
        return self.eri.get(canonical_eri_key(p, q, r, s), 0.0)

    @cached_property
    def h_matrix(self) -> np.ndarray:
        n = self.n_orbitals
        h = np.zeros((n, n))
        for (p, q), v in self.h_core.items():
            h[p, q] = h[q, p] = v
        h.setflags(write=False)
        return h

    @cached_property
    def eri_tensor(self) -> np.ndarray:
        n = self.n_orbitals
        g = np.zeros((n, n, n, n))
        for (p, q, r, s), v in self.eri.items():
            for perm in eri_permutations(p, q, r, s):
                g[perm] = v
        g.setflags(write=False)
        return g


def _parse_namelist(text: str, line: int) -> dict[str, list[str]]:
    body = re.sub(r"^\s*&\s*FCI", "", text, flags=re.IGNORECASE)
    body = re.sub(r"(&\s*END|/)\s*$", "", body.strip(), flags=re.IGNORECASE)
    items: dict[str, list[str]] = {}
    for match in _NAMELIST_ITEM.finditer(body):
        key = match.group(1).upper()
        values = [v for v in re.split(r"[,\s]+", match.group(2)) if v]
        items[key] = values
    return items


def _header_int(items: dict[str, list[str]], key: str, line: int, required=True):
    if key not in items or not items[key]:
        if required:
            raise ParseError(f"header is missing {key}", line)
        return None
    try:
        return int(items[key][0])
    except ValueError:
        raise ParseError(f"header field {key}={items[key][0]!r} is not an integer", line)


def _store(table: dict, key, value: float, line: int) -> None:
    old = table.get(key)
    if old is not None and abs(old - value) > DUPLICATE_TOL:
        raise ParseError(f"inconsistent duplicate entry {key}: {old!r} vs {value!r}", line)
    table.setdefault(key, value)


def parse_fcidump(source: IO[str] | str) -> MOIntegrals:
    """Read an FCIDUMP stream (or string) into an :class:`MOIntegrals`.

    Accepts comma- or whitespace-separated namelists terminated by ``&END``
    or ``/``, and Fortran ``D`` exponents. ``ORBSYM`` is kept but unused.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    lines = source.read().splitlines()

    header: list[str] = []
    lineno = 0
    for lineno, raw in enumerate(lines, start=1):
        if not header and not raw.strip():
            continue
        if not header and not raw.lstrip().upper().startswith("&FCI"):
            raise ParseError("expected '&FCI' namelist header", lineno)
        header.append(raw)
        if re.search(r"(&\s*END|^\s*/)\s*$", raw, flags=re.IGNORECASE) or raw.strip().endswith("/"):
            break
    else:
        raise ParseError("unterminated namelist header", lineno or None)
    header_end = lineno
    items = _parse_namelist(" ".join(header), header_end)
    norb = _header_int(items, "NORB", header_end)
    nelec = _header_int(items, "NELEC", header_end)
    ms2 = _header_int(items, "MS2", header_end, required=False) or 0
    if ms2 != 0 or nelec % 2:
        raise ParseError(
            f"open-shell input (NELEC={nelec}, MS2={ms2}) is not supported", header_end
        )
    if norb < 0 or nelec < 0 or nelec > 2 * norb:
        raise ParseError(f"inconsistent NORB={norb}, NELEC={nelec}", header_end)
    orbsym = None
    if "ORBSYM" in items:
        try:
            orbsym = tuple(int(v) for v in items["ORBSYM"])
        except ValueError:
            raise ParseError("ORBSYM entries must be integers", header_end)

    h_map: dict[tuple[int, int], float] = {}
    eri_map: dict[tuple[int, int, int, int], float] = {}
    eps: dict[int, float] = {}
    e_nuc: float | None = None

    for lineno in range(header_end + 1, len(lines) + 1):
        fields = lines[lineno - 1].split()
        if not fields:
            continue
        if len(fields) != 5:
            raise ParseError(f"expected 'value i j k l', got {len(fields)} fields", lineno)
        try:
            value = float(fields[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(f) for f in fields[1:])
        except ValueError:
            raise ParseError(f"cannot parse integral line {lines[lineno - 1]!r}", lineno)
        for idx in (i, j, k, l):
            if not 0 <= idx <= norb:
                raise ParseError(f"index {idx} outside 0..{norb}", lineno)
        if i and j and k and l:
            _store(eri_map, canonical_eri_key(i - 1, j - 1, k - 1, l - 1), value, lineno)
        elif i and j and not k and not l:
            _store(h_map, canonical_h_key(i - 1, j - 1), value, lineno)
        elif i and not j and not k and not l:
            _store(eps, i - 1, value, lineno)
        elif not (i or j or k or l):
            if e_nuc is not None and abs(e_nuc - value) > DUPLICATE_TOL:
                raise ParseError("inconsistent duplicate nuclear repulsion entry", lineno)
            e_nuc = value if e_nuc is None else e_nuc
        else:
            raise ParseError(f"unrecognised index pattern {i} {j} {k} {l}", lineno)

    orbital_energies = None
    if eps:
        if len(eps) != norb:
            raise ParseError(f"orbital energies given for {len(eps)} of {norb} orbitals")
        orbital_energies = tuple(eps[p] for p in range(norb))
    return MOIntegrals(
        n_orbitals=norb,
        n_electrons=nelec,
        h_core=h_map,
        eri=eri_map,
        e_nuclear=0.0 if e_nuc is None else e_nuc,
        ms2=ms2,
        orbital_energies=orbital_energies,
        orbsym=orbsym,
    )


def read_fcidump(path) -> MOIntegrals:
    with open(path, encoding="utf-8") as fh:
        return parse_fcidump(fh)


def write_fcidump(ints: MOIntegrals, stream: IO[str]) -> None:
    """Serialize in Knowles-Handy layout; values use shortest round-trip repr."""
    n = ints.n_orbitals
    orbsym = ints.orbsym or (1,) * n
    stream.write(f" &FCI NORB={n},NELEC={ints.n_electrons},MS2={ints.ms2},\n")
    stream.write("  ORBSYM=" + ",".join(str(s) for s in orbsym) + ",\n")
    stream.write("  ISYM=1,\n &END\n")
    for (p, q, r, s) in sorted(ints.eri):
        stream.write(f" {ints.eri[(p, q, r, s)]!r} {p + 1} {q + 1} {r + 1} {s + 1}\n")
    for (p, q) in sorted(ints.h_core):
        stream.write(f" {ints.h_core[(p, q)]!r} {p + 1} {q + 1} 0 0\n")
    if ints.orbital_energies is not None:
        for p, e in enumerate(ints.orbital_energies):
            stream.write(f" {e!r} {p + 1} 0 0 0\n")
    stream.write(f" {ints.e_nuclear!r} 0 0 0 0\n")


def dumps_fcidump(ints: MOIntegrals) -> str:
    buf = io.StringIO()
    write_fcidump(ints, buf)
    return buf.getvalue()
