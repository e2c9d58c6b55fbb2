"""Correlation-energy kernels evaluated on ``O`` plus a chosen virtual subset.

Every kernel keeps the complete occupied space. Frozen-core orbitals are
folded into a constant and an effective one-electron operator, so only the
active occupied orbitals and the selected virtuals are correlated.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import ConsistencyError, DegenerateGapError, ResourceLimitError, UsageError
from .integrals import MOIntegrals
from .reference import OccupiedSpace, fock_diagonal, fock_matrix, hf_reference_energy

logger = logging.getLogger(__name__)

__all__ = [
    "SubspaceSpec",
    "CorrelationResult",
    "ActiveSpace",
    "active_space",
    "mp2_energy",
    "mp2_pair_energies",
    "fci_energy",
    "fci_hamiltonian",
    "solve",
    "register_solver",
    "available_solvers",
    "DEFAULT_FCI_CAP",
    "DENSE_LIMIT",
]

DEFAULT_FCI_CAP = 16
DENSE_LIMIT = 2000
NONCANONICAL_TOL = 1e-6
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class SubspaceSpec:
    """Full occupied space plus an ordered subset of virtual orbitals."""

    occupied: OccupiedSpace
    virtuals: tuple[int, ...] = ()

    def __post_init__(self):
        virt = tuple(int(a) for a in self.virtuals)
        object.__setattr__(self, "virtuals", virt)
        if len(set(virt)) != len(virt):
            raise UsageError(f"duplicate virtual orbitals in {virt}")
        clash = set(virt) & set(self.occupied.occupied)
        if clash:
            raise UsageError(f"virtuals overlap the occupied space: {sorted(clash)}")

    def validate_for(self, ints: MOIntegrals) -> None:
        self.occupied.validate_for(ints)
        bad = [a for a in self.virtuals if not 0 <= a < ints.n_orbitals]
        if bad:
            raise UsageError(f"virtual indices outside the basis: {bad}")

    @property
    def n_active_spatial(self) -> int:
        return len(self.occupied.active) + len(self.virtuals)


@dataclass(frozen=True)
class CorrelationResult:
    e_corr: float
    e_total: float
    method_tag: str
    subspace: SubspaceSpec
    flags: tuple[str, ...] = ()

    @property
    def reference_energy(self) -> float:
        return self.e_total - self.e_corr


def _result(e_corr: float, reference: float, tag: str, sub: SubspaceSpec, flags=()):
    return CorrelationResult(float(e_corr), float(reference + e_corr), tag, sub, tuple(flags))


@dataclass(frozen=True)
class ActiveSpace:
    """Frozen-core-folded Hamiltonian over active occupied + selected virtuals.

    ``orbitals`` lists the original spatial indices, active occupied first.
    """

    orbitals: tuple[int, ...]
    n_occupied: int
    e_core: float
    h: np.ndarray
    eri: np.ndarray
    reference_energy: float = field(compare=False)

    @property
    def n_orbitals(self) -> int:
        return len(self.orbitals)

    @property
    def n_virtual(self) -> int:
        return self.n_orbitals - self.n_occupied


def active_space(ints: MOIntegrals, sub: SubspaceSpec) -> ActiveSpace:
    sub.validate_for(ints)
    occ = sub.occupied
    core = np.array(occ.frozen, dtype=int)
    act = np.array(occ.active + sub.virtuals, dtype=int)
    h = ints.h_matrix
    g = ints.eri_tensor
    e_core = ints.e_nuclear
    h_eff = h[np.ix_(act, act)].copy()
    if core.size:
        cc = g[np.ix_(core, core, core, core)]
        e_core += 2.0 * h[core, core].sum()
        e_core += 2.0 * np.einsum("iijj->", cc) - np.einsum("ijij->", cc)
        coul = np.einsum("pqcc->pq", g[np.ix_(act, act, core, core)])
        exch = np.einsum("pccq->pq", g[np.ix_(act, core, core, act)])
        h_eff += 2.0 * coul - exch
    eri = g[np.ix_(act, act, act, act)].copy()
    h_eff.setflags(write=False)
    eri.setflags(write=False)
    return ActiveSpace(
        orbitals=tuple(int(p) for p in act),
        n_occupied=len(occ.active),
        e_core=float(e_core),
        h=h_eff,
        eri=eri,
        reference_energy=hf_reference_energy(ints, occ),
    )


# -- MP2 ---------------------------------------------------------------------


def _mp2_tensors(ints: MOIntegrals, sub: SubspaceSpec):
    sub.validate_for(ints)
    occ_idx = np.array(sub.occupied.active, dtype=int)
    vir_idx = np.array(sub.virtuals, dtype=int)
    eps = fock_diagonal(ints, sub.occupied).values
    ovov = ints.eri_tensor[np.ix_(occ_idx, vir_idx, occ_idx, vir_idx)]
    e_o = eps[occ_idx]
    e_v = eps[vir_idx]
    denom = e_o[:, None, None, None] - e_v[None, :, None, None] + e_o[None, None, :, None] - e_v[None, None, None, :]
    bad = np.argwhere(denom >= 0.0)
    if bad.size:
        i, a, j, b = bad[0]
        raise DegenerateGapError(
            (int(occ_idx[i]), int(occ_idx[j]), int(vir_idx[a]), int(vir_idx[b])),
            float(denom[i, a, j, b]),
        )
    return ovov, denom


def _mp2_flags(ints: MOIntegrals, sub: SubspaceSpec) -> tuple[str, ...]:
    if len(sub.virtuals) < 2:
        return ()
    vir_idx = np.array(sub.virtuals, dtype=int)
    fvv = fock_matrix(ints, sub.occupied)[np.ix_(vir_idx, vir_idx)]
    off = fvv - np.diag(np.diag(fvv))
    if np.linalg.norm(off) > NONCANONICAL_TOL:
        return ("noncanonical-virtuals",)
    return ()


def mp2_energy(ints: MOIntegrals, sub: SubspaceSpec) -> CorrelationResult:
    """Closed-shell MP2 over the active occupied orbitals and ``sub.virtuals``.

    Uses the Fock diagonal as denominator even for localized virtuals; such
    results carry the ``"noncanonical-virtuals"`` flag.
    """
    reference = hf_reference_energy(ints, sub.occupied)
    if not sub.virtuals:
        sub.validate_for(ints)
        return _result(0.0, reference, "mp2", sub)
    if not sub.occupied.active:
        raise UsageError("MP2 needs at least one non-frozen occupied orbital")
    ovov, denom = _mp2_tensors(ints, sub)
    exchange = ovov.transpose(0, 3, 2, 1)
    e_corr = float(np.sum(ovov * (2.0 * ovov - exchange) / denom))
    return _result(e_corr, reference, "mp2", sub, _mp2_flags(ints, sub))


def mp2_pair_energies(ints: MOIntegrals, sub: SubspaceSpec) -> dict[tuple[int, int], float]:
    """Per-(a, b) virtual-pair contributions, summed over occupied pairs."""
    if not sub.virtuals:
        return {}
    ovov, denom = _mp2_tensors(ints, sub)
    exchange = ovov.transpose(0, 3, 2, 1)
    terms = np.sum(ovov * (2.0 * ovov - exchange) / denom, axis=(0, 2))
    return {
        (a, b): float(terms[ia, ib])
        for ia, a in enumerate(sub.virtuals)
        for ib, b in enumerate(sub.virtuals)
    }


# -- FCI ---------------------------------------------------------------------


def _strings(n_orb: int, n_elec: int) -> list[int]:
    """Occupation bitstrings in lexicographic order of their orbital tuples."""
    return [sum(1 << p for p in combo) for combo in itertools.combinations(range(n_orb), n_elec)]


def _spin_orbital_integrals(space: ActiveSpace):
    """h and antisymmetrized <pq||rs>; alpha spin-orbitals first."""
    n = space.n_orbitals
    nso = 2 * n
    h_so = np.zeros((nso, nso))
    h_so[:n, :n] = space.h
    h_so[n:, n:] = space.h
    # <pq|rs> = (pr|qs) for matching spins
    phys = np.zeros((nso, nso, nso, nso))
    chem = space.eri
    for s1 in (0, 1):
        for s2 in (0, 1):
            a = slice(s1 * n, (s1 + 1) * n)
            b = slice(s2 * n, (s2 + 1) * n)
            phys[a, b, a, b] = chem.transpose(0, 2, 1, 3)
    anti = phys - phys.transpose(0, 1, 3, 2)
    return h_so, anti


def _ladder_sign(state: int, p: int) -> int:
    return -1 if bin(state & ((1 << p) - 1)).count("1") % 2 else 1


def _bits(state: int, nso: int) -> list[int]:
    return [p for p in range(nso) if state >> p & 1]


def fci_hamiltonian(space: ActiveSpace):
    """Slater-Condon Hamiltonian over all Ms=0 determinants of ``space``.

    Returns ``(H, dets)`` where ``dets`` are spin-orbital bitstrings (alpha
    bits ``0..n-1``, beta bits ``n..2n-1``) ordered alpha-major, each spin
    string lexicographic. ``H`` is dense below ``DENSE_LIMIT`` determinants
    and CSR above.
    """
    n = space.n_orbitals
    nso = 2 * n
    alpha = _strings(n, space.n_occupied)
    dets = [a | (b << n) for a in alpha for b in alpha]
    index = {d: k for k, d in enumerate(dets)}
    h_so, anti = _spin_orbital_integrals(space)
    spin = [0] * n + [1] * n

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for col, det in enumerate(dets):
        occ = _bits(det, nso)
        vir = [p for p in range(nso) if not det >> p & 1]
        diag = space.e_core + sum(h_so[i, i] for i in occ)
        diag += 0.5 * sum(anti[i, j, i, j] for i in occ for j in occ)
        rows.append(col)
        cols.append(col)
        vals.append(diag)
        for i in occ:
            for a in vir:
                if spin[i] != spin[a]:
                    continue
                elem = h_so[a, i] + sum(anti[a, j, i, j] for j in occ)
                if elem == 0.0:
                    continue
                s1 = det ^ (1 << i)
                sign = _ladder_sign(det, i) * _ladder_sign(s1, a)
                rows.append(index[s1 | (1 << a)])
                cols.append(col)
                vals.append(sign * elem)
        for i, j in itertools.combinations(occ, 2):
            for a, b in itertools.combinations(vir, 2):
                if sorted((spin[i], spin[j])) != sorted((spin[a], spin[b])):
                    continue
                elem = anti[a, b, i, j]
                if elem == 0.0:
                    continue
                # phase of a+_a a+_b a_j a_i acting on det
                s = det
                sign = _ladder_sign(s, i)
                s ^= 1 << i
                sign *= _ladder_sign(s, j)
                s ^= 1 << j
                sign *= _ladder_sign(s, b)
                s |= 1 << b
                sign *= _ladder_sign(s, a)
                s |= 1 << a
                rows.append(index[s])
                cols.append(col)
                vals.append(sign * elem)

    dim = len(dets)
    mat = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    asym = abs(mat - mat.T)
    if asym.nnz and asym.max() > SYMMETRY_TOL:
        raise ConsistencyError(f"FCI Hamiltonian asymmetric by {asym.max():.3e}")
    if dim < DENSE_LIMIT:
        return mat.toarray(), dets
    return mat, dets


def _lowest_eigenvalue(h) -> float:
    if isinstance(h, np.ndarray):
        return float(np.linalg.eigvalsh(h)[0])
    v0 = np.ones(h.shape[0]) / np.sqrt(h.shape[0])
    vals = scipy.sparse.linalg.eigsh(h, k=1, which="SA", v0=v0, tol=1e-12)[0]
    return float(vals[0])


def fci_energy(ints: MOIntegrals, sub: SubspaceSpec, cap: int = DEFAULT_FCI_CAP) -> CorrelationResult:
    """Exact diagonalization within the active occupied + ``sub.virtuals`` space."""
    sub.validate_for(ints)
    required = 2 * sub.n_active_spatial
    if required > cap:
        raise ResourceLimitError(required, cap)
    reference = hf_reference_energy(ints, sub.occupied)
    if not sub.virtuals or not sub.occupied.active:
        return _result(0.0, reference, "fci", sub)
    space = active_space(ints, sub)
    h, _ = fci_hamiltonian(space)
    diag = np.asarray(h.diagonal())
    if isinstance(h, np.ndarray):
        coupled = np.count_nonzero(h) > np.count_nonzero(diag)
    else:
        coupled = h.count_nonzero() > np.count_nonzero(diag)
    e_fci = _lowest_eigenvalue(h) if coupled else float(diag.min())
    # measured against the reference determinant's own diagonal element so
    # that a diagonal Hamiltonian yields exactly zero correlation
    return _result(e_fci - float(diag[0]), reference, "fci", sub)


# -- dispatch ----------------------------------------------------------------

Solver = Callable[..., CorrelationResult]

_SOLVERS: dict[str, Solver] = {"mp2": mp2_energy, "fci": fci_energy}


def register_solver(tag: str, fn: Solver) -> None:
    _SOLVERS[tag] = fn


def available_solvers() -> tuple[str, ...]:
    _load_plugins()
    return tuple(sorted(_SOLVERS))


def _load_plugins() -> None:
    if "vqe" not in _SOLVERS:
        from . import vqe  # noqa: F401  registers itself


def solve(method_tag: str, ints: MOIntegrals, sub: SubspaceSpec, **options) -> CorrelationResult:
    """Route to the kernel registered under ``method_tag``."""
    _load_plugins()
    try:
        fn = _SOLVERS[method_tag]
    except KeyError:
        raise UsageError(
            f"unknown solver {method_tag!r}; choose from {sorted(_SOLVERS)}"
        ) from None
    return fn(ints, sub, **options)
