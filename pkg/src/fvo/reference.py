"""Closed-shell Hartree-Fock reference energy and orbital energies."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .integrals import MOIntegrals

__all__ = [
    "OccupiedSpace",
    "OrbitalEnergies",
    "hf_reference_energy",
    "fock_matrix",
    "fock_diagonal",
]

FOCK_AGREEMENT_TOL = 1e-6


@dataclass(frozen=True)
class OccupiedSpace:
    """Doubly occupied orbitals of the reference determinant.

    The first ``n_frozen_core`` entries of ``occupied`` are the frozen core:
    they stay in the reference energy but are excluded from correlation.
    """

    occupied: tuple[int, ...]
    n_frozen_core: int = 0

    def __post_init__(self):
        occ = tuple(int(i) for i in self.occupied)
        object.__setattr__(self, "occupied", occ)
        if len(set(occ)) != len(occ):
            raise UsageError(f"duplicate occupied orbitals in {occ}")
        if any(i < 0 for i in occ):
            raise UsageError("occupied indices must be non-negative")
        if not 0 <= self.n_frozen_core <= len(occ):
            raise UsageError(
                f"n_frozen_core={self.n_frozen_core} outside 0..{len(occ)}"
            )

    @classmethod
    def aufbau(cls, ints: MOIntegrals, n_frozen_core: int = 0) -> "OccupiedSpace":
        """Lowest ``NELEC/2`` orbitals by index, the FCIDUMP convention."""
        return cls(tuple(range(ints.n_occupied)), n_frozen_core)

    @property
    def frozen(self) -> tuple[int, ...]:
        return self.occupied[: self.n_frozen_core]

    @property
    def active(self) -> tuple[int, ...]:
        return self.occupied[self.n_frozen_core :]

    def validate_for(self, ints: MOIntegrals) -> None:
        if len(self.occupied) != ints.n_occupied:
            raise UsageError(
                f"{len(self.occupied)} occupied orbitals inconsistent with "
                f"NELEC={ints.n_electrons}"
            )
        if any(i >= ints.n_orbitals for i in self.occupied):
            raise UsageError("occupied index outside the orbital basis")


@dataclass(frozen=True)
class OrbitalEnergies:
    values: np.ndarray
    source: str  # "computed" or "file"


def hf_reference_energy(ints: MOIntegrals, occ: OccupiedSpace) -> float:
    """E_nuc + 2 sum_i h_ii + sum_ij [2(ii|jj) - (ij|ij)] over occupied i, j."""
    occ.validate_for(ints)
    idx = np.array(occ.occupied, dtype=int)
    h = ints.h_matrix
    g = ints.eri_tensor
    one = 2.0 * h[idx, idx].sum()
    coulomb = g[np.ix_(idx, idx, idx, idx)]
    j = np.einsum("iijj->", coulomb)
    k = np.einsum("ijij->", coulomb)
    return float(ints.e_nuclear + one + 2.0 * j - k)


def fock_matrix(ints: MOIntegrals, occ: OccupiedSpace) -> np.ndarray:
    """Closed-shell Fock matrix F_pq = h_pq + sum_i [2(pq|ii) - (pi|iq)]."""
    occ.validate_for(ints)
    idx = np.array(occ.occupied, dtype=int)
    g = ints.eri_tensor
    coul = np.einsum("pqii->pq", g[:, :, idx][:, :, :, idx])
    exch = np.einsum("piiq->pq", g[:, idx][:, :, idx])
    return ints.h_matrix + 2.0 * coul - exch


def fock_diagonal(ints: MOIntegrals, occ: OccupiedSpace) -> OrbitalEnergies:
    """Orbital energies for perturbative denominators.

    File-supplied energies are returned when they agree with the computed
    Fock diagonal; otherwise a warning is issued and the computed values win,
    since localized virtuals make file energies meaningless.
    """
    computed = np.diag(fock_matrix(ints, occ)).copy()
    if ints.orbital_energies is None:
        return OrbitalEnergies(computed, "computed")
    supplied = np.array(ints.orbital_energies, dtype=float)
    gap = float(np.max(np.abs(supplied - computed))) if supplied.size else 0.0
    if gap > FOCK_AGREEMENT_TOL:
        warnings.warn(
            f"file orbital energies differ from the Fock diagonal by {gap:.2e} Ha; "
            "using computed values",
            RuntimeWarning,
            stacklevel=2,
        )
        return OrbitalEnergies(computed, "computed")
    return OrbitalEnergies(supplied, "file")

