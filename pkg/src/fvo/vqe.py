"""Statevector VQE with a Trotterized spin-adapted UCCSD ansatz.

Spin-orbitals are ordered all-alpha then all-beta over the active spatial
orbitals (active occupied first, then virtuals); spin-orbital ``p`` is qubit
``p``, the ``p``-th least significant bit of a basis index, and ``1`` means
occupied. Pauli strings are stored in symplectic form ``(x, z)`` with
``P(x, z) = i^{|x&z|} X^x Z^z`` so that ``(1, 1)`` on one qubit is ``Y``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.optimize
import scipy.sparse
import scipy.sparse.linalg

from .errors import ConsistencyError, ConvergenceError, ResourceLimitError, UsageError
from .integrals import MOIntegrals
from .reference import hf_reference_energy
from .resources import ansatz_estimate
from .solvers import (
    ActiveSpace,
    CorrelationResult,
    SubspaceSpec,
    active_space,
    register_solver,
)

logger = logging.getLogger(__name__)

__all__ = [
    "PauliTerm",
    "QubitHamiltonian",
    "AnsatzState",
    "UCCSDAnsatz",
    "uccsd_excitations",
    "jordan_wigner",
    "jordan_wigner_active",
    "expectation",
    "vqe_optimize",
    "vqe_energy",
    "DEFAULT_QUBIT_CAP",
    "MAX_ITERATIONS",
]

DEFAULT_QUBIT_CAP = 16
MAX_ITERATIONS = 5000
DEFAULT_TOL = 1e-6
IMAG_TOL = 1e-10
DROP_TOL = 1e-14
DENSE_SECTOR_LIMIT = 1024

_PAULI = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_SYMPLECTIC = {v: k for k, v in _PAULI.items()}


def _popcount(v: int) -> int:
    return bin(v).count("1")


def _multiply(x1: int, z1: int, x2: int, z2: int) -> tuple[int, int, int]:
    """``P(x1,z1) P(x2,z2) = i^k P(x1^x2, z1^z2)``; returns ``(k mod 4, x, z)``."""
    x, z = x1 ^ x2, z1 ^ z2
    k = _popcount(x1 & z1) + _popcount(x2 & z2) + 2 * _popcount(z1 & x2) - _popcount(x & z)
    return k % 4, x, z


_I_POW = (1, 1j, -1, -1j)


@dataclass(frozen=True)
class PauliTerm:
    """Real coefficient times a Pauli string; ``operators[q]`` acts on qubit ``q``."""

    coefficient: float
    operators: str

    def __post_init__(self):
        if set(self.operators) - set("IXYZ"):
            raise UsageError(f"invalid Pauli string {self.operators!r}")

    @property
    def symplectic(self) -> tuple[int, int]:
        x = z = 0
        for q, op in enumerate(self.operators):
            bx, bz = _SYMPLECTIC[op]
            x |= bx << q
            z |= bz << q
        return x, z

    @classmethod
    def from_symplectic(cls, coefficient: float, x: int, z: int, n_qubits: int) -> "PauliTerm":
        ops = "".join(_PAULI[(x >> q & 1, z >> q & 1)] for q in range(n_qubits))
        return cls(float(coefficient), ops)


class PauliSum:
    """Mutable accumulator of complex-weighted Pauli strings."""

    def __init__(self, terms: Mapping[tuple[int, int], complex] | None = None):
        self.terms: dict[tuple[int, int], complex] = dict(terms or {})

    def add(self, x: int, z: int, coeff: complex) -> None:
        self.terms[(x, z)] = self.terms.get((x, z), 0.0) + coeff

    def __mul__(self, other: "PauliSum") -> "PauliSum":
        out = PauliSum()
        for (x1, z1), c1 in self.terms.items():
            for (x2, z2), c2 in other.terms.items():
                k, x, z = _multiply(x1, z1, x2, z2)
                out.add(x, z, _I_POW[k] * c1 * c2)
        return out

    def iadd_scaled(self, other: "PauliSum", scale: complex) -> None:
        for (x, z), c in other.terms.items():
            self.add(x, z, scale * c)


def _ladder(p: int, dagger: bool) -> PauliSum:
    chain = (1 << p) - 1
    bit = 1 << p
    # a_p = Z_<p (X_p + iY_p)/2, a_p^+ = Z_<p (X_p - iY_p)/2
    return PauliSum({(bit, chain): 0.5, (bit, chain | bit): (-0.5j if dagger else 0.5j)})


@dataclass(frozen=True)
class QubitHamiltonian:
    terms: tuple[PauliTerm, ...]
    n_qubits: int

    def __post_init__(self):
        seen = set()
        for t in self.terms:
            if len(t.operators) != self.n_qubits:
                raise UsageError("Pauli string length does not match n_qubits")
            if t.operators in seen:
                raise UsageError(f"duplicate Pauli string {t.operators}")
            seen.add(t.operators)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[float, str]], n_qubits: int) -> "QubitHamiltonian":
        """Merge repeated strings and drop vanishing coefficients."""
        merged: dict[str, float] = {}
        for coeff, ops in terms:
            merged[ops] = merged.get(ops, 0.0) + coeff
        return cls(
            tuple(PauliTerm(c, o) for o, c in sorted(merged.items()) if abs(c) > DROP_TOL),
            n_qubits,
        )

    @property
    def constant(self) -> float:
        ident = "I" * self.n_qubits
        return sum(t.coefficient for t in self.terms if t.operators == ident)

    def to_sparse(self) -> scipy.sparse.csr_matrix:
        dim = 1 << self.n_qubits
        basis = np.arange(dim, dtype=np.int64)
        mat = scipy.sparse.csr_matrix((dim, dim), dtype=complex)
        rows, cols, vals = [], [], []
        for term in self.terms:
            x, z = term.symplectic
            sign = 1 - 2 * (np.bitwise_count(basis & z).astype(np.int64) & 1)
            phase = _I_POW[_popcount(x & z) % 4]
            rows.append(basis ^ x)
            cols.append(basis)
            vals.append(term.coefficient * phase * sign)
        if rows:
            mat = scipy.sparse.coo_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(dim, dim),
            ).tocsr()
        return mat

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def sector(self, n_alpha: int, n_beta: int) -> np.ndarray:
        """Dense block on basis states with the given alpha/beta electron counts."""
        n = self.n_qubits // 2
        basis = np.arange(1 << self.n_qubits, dtype=np.int64)
        alpha = np.bitwise_count(basis & ((1 << n) - 1))
        beta = np.bitwise_count(basis >> n)
        keep = np.nonzero((alpha == n_alpha) & (beta == n_beta))[0]
        block = self.to_sparse()[keep][:, keep].toarray()
        return block


def jordan_wigner_active(space: ActiveSpace, cap: int = DEFAULT_QUBIT_CAP) -> QubitHamiltonian:
    """Map a frozen-core-folded active-space Hamiltonian to Pauli form."""
    n = space.n_orbitals
    nq = 2 * n
    if nq > cap:
        raise ResourceLimitError(nq, cap, "qubits")
    lad = {(p, d): _ladder(p, d) for p in range(nq) for d in (False, True)}
    excit: dict[tuple[int, int], PauliSum] = {}

    def e(p: int, q: int) -> PauliSum:
        if (p, q) not in excit:
            excit[(p, q)] = lad[(p, True)] * lad[(q, False)]
        return excit[(p, q)]

    total = PauliSum({(0, 0): space.e_core})
    h, g = space.h, space.eri
    for sigma in (0, n):
        for p in range(n):
            for q in range(n):
                if h[p, q] != 0.0:
                    total.iadd_scaled(e(p + sigma, q + sigma), h[p, q])
    # 1/2 sum (pq|rs) a+_p,s a+_r,t a_s,t a_q,s  =  1/2 (pq|rs) [E_pq E_rs - d_qr E_ps]
    for s1 in (0, n):
        for s2 in (0, n):
            for p, q, r, s in zip(*np.nonzero(g)):
                val = 0.5 * g[p, q, r, s]
                P, Q, R, S = p + s1, q + s1, r + s2, s + s2
                total.iadd_scaled(e(P, Q) * e(R, S), val)
                if Q == R:
                    total.iadd_scaled(e(P, S), -val)

    terms = []
    for (x, z), c in sorted(total.terms.items()):
        if abs(c.imag) > IMAG_TOL:
            raise ConsistencyError(f"non-Hermitian Pauli coefficient {c} on {(x, z)}")
        if abs(c.real) > DROP_TOL or (x, z) == (0, 0):
            terms.append(PauliTerm.from_symplectic(c.real, x, z, nq))
    return QubitHamiltonian(tuple(terms), nq)


def jordan_wigner(ints: MOIntegrals, sub: SubspaceSpec, cap: int = DEFAULT_QUBIT_CAP) -> QubitHamiltonian:
    """Qubit Hamiltonian of the active subspace; the identity term carries
    the nuclear repulsion and frozen-core energy."""
    sub.validate_for(ints)
    if 2 * sub.n_active_spatial > cap:
        raise ResourceLimitError(2 * sub.n_active_spatial, cap, "qubits")
    return jordan_wigner_active(active_space(ints, sub), cap)


def expectation(hamiltonian: QubitHamiltonian | scipy.sparse.spmatrix, statevector: np.ndarray) -> float:
    psi = np.asarray(statevector)
    if isinstance(hamiltonian, QubitHamiltonian):
        dim = 1 << hamiltonian.n_qubits
        mat = hamiltonian.to_sparse()
    else:
        mat = hamiltonian
        dim = mat.shape[0]
    if psi.shape != (dim,):
        raise UsageError(f"statevector of shape {psi.shape} does not match dimension {dim}")
    norm = float(np.vdot(psi, psi).real)
    if abs(norm - 1.0) > 1e-10:
        raise UsageError(f"statevector is not normalized (norm^2 = {norm})")
    value = complex(np.vdot(psi, mat @ psi))
    if abs(value.imag) > 1e-9:
        raise ConsistencyError(f"expectation value has imaginary part {value.imag:.3e}")
    return value.real


# -- ansatz ------------------------------------------------------------------


def _annihilators(n_qubits: int) -> list[scipy.sparse.csr_matrix]:
    dim = 1 << n_qubits
    basis = np.arange(dim, dtype=np.int64)
    ops = []
    for p in range(n_qubits):
        occ = np.nonzero(basis >> p & 1)[0]
        sign = 1.0 - 2.0 * (np.bitwise_count(occ & ((1 << p) - 1)).astype(np.int64) & 1)
        ops.append(
            scipy.sparse.csr_matrix((sign, (occ ^ (1 << p), occ)), shape=(dim, dim))
        )
    return ops


@dataclass(frozen=True)
class AnsatzState:
    parameters: np.ndarray
    reference_occupation: int
    n_qubits: int

    def reference_vector(self) -> np.ndarray:
        psi = np.zeros(1 << self.n_qubits)
        psi[self.reference_occupation] = 1.0
        return psi


def uccsd_excitations(n_occupied: int, n_virtual: int) -> list[tuple]:
    """Excitation labels in application order, with active indices
    (occupied ``0..o-1``, virtual ``o..o+v-1``)."""
    occ = range(n_occupied)
    vir = range(n_occupied, n_occupied + n_virtual)
    labels: list[tuple] = [("single", i, a) for i in occ for a in vir]
    for i, j in itertools.combinations_with_replacement(occ, 2):
        for a, b in itertools.combinations_with_replacement(vir, 2):
            labels.append(("double", i, j, a, b))
    return labels


class UCCSDAnsatz:
    """Spin-adapted closed-shell UCCSD with one first-order Trotter step.

    Generators, in application order: singles ``E_ai - E_ia`` for each
    ``(i, a)``, then doubles ``T - T^+`` with ``T = E_ai E_bj + E_aj E_bi``
    for each ``i <= j``, ``a <= b`` (lexicographic). ``E_pq`` is the
    spin-summed excitation operator.
    """

    def __init__(self, n_occupied: int, n_virtual: int):
        self.n_occupied = n_occupied
        self.n_virtual = n_virtual
        n = n_occupied + n_virtual
        self.n_qubits = 2 * n
        self.generators: list[scipy.sparse.csr_matrix] = []
        self.labels: list[tuple] = []
        if not n_occupied or not n_virtual:
            self._prepare_sector()
            return
        ann = _annihilators(self.n_qubits)
        cre = [a.T.tocsr() for a in ann]

        def E(p, q):
            return cre[p] @ ann[q] + cre[p + n] @ ann[q + n]

        for label in uccsd_excitations(n_occupied, n_virtual):
            if label[0] == "single":
                _, i, a = label
                t = E(a, i)
            else:
                _, i, j, a, b = label
                t = E(a, i) @ E(b, j) + E(a, j) @ E(b, i)
            g = (t - t.T).tocsr()
            g.eliminate_zeros()
            self.generators.append(g)
            self.labels.append(label)
        self._prepare_sector()

    @property
    def n_parameters(self) -> int:
        return len(self.generators)

    @property
    def reference_occupation(self) -> int:
        n = self.n_occupied + self.n_virtual
        alpha = (1 << self.n_occupied) - 1
        return alpha | (alpha << n)

    def initial_state(self) -> AnsatzState:
        return AnsatzState(np.zeros(self.n_parameters), self.reference_occupation, self.n_qubits)

    def _prepare_sector(self) -> None:
        n = self.n_occupied + self.n_virtual
        basis = np.arange(1 << self.n_qubits, dtype=np.int64)
        alpha = np.bitwise_count(basis & ((1 << n) - 1))
        beta = np.bitwise_count(basis >> n)
        self.sector = np.nonzero((alpha == self.n_occupied) & (beta == self.n_occupied))[0]
        self._ref_pos = int(np.searchsorted(self.sector, self.reference_occupation))
        self._propagators = []
        for gen in self.generators:
            block = gen[self.sector][:, self.sector]
            if len(self.sector) <= DENSE_SECTOR_LIMIT:
                # real antisymmetric G: -iG is Hermitian, exp(tG) = V exp(i t w) V^+
                w, v = np.linalg.eigh(-1j * block.toarray())
                self._propagators.append((w, v))
            else:
                self._propagators.append(block.tocsr())

    def sector_state(self, parameters: np.ndarray) -> np.ndarray:
        """Ansatz state restricted to the reference's particle-number sector."""
        psi = np.zeros(len(self.sector), dtype=complex)
        psi[self._ref_pos] = 1.0
        for theta, prop in zip(parameters, self._propagators):
            if theta == 0.0:
                continue
            if isinstance(prop, tuple):
                w, v = prop
                psi = v @ (np.exp(1j * theta * w) * (v.conj().T @ psi))
            else:
                psi = scipy.sparse.linalg.expm_multiply(theta * prop, psi)
        return psi.real

    def state(self, parameters: np.ndarray) -> np.ndarray:
        """Full ``2**n_qubits`` statevector of the ansatz."""
        psi = np.zeros(1 << self.n_qubits)
        psi[self.sector] = self.sector_state(parameters)
        return psi


def vqe_optimize(
    hamiltonian: QubitHamiltonian,
    ansatz: UCCSDAnsatz,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITERATIONS,
    initial: AnsatzState | None = None,
    subspace: SubspaceSpec | None = None,
    reference_energy: float | None = None,
) -> CorrelationResult:
    """Minimize the ansatz energy with COBYLA from the reference determinant.

    ``e_corr`` is measured from ``reference_energy`` when given, otherwise
    from the energy of the reference determinant itself.
    """
    if tol <= 0:
        raise UsageError("tol must be positive")
    if hamiltonian.n_qubits != ansatz.n_qubits:
        raise UsageError("ansatz and Hamiltonian act on different qubit counts")
    expected = ansatz_estimate(ansatz.n_occupied, ansatz.n_virtual).n_parameters
    if ansatz.n_parameters != expected:
        raise ConsistencyError(f"ansatz has {ansatz.n_parameters} parameters, expected {expected}")
    start = initial or ansatz.initial_state()
    if len(start.parameters) != ansatz.n_parameters:
        raise UsageError("initial parameter count does not match the ansatz")

    full = hamiltonian.to_sparse()
    if full.nnz and abs(full.imag).max() > IMAG_TOL:
        raise ConsistencyError("qubit Hamiltonian has complex matrix elements")
    mat = full.real.tocsr()[ansatz.sector][:, ansatz.sector]
    e_ref_det = float(mat[ansatz._ref_pos, ansatz._ref_pos])
    reference = e_ref_det if reference_energy is None else reference_energy

    if ansatz.n_parameters == 0:
        return CorrelationResult(0.0, reference, "vqe", subspace)

    best = {"energy": np.inf, "x": None, "calls": 0}

    def energy(theta: np.ndarray) -> float:
        psi = ansatz.sector_state(theta)
        value = float(psi @ (mat @ psi))
        best["calls"] += 1
        if value < best["energy"]:
            best["energy"], best["x"] = value, np.array(theta)
        return value

    res = scipy.optimize.minimize(
        energy,
        np.asarray(start.parameters, dtype=float),
        method="COBYLA",
        options={"maxiter": max_iter, "rhobeg": 0.1, "tol": tol},
    )
    if best["calls"] >= max_iter and not res.success:
        raise ConvergenceError(f"COBYLA stopped after {best['calls']} evaluations", best["energy"])
    e_vqe = best["energy"]
    logger.debug("vqe: %d evaluations, E=%.12f", best["calls"], e_vqe)
    return CorrelationResult(e_vqe - reference, e_vqe, "vqe", subspace)


def vqe_energy(
    ints: MOIntegrals,
    sub: SubspaceSpec,
    tol: float = DEFAULT_TOL,
    cap: int = DEFAULT_QUBIT_CAP,
    max_iter: int = MAX_ITERATIONS,
) -> CorrelationResult:
    """Solver-facade entry point: UCCSD-VQE on ``O`` plus ``sub.virtuals``."""
    sub.validate_for(ints)
    reference = hf_reference_energy(ints, sub.occupied)
    if 2 * sub.n_active_spatial > cap:
        raise ResourceLimitError(2 * sub.n_active_spatial, cap, "qubits")
    if not sub.virtuals or not sub.occupied.active:
        return CorrelationResult(0.0, reference, "vqe", sub)
    space = active_space(ints, sub)
    ham = jordan_wigner_active(space, cap)
    ansatz = UCCSDAnsatz(space.n_occupied, space.n_virtual)
    return vqe_optimize(ham, ansatz, tol, max_iter, subspace=sub, reference_energy=reference)


register_solver("vqe", vqe_energy)
