import numpy as np
import pytest

from fvo import (
    ConvergenceError,
    MOIntegrals,
    OccupiedSpace,
    ResourceLimitError,
    SubspaceSpec,
    UsageError,
    ansatz_estimate,
    fci_energy,
    solve,
)
from fvo.solvers import active_space, fci_hamiltonian
from fvo.vqe import (
    PauliTerm,
    QubitHamiltonian,
    UCCSDAnsatz,
    expectation,
    jordan_wigner,
    uccsd_excitations,
    vqe_energy,
    vqe_optimize,
)

from conftest import full_subspace, load, random_integrals


def test_number_operator_mapping():
    h = np.diag([0.3, 0.7])
    ints = MOIntegrals.from_arrays(h, np.zeros((2,) * 4), 2)
    ham = jordan_wigner(ints, SubspaceSpec(OccupiedSpace((0,)), (1,)))
    coeffs = {t.operators: t.coefficient for t in ham.terms}
    # n_p = (I - Z_p)/2 scaled by h_pp, for both spins
    assert coeffs["ZIII"] == coeffs["IIZI"] == pytest.approx(-0.15)
    assert coeffs["IZII"] == coeffs["IIIZ"] == pytest.approx(-0.35)
    assert coeffs["IIII"] == pytest.approx(0.3 + 0.7)
    assert len(coeffs) == 5


def test_zero_integrals_give_identity():
    ints = MOIntegrals(2, 2, {}, {}, e_nuclear=0.75)
    ham = jordan_wigner(ints, full_subspace(ints))
    assert ham.terms == (PauliTerm(0.75, "IIII"),)
    assert ham.n_qubits == 4


def test_terms_merged():
    ham = QubitHamiltonian.from_terms([(0.5, "ZI"), (0.25, "ZI"), (1.0, "XX"), (-1.0, "XX")], 2)
    assert ham.terms == (PauliTerm(0.75, "ZI"),)
    with pytest.raises(UsageError):
        QubitHamiltonian((PauliTerm(1.0, "ZI"), PauliTerm(2.0, "ZI")), 2)
    with pytest.raises(UsageError):
        PauliTerm(1.0, "ZQ")


def test_pauli_matrices():
    x = QubitHamiltonian.from_terms([(1.0, "X")], 1).to_dense()
    y = QubitHamiltonian.from_terms([(1.0, "Y")], 1).to_dense()
    z = QubitHamiltonian.from_terms([(1.0, "Z")], 1).to_dense()
    assert np.allclose(x, [[0, 1], [1, 0]])
    assert np.allclose(y, [[0, -1j], [1j, 0]])
    assert np.allclose(z, [[1, 0], [0, -1]])


def test_h2_spectrum_matches_fci():
    ints = load("h2_sto3g")
    sub = full_subspace(ints)
    ham = jordan_wigner(ints, sub)
    assert ham.n_qubits == 4
    h_det, _ = fci_hamiltonian(active_space(ints, sub))
    jw = np.linalg.eigvalsh(ham.sector(1, 1))
    assert np.max(np.abs(jw - np.linalg.eigvalsh(h_det))) < 1e-9
    assert np.linalg.eigvalsh(ham.to_dense())[0] == pytest.approx(fci_energy(ints, sub).e_total, abs=1e-10)


@pytest.mark.parametrize("seed", [0, 1])
def test_random_eight_qubit_spectrum(seed):
    ints = random_integrals(4, 4, seed=seed)
    sub = full_subspace(ints)
    ham = jordan_wigner(ints, sub)
    h_det, _ = fci_hamiltonian(active_space(ints, sub))
    jw = np.linalg.eigvalsh(ham.sector(2, 2))
    assert np.max(np.abs(jw - np.linalg.eigvalsh(h_det))) < 1e-9
    dense = ham.to_dense()
    assert np.allclose(dense, dense.conj().T, atol=1e-12)


def test_frozen_core_spectrum():
    ints = load("h2o_sto3g")
    sub = SubspaceSpec(OccupiedSpace.aufbau(ints, 1), (5, 6))
    ham = jordan_wigner(ints, sub)
    assert ham.n_qubits == 12
    assert np.linalg.eigvalsh(ham.sector(4, 4))[0] == pytest.approx(fci_energy(ints, sub).e_total, abs=1e-9)


def test_qubit_cap():
    ints = load("h4_chain_631g")
    with pytest.raises(ResourceLimitError, match="16 qubits.*12"):
        jordan_wigner(ints, full_subspace(ints), cap=12)


def test_expectation_examples():
    z = QubitHamiltonian.from_terms([(0.8, "Z")], 1)
    assert expectation(z, np.array([1.0, 0.0])) == pytest.approx(0.8)
    ident = QubitHamiltonian.from_terms([(1.5, "II")], 2)
    psi = np.array([0.5, 0.5j, -0.5, 0.5])
    assert expectation(ident, psi) == pytest.approx(1.5)


def test_expectation_errors():
    z = QubitHamiltonian.from_terms([(1.0, "Z")], 1)
    with pytest.raises(UsageError, match="shape"):
        expectation(z, np.ones(4) / 2)
    with pytest.raises(UsageError, match="normalized"):
        expectation(z, np.array([1.0, 1.0]))


def test_expectation_random_pauli_sum():
    rng = np.random.default_rng(3)
    n = 4
    terms = ["".join(rng.choice(list("IXYZ"), size=n)) for _ in range(25)]
    ham = QubitHamiltonian.from_terms([(float(rng.normal()), t) for t in terms], n)
    dense = ham.to_dense()
    for _ in range(10):
        psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        psi /= np.linalg.norm(psi)
        assert expectation(ham, psi) == pytest.approx(float(np.vdot(psi, dense @ psi).real), abs=1e-10)


def test_parameter_counts_match_estimator():
    for o in range(0, 9):
        for v in range(0, 9 - o):
            assert len(uccsd_excitations(o, v)) == ansatz_estimate(o, v).n_parameters
    for o, v in [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3)]:
        ansatz = UCCSDAnsatz(o, v)
        assert ansatz.n_parameters == ansatz_estimate(o, v).n_parameters
        assert ansatz.initial_state().parameters.shape == (ansatz.n_parameters,)


def test_ansatz_preserves_norm_and_sector():
    ansatz = UCCSDAnsatz(2, 2)
    theta = np.random.default_rng(0).normal(scale=0.3, size=ansatz.n_parameters)
    psi = ansatz.state(theta)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)
    outside = np.setdiff1d(np.arange(psi.size), ansatz.sector)
    assert np.all(psi[outside] == 0.0)
    assert ansatz.state(np.zeros(ansatz.n_parameters))[ansatz.reference_occupation] == 1.0


def test_h2_vqe_matches_fci(refs):
    ints = load("h2_sto3g")
    res = vqe_energy(ints, full_subspace(ints))
    assert abs(res.e_total - refs["h2_sto3g"]["fci"]) < 1e-6
    assert res.e_total >= fci_energy(ints, full_subspace(ints)).e_total - 1e-9


def test_zero_parameter_ansatz_returns_reference():
    ints = load("h2_sto3g")
    occ = OccupiedSpace.aufbau(ints)
    sub = SubspaceSpec(occ, ())
    res = vqe_energy(ints, sub)
    assert res.e_corr == 0.0
    assert res.e_total == fci_energy(ints, sub).e_total
    ham = QubitHamiltonian.from_terms([(-1.0, "ZZ")], 2)
    direct = vqe_optimize(ham, UCCSDAnsatz(1, 0), reference_energy=-0.5)
    assert direct.e_total == -0.5 and direct.e_corr == 0.0


def test_variational_bound_on_h4(refs):
    ints = load("h4_chain_sto3g")
    res = solve("vqe", ints, full_subspace(ints))
    assert res.e_total >= refs["h4_chain_sto3g"]["fci"] - 1e-9
    assert res.e_total < refs["h4_chain_sto3g"]["hf"]


def test_convergence_error_carries_best_energy():
    ints = load("h4_chain_sto3g")
    with pytest.raises(ConvergenceError) as info:
        vqe_energy(ints, full_subspace(ints), max_iter=5)
    assert np.isfinite(info.value.best_energy)


def test_mismatched_qubits():
    ham = QubitHamiltonian.from_terms([(1.0, "ZZ")], 2)
    with pytest.raises(UsageError):
        vqe_optimize(ham, UCCSDAnsatz(1, 1))
