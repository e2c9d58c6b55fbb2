import warnings

import numpy as np
import pytest

from fvo import MOIntegrals, OccupiedSpace, UsageError, fock_diagonal, hf_reference_energy
from fvo.reference import fock_matrix

from conftest import load, random_integrals


def test_nuclear_only():
    ints = MOIntegrals(2, 2, {}, {}, e_nuclear=1.0)
    assert hf_reference_energy(ints, OccupiedSpace((0,))) == 1.0


def test_one_orbital_hand_value():
    ints = MOIntegrals(1, 2, {(0, 0): -1.25}, {(0, 0, 0, 0): 0.675}, e_nuclear=0.7137)
    assert hf_reference_energy(ints, OccupiedSpace((0,))) == pytest.approx(-1.1113, abs=1e-12)


@pytest.mark.parametrize("name", ["h2_sto3g", "h4_chain_sto3g", "h4_chain_631g", "h2o_sto3g", "h2_dimer_631g_boys"])
def test_hf_matches_generating_program(name, refs):
    ints = load(name)
    assert hf_reference_energy(ints, OccupiedSpace.aufbau(ints)) == pytest.approx(refs[name]["hf"], abs=1e-9)


def test_wrong_occupation_count():
    ints = load("h2_sto3g")
    with pytest.raises(UsageError):
        hf_reference_energy(ints, OccupiedSpace((0, 1)))


def test_occupied_permutation_invariance():
    ints = load("h2o_sto3g")
    e0 = hf_reference_energy(ints, OccupiedSpace((0, 1, 2, 3, 4)))
    e1 = hf_reference_energy(ints, OccupiedSpace((4, 2, 0, 3, 1)))
    assert e1 == pytest.approx(e0, abs=1e-12)


def test_linearity_in_integrals():
    ints = random_integrals(5, 4, seed=1)
    occ = OccupiedSpace.aufbau(ints)
    base = MOIntegrals(5, 4, ints.h_core, ints.eri, 0.0)
    doubled = MOIntegrals(
        5, 4, {k: 2 * v for k, v in ints.h_core.items()}, {k: 2 * v for k, v in ints.eri.items()}, 0.0
    )
    assert hf_reference_energy(doubled, occ) == 2 * hf_reference_energy(base, occ)


def test_orbital_energy_identity():
    ints = load("h2o_sto3g")
    occ = OccupiedSpace.aufbau(ints)
    eps = fock_diagonal(ints, occ).values
    g = ints.eri_tensor
    idx = list(occ.occupied)
    two = sum(2 * g[i, i, j, j] - g[i, j, i, j] for i in idx for j in idx)
    assert 2 * eps[idx].sum() - two + ints.e_nuclear == pytest.approx(
        hf_reference_energy(ints, occ), abs=1e-10
    )


def test_bare_core_limit():
    h = np.diag([-1.0, -0.3, 0.4]) + 0.05
    ints = MOIntegrals.from_arrays(h, np.zeros((3,) * 4), 2)
    eps = fock_diagonal(ints, OccupiedSpace((0,)))
    assert np.array_equal(eps.values, np.diag(h))
    assert eps.source == "computed"


def test_file_energies_passthrough(refs):
    ints = load("h2_sto3g_eps")
    eps = fock_diagonal(ints, OccupiedSpace.aufbau(ints))
    assert eps.source == "file"
    assert tuple(eps.values) == ints.orbital_energies


def test_computed_matches_file_energies():
    ints = load("h2_sto3g_eps")
    occ = OccupiedSpace.aufbau(ints)
    computed = np.diag(fock_matrix(ints, occ))
    assert np.max(np.abs(computed - np.array(ints.orbital_energies))) < 1e-8


def test_disagreeing_file_energies_warn_and_compute():
    ints = load("h2_sto3g")
    bogus = MOIntegrals(ints.n_orbitals, 2, ints.h_core, ints.eri, ints.e_nuclear, orbital_energies=(0.0, 1.0))
    with pytest.warns(RuntimeWarning, match="orbital energies"):
        eps = fock_diagonal(bogus, OccupiedSpace.aufbau(bogus))
    assert eps.source == "computed"
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fock_diagonal(ints, OccupiedSpace.aufbau(ints))


def test_frozen_core_split():
    occ = OccupiedSpace((0, 1, 2), n_frozen_core=1)
    assert occ.frozen == (0,) and occ.active == (1, 2)
    with pytest.raises(UsageError):
        OccupiedSpace((0, 1), n_frozen_core=3)
    with pytest.raises(UsageError):
        OccupiedSpace((0, 0))
