import itertools
from math import comb

import numpy as np
import pytest

from fvo import (
    DegenerateGapError,
    MOIntegrals,
    OccupiedSpace,
    ResourceLimitError,
    SubspaceSpec,
    UsageError,
    fci_energy,
    hf_reference_energy,
    mp2_energy,
    solve,
)
from fvo.solvers import active_space, available_solvers, fci_hamiltonian, mp2_pair_energies

from conftest import full_subspace, load, random_integrals


def _permuted(ints: MOIntegrals, perm) -> MOIntegrals:
    perm = np.asarray(perm)
    h = ints.h_matrix[np.ix_(perm, perm)]
    g = ints.eri_tensor[np.ix_(perm, perm, perm, perm)]
    return MOIntegrals.from_arrays(h, g, ints.n_electrons, ints.e_nuclear)


def _subset_spec(ints, key: str, fragments):
    occ = OccupiedSpace.aufbau(ints)
    chosen = [int(k) - 1 for k in key.split(",") if k]
    virt = sorted(a for k in chosen for a in fragments[k])
    return SubspaceSpec(occ, tuple(virt))


# -- MP2 ---------------------------------------------------------------------


def test_mp2_no_virtuals_is_exactly_zero():
    ints = load("h2_sto3g")
    res = mp2_energy(ints, SubspaceSpec(OccupiedSpace.aufbau(ints), ()))
    assert res.e_corr == 0.0
    assert res.e_total == hf_reference_energy(ints, OccupiedSpace.aufbau(ints))


def test_mp2_single_term_hand_value():
    # F_00 = h_00 = -0.58; F_11 = h_11 - (10|01) = 0.67
    ints = MOIntegrals(2, 2, {(0, 0): -0.58, (1, 1): 0.85}, {(1, 0, 1, 0): 0.18})
    res = mp2_energy(ints, full_subspace(ints))
    assert res.e_corr == pytest.approx(0.18 * (2 * 0.18 - 0.18) / (2 * (-0.58 - 0.67)), abs=1e-15)
    assert res.e_corr == pytest.approx(-0.01296, abs=1e-12)


@pytest.mark.parametrize("name", ["h2_sto3g", "h4_chain_sto3g", "h4_chain_631g", "h2o_sto3g"])
def test_mp2_matches_generating_program(name, refs):
    ints = load(name)
    assert mp2_energy(ints, full_subspace(ints)).e_corr == pytest.approx(refs[name]["mp2_corr"], abs=1e-8)


def test_mp2_frozen_core(refs):
    ints = load("h2o_sto3g")
    res = mp2_energy(ints, full_subspace(ints, n_frozen_core=1))
    assert res.e_corr == pytest.approx(refs["h2o_sto3g"]["mp2_corr_fc"], abs=1e-8)
    assert res.e_total == pytest.approx(refs["h2o_sto3g"]["hf"] + res.e_corr, abs=1e-9)


def test_mp2_virtual_subsets_match_generating_program(refs):
    ints = load("h4_chain_631g")
    frags = refs["h4_chain_631g"]["fragments"]
    for key, entry in refs["h4_chain_631g"]["subsets"].items():
        res = mp2_energy(ints, _subset_spec(ints, key, frags))
        assert res.e_corr == pytest.approx(entry["mp2_corr"], abs=1e-8), key


def test_mp2_pair_additivity():
    ints = load("h2o_sto3g")
    sub = full_subspace(ints)
    pairs = mp2_pair_energies(ints, sub)
    assert len(pairs) == len(sub.virtuals) ** 2
    assert sum(pairs.values()) == pytest.approx(mp2_energy(ints, sub).e_corr, abs=1e-12)


def test_mp2_degenerate_gap_names_indices():
    ints = MOIntegrals(2, 2, {(0, 0): 0.5, (1, 1): 0.2}, {(1, 0, 1, 0): 0.1})
    with pytest.raises(DegenerateGapError) as info:
        mp2_energy(ints, full_subspace(ints))
    assert info.value.indices == (0, 0, 1, 1)
    assert "(0,0,1,1)" in str(info.value)


def test_mp2_flags_localized_virtuals():
    ints = load("h2_dimer_631g_boys")
    assert mp2_energy(ints, full_subspace(ints)).flags == ("noncanonical-virtuals",)
    canon = load("h4_chain_631g")
    assert mp2_energy(canon, full_subspace(canon)).flags == ()


def test_mp2_all_frozen_is_usage_error():
    ints = load("h2_sto3g")
    with pytest.raises(UsageError):
        mp2_energy(ints, SubspaceSpec(OccupiedSpace((0,), 1), (1,)))


# -- FCI ---------------------------------------------------------------------


def test_fci_no_virtuals():
    ints = load("h4_chain_sto3g")
    occ = OccupiedSpace.aufbau(ints)
    res = fci_energy(ints, SubspaceSpec(occ, ()))
    assert res.e_corr == 0.0
    assert res.e_total == hf_reference_energy(ints, occ)


@pytest.mark.parametrize("name", ["h2_sto3g", "h4_chain_sto3g", "h4_chain_631g", "h2o_sto3g", "h2_dimer_631g_boys"])
def test_fci_matches_generating_program(name, refs):
    ints = load(name)
    assert fci_energy(ints, full_subspace(ints)).e_total == pytest.approx(refs[name]["fci"], abs=1e-9)


def test_fci_frozen_core(refs):
    ints = load("h2o_sto3g")
    res = fci_energy(ints, full_subspace(ints, n_frozen_core=1))
    assert res.e_total == pytest.approx(refs["h2o_sto3g"]["fci_fc"], abs=1e-9)


@pytest.mark.parametrize("name,field", [("h4_chain_631g", "fragments"), ("h2_dimer_631g_boys", "centroid_fragments")])
def test_fci_subsets_match_generating_program(name, field, refs):
    ints = load(name)
    frags = refs[name][field]
    for key, entry in refs[name]["subsets"].items():
        if entry["fci"] is None:
            continue
        res = fci_energy(ints, _subset_spec(ints, key, frags))
        assert res.e_total == pytest.approx(entry["fci"], abs=1e-9), key


def test_fci_cap():
    ints = load("h4_chain_631g")
    with pytest.raises(ResourceLimitError) as info:
        fci_energy(ints, full_subspace(ints), cap=12)
    assert (info.value.required, info.value.allowed) == (16, 12)
    assert "16" in str(info.value) and "12" in str(info.value)


def test_fci_virtual_relabeling_invariance():
    ints = load("h4_chain_631g")
    e0 = fci_energy(ints, full_subspace(ints)).e_total
    perm = [0, 1, 6, 3, 7, 2, 5, 4]
    e1 = fci_energy(_permuted(ints, perm), full_subspace(ints)).e_total
    assert e1 == pytest.approx(e0, abs=1e-10)


def test_fci_without_off_diagonal_eris_has_zero_correlation():
    n = 4
    h = np.diag([-1.2, -0.9, 0.3, 0.8])
    g = np.zeros((n,) * 4)
    rng = np.random.default_rng(5)
    j = rng.uniform(0.1, 0.3, size=(n, n))
    j = 0.5 * (j + j.T)
    for p, q in itertools.product(range(n), repeat=2):
        g[p, p, q, q] = j[p, q]
    ints = MOIntegrals.from_arrays(h, g, 4)
    assert fci_energy(ints, full_subspace(ints)).e_corr == 0.0


def test_fci_hamiltonian_layout():
    ints = random_integrals(4, 4, seed=2)
    space = active_space(ints, full_subspace(ints))
    h, dets = fci_hamiltonian(space)
    assert len(dets) == comb(4, 2) ** 2
    dense = h.toarray() if hasattr(h, "toarray") else h
    assert np.allclose(dense, dense.T, atol=1e-12)
    assert dets[0] == 0b0011_0011  # aufbau determinant first


def test_fci_variational_against_hf():
    ints = random_integrals(5, 4, seed=9)
    res = fci_energy(ints, full_subspace(ints))
    assert res.e_corr <= 1e-12


# -- dispatch ----------------------------------------------------------------


def test_dispatch_routes_by_tag():
    ints = load("h2_sto3g")
    sub = full_subspace(ints)
    assert solve("mp2", ints, sub) == mp2_energy(ints, sub)
    assert solve("fci", ints, sub) == fci_energy(ints, sub)
    vqe = solve("vqe", ints, sub)
    assert vqe.method_tag == "vqe"
    assert {"mp2", "fci", "vqe"} <= set(available_solvers())


def test_dispatch_unknown_tag():
    ints = load("h2_sto3g")
    with pytest.raises(UsageError, match="ccsd"):
        solve("ccsd", ints, full_subspace(ints))
