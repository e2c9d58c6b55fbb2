import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fvo import MOIntegrals, ParseError, UsageError, parse_fcidump, write_fcidump
from fvo.integrals import canonical_eri_key, dumps_fcidump, eri_permutations

from conftest import data_path, load, random_integrals

H2_TEXT = """ &FCI NORB=2,NELEC=2,MS2=0,
  ORBSYM=1,1,
  ISYM=1,
 &END
  0.6746 1 1 1 1
  0.1813 2 1 2 1
  0.6636 2 2 1 1
  0.6975 2 2 2 2
 -1.2528 1 1 0 0
 -0.4756 2 2 0 0
  0.7137 0 0 0 0
"""


def test_nuclear_repulsion_from_zero_indices():
    ints = parse_fcidump("&FCI NORB=2,NELEC=2,MS2=0 &END\n0.7137 0 0 0 0\n")
    assert ints.e_nuclear == 0.7137
    assert ints.n_orbitals == 2 and ints.n_electrons == 2 and ints.n_occupied == 1


def test_eri_permutations_share_one_value():
    ints = parse_fcidump(H2_TEXT)
    assert ints.get_eri(0, 0, 0, 0) == 0.6746
    for perm in eri_permutations(1, 0, 1, 0):
        assert ints.get_eri(*perm) == 0.1813
    assert ints.get_eri(0, 0, 1, 1) == ints.get_eri(1, 1, 0, 0) == 0.6636


def test_h_symmetric_and_sparse_default():
    ints = parse_fcidump(H2_TEXT)
    assert ints.get_h(0, 1) == ints.get_h(1, 0) == 0.0
    assert ints.get_h(1, 1) == -0.4756
    assert ints.get_eri(0, 1, 1, 1) == 0.0


def test_out_of_range_query_is_usage_error():
    ints = parse_fcidump(H2_TEXT)
    with pytest.raises(UsageError):
        ints.get_eri(0, 0, 0, 2)
    with pytest.raises(UsageError):
        ints.get_h(-1, 0)


@pytest.mark.parametrize(
    "header",
    [
        " &FCI NORB=2, NELEC=2, MS2=0, &END",
        " &FCI NORB=2 NELEC=2 MS2=0 /",
        " &fci norb=2,nelec=2,\n  ms2=0,\n /",
        " &FCI\n NORB=2,\n NELEC=2,\n ORBSYM=1,1,\n ISYM=1\n &END",
    ],
)
def test_namelist_variants(header):
    ints = parse_fcidump(header + "\n 0.5D+00 1 1 1 1\n -1.0d0 1 1 0 0\n")
    assert ints.n_orbitals == 2
    assert ints.get_eri(0, 0, 0, 0) == 0.5
    assert ints.get_h(0, 0) == -1.0


def test_missing_norb_reports_line():
    with pytest.raises(ParseError, match="line 1.*NORB"):
        parse_fcidump("&FCI NELEC=2 &END\n")


def test_missing_header():
    with pytest.raises(ParseError, match="line 1"):
        parse_fcidump("0.5 1 1 1 1\n")


def test_index_out_of_range_reports_line():
    with pytest.raises(ParseError, match="line 3"):
        parse_fcidump("&FCI NORB=2,NELEC=2 &END\n0.5 1 1 1 1\n0.1 3 1 1 1\n")


def test_inconsistent_duplicate_rejected():
    text = "&FCI NORB=2,NELEC=2 &END\n0.5 2 1 1 1\n0.5000001 1 2 1 1\n"
    with pytest.raises(ParseError, match="line 3"):
        parse_fcidump(text)


def test_consistent_duplicate_accepted():
    text = "&FCI NORB=2,NELEC=2 &END\n0.5 2 1 1 1\n0.50000000000001 1 1 1 2\n"
    assert parse_fcidump(text).get_eri(1, 0, 0, 0) == 0.5


@pytest.mark.parametrize("header", ["&FCI NORB=2,NELEC=1,MS2=1 &END", "&FCI NORB=2,NELEC=2,MS2=2 &END"])
def test_open_shell_rejected(header):
    with pytest.raises(ParseError, match="open-shell"):
        parse_fcidump(header + "\n")


def test_bad_field_count():
    with pytest.raises(ParseError, match="line 2"):
        parse_fcidump("&FCI NORB=2,NELEC=2 &END\n0.5 1 1 1\n")


def test_orbital_energies_parsed():
    ints = load("h2_sto3g_eps")
    assert ints.orbital_energies is not None and len(ints.orbital_energies) == 2


def test_partial_orbital_energies_rejected():
    with pytest.raises(ParseError):
        parse_fcidump("&FCI NORB=2,NELEC=2 &END\n-0.5 1 0 0 0\n")


def test_round_trip_fixture():
    ints = load("h2o_sto3g")
    again = parse_fcidump(dumps_fcidump(ints))
    assert again.eri.keys() == ints.eri.keys()
    assert again.h_core.keys() == ints.h_core.keys()
    for k, v in ints.eri.items():
        assert abs(again.eri[k] - v) <= 1e-14
    for k, v in ints.h_core.items():
        assert abs(again.h_core[k] - v) <= 1e-14
    assert again.e_nuclear == ints.e_nuclear


def test_write_stream_round_trip_with_energies():
    ints = load("h2_sto3g_eps")
    buf = io.StringIO()
    write_fcidump(ints, buf)
    again = parse_fcidump(buf.getvalue())
    assert again.orbital_energies == ints.orbital_energies


def test_random_permutations_bitwise_identical():
    ints = random_integrals(6, 4, seed=3)
    rng = np.random.default_rng(11)
    for _ in range(1000):
        p, q, r, s = (int(x) for x in rng.integers(0, 6, size=4))
        values = {ints.get_eri(*perm) for perm in eri_permutations(p, q, r, s)}
        assert len(values) == 1


@settings(max_examples=200, deadline=None)
@given(st.tuples(*(st.integers(0, 9),) * 4))
def test_canonical_key_is_orbit_invariant(idx):
    keys = {canonical_eri_key(*perm) for perm in eri_permutations(*idx)}
    assert len(keys) == 1
    p, q, r, s = keys.pop()
    assert p >= q and r >= s and (p, q) >= (r, s)


def test_eight_permutations():
    assert len(eri_permutations(3, 2, 1, 0)) == 8
    assert eri_permutations(0, 0, 0, 0) == {(0, 0, 0, 0)}


def test_dense_views_are_symmetric_and_read_only():
    ints = load("h4_chain_sto3g")
    g = ints.eri_tensor
    for perm in itertools.permutations(range(4)):
        if perm in {(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)}:
            assert np.array_equal(g, g.transpose(perm))
    with pytest.raises(ValueError):
        g[0, 0, 0, 0] = 1.0


def test_from_arrays_rejects_asymmetry():
    h = np.array([[0.0, 1.0], [0.5, 0.0]])
    with pytest.raises(UsageError):
        MOIntegrals.from_arrays(h, np.zeros((2, 2, 2, 2)), 2)


def test_header_values_preserved():
    ints = load("h4_chain_631g")
    assert (ints.n_orbitals, ints.n_electrons, ints.n_occupied) == (8, 4, 2)
    assert data_path("h4_chain_631g.fcidump").is_file()
