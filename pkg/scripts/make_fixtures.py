#!/usr/bin/env python
"""Regenerate the bundled FCIDUMP fixtures and their reference energies.

Requires PySCF (not a runtime dependency). Every energy written to
``reference_energies.json`` comes from PySCF itself, so tests compare the
package against an independent electronic-structure code.

    python scripts/make_fixtures.py [output_dir]
"""

import itertools
import json
import sys
from pathlib import Path

import numpy as np
from pyscf import ao2mo, fci, gto, lo, mcscf, mp, scf
from pyscf.tools import fcidump

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "src/fvo/data"
refs: dict = {}


def rhf(atom, basis):
    mol = gto.M(atom=atom, unit="Bohr", basis=basis, verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    assert mf.converged
    return mol, mf


def mo_integrals(mol, mf, coeff=None):
    c = mf.mo_coeff if coeff is None else coeff
    h1 = c.T @ mf.get_hcore() @ c
    eri = ao2mo.restore(1, ao2mo.kernel(mol, c), c.shape[1])
    return h1, eri


def fci_sub(h1, eri, nocc, orbitals, enuc):
    """FCI energy with all electrons in the listed orbitals."""
    idx = np.array(orbitals)
    h = h1[np.ix_(idx, idx)]
    g = eri[np.ix_(idx, idx, idx, idx)]
    e, _ = fci.direct_spin1.kernel(h, g, len(idx), (nocc, nocc), conv_tol=1e-14, max_cycle=500)
    return float(e + enuc)


def write(name, h1, eri, nelec, enuc, eps=None):
    path = OUT / f"{name}.fcidump"
    fcidump.from_integrals(str(path), h1, eri, h1.shape[0], nelec, nuc=enuc, tol=1e-15)
    if eps is not None:
        text = path.read_text()
        lines = text.splitlines()
        tail = lines[-1]  # nuclear repulsion line last
        body = lines[:-1] + [f" {e:.16g} {p + 1} 0 0 0" for p, e in enumerate(eps)] + [tail]
        path.write_text("\n".join(body) + "\n")


def subset_table(h1, eri, nocc, fragments, enuc, mf=None):
    """PySCF FCI (and canonical MP2 when ``mf`` is given) for every fragment subset."""
    table = {}
    occ = list(range(nocc))
    for r in range(len(fragments) + 1):
        for combo in itertools.combinations(range(len(fragments)), r):
            virt = sorted(a for k in combo for a in fragments[k])
            key = ",".join(str(k + 1) for k in combo)
            entry = {"fci": fci_sub(h1, eri, nocc, occ + virt, enuc) if virt else None}
            if mf is not None:
                nmo = h1.shape[0]
                frozen = [a for a in range(nocc, nmo) if a not in virt]
                if virt:
                    entry["mp2_corr"] = float(mp.MP2(mf, frozen=frozen or None).kernel()[0])
                else:
                    entry["mp2_corr"] = 0.0
            table[key] = entry
    return table


def canonical_fixture(name, atom, basis, fragments=None, frozen_core=0):
    mol, mf = rhf(atom, basis)
    nocc = mol.nelectron // 2
    h1, eri = mo_integrals(mol, mf)
    enuc = mol.energy_nuc()
    write(name, h1, eri, mol.nelectron, enuc)
    entry = {
        "n_orbitals": int(h1.shape[0]),
        "n_occupied": nocc,
        "hf": float(mf.e_tot),
        "mp2_corr": float(mp.MP2(mf).kernel()[0]),
        "fci": fci_sub(h1, eri, nocc, range(h1.shape[0]), enuc),
        "mo_energy": [float(e) for e in mf.mo_energy],
    }
    if frozen_core:
        entry["frozen_core"] = frozen_core
        entry["mp2_corr_fc"] = float(mp.MP2(mf, frozen=frozen_core).kernel()[0])
        nact = h1.shape[0] - frozen_core
        cas = mcscf.CASCI(mf, nact, mol.nelectron - 2 * frozen_core)
        cas.fcisolver.conv_tol = 1e-14
        entry["fci_fc"] = float(cas.kernel()[0])
    if fragments is not None:
        entry["fragments"] = fragments
        entry["subsets"] = subset_table(h1, eri, nocc, fragments, enuc, mf)
    refs[name] = entry
    return mol, mf, h1, eri


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    h2 = "H 0 0 0; H 0 0 1.4"
    mol, mf, h1, eri = canonical_fixture("h2_sto3g", h2, "sto-3g")
    write("h2_sto3g_eps", h1, eri, mol.nelectron, mol.energy_nuc(), eps=mf.mo_energy)
    refs["h2_sto3g_eps"] = dict(refs["h2_sto3g"])

    # non-interacting pair: orbitals ordered A_occ, B_occ, A_vir, B_vir
    n = h1.shape[0]
    order = [(0, 0), (1, 0), (0, 1), (1, 1)]  # (monomer, local orbital)
    hp = np.zeros((2 * n,) * 2)
    gp = np.zeros((2 * n,) * 4)
    for P, (mA, pA) in enumerate(order):
        for Q, (mB, qB) in enumerate(order):
            if mA == mB:
                hp[P, Q] = h1[pA, qB]
    for P, Q, R, S in itertools.product(range(2 * n), repeat=4):
        ms = {order[P][0], order[Q][0], order[R][0], order[S][0]}
        if len(ms) == 1:
            gp[P, Q, R, S] = eri[order[P][1], order[Q][1], order[R][1], order[S][1]]
    write("h2_pair_noninteracting", hp, gp, 4, 2 * mol.energy_nuc())
    refs["h2_pair_noninteracting"] = {
        "n_orbitals": 4,
        "n_occupied": 2,
        "fci": fci_sub(hp, gp, 2, range(4), 2 * mol.energy_nuc()),
        "fragments": [[2], [3]],
    }

    h4 = "; ".join(f"H 0 0 {1.8 * k}" for k in range(4))
    canonical_fixture("h4_chain_sto3g", h4, "sto-3g", fragments=[[2], [3]])
    canonical_fixture("h4_chain_631g", h4, "6-31g", fragments=[[2, 3], [4, 5], [6, 7]])

    h2o = "O 0 0 0.2217; H 0 1.4309 -0.8867; H 0 -1.4309 -0.8867"
    canonical_fixture("h2o_sto3g", h2o, "sto-3g", frozen_core=1)

    # two parallel H2 molecules 6 bohr apart, Boys-localized virtuals
    dimer = "H 0 0 0; H 0 0 1.4; H 6 0 0; H 6 0 1.4"
    mol, mf = rhf(dimer, "6-31g")
    nocc = mol.nelectron // 2
    cvir = lo.Boys(mol, mf.mo_coeff[:, nocc:]).kernel()
    coeff = np.hstack([mf.mo_coeff[:, :nocc], cvir])
    h1, eri = mo_integrals(mol, mf, coeff)
    enuc = mol.energy_nuc()
    write("h2_dimer_631g_boys", h1, eri, mol.nelectron, enuc)
    r = mol.intor_symmetric("int1e_r")
    cents = np.einsum("xpq,pi,qi->ix", r, cvir, cvir)
    coords = mol.atom_coords()
    side = ["# centroids of Boys-localized virtual orbitals (bohr)", "units bohr"]
    for name, atoms in (("A", (0, 1)), ("B", (2, 3))):
        side.append(f"group {name}")
        side += [f"  H {coords[a, 0]:.10f} {coords[a, 1]:.10f} {coords[a, 2]:.10f}" for a in atoms]
        side.append("end")
    for k, c in enumerate(cents):
        side.append(f"{nocc + k + 1} {c[0]:.10f} {c[1]:.10f} {c[2]:.10f}")
    (OUT / "h2_dimer_631g_boys.sidecar").write_text("\n".join(side) + "\n")
    groups = [[nocc + k for k, c in enumerate(cents) if (c[0] < 3.0) == (g == "A")] for g in "AB"]
    refs["h2_dimer_631g_boys"] = {
        "n_orbitals": int(h1.shape[0]),
        "n_occupied": nocc,
        "hf": float(mf.e_tot),
        "fci": fci_sub(h1, eri, nocc, range(h1.shape[0]), enuc),
        "centroid_fragments": groups,
        "subsets": subset_table(h1, eri, nocc, groups, enuc),
    }

    # H2 trimer on an equilateral triangle, side 5 bohr
    centers = [np.array([5.0 * np.cos(t), 5.0 * np.sin(t), 0.0]) / np.sqrt(3) for t in (0, 2 * np.pi / 3, 4 * np.pi / 3)]

    def molecule(ids):
        return "; ".join(
            f"H {c[0]:.12f} {c[1]:.12f} {c[2] + dz:.12f}" for i in ids for c in [centers[i]] for dz in (0.0, 1.4)
        )

    trimer = {}
    for ids in [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]:
        label = "".join(str(i + 1) for i in ids)
        name = f"h2_trimer_{label}"
        mol, mf = rhf(molecule(ids), "sto-3g")
        h1, eri = mo_integrals(mol, mf)
        write(name, h1, eri, mol.nelectron, mol.energy_nuc())
        nocc = mol.nelectron // 2
        trimer[label] = {
            "file": f"{name}.fcidump",
            "n_orbitals": int(h1.shape[0]),
            "hf": float(mf.e_tot),
            "fci": fci_sub(h1, eri, nocc, range(h1.shape[0]), mol.energy_nuc()),
        }
    refs["h2_trimer"] = trimer

    (OUT / "reference_energies.json").write_text(json.dumps(refs, indent=2, sort_keys=True) + "\n")
    print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
