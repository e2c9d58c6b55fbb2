import json
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from fvo import MOIntegrals, OccupiedSpace, read_fcidump
from fvo.fragmentation import virtual_orbitals
from fvo.solvers import SubspaceSpec

DATA = Path(str(resources.files("fvo") / "data"))


def data_path(name: str) -> Path:
    return DATA / name


def load(name: str) -> MOIntegrals:
    return read_fcidump(DATA / f"{name}.fcidump")


def full_subspace(ints: MOIntegrals, n_frozen_core: int = 0) -> SubspaceSpec:
    occ = OccupiedSpace.aufbau(ints, n_frozen_core)
    return SubspaceSpec(occ, virtual_orbitals(ints, occ))


def random_integrals(n: int, n_electrons: int, seed: int, scale: float = 0.1) -> MOIntegrals:
    """Random symmetric integrals with a diagonally dominant, gapped h."""
    rng = np.random.default_rng(seed)
    h = rng.normal(scale=scale, size=(n, n))
    h = 0.5 * (h + h.T) + np.diag(np.linspace(-1.5, 1.0, n))
    g = rng.normal(scale=scale, size=(n, n, n, n))
    g = g + g.transpose(1, 0, 2, 3)
    g = g + g.transpose(0, 1, 3, 2)
    g = g + g.transpose(2, 3, 0, 1)
    return MOIntegrals.from_arrays(h, g / 8.0, n_electrons, e_nuclear=0.5)


@pytest.fixture(scope="session")
def refs() -> dict:
    return json.loads((DATA / "reference_energies.json").read_text())
