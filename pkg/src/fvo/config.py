"""Run-config schema (version 1) and validation.

Configs are YAML (JSON is accepted, being a YAML subset). Relative paths
resolve against the config file's directory. Validation collects every
violation before failing. See README.md for the full schema.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError

__all__ = [
    "SCHEMA_VERSION",
    "PartitionSpec",
    "SolverSpec",
    "FragmentRunSpec",
    "RunConfig",
    "validate_config",
    "load_config",
]

SCHEMA_VERSION = 1
STRATEGIES = ("blocks", "energy", "centroid", "explicit")
METHODS = ("mp2", "fci", "vqe")
FORMATS = ("json", "csv")

_TOP_KEYS = {
    "version", "integrals", "centroids", "frozen_core", "partition", "solver",
    "max_order", "compute_full", "hierarchy", "output",
}
_RUN_KEYS = {"name", "monomers", "integrals", "centroids", "frozen_core", "partition", "max_order"}


@dataclass(frozen=True)
class PartitionSpec:
    strategy: str
    n_fragments: int | None = None
    assignment: Mapping[int, str] | None = None  # 1-based orbital -> label


@dataclass(frozen=True)
class SolverSpec:
    method: str
    fci_cap: int = 16
    vqe_tol: float = 1e-6
    vqe_max_iter: int = 5000

    def options(self) -> dict[str, Any]:
        if self.method == "fci":
            return {"cap": self.fci_cap}
        if self.method == "vqe":
            return {"tol": self.vqe_tol, "max_iter": self.vqe_max_iter}
        return {}


@dataclass(frozen=True)
class FragmentRunSpec:
    name: str
    monomers: tuple[str, ...]
    integrals_path: Path
    partition: PartitionSpec
    centroid_sidecar_path: Path | None = None
    frozen_core: int = 0
    max_order: int = 1


@dataclass(frozen=True)
class RunConfig:
    solver: SolverSpec
    max_order: int
    integrals_path: Path | None = None
    centroid_sidecar_path: Path | None = None
    partition: PartitionSpec | None = None
    compute_full: bool = False
    frozen_core: int = 0
    hierarchy: tuple[FragmentRunSpec, ...] = ()
    output_format: str = "json"
    output_path: Path | None = None
    checksum: str = field(default="", compare=False)


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def add(self, where: str, message: str) -> None:
        self.errors.append(f"{where}: {message}")


def _int(raw, key, where, errs, minimum=None, default=None):
    value = raw.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        errs.add(f"{where}{key}", f"expected an integer, got {value!r}")
        return None
    if minimum is not None and value < minimum:
        errs.add(f"{where}{key}", f"must be >= {minimum}, got {value}")
        return None
    return value


def _path(raw, key, where, base: Path, errs, required=False):
    value = raw.get(key)
    if value is None:
        if required:
            errs.add(f"{where}{key}", "required")
        return None
    if not isinstance(value, str):
        errs.add(f"{where}{key}", f"expected a path string, got {value!r}")
        return None
    path = (base / value) if not Path(value).is_absolute() else Path(value)
    if not path.is_file():
        errs.add(f"{where}{key}", f"file not found: {value}")
        return None
    return path


def _partition(raw, where, errs, has_sidecar: bool) -> PartitionSpec | None:
    if raw is None:
        errs.add(f"{where}partition", "required")
        return None
    if not isinstance(raw, Mapping):
        errs.add(f"{where}partition", "expected a mapping")
        return None
    unknown = set(raw) - {"strategy", "n_fragments", "assignment"}
    for k in sorted(unknown):
        errs.add(f"{where}partition.{k}", "unknown field")
    strategy = raw.get("strategy")
    if strategy not in STRATEGIES:
        errs.add(f"{where}partition.strategy", f"must be one of {list(STRATEGIES)}, got {strategy!r}")
        return None
    n = _int(raw, "n_fragments", f"{where}partition.", errs, minimum=1)
    assignment = None
    if strategy == "centroid" and not has_sidecar:
        errs.add(f"{where}partition.strategy", "'centroid' needs a 'centroids' sidecar path")
    if strategy == "explicit":
        raw_map = raw.get("assignment")
        if raw_map is None and not has_sidecar:
            errs.add(
                f"{where}partition.assignment",
                "'explicit' needs an assignment map or sidecar labels",
            )
        elif raw_map is not None:
            if not isinstance(raw_map, Mapping) or not raw_map:
                errs.add(f"{where}partition.assignment", "expected a non-empty orbital -> label map")
            else:
                assignment = {}
                for orb, label in raw_map.items():
                    try:
                        assignment[int(orb)] = str(label)
                    except (TypeError, ValueError):
                        errs.add(f"{where}partition.assignment", f"orbital key {orb!r} is not an integer")
    if strategy in ("centroid", "explicit") and n is not None:
        errs.add(f"{where}partition.n_fragments", f"not used by strategy {strategy!r}")
    return PartitionSpec(strategy, n, assignment)


def _solver(raw, errs) -> SolverSpec | None:
    if raw is None:
        errs.add("solver", "required")
        return None
    if isinstance(raw, str):
        raw = {"method": raw}
    if not isinstance(raw, Mapping):
        errs.add("solver", "expected a mapping or method name")
        return None
    for k in sorted(set(raw) - {"method", "fci_cap", "vqe_tol", "vqe_max_iter"}):
        errs.add(f"solver.{k}", "unknown field")
    method = raw.get("method")
    if method not in METHODS:
        errs.add("solver.method", f"must be one of {list(METHODS)}, got {method!r}")
        return None
    cap = _int(raw, "fci_cap", "solver.", errs, minimum=2, default=16)
    iters = _int(raw, "vqe_max_iter", "solver.", errs, minimum=1, default=5000)
    tol = raw.get("vqe_tol", 1e-6)
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or tol <= 0:
        errs.add("solver.vqe_tol", f"must be a positive number, got {tol!r}")
        tol = 1e-6
    return SolverSpec(method, cap or 16, float(tol), iters or 5000)


def validate_config(
    raw: str | Mapping,
    base_dir: Path | str = ".",
    overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Parse and validate a config; raises :class:`ConfigError` listing every problem.

    ``overrides`` may set ``max_order``, ``solver`` (method tag), ``format``
    and ``output`` ahead of validation.
    """
    base = Path(base_dir)
    text = raw if isinstance(raw, str) else yaml.safe_dump(dict(raw), sort_keys=True)
    checksum = hashlib.sha256(text.encode("utf-8")).hexdigest()
    if isinstance(raw, str):
        try:
            data = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError([f"config is not valid YAML/JSON: {exc}"]) from None
    else:
        data = dict(raw)
    if not isinstance(data, Mapping):
        raise ConfigError(["config must be a mapping at the top level"])
    data = dict(data)
    overrides = dict(overrides or {})
    if overrides.get("max_order") is not None:
        data["max_order"] = overrides["max_order"]
    if overrides.get("solver") is not None:
        solver = data.get("solver")
        data["solver"] = {**solver, "method": overrides["solver"]} if isinstance(solver, Mapping) else overrides["solver"]
    output = dict(data.get("output") or {}) if isinstance(data.get("output", {}), Mapping) else data.get("output")
    if isinstance(output, dict):
        if overrides.get("format") is not None:
            output["format"] = overrides["format"]
        if overrides.get("output") is not None:
            output["path"] = str(overrides["output"])
        data["output"] = output

    errs = _Collector()
    for k in sorted(set(data) - _TOP_KEYS, key=str):
        errs.add(str(k), "unknown field")
    if data.get("version") != SCHEMA_VERSION:
        errs.add("version", f"must be {SCHEMA_VERSION}, got {data.get('version')!r}")

    solver = _solver(data.get("solver"), errs)
    max_order = _int(data, "max_order", "", errs, minimum=1)
    if "max_order" not in data:
        errs.add("max_order", "required")
    compute_full = data.get("compute_full", False)
    if not isinstance(compute_full, bool):
        errs.add("compute_full", f"expected true/false, got {compute_full!r}")
    frozen_core = _int(data, "frozen_core", "", errs, minimum=0, default=0) or 0

    out_format, out_path = "json", None
    output = data.get("output")
    if output is not None:
        if not isinstance(output, Mapping):
            errs.add("output", "expected a mapping")
        else:
            for k in sorted(set(output) - {"format", "path"}):
                errs.add(f"output.{k}", "unknown field")
            out_format = output.get("format", "json")
            if out_format not in FORMATS:
                errs.add("output.format", f"must be one of {list(FORMATS)}, got {out_format!r}")
            if output.get("path") is not None:
                p = Path(str(output["path"]))
                out_path = p if p.is_absolute() else base / p

    hierarchy: list[FragmentRunSpec] = []
    integrals = sidecar = partition = None
    raw_h = data.get("hierarchy")
    if raw_h is not None:
        if "integrals" in data or "partition" in data:
            errs.add("hierarchy", "give either top-level integrals/partition or a hierarchy, not both")
        if not isinstance(raw_h, list) or not raw_h:
            errs.add("hierarchy", "expected a non-empty list of spatial fragments")
            raw_h = []
        names = set()
        for k, entry in enumerate(raw_h):
            where = f"hierarchy[{k}]."
            if not isinstance(entry, Mapping):
                errs.add(f"hierarchy[{k}]", "expected a mapping")
                continue
            for extra in sorted(set(entry) - _RUN_KEYS):
                errs.add(f"{where}{extra}", "unknown field")
            name = entry.get("name")
            if not isinstance(name, str) or not name:
                errs.add(f"{where}name", "required string")
            elif name in names:
                errs.add(f"{where}name", f"duplicate name {name!r}")
            names.add(name)
            monomers = entry.get("monomers", [name] if isinstance(name, str) else None)
            if not isinstance(monomers, list) or len(monomers) not in (1, 2):
                errs.add(f"{where}monomers", "expected a list of one or two monomer names")
                monomers = []
            ipath = _path(entry, "integrals", where, base, errs, required=True)
            spath = _path(entry, "centroids", where, base, errs)
            part = _partition(entry.get("partition"), where, errs, "centroids" in entry)
            fc = _int(entry, "frozen_core", where, errs, minimum=0, default=frozen_core) or 0
            mo = _int(entry, "max_order", where, errs, minimum=1, default=max_order) or 1
            if ipath and part:
                hierarchy.append(FragmentRunSpec(str(name), tuple(str(m) for m in monomers), ipath, part, spath, fc, mo))
        declared = {r.monomers[0] for r in hierarchy if len(r.monomers) == 1}
        for run in hierarchy:
            if len(run.monomers) == 2:
                missing = [m for m in run.monomers if m not in declared]
                if missing:
                    errs.add(f"hierarchy.{run.name}", f"dimer references undeclared monomers {missing}")
    else:
        integrals = _path(data, "integrals", "", base, errs, required=True)
        sidecar = _path(data, "centroids", "", base, errs)
        partition = _partition(data.get("partition"), "", errs, "centroids" in data)

    if errs.errors:
        raise ConfigError(errs.errors)
    return RunConfig(
        solver=solver,
        max_order=max_order,
        integrals_path=integrals,
        centroid_sidecar_path=sidecar,
        partition=partition,
        compute_full=compute_full,
        frozen_core=frozen_core,
        hierarchy=tuple(hierarchy),
        output_format=out_format,
        output_path=out_path,
        checksum=checksum,
    )


def load_config(path: Path | str, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return validate_config(text, path.parent, overrides)
