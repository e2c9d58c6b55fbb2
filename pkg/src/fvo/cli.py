"""``fvo`` command-line front end.

Subcommands::

    fvo run      --config run.yaml [--output P] [--format json|csv] [--jobs N]
                 [--max-order N] [--solver TAG]
    fvo budget   --config run.yaml [...]   qubit/ansatz budget only, no solver
    fvo validate --config run.yaml         schema check only
    fvo fixtures --output DIR              copy the bundled FCIDUMP fixtures

Exit codes: 0 success, 2 validation failure, 3 solver failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, FVOError, ParseError, SolverError, UsageError
from .fragmentation import (
    OrbitalPartition,
    default_fragment_count,
    partition_blocks,
    partition_by_centroid,
    partition_by_energy,
    partition_explicit,
    read_sidecar,
    virtual_orbitals,
)
from .integrals import MOIntegrals, read_fcidump
from .mbe import SpatialFragmentRun, hierarchical_expand, mbe_expand
from .reference import OccupiedSpace, fock_diagonal
from .report import (
    REPORT_SCHEMA,
    budget_document,
    hierarchical_document,
    mbe_document,
    render_csv,
    render_json,
)
from .resources import budget_for_plan

logger = logging.getLogger(__name__)

__all__ = ["main", "build_partition", "run_document", "budget_only_document", "StageError"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_IO = 4


class StageError(Exception):
    """A pipeline failure tagged with its stage name and exit code."""

    def __init__(self, stage: str, cause: BaseException, code: int):
        self.stage = stage
        self.cause = cause
        self.code = code
        super().__init__(f"{stage}: {cause}")


def build_partition(
    ints: MOIntegrals,
    spec,
    frozen_core: int = 0,
    sidecar_path: Path | None = None,
) -> OrbitalPartition:
    """Partition the virtual space of ``ints`` as described by a :class:`PartitionSpec`."""
    occ = OccupiedSpace.aufbau(ints, frozen_core)
    virt = virtual_orbitals(ints, occ)
    centroids = read_sidecar(sidecar_path) if sidecar_path else None
    if spec.strategy == "blocks":
        return partition_blocks(occ, virt, spec.n_fragments or default_fragment_count(len(virt)))
    if spec.strategy == "energy":
        eps = fock_diagonal(ints, occ).values
        return partition_by_energy(occ, virt, eps, spec.n_fragments or default_fragment_count(len(virt)))
    if spec.strategy == "centroid":
        return partition_by_centroid(occ, virt, centroids)
    if spec.assignment is not None:
        assignment = {orb - 1: label for orb, label in spec.assignment.items()}
    elif centroids is not None and centroids.labels:
        assignment = dict(centroids.labels)
    else:
        raise UsageError("explicit partition needs an assignment map or sidecar orbital labels")
    return partition_explicit(assignment, virt, occ)


def _load(path: Path, frozen_core: int, spec, sidecar: Path | None):
    try:
        ints = read_fcidump(path)
    except (OSError, ParseError) as exc:
        raise StageError(f"parse {path.name}", exc, EXIT_IO) from exc
    try:
        partition = build_partition(ints, spec, frozen_core, sidecar)
    except (OSError, ParseError) as exc:
        raise StageError(f"partition {path.name}", exc, EXIT_IO) from exc
    except FVOError as exc:
        raise StageError(f"partition {path.name}", exc, EXIT_VALIDATION) from exc
    return ints, partition


def _budget(partition: OrbitalPartition, max_order: int, where: str):
    try:
        return budget_for_plan(partition, max_order)
    except UsageError as exc:
        raise StageError(f"budget {where}", exc, EXIT_VALIDATION) from exc


def _header(config: RunConfig, kind: str) -> dict[str, Any]:
    return {
        "schema": REPORT_SCHEMA,
        "kind": kind,
        "config_sha256": config.checksum,
        "solver": config.solver.method,
        "solver_options": config.solver.options(),
    }


def budget_only_document(config: RunConfig) -> dict[str, Any]:
    """Qubit and ansatz budget for every planned calculation; no solver runs."""
    doc = _header(config, "budget")
    if config.hierarchy:
        doc["fragments"] = []
        for run in config.hierarchy:
            _, part = _load(run.integrals_path, run.frozen_core, run.partition, run.centroid_sidecar_path)
            budget = _budget(part, run.max_order, run.name)
            doc["fragments"].append({"name": run.name, "budget": budget_document(part, budget)})
    else:
        _, part = _load(config.integrals_path, config.frozen_core, config.partition, config.centroid_sidecar_path)
        doc["budget"] = budget_document(part, _budget(part, config.max_order, "plan"))
    return doc


def run_document(config: RunConfig, jobs: int = 1) -> dict[str, Any]:
    """Execute the configured pipeline and return the report document."""
    options = config.solver.options()
    if config.hierarchy:
        doc = _header(config, "hierarchical")
        runs, partitions, budgets, monomers = [], {}, {}, {}
        for spec in config.hierarchy:
            ints, part = _load(spec.integrals_path, spec.frozen_core, spec.partition, spec.centroid_sidecar_path)
            budgets[spec.name] = _budget(part, spec.max_order, spec.name)
            partitions[spec.name] = part
            monomers[spec.name] = spec.monomers
            runs.append(SpatialFragmentRun(spec.name, spec.monomers, ints, part, spec.max_order))
        try:
            rep = hierarchical_expand(runs, config.solver.method, jobs=jobs, solver_options=options)
        except SolverError as exc:
            raise StageError("solve", exc, EXIT_SOLVER) from exc
        except FVOError as exc:
            raise StageError("expand", exc, EXIT_VALIDATION) from exc
        doc.update(hierarchical_document(rep, partitions, budgets, monomers))
        return doc

    doc = _header(config, "mbe")
    ints, part = _load(config.integrals_path, config.frozen_core, config.partition, config.centroid_sidecar_path)
    budget = _budget(part, config.max_order, "plan")
    try:
        rep = mbe_expand(
            ints, part, config.solver.method, config.max_order,
            compute_full=config.compute_full, jobs=jobs, solver_options=options,
        )
    except SolverError as exc:
        raise StageError("solve", exc, EXIT_SOLVER) from exc
    except FVOError as exc:
        raise StageError("expand", exc, EXIT_VALIDATION) from exc
    doc["integrals"] = config.integrals_path.name
    doc.update(mbe_document(rep, part, budget))
    return doc


def _emit(doc: dict[str, Any], config: RunConfig) -> None:
    text = render_csv(doc) if config.output_format == "csv" else render_json(doc)
    if config.output_path is None:
        sys.stdout.write(text)
        return
    try:
        config.output_path.parent.mkdir(parents=True, exist_ok=True)
        config.output_path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise StageError("write report", exc, EXIT_IO) from exc


def _fixtures(dest: Path) -> int:
    data = importlib_resources.files("fvo") / "data"
    dest.mkdir(parents=True, exist_ok=True)
    names = sorted(p.name for p in data.iterdir() if p.name.endswith((".fcidump", ".sidecar", ".json")))
    for name in names:
        with importlib_resources.as_file(data / name) as src:
            shutil.copyfile(src, dest / name)
    print(f"wrote {len(names)} fixture files to {dest}")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fvo", description="Virtual-orbital fragmentation with many-body expansion."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, overrides=True):
        p.add_argument("--config", required=True, type=Path, help="run config (YAML or JSON)")
        if overrides:
            p.add_argument("--output", type=Path, help="report path (default: config value or stdout)")
            p.add_argument("--format", choices=("json", "csv"), help="report format override")
            p.add_argument("--max-order", type=int, help="override max_order")
            p.add_argument("--solver", help="override solver method tag")

    run = sub.add_parser("run", help="run the expansion and write a report")
    common(run)
    run.add_argument("--jobs", type=int, default=1, help="worker threads (default: 1)")
    budget = sub.add_parser("budget", help="qubit and ansatz budget only")
    common(budget)
    validate = sub.add_parser("validate", help="validate a config")
    common(validate, overrides=False)
    fixtures = sub.add_parser("fixtures", help="copy bundled test fixtures")
    fixtures.add_argument("--output", type=Path, default=Path("fixtures"), help="destination directory")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "fixtures":
        try:
            return _fixtures(args.output)
        except OSError as exc:
            print(f"error: fixtures: {exc}", file=sys.stderr)
            return EXIT_IO

    overrides = {}
    if args.command != "validate":
        overrides = {
            "max_order": args.max_order,
            "solver": args.solver,
            "format": args.format,
            "output": args.output.resolve() if args.output else None,
        }
    try:
        config = load_config(args.config, overrides)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print("error: invalid config:", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.command == "validate":
        print(f"{args.config}: ok")
        return EXIT_OK
    if args.command == "run" and args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if args.command == "budget":
            doc = budget_only_document(config)
        else:
            doc = run_document(config, jobs=args.jobs)
        _emit(doc, config)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
