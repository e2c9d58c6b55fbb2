"""Machine-readable run reports (JSON and long-format CSV).

A report is built as a plain nested document of dicts, lists, strings and
numbers, then rendered. JSON keeps float ``repr`` precision; the CSV form is
the same document flattened to ``path,value`` rows, so both carry identical
numbers. Orbital indices in reports are 1-based, as in FCIDUMP files.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Any, Iterator

from .fragmentation import OrbitalPartition
from .mbe import KCAL_PER_HARTREE, HierarchicalReport, MBEReport
from .resources import QubitBudget, ansatz_estimate

__all__ = [
    "REPORT_SCHEMA",
    "ConvergenceRow",
    "ConvergenceReport",
    "convergence_report",
    "budget_document",
    "mbe_document",
    "hierarchical_document",
    "render_json",
    "render_csv",
    "flatten",
]

REPORT_SCHEMA = "fvo-report/1"


@dataclass(frozen=True)
class ConvergenceRow:
    order: int
    e_fvo: float
    error_hartree: float | None
    error_kcal_mol: float | None
    max_qubits: int
    cumulative_evaluations: int


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple[ConvergenceRow, ...]

    def as_records(self) -> list[dict[str, Any]]:
        return [
            {
                "order": r.order,
                "e_fvo": r.e_fvo,
                "error_hartree": r.error_hartree,
                "error_kcal_mol": r.error_kcal_mol,
                "max_qubits": r.max_qubits,
                "cumulative_evaluations": r.cumulative_evaluations,
            }
            for r in self.rows
        ]


def convergence_report(report: MBEReport, budget: QubitBudget) -> ConvergenceReport:
    """One row per order; ``e_fvo`` is the truncated correlation energy."""
    rows = []
    for n in range(1, report.max_order + 1):
        err = report.errors_vs_full[n] if report.errors_vs_full else (None, None)
        rows.append(
            ConvergenceRow(
                n,
                report.truncated_totals[n],
                err[0],
                err[1],
                budget.max_per_order[n],
                report.cumulative_evaluations(n),
            )
        )
    return ConvergenceReport(tuple(rows))


def _fragments(partition: OrbitalPartition) -> dict[str, Any]:
    return {
        "strategy": partition.strategy_tag,
        "labels": list(partition.labels) if partition.labels else None,
        "fragments": [[a + 1 for a in frag] for frag in partition.fragments],
        "occupied": [i + 1 for i in partition.occupied.occupied],
        "frozen_core": partition.occupied.n_frozen_core,
    }


def budget_document(partition: OrbitalPartition, budget: QubitBudget) -> dict[str, Any]:
    sizes = [len(f) for f in partition.fragments]
    o = budget.n_active_occupied
    full = ansatz_estimate(o, sum(sizes))
    orders = []
    for n, q in sorted(budget.max_per_order.items()):
        v = (q // 2) - o
        est = ansatz_estimate(o, v)
        orders.append(
            {
                "order": n,
                "max_qubits": q,
                "reduction_percent": budget.reduction_percent[n],
                "max_parameters": est.n_parameters,
                "max_depth_estimate": est.depth_estimate,
            }
        )
    return {
        "n_active_occupied": o,
        "full_qubits": budget.full_qubits,
        "full_parameters": full.n_parameters,
        "full_depth_estimate": full.depth_estimate,
        "orders": orders,
        "subsets": [
            {"key": list(k.fragments), "qubits": q} for k, q in sorted(budget.per_subset.items())
        ],
    }


def mbe_document(
    report: MBEReport, partition: OrbitalPartition, budget: QubitBudget
) -> dict[str, Any]:
    flags = {str(k): list(v) for k, v in report.flags.items()}
    return {
        "solver": report.solver_tag,
        "n_fragments": report.n_fragments,
        "max_order": report.max_order,
        "partition": _fragments(partition),
        "reference_energy": report.reference_energy,
        "full_correlation_energy": report.full_energy,
        "evaluations": report.evaluations,
        "subset_energies": [
            {"key": list(k.fragments), "e_corr": e, "flags": flags.get(str(k), [])}
            for k, e in report.subset_energies.items()
        ],
        "terms": [
            {"key": list(t.key.fragments), "order": t.order, "delta_e": t.delta_e}
            for t in report.terms
        ],
        "truncated_totals": [
            {
                "order": n,
                "e_corr": e,
                "e_total": (report.reference_energy + e) if report.reference_energy is not None else None,
            }
            for n, e in sorted(report.truncated_totals.items())
        ],
        "convergence": convergence_report(report, budget).as_records(),
        "budget": budget_document(partition, budget),
    }


def hierarchical_document(
    report: HierarchicalReport,
    partitions: dict[str, OrbitalPartition],
    budgets: dict[str, QubitBudget],
    monomers: dict[str, tuple[str, ...]],
) -> dict[str, Any]:
    inp = report.spatial_input
    return {
        "solver": report.solver_tag,
        "fragments": [
            {
                "name": name,
                "monomers": list(monomers[name]),
                "total_energy": report.fragment_total(name),
                "expansion": mbe_document(rep, partitions[name], budgets[name]),
            }
            for name, rep in report.runs.items()
        ],
        "spatial": {
            "monomers": [{"name": k, "energy": v} for k, v in inp.monomer_energies.items()],
            "dimers": [
                {
                    "pair": list(pair),
                    "energy": e,
                    "interaction": e - inp.monomer_energies[pair[0]] - inp.monomer_energies[pair[1]],
                    "interaction_kcal_mol": (
                        e - inp.monomer_energies[pair[0]] - inp.monomer_energies[pair[1]]
                    ) * KCAL_PER_HARTREE,
                }
                for pair, e in sorted(inp.dimer_energies.items())
            ],
            "total_energy": report.total_energy,
        },
    }


def render_json(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _scalar(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def flatten(doc: Any, prefix: str = "") -> Iterator[tuple[str, str]]:
    """Yield ``(path, value)`` leaves; list positions become path components."""
    if isinstance(doc, dict):
        for k, v in doc.items():
            yield from flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(doc, (list, tuple)):
        if not doc:
            yield prefix, ""
        for i, v in enumerate(doc):
            yield from flatten(v, f"{prefix}.{i}")
    else:
        yield prefix, _scalar(doc)


def render_csv(doc: dict[str, Any]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["path", "value"])
    writer.writerows(flatten(doc))
    return buf.getvalue()
