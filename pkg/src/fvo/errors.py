"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class FVOError(Exception):
    """Base class for all errors raised by :mod:`fvo`."""


class ParseError(FVOError):
    """Malformed FCIDUMP or sidecar input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UsageError(FVOError, ValueError):
    """Invalid arguments passed to a public operation."""


class ResourceLimitError(FVOError):
    """A calculation would exceed a configured size cap."""

    def __init__(self, required: int, allowed: int, what: str = "spin-orbitals"):
        self.required = required
        self.allowed = allowed
        super().__init__(f"requires {required} {what}, cap allows {allowed}")


class DegenerateGapError(FVOError):
    """An MP2 denominator is zero or positive."""

    def __init__(self, indices: tuple[int, int, int, int], denominator: float):
        self.indices = indices
        self.denominator = denominator
        i, j, a, b = indices
        super().__init__(
            f"non-negative MP2 denominator {denominator:.3e} for "
            f"(i,j,a,b)=({i},{j},{a},{b})"
        )


class ConsistencyError(FVOError):
    """An internal numerical invariant was violated."""


class DependencyError(FVOError, KeyError):
    """A subset energy needed by an expansion term is missing."""

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class SolverError(FVOError):
    """A correlation solver failed for one subset of an expansion."""

    def __init__(self, key, cause: BaseException, context: str | None = None):
        self.key = key
        self.cause = cause
        self.context = context
        prefix = f"[{context}] " if context else ""
        super().__init__(f"{prefix}solver failed on subset {key}: {cause}")


class ConvergenceError(FVOError):
    """The VQE optimizer hit its iteration limit."""

    def __init__(self, message: str, best_energy: float):
        self.best_energy = best_energy
        super().__init__(f"{message} (best energy {best_energy:.12f} Ha)")


class ConfigError(FVOError):
    """Aggregated run-config violations."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        body = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"{len(self.violations)} config violation(s):\n{body}")
