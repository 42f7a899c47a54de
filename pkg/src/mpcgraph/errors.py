"""Error types shared across the library.

Space violations are hard errors on purpose: a run that would need more than
its declared local or global budget is a wrong run, not a slow one.
"""


class MpcError(Exception):
    """Base class for all library errors."""


class SpaceExceeded(MpcError):
    """A machine's words (resident plus sent, or resident plus received)
    exceeded the local capacity S in some round."""

    def __init__(self, machine_id: int, words: int, capacity: int, detail: str = ""):
        self.machine_id = machine_id
        self.words = words
        self.capacity = capacity
        super().__init__(
            f"machine {machine_id} needed {words} words, capacity {capacity}"
            + (f" ({detail})" if detail else "")
        )


class GlobalSpaceExceeded(MpcError):
    """Total resident words across machines exceeded the global budget."""

    def __init__(self, words: int, budget: int):
        self.words = words
        self.budget = budget
        super().__init__(f"global usage {words} words, budget {budget}")


class ConfigError(MpcError):
    """Invalid cluster or algorithm configuration."""


class IndexOutOfRange(MpcError):
    """Hash family evaluated outside its domain, or a seed outside the family."""


class CostOverflow(MpcError):
    """A derandomization partial cost left the signed 128-bit range."""


class EnumerationCapExceeded(MpcError):
    """The generic seed-enumeration path would exceed the per-machine,
    per-phase safety cap."""


class NotSimple(MpcError):
    """Operation required a simple graph (no parallel edges, no self-loops)."""


class IsolatedVertex(MpcError):
    """Operation required a graph with no isolated vertices."""


class DegreeTooHigh(MpcError):
    """Matching input had a vertex of degree greater than two."""


class MissingVertex(MpcError):
    """A set system referenced an element outside its universe."""


class MissingLeader(MpcError):
    """Contraction found a vertex whose set contains no selected leader."""


class ParamsInfeasible(MpcError):
    """Leader selection could not certify coverage with the given parameters."""


class IncompleteLog(MpcError):
    """Contraction log cannot witness a spanning forest for the labeling."""


class NonTermination(MpcError):
    """A driver exceeded its iteration guard; diagnostics attached."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class ParseError(MpcError):
    """Edge-list input could not be parsed; carries a line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class IdOutOfRange(ParseError):
    """Vertex id outside the accepted range."""
