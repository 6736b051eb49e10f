"""Exception types raised across the package."""


class BoomerangError(Exception):
    """Base class for all package errors."""


# graph construction / classification
class GraphError(BoomerangError, ValueError):
    pass


class IndexOutOfRange(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class InvalidSign(GraphError):
    pass


class InvalidSizes(GraphError):
    pass


class CountExceedsEdges(GraphError):
    pass


# dynamics
class DynamicsError(BoomerangError, ValueError):
    pass


class EmptyEdgeSet(DynamicsError):
    pass


class InvalidEdge(DynamicsError):
    pass


class UnknownEdge(DynamicsError):
    pass


class InvalidInitialOpinion(DynamicsError):
    pass


class InvalidParams(DynamicsError):
    pass


class ArrangementViolated(DynamicsError):
    pass


class NoPath(DynamicsError):
    pass


class RangeViolation(BoomerangError, AssertionError):
    """An update left the opinion interval by more than rounding can explain."""


# analysis
class AnalysisError(BoomerangError, ValueError):
    pass


class WrongFactionCount(AnalysisError):
    pass


class NeverSeparated(AnalysisError):
    pass


class InvalidEpsilon(AnalysisError):
    pass


# experiments / io
class ExperimentError(BoomerangError, ValueError):
    pass


class UnknownPreset(ExperimentError):
    pass


class InvalidWeight(ExperimentError):
    pass


class NotSingleFaction(ExperimentError):
    pass


class ParseError(BoomerangError, ValueError):
    pass


class SchemaViolation(BoomerangError, ValueError):
    pass


class ConfigValidationError(BoomerangError, ValueError):
    """Config value out of its allowed domain; ``field`` holds the dotted path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
