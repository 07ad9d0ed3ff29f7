from typing import Optional, Sequence, Tuple


class CascadeError(Exception):
    """Base exception for everything raised by navier_cascade"""
    pass


class DomainError(CascadeError, ValueError):
    """Raised when an operation is called outside its domain (zero vector, t <= 0, ...)"""
    pass


class ConfigError(CascadeError):
    """Raised when a run configuration violates a precondition or hypothesis

    Attributes:
        hypothesis: Name of the first violated hypothesis, e.g. "γ > 8πνp/11"
    """

    def __init__(self, message: str, hypothesis: Optional[str] = None):
        super().__init__(message, hypothesis)
        self.message = message
        self.hypothesis = hypothesis

    def __str__(self) -> str:
        if self.hypothesis:
            return f"{self.message} (violated: {self.hypothesis})"
        return self.message


class DataError(CascadeError):
    """Raised when the data (u0, g) misbehave inside a cascade

    Carries the tree address of the offending node so the draw can be replayed.
    """

    def __init__(
        self,
        message: str,
        node_path: Sequence[int] = (),
        cascade_index: Optional[int] = None,
    ):
        super().__init__(message, tuple(node_path), cascade_index)
        self.message = message
        self.node_path: Tuple[int, ...] = tuple(node_path)
        self.cascade_index = cascade_index

    def with_cascade(self, cascade_index: int) -> "DataError":
        return DataError(self.message, self.node_path, cascade_index)

    def __str__(self) -> str:
        path = "".join(str(i) for i in self.node_path) or "root"
        where = f"node {path}"
        if self.cascade_index is not None:
            where = f"cascade {self.cascade_index}, {where}"
        return f"{self.message} at {where}"

    def __reduce__(self):
        return (type(self), (self.message, self.node_path, self.cascade_index))


class NumericError(CascadeError):
    """Raised when a quadrature fails to reach its tolerance"""
    pass


class SamplerHealthError(CascadeError):
    """Raised when a rejection sampler's acceptance rate collapses"""
    pass


class ContractionError(CascadeError):
    """Raised when Picard iterates stop contracting"""
    pass
