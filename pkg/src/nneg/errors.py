from __future__ import annotations


class NNEGError(ValueError):
    """Base class for every validation failure raised by the package."""


class ParameterError(NNEGError):
    pass


class ModelError(ParameterError):
    pass


class NormalizationError(ParameterError):
    pass


class DomainError(ParameterError):
    pass


class CapacityError(ParameterError):
    pass


class TableError(NNEGError):
    def __init__(self, message: str, line: int | None = None, age: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.age = age


class CertificateUnavailable(NNEGError):
    pass


class InternalInconsistency(RuntimeError):
    """A construction that should be valid produced a negative mass."""


class ArbitrageError(NNEGError):
    """Quoted prices admit an arbitrage.

    ``witness`` is an optional mapping of asset name to holding whose payoff
    is nonnegative in every state at a negative set-up cost.
    """

    def __init__(self, message: str, witness=None, node=None):
        if node is not None:
            message = f"node {node}: {message}"
        super().__init__(message)
        self.witness = witness
        self.node = node
