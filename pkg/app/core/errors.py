class AirdataError(Exception):
    pass


class DataValidationError(AirdataError):
    """Input data does not satisfy a precondition. The CLI exits with 2."""


class NumericalError(AirdataError):
    """A numerical procedure could not produce a trustworthy result. The CLI exits with 3."""


class NonFiniteError(DataValidationError):
    pass


class FullScaleExceededError(DataValidationError):
    pass


class InvalidCutoffError(DataValidationError):
    pass


class TooShortError(DataValidationError):
    pass


class NonMonotonicTimeError(DataValidationError):
    pass


class InsufficientAirflowError(DataValidationError):
    pass


class DeadRunError(DataValidationError):
    pass


class EmptyInputError(DataValidationError):
    pass


class EnvelopeViolationError(DataValidationError):
    pass


class TooSmallError(DataValidationError):
    pass


class EmptyTestError(DataValidationError):
    pass


class SpanError(DataValidationError):
    pass


class MissingColumnsError(DataValidationError):
    def __init__(self, missing: list[str]) -> None:
        self.missing = missing
        super().__init__(f"missing columns: {', '.join(missing)}")


class SchemaError(DataValidationError):
    pass


class RaggedTensorError(DataValidationError):
    pass


class AxisTooSmallError(DataValidationError):
    pass


class AngleOutOfRangeError(DataValidationError):
    pass


class ForwardSpeedTooLowError(DataValidationError):
    pass


class RankDeficientError(NumericalError):
    def __init__(self, rank: int, columns: int, unidentifiable: list[str]) -> None:
        self.rank = rank
        self.columns = columns
        self.unidentifiable = unidentifiable
        shown = ", ".join(unidentifiable[:12])
        more = f" (+{len(unidentifiable) - 12} more)" if len(unidentifiable) > 12 else ""
        super().__init__(f"effective rank {rank} < {columns} columns; unidentifiable monomials: {shown}{more}")
