"""Exception hierarchy shared by every module."""


class CbamError(Exception):
    """Base class for all engine errors."""


class ParseError(CbamError, ValueError):
    pass


class DanglingInput(CbamError):
    def __init__(self, good_id: str, input_id: str):
        super().__init__(f"good {good_id!r} lists unknown input {input_id!r}")
        self.good_id = good_id
        self.input_id = input_id


class CycleDetected(CbamError):
    def __init__(self, cycle: list[str]):
        super().__init__("bill of materials cycle: " + " -> ".join(cycle))
        self.cycle = cycle


class NegativeQuantity(CbamError, ValueError):
    pass


class UnknownGood(CbamError, KeyError):
    def __str__(self) -> str:
        return f"unknown good {self.args[0]!r}"


class UnitMismatch(CbamError):
    pass


class MissingDefault(CbamError, LookupError):
    pass


class InsufficientHistory(CbamError):
    pass


class BaselineTooSmall(CbamError):
    pass


class MissingHeader(CbamError):
    pass


class ConfigError(CbamError):
    pass
